#include "slidemil/manifest.hpp"

#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "slidemil/errors.hpp"

namespace slidemil {

namespace {

constexpr const char* kHeader = "slide_id,case_id,label,feature_path,cohort_tag";

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> fields;
    std::string field;
    for (char c : line) {
        if (c == ',') {
            fields.push_back(field);
            field.clear();
        } else {
            field.push_back(c);
        }
    }
    fields.push_back(field);
    return fields;
}

std::string strip_cr(std::string line) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    return line;
}

}  // namespace

std::vector<SlideRecord> parse_manifest(const std::string& csv_text, const std::string& origin) {
    std::istringstream in(csv_text);
    std::string line;
    if (!std::getline(in, line)) {
        throw validation_error(origin + ": empty manifest");
    }
    if (strip_cr(line) != kHeader) {
        throw validation_error(origin + ": manifest header must be exactly '" + kHeader + "'");
    }

    std::vector<SlideRecord> records;
    std::set<std::string> seen_slides;
    std::map<std::string, SubtypeLabel> case_labels;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        line = strip_cr(line);
        if (line.empty()) continue;
        const auto fields = split_csv_line(line);
        if (fields.size() != 5) {
            throw validation_error(origin + ":" + std::to_string(lineno) + ": expected 5 fields, got " +
                                   std::to_string(fields.size()));
        }
        SlideRecord rec;
        rec.slide_id = fields[0];
        rec.case_id = fields[1];
        rec.label = subtype_from_name(fields[2]);
        rec.feature_path = fields[3];
        rec.cohort_tag = fields[4];
        if (rec.slide_id.empty() || rec.case_id.empty()) {
            throw validation_error(origin + ":" + std::to_string(lineno) + ": empty slide or case id");
        }
        if (!seen_slides.insert(rec.slide_id).second) {
            throw validation_error(origin + ":" + std::to_string(lineno) + ": duplicate slide_id '" +
                                   rec.slide_id + "'");
        }
        const auto [it, inserted] = case_labels.emplace(rec.case_id, rec.label);
        if (!inserted && it->second != rec.label) {
            throw validation_error(origin + ":" + std::to_string(lineno) + ": case '" + rec.case_id +
                                   "' carries conflicting labels " + subtype_name(it->second) +
                                   " and " + subtype_name(rec.label));
        }
        records.push_back(std::move(rec));
    }
    return records;
}

std::vector<SlideRecord> load_manifest(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw io_error("cannot open manifest '" + path + "'");
    }
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_manifest(buf.str(), path);
}

void write_manifest(const std::vector<SlideRecord>& records, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw io_error("cannot write manifest '" + path + "'");
    }
    out << kHeader << "\n";
    for (const auto& rec : records) {
        out << rec.slide_id << ',' << rec.case_id << ',' << subtype_name(rec.label) << ','
            << rec.feature_path << ',' << rec.cohort_tag << "\n";
    }
    if (!out) {
        throw io_error("failed writing manifest '" + path + "'");
    }
}

}  // namespace slidemil
