#include "slidemil/predictions.hpp"

#include <cstdlib>
#include <fstream>
#include <sstream>

#include "slidemil/errors.hpp"
#include "slidemil/numeric.hpp"

namespace slidemil {

int argmax_label(const std::vector<double>& probs) {
    if (probs.empty()) {
        throw shape_error("cannot take the argmax of an empty probability vector");
    }
    int best = 0;
    for (int i = 1; i < static_cast<int>(probs.size()); ++i) {
        if (probs[static_cast<std::size_t>(i)] > probs[static_cast<std::size_t>(best)]) {
            best = i;
        }
    }
    return best;
}

Prediction make_prediction(std::string slide_id, int true_label, std::vector<double> probs) {
    Prediction p;
    p.slide_id = std::move(slide_id);
    p.true_label = true_label;
    p.predicted = argmax_label(probs);
    p.probs = std::move(probs);
    return p;
}

void write_predictions_csv(const PredictionSet& preds, const std::string& path) {
    if (preds.n_classes != kNumSubtypes) {
        throw validation_error("prediction CSVs are defined for the five-class label set");
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw io_error("cannot write predictions '" + path + "'");
    }
    out << "slide_id,true_label,p0,p1,p2,p3,p4,predicted\n";
    for (const auto& p : preds.items) {
        out << p.slide_id << ',' << kSubtypeNames[static_cast<std::size_t>(p.true_label)];
        for (double v : p.probs) out << ',' << format_double(v);
        out << ',' << kSubtypeNames[static_cast<std::size_t>(p.predicted)] << '\n';
    }
    if (!out) {
        throw io_error("failed writing predictions '" + path + "'");
    }
}

PredictionSet read_predictions_csv(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw io_error("cannot open predictions '" + path + "'");
    }
    std::string line;
    if (!std::getline(in, line)) {
        throw validation_error("'" + path + "': empty predictions file");
    }
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != "slide_id,true_label,p0,p1,p2,p3,p4,predicted") {
        throw validation_error("'" + path + "': unexpected predictions header");
    }
    PredictionSet preds;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::vector<std::string> fields;
        std::string field;
        std::istringstream ss(line);
        while (std::getline(ss, field, ',')) fields.push_back(field);
        if (fields.size() != 8) {
            throw validation_error("'" + path + "':" + std::to_string(lineno) +
                                   ": expected 8 fields");
        }
        Prediction p;
        p.slide_id = fields[0];
        p.true_label = subtype_code(subtype_from_name(fields[1]));
        p.probs.resize(kNumSubtypes);
        for (int c = 0; c < kNumSubtypes; ++c) {
            char* end = nullptr;
            p.probs[static_cast<std::size_t>(c)] =
                std::strtod(fields[static_cast<std::size_t>(2 + c)].c_str(), &end);
            if (end == fields[static_cast<std::size_t>(2 + c)].c_str() || *end != '\0') {
                throw validation_error("'" + path + "':" + std::to_string(lineno) +
                                       ": bad probability value");
            }
        }
        p.predicted = subtype_code(subtype_from_name(fields[7]));
        if (p.predicted != argmax_label(p.probs)) {
            throw validation_error("'" + path + "':" + std::to_string(lineno) +
                                   ": predicted label is not the argmax of the probabilities");
        }
        preds.items.push_back(std::move(p));
    }
    if (preds.items.empty()) {
        throw validation_error("'" + path + "': no prediction rows");
    }
    return preds;
}

}  // namespace slidemil
