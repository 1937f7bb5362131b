#pragma once

#include <string>
#include <vector>

#include "slidemil/subtype.hpp"

namespace slidemil {

struct SlideRecord {
    std::string slide_id;
    std::string case_id;
    SubtypeLabel label = SubtypeLabel::HGSC;
    std::string feature_path;
    std::string cohort_tag;
};

// Parses a manifest CSV with the exact header
// slide_id,case_id,label,feature_path,cohort_tag and validates that slide
// ids are unique and that every case carries a single label.
std::vector<SlideRecord> load_manifest(const std::string& path);

// Same parse/validation over in-memory text (the CSV contract is identical).
std::vector<SlideRecord> parse_manifest(const std::string& csv_text, const std::string& origin);

void write_manifest(const std::vector<SlideRecord>& records, const std::string& path);

}  // namespace slidemil
