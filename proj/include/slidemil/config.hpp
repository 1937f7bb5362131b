#pragma once

#include <map>
#include <string>
#include <vector>

#include "slidemil/tuning.hpp"

namespace slidemil {

// key=value file: one pair per line, '#' starts a comment, blank lines
// ignored, surrounding whitespace trimmed.
std::map<std::string, std::string> parse_kv_file(const std::string& path);
std::map<std::string, std::string> parse_kv_text(const std::string& text,
                                                 const std::string& origin);

void write_kv_file(const std::map<std::string, std::string>& kv, const std::string& path);

// Extracts grid.<name>=v1,v2,... entries into candidate grids and removes
// them from the map.
HyperGrids extract_grids(std::map<std::string, std::string>& kv);

}  // namespace slidemil
