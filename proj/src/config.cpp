#include "slidemil/config.hpp"

#include <fstream>
#include <sstream>

#include "slidemil/errors.hpp"
#include "slidemil/hyperparams.hpp"

namespace slidemil {

namespace {

std::string trim(const std::string& s) {
    const auto begin = s.find_first_not_of(" \t\r");
    if (begin == std::string::npos) return "";
    const auto end = s.find_last_not_of(" \t\r");
    return s.substr(begin, end - begin + 1);
}

}  // namespace

std::map<std::string, std::string> parse_kv_text(const std::string& text,
                                                 const std::string& origin) {
    std::map<std::string, std::string> kv;
    std::istringstream in(text);
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw config_error(origin + ":" + std::to_string(lineno) +
                               ": expected key=value, got '" + line + "'");
        }
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (key.empty()) {
            throw config_error(origin + ":" + std::to_string(lineno) + ": empty key");
        }
        kv[key] = value;
    }
    return kv;
}

std::map<std::string, std::string> parse_kv_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw io_error("cannot open config file '" + path + "'");
    }
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_kv_text(buf.str(), path);
}

void write_kv_file(const std::map<std::string, std::string>& kv, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw io_error("cannot write config file '" + path + "'");
    }
    for (const auto& [key, value] : kv) {
        out << key << '=' << value << '\n';
    }
}

HyperGrids extract_grids(std::map<std::string, std::string>& kv) {
    HyperGrids grids;
    for (auto it = kv.begin(); it != kv.end();) {
        if (it->first.rfind("grid.", 0) == 0) {
            const std::string name = it->first.substr(5);
            if (!is_hyperparameter_name(name)) {
                throw config_error("grid for unknown hyperparameter '" + name + "'");
            }
            std::vector<std::string> values;
            std::istringstream ss(it->second);
            std::string v;
            while (std::getline(ss, v, ',')) {
                v = trim(v);
                if (!v.empty()) values.push_back(v);
            }
            if (values.empty()) {
                throw config_error("empty candidate grid for '" + name + "'");
            }
            grids[name] = std::move(values);
            it = kv.erase(it);
        } else {
            ++it;
        }
    }
    return grids;
}

}  // namespace slidemil
