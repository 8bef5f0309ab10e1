#include "giorom/config.hpp"

#include <fstream>
#include <sstream>

namespace giorom {

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

}  // namespace

Config Config::from_string(const std::string& text) {
    Config cfg;
    std::istringstream is(text);
    std::string line;
    int lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw UsageError("config line " + std::to_string(lineno) + ": expected key = value");
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (key.empty()) throw UsageError("config line " + std::to_string(lineno) + ": empty key");
        cfg.values_[key] = value;
    }
    return cfg;
}

Config Config::from_file(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw UsageError("cannot open config file: " + path);
    std::stringstream buf;
    buf << is.rdbuf();
    return from_string(buf.str());
}

std::string Config::get_string(const std::string& key, const std::string& fallback) const {
    auto it = values_.find(key);
    return it == values_.end() ? fallback : it->second;
}

double Config::get_double(const std::string& key, double fallback) const {
    auto it = values_.find(key);
    if (it == values_.end()) return fallback;
    try {
        return std::stod(it->second);
    } catch (...) {
        throw UsageError("config key " + key + ": not a number: " + it->second);
    }
}

int64_t Config::get_int(const std::string& key, int64_t fallback) const {
    auto it = values_.find(key);
    if (it == values_.end()) return fallback;
    try {
        return std::stoll(it->second);
    } catch (...) {
        throw UsageError("config key " + key + ": not an integer: " + it->second);
    }
}

std::pair<double, double> Config::get_range(const std::string& key,
                                            std::pair<double, double> fallback) const {
    auto it = values_.find(key);
    if (it == values_.end()) return fallback;
    const auto comma = it->second.find(',');
    if (comma == std::string::npos) {
        const double v = get_double(key, 0.0);
        return {v, v};
    }
    try {
        return {std::stod(it->second.substr(0, comma)), std::stod(it->second.substr(comma + 1))};
    } catch (...) {
        throw UsageError("config key " + key + ": expected lo,hi");
    }
}

std::vector<double> Config::get_list(const std::string& key) const {
    std::vector<double> out;
    auto it = values_.find(key);
    if (it == values_.end()) return out;
    std::istringstream is(it->second);
    std::string tok;
    while (std::getline(is, tok, ',')) {
        try {
            out.push_back(std::stod(tok));
        } catch (...) {
            throw UsageError("config key " + key + ": bad list element: " + tok);
        }
    }
    return out;
}

}  // namespace giorom
