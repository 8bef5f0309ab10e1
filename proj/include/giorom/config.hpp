#pragma once

#include <map>
#include <string>
#include <vector>

#include "giorom/common.hpp"

namespace giorom {

// Flat key = value configuration with '#' comments. Typed getters with
// defaults; get_range parses "lo,hi".
class Config {
public:
    Config() = default;
    static Config from_file(const std::string& path);
    static Config from_string(const std::string& text);

    void set(const std::string& key, const std::string& value) { values_[key] = value; }
    bool has(const std::string& key) const { return values_.count(key) > 0; }

    std::string get_string(const std::string& key, const std::string& fallback) const;
    double get_double(const std::string& key, double fallback) const;
    int64_t get_int(const std::string& key, int64_t fallback) const;
    std::pair<double, double> get_range(const std::string& key, std::pair<double, double> fallback) const;
    std::vector<double> get_list(const std::string& key) const;  // comma-separated

    const std::map<std::string, std::string>& values() const { return values_; }

private:
    std::map<std::string, std::string> values_;
};

}  // namespace giorom
