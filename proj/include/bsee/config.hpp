#pragma once

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace bsee {

//User-input problems (bad keys, unparseable values, missing files).  The CLI
//maps this to its configuration-error exit code.
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

namespace detail {

inline std::string trim(const std::string& s) {
    auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

inline int edit_distance(const std::string& a, const std::string& b) {
    std::vector<int> row(b.size() + 1);
    for (size_t j = 0; j <= b.size(); ++j) row[j] = static_cast<int>(j);
    for (size_t i = 1; i <= a.size(); ++i) {
        int diag = row[0];
        row[0] = static_cast<int>(i);
        for (size_t j = 1; j <= b.size(); ++j) {
            int next = std::min({row[j] + 1, row[j - 1] + 1, diag + (a[i - 1] != b[j - 1])});
            diag = row[j];
            row[j] = next;
        }
    }
    return row[b.size()];
}

} // namespace detail

//Flat ordered key=value configuration.  Map order doubles as the canonical
//serialization order, so equal configs hash equally.
class Config {
  public:
    Config() = default;
    explicit Config(std::map<std::string, std::string> values) : values_(std::move(values)) {}

    void set(const std::string& key, const std::string& value) { values_[key] = value; }
    bool has(const std::string& key) const { return values_.count(key) > 0; }
    const std::map<std::string, std::string>& values() const { return values_; }

    Config without(const std::string& key) const {
        Config out = *this;
        out.values_.erase(key);
        return out;
    }

    std::string get_string(const std::string& key, const std::string& fallback) const {
        auto it = values_.find(key);
        return it == values_.end() ? fallback : it->second;
    }

    long get_int(const std::string& key, long fallback) const {
        auto it = values_.find(key);
        if (it == values_.end()) return fallback;
        try {
            size_t pos = 0;
            long v = std::stol(it->second, &pos);
            if (pos != it->second.size()) throw std::invalid_argument("");
            return v;
        } catch (const std::exception&) {
            throw ConfigError("config key '" + key + "': expected integer, got '" + it->second + "'");
        }
    }

    double get_double(const std::string& key, double fallback) const {
        auto it = values_.find(key);
        if (it == values_.end()) return fallback;
        try {
            size_t pos = 0;
            double v = std::stod(it->second, &pos);
            if (pos != it->second.size()) throw std::invalid_argument("");
            return v;
        } catch (const std::exception&) {
            throw ConfigError("config key '" + key + "': expected number, got '" + it->second + "'");
        }
    }

    bool get_bool(const std::string& key, bool fallback) const {
        auto it = values_.find(key);
        if (it == values_.end()) return fallback;
        if (it->second == "true" || it->second == "1") return true;
        if (it->second == "false" || it->second == "0") return false;
        throw ConfigError("config key '" + key + "': expected true/false, got '" + it->second + "'");
    }

    //Later sources win; used to layer defaults <- file <- command line.
    void merge_from(const Config& other) {
        for (const auto& [k, v] : other.values_) values_[k] = v;
    }

    //Sorted key=value lines; the identity used for hashing and echo files.
    std::string canonical() const {
        std::ostringstream out;
        for (const auto& [k, v] : values_) out << k << "=" << v << "\n";
        return out.str();
    }

    //FNV-1a 64-bit of the canonical form, as fixed-width hex.
    std::string hash() const {
        std::uint64_t h = 14695981039346656037ull;
        for (unsigned char c : canonical()) {
            h ^= c;
            h *= 1099511628211ull;
        }
        char buf[17];
        std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
        return buf;
    }

    //Rejects keys outside the allowed set, suggesting the nearest known key.
    void validate_keys(const std::map<std::string, std::string>& allowed) const {
        for (const auto& [k, v] : values_) {
            if (allowed.count(k)) continue;
            std::string best;
            int best_d = 1 << 20;
            for (const auto& [cand, def] : allowed) {
                int d = detail::edit_distance(k, cand);
                if (d < best_d) {
                    best_d = d;
                    best = cand;
                }
            }
            std::string msg = "unknown config key '" + k + "'";
            if (!best.empty()) msg += "; nearest known key is '" + best + "'";
            throw ConfigError(msg);
        }
    }

  private:
    std::map<std::string, std::string> values_;
};

//key=value lines, blank lines and #-comments ignored.
inline Config parse_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file '" + path + "'");
    Config cfg;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        std::string s = detail::trim(line);
        if (s.empty() || s[0] == '#') continue;
        auto eq = s.find('=');
        if (eq == std::string::npos)
            throw ConfigError("config file '" + path + "' line " + std::to_string(lineno) + ": expected key=value");
        std::string key = detail::trim(s.substr(0, eq));
        std::string value = detail::trim(s.substr(eq + 1));
        if (key.empty()) throw ConfigError("config file '" + path + "' line " + std::to_string(lineno) + ": empty key");
        cfg.set(key, value);
    }
    return cfg;
}

//Command-line overrides of the form key=value.
inline Config parse_overrides(const std::vector<std::string>& pairs) {
    Config cfg;
    for (const auto& s : pairs) {
        auto eq = s.find('=');
        if (eq == std::string::npos || eq == 0) throw ConfigError("override '" + s + "': expected key=value");
        cfg.set(detail::trim(s.substr(0, eq)), detail::trim(s.substr(eq + 1)));
    }
    return cfg;
}

} // namespace bsee
