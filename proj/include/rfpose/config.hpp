#pragma once

// Plain-text `key = value` configuration files. `#` starts a comment; blank
// lines are ignored; keys are unique per file.

#include <charconv>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "rfpose/error.hpp"

namespace rfpose {

class KeyValueConfig {
public:
    KeyValueConfig() = default;

    static KeyValueConfig parse(std::string_view text, const std::string& origin = "<string>") {
        KeyValueConfig cfg;
        cfg.origin_ = origin;
        std::istringstream in{std::string(text)};
        std::string line;
        int lineno = 0;
        while (std::getline(in, line)) {
            ++lineno;
            if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
            const std::string body = trim(line);
            if (body.empty()) continue;
            const auto eq = body.find('=');
            if (eq == std::string::npos) {
                throw ConfigError(origin + ":" + std::to_string(lineno) + ": expected `key = value`");
            }
            std::string key = trim(body.substr(0, eq));
            std::string value = trim(body.substr(eq + 1));
            if (key.empty()) throw ConfigError(origin + ":" + std::to_string(lineno) + ": empty key");
            if (!cfg.values_.emplace(key, value).second) {
                throw ConfigError(origin + ":" + std::to_string(lineno) + ": duplicate key `" + key + "`");
            }
        }
        return cfg;
    }

    static KeyValueConfig load(const std::filesystem::path& path) {
        std::ifstream in(path);
        if (!in) throw ConfigError("cannot open config file " + path.string());
        std::stringstream ss;
        ss << in.rdbuf();
        return parse(ss.str(), path.string());
    }

    bool has(const std::string& key) const { return values_.count(key) != 0; }
    const std::map<std::string, std::string>& entries() const { return values_; }
    const std::string& origin() const { return origin_; }

    std::string get_string(const std::string& key) const {
        auto it = values_.find(key);
        if (it == values_.end()) throw ConfigError(origin_ + ": missing key `" + key + "`");
        return it->second;
    }

    double get_double(const std::string& key) const { return to_double(key, get_string(key)); }
    double get_double(const std::string& key, double fallback) const {
        return has(key) ? get_double(key) : fallback;
    }

    std::int64_t get_int(const std::string& key) const { return to_int(key, get_string(key)); }
    std::int64_t get_int(const std::string& key, std::int64_t fallback) const {
        return has(key) ? get_int(key) : fallback;
    }

    std::optional<double> find_double(const std::string& key) const {
        if (!has(key)) return std::nullopt;
        return get_double(key);
    }

    /// Canonical `key=value\n` rendering, sorted by key; used for hashing.
    std::string canonical() const {
        std::string out;
        for (const auto& [k, v] : values_) out += k + "=" + v + "\n";
        return out;
    }

private:
    static std::string trim(std::string_view s) {
        const auto b = s.find_first_not_of(" \t\r");
        if (b == std::string_view::npos) return {};
        const auto e = s.find_last_not_of(" \t\r");
        return std::string(s.substr(b, e - b + 1));
    }

    double to_double(const std::string& key, const std::string& v) const {
        try {
            std::size_t used = 0;
            double d = std::stod(v, &used);
            if (used == v.size()) return d;
        } catch (const std::exception&) {
        }
        throw ConfigError(origin_ + ": key `" + key + "` is not a number: `" + v + "`");
    }

    std::int64_t to_int(const std::string& key, const std::string& v) const {
        std::int64_t out = 0;
        auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
        if (ec != std::errc{} || ptr != v.data() + v.size()) {
            throw ConfigError(origin_ + ": key `" + key + "` is not an integer: `" + v + "`");
        }
        return out;
    }

    std::string origin_ = "<empty>";
    std::map<std::string, std::string> values_;
};

}  // namespace rfpose
