#pragma once

#include <cstdint>
#include <fstream>
#include <map>
#include <sstream>
#include <string>

#include "tithonus/errors.hpp"

namespace tithonus {

// Plain key=value text config; '#' starts a comment, blank lines ignored.
class KvConfig {
public:
    KvConfig() = default;

    static KvConfig parse(const std::string& text) {
        KvConfig cfg;
        std::istringstream in(text);
        std::string line;
        size_t lineno = 0;
        while (std::getline(in, line)) {
            lineno++;
            auto hash = line.find('#');
            if (hash != std::string::npos) line.erase(hash);
            line = trim(line);
            if (line.empty()) continue;
            auto eq = line.find('=');
            if (eq == std::string::npos)
                throw BadConfig("line " + std::to_string(lineno) + ": expected key=value");
            cfg.values_[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
        }
        return cfg;
    }

    static KvConfig load(const std::string& path) {
        std::ifstream in(path);
        if (!in) throw BadConfig("cannot open " + path);
        std::ostringstream ss;
        ss << in.rdbuf();
        return parse(ss.str());
    }

    bool has(const std::string& key) const { return values_.count(key) != 0; }

    std::string get(const std::string& key, const std::string& fallback = "") const {
        auto it = values_.find(key);
        return it == values_.end() ? fallback : it->second;
    }

    int64_t get_int(const std::string& key, int64_t fallback) const {
        auto it = values_.find(key);
        if (it == values_.end()) return fallback;
        try {
            return std::stoll(it->second);
        } catch (const std::exception&) {
            throw BadConfig(key + " is not an integer: " + it->second);
        }
    }

    bool get_bool(const std::string& key, bool fallback) const {
        auto it = values_.find(key);
        if (it == values_.end()) return fallback;
        if (it->second == "1" || it->second == "true" || it->second == "yes") return true;
        if (it->second == "0" || it->second == "false" || it->second == "no") return false;
        throw BadConfig(key + " is not a boolean: " + it->second);
    }

    void set(const std::string& key, const std::string& value) { values_[key] = value; }

    const std::map<std::string, std::string>& values() const { return values_; }

private:
    static std::string trim(const std::string& s) {
        size_t a = s.find_first_not_of(" \t\r");
        if (a == std::string::npos) return "";
        size_t b = s.find_last_not_of(" \t\r");
        return s.substr(a, b - a + 1);
    }
    std::map<std::string, std::string> values_;
};

} // namespace tithonus
