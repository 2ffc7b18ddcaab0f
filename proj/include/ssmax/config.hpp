#pragma once

#include <cstdint>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <type_traits>
#include <vector>

#include "ssmax/error.hpp"
#include "ssmax/io.hpp"

namespace ssmax {

/// Flat "key = value" text. '#' starts a comment, blank lines are skipped,
/// a repeated key is an error. Values keep their source line for messages.
class KeyValueConfig {
public:
    static KeyValueConfig parse(std::istream& in) {
        KeyValueConfig c;
        std::string raw;
        int line = 0;
        while (std::getline(in, raw)) {
            ++line;
            const auto hash = raw.find('#');
            if (hash != std::string::npos) raw.erase(hash);
            const std::string s = trim(raw);
            if (s.empty()) continue;
            const auto eq = s.find('=');
            if (eq == std::string::npos) throw ParseError("expected 'key = value'", line);
            const std::string key = trim(s.substr(0, eq));
            const std::string value = trim(s.substr(eq + 1));
            if (key.empty()) throw ParseError("missing key", line);
            if (value.empty()) throw ParseError("missing value for '" + key + "'", line);
            if (c.entries_.count(key)) throw ParseError("duplicate key '" + key + "'", line);
            c.entries_[key] = {value, line};
        }
        return c;
    }

    static KeyValueConfig load(const std::string& path) {
        std::ifstream in(path);
        if (!in) throw InvalidInput("cannot open config " + path);
        return parse(in);
    }

    bool has(const std::string& key) const { return entries_.count(key) > 0; }

    /// Overrides (or adds) a value, e.g. from the command line.
    void set(const std::string& key, const std::string& value) { entries_[key] = {value, 0}; }

    std::string get(const std::string& key) const {
        const auto it = entries_.find(key);
        if (it == entries_.end()) throw InvalidInput("config field '" + key + "' is required");
        used_.insert(key);
        return it->second.value;
    }
    std::string get(const std::string& key, const std::string& fallback) const {
        return has(key) ? get(key) : fallback;
    }

    double get_double(const std::string& key) const { return convert(key, [](const std::string& v, int l) { return parse_double(v, l); }); }
    double get_double(const std::string& key, double fallback) const { return has(key) ? get_double(key) : fallback; }

    long get_long(const std::string& key) const { return convert(key, [](const std::string& v, int l) { return parse_long(v, l); }); }
    long get_long(const std::string& key, long fallback) const { return has(key) ? get_long(key) : fallback; }

    std::uint64_t get_seed(const std::string& key) const {
        const long v = get_long(key);
        if (v < 0) throw InvalidInput("config field '" + key + "' must be a nonnegative integer");
        return static_cast<std::uint64_t>(v);
    }

    bool get_bool(const std::string& key, bool fallback) const {
        if (!has(key)) return fallback;
        const std::string v = get(key);
        if (v == "true" || v == "1" || v == "yes") return true;
        if (v == "false" || v == "0" || v == "no") return false;
        throw InvalidInput("config field '" + key + "' (line " + std::to_string(line_of(key)) + "): expected true or false");
    }

    /// Comma-separated integers.
    std::vector<long> get_long_list(const std::string& key) const {
        const std::string v = get(key);
        std::vector<long> out;
        std::stringstream ss(v);
        std::string tok;
        while (std::getline(ss, tok, ',')) {
            try {
                out.push_back(parse_long(trim(tok), line_of(key)));
            } catch (const ParseError& e) {
                throw InvalidInput("config field '" + key + "': " + e.what());
            }
        }
        if (out.empty()) throw InvalidInput("config field '" + key + "' is empty");
        return out;
    }

    /// One of `choices`, else an error listing them.
    std::string get_choice(const std::string& key, const std::vector<std::string>& choices, const std::string& fallback = "") const {
        if (!has(key) && !fallback.empty()) return fallback;
        const std::string v = get(key);
        for (const auto& c : choices)
            if (v == c) return v;
        std::string all;
        for (const auto& c : choices) all += (all.empty() ? "" : "|") + c;
        throw InvalidInput("config field '" + key + "' must be one of " + all + ", got '" + v + "'");
    }

    int line_of(const std::string& key) const {
        const auto it = entries_.find(key);
        return it == entries_.end() ? 0 : it->second.line;
    }

    /// Keys present but never read; a typo guard.
    std::vector<std::string> unused() const {
        std::vector<std::string> out;
        for (const auto& [k, e] : entries_)
            if (!used_.count(k)) out.push_back(k);
        return out;
    }

    void reject_unused() const {
        const auto u = unused();
        if (!u.empty())
            throw InvalidInput("config field '" + u.front() + "' (line " + std::to_string(line_of(u.front())) +
                               ") is not recognized");
    }

private:
    struct Entry {
        std::string value;
        int line = 0;
    };

    template <class F>
    std::invoke_result_t<F, const std::string&, int> convert(const std::string& key, F f) const {
        const std::string v = get(key);
        try {
            return f(v, line_of(key));
        } catch (const ParseError& e) {
            throw InvalidInput("config field '" + key + "': " + e.what());
        }
    }

    static std::string trim(const std::string& s) {
        const auto b = s.find_first_not_of(" \t\r");
        if (b == std::string::npos) return "";
        const auto e = s.find_last_not_of(" \t\r");
        return s.substr(b, e - b + 1);
    }

    std::map<std::string, Entry> entries_;
    mutable std::set<std::string> used_;
};

}  // namespace ssmax
