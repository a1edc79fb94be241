#pragma once

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "driftbench/csv.hpp"
#include "driftbench/errors.hpp"

namespace driftbench {

// Sectioned key=value config format used by both the cohort generator and
// the experiment runner:
//
//   [cohort]
//   year_start = 2001
//   [concept heart_rate]
//   pre_itemids = 211, 212
//
// '#' starts a comment; section headers may carry one argument.
struct KvSection {
    std::string name;
    std::string arg;
    long line = 0;
    std::map<std::string, std::pair<std::string, long>> kv;

    bool has(const std::string& key) const { return kv.count(key) != 0; }

    std::string where(const std::string& key) const {
        auto it = kv.find(key);
        return it == kv.end() ? name : "line " + std::to_string(it->second.second);
    }

    std::string get_str(const std::string& key) const {
        auto it = kv.find(key);
        if (it == kv.end())
            throw ConfigError("section [" + name + (arg.empty() ? "" : " " + arg) +
                              "] is missing required key '" + key + "'");
        return it->second.first;
    }

    std::string get_str(const std::string& key, const std::string& dflt) const {
        auto it = kv.find(key);
        return it == kv.end() ? dflt : it->second.first;
    }

    std::int64_t get_i64(const std::string& key) const { return to_i64(key, get_str(key)); }
    std::int64_t get_i64(const std::string& key, std::int64_t dflt) const {
        return has(key) ? get_i64(key) : dflt;
    }

    std::uint64_t get_u64(const std::string& key, std::uint64_t dflt) const {
        if (!has(key)) return dflt;
        const std::string s = get_str(key);
        std::uint64_t v{};
        auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
        if (ec != std::errc{} || ptr != s.data() + s.size())
            throw ConfigError("key '" + key + "' (" + where(key) + "): expected unsigned integer, got '" + s + "'");
        return v;
    }

    double get_double(const std::string& key) const { return to_double(key, get_str(key)); }
    double get_double(const std::string& key, double dflt) const {
        return has(key) ? get_double(key) : dflt;
    }

    bool get_bool(const std::string& key, bool dflt) const {
        if (!has(key)) return dflt;
        const std::string s = get_str(key);
        if (s == "true" || s == "1" || s == "yes") return true;
        if (s == "false" || s == "0" || s == "no") return false;
        throw ConfigError("key '" + key + "' (" + where(key) + "): expected true/false, got '" + s + "'");
    }

    std::vector<std::string> get_list(const std::string& key) const {
        std::vector<std::string> out;
        std::istringstream ss(get_str(key));
        std::string tok;
        while (std::getline(ss, tok, ',')) {
            trim(tok);
            if (!tok.empty()) out.push_back(tok);
        }
        if (out.empty())
            throw ConfigError("key '" + key + "' (" + where(key) + "): expected a non-empty list");
        return out;
    }

    std::vector<std::int64_t> get_i64_list(const std::string& key) const {
        std::vector<std::int64_t> out;
        for (const auto& tok : get_list(key)) out.push_back(to_i64(key, tok));
        return out;
    }

    std::vector<double> get_double_list(const std::string& key) const {
        std::vector<double> out;
        for (const auto& tok : get_list(key)) out.push_back(to_double(key, tok));
        return out;
    }

    // Year lists accept ranges: "2003..2012" or "2003, 2005, 2007".
    std::vector<int> get_year_list(const std::string& key) const {
        std::vector<int> out;
        for (const auto& tok : get_list(key)) {
            const auto dots = tok.find("..");
            if (dots == std::string::npos) {
                out.push_back(static_cast<int>(to_i64(key, tok)));
            } else {
                const int lo = static_cast<int>(to_i64(key, tok.substr(0, dots)));
                const int hi = static_cast<int>(to_i64(key, tok.substr(dots + 2)));
                if (hi < lo)
                    throw ConfigError("key '" + key + "' (" + where(key) + "): bad range '" + tok + "'");
                for (int y = lo; y <= hi; ++y) out.push_back(y);
            }
        }
        return out;
    }

    static void trim(std::string& s) {
        const auto b = s.find_first_not_of(" \t");
        const auto e = s.find_last_not_of(" \t");
        s = (b == std::string::npos) ? std::string() : s.substr(b, e - b + 1);
    }

private:
    std::int64_t to_i64(const std::string& key, const std::string& s) const {
        std::int64_t v{};
        auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
        if (ec != std::errc{} || ptr != s.data() + s.size())
            throw ConfigError("key '" + key + "' (" + where(key) + "): expected integer, got '" + s + "'");
        return v;
    }

    double to_double(const std::string& key, const std::string& s) const {
        double v{};
        auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
        if (ec != std::errc{} || ptr != s.data() + s.size())
            throw ConfigError("key '" + key + "' (" + where(key) + "): expected number, got '" + s + "'");
        return v;
    }
};

inline std::vector<KvSection> parse_kv_stream(std::istream& in, const std::string& origin) {
    std::vector<KvSection> sections;
    std::string line;
    long line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        KvSection::trim(line);
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']')
                throw ConfigError(origin + ":" + std::to_string(line_no) + ": unterminated section header");
            std::string inner = line.substr(1, line.size() - 2);
            KvSection::trim(inner);
            KvSection sec;
            sec.line = line_no;
            const auto space = inner.find(' ');
            if (space == std::string::npos) {
                sec.name = inner;
            } else {
                sec.name = inner.substr(0, space);
                sec.arg = inner.substr(space + 1);
                KvSection::trim(sec.arg);
            }
            if (sec.name.empty())
                throw ConfigError(origin + ":" + std::to_string(line_no) + ": empty section name");
            sections.push_back(std::move(sec));
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError(origin + ":" + std::to_string(line_no) + ": expected 'key = value', got '" + line + "'");
        std::string key = line.substr(0, eq);
        std::string val = line.substr(eq + 1);
        KvSection::trim(key);
        KvSection::trim(val);
        if (key.empty())
            throw ConfigError(origin + ":" + std::to_string(line_no) + ": empty key");
        if (sections.empty())
            throw ConfigError(origin + ":" + std::to_string(line_no) + ": key '" + key +
                              "' appears before any [section] header");
        if (!sections.back().kv.emplace(key, std::make_pair(val, line_no)).second)
            throw ConfigError(origin + ":" + std::to_string(line_no) + ": duplicate key '" + key + "'");
    }
    return sections;
}

inline std::vector<KvSection> parse_kv_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file " + path);
    return parse_kv_stream(in, path);
}

}  // namespace driftbench
