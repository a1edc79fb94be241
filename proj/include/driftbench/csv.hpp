#pragma once

#include <charconv>
#include <cstdint>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "driftbench/errors.hpp"

namespace driftbench {

// Shortest round-trip representation, '.' decimal separator, locale-free.
inline std::string fmt_double(double v) {
    char buf[32];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, ptr);
}

inline double parse_double(std::string_view s, std::string_view what) {
    double v{};
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || ptr != s.data() + s.size())
        throw IngestError("cannot parse number '" + std::string(s) + "' in " + std::string(what));
    return v;
}

inline std::int64_t parse_i64(std::string_view s, std::string_view what) {
    std::int64_t v{};
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || ptr != s.data() + s.size())
        throw IngestError("cannot parse integer '" + std::string(s) + "' in " + std::string(what));
    return v;
}

inline std::uint64_t parse_u64(std::string_view s, std::string_view what) {
    std::uint64_t v{};
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || ptr != s.data() + s.size())
        throw IngestError("cannot parse unsigned integer '" + std::string(s) + "' in " + std::string(what));
    return v;
}

inline std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
        const std::size_t comma = line.find(',', start);
        if (comma == std::string::npos) {
            out.push_back(line.substr(start));
            break;
        }
        out.push_back(line.substr(start, comma - start));
        start = comma + 1;
    }
    return out;
}

// Streaming CSV reader. Fields are plain (no quoting); every file this
// project reads or writes keeps commas out of field values.
class CsvReader {
public:
    explicit CsvReader(const std::string& path) : path_(path), in_(path) {
        if (!in_) throw IngestError("cannot open " + path);
        std::string line;
        if (!std::getline(in_, line)) throw IngestError(path + ": empty file, expected a header row");
        strip_cr(line);
        header_ = split_csv_line(line);
        line_no_ = 1;
    }

    const std::vector<std::string>& header() const { return header_; }

    int column(const std::string& name) const {
        for (std::size_t i = 0; i < header_.size(); ++i)
            if (header_[i] == name) return static_cast<int>(i);
        throw IngestError(path_ + ": missing required column '" + name + "'");
    }

    bool next(std::vector<std::string>& fields) {
        std::string line;
        while (std::getline(in_, line)) {
            ++line_no_;
            strip_cr(line);
            if (line.empty()) continue;
            fields = split_csv_line(line);
            if (fields.size() != header_.size())
                throw IngestError(path_ + ":" + std::to_string(line_no_) + ": expected " +
                                  std::to_string(header_.size()) + " fields, got " +
                                  std::to_string(fields.size()));
            return true;
        }
        return false;
    }

    std::string where() const { return path_ + ":" + std::to_string(line_no_); }
    long line_no() const { return line_no_; }

private:
    static void strip_cr(std::string& s) {
        if (!s.empty() && s.back() == '\r') s.pop_back();
    }

    std::string path_;
    std::ifstream in_;
    std::vector<std::string> header_;
    long line_no_ = 0;
};

class CsvWriter {
public:
    explicit CsvWriter(const std::string& path) : path_(path), out_(path, std::ios::binary) {
        if (!out_) throw Error("cannot open " + path + " for writing");
    }

    void row(const std::vector<std::string>& fields) {
        for (std::size_t i = 0; i < fields.size(); ++i) {
            if (i) out_ << ',';
            out_ << fields[i];
        }
        out_ << '\n';
    }

    void close() {
        out_.close();
        if (!out_) throw Error("write failed for " + path_);
    }

private:
    std::string path_;
    std::ofstream out_;
};

inline std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace driftbench
