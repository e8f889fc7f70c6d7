#pragma once

#include <charconv>
#include <cstdint>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "lvtariff/errors.hpp"

namespace lvtariff {

// Shortest round-trip decimal form; keeps repeated pipeline runs byte-identical.
inline std::string format_double(double v) {
    char buf[32];
    auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

inline double parse_double(std::string_view s, const std::string& context) {
    double v = 0.0;
    auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc{} || res.ptr != s.data() + s.size())
        throw DataError(context + ": bad numeric field '" + std::string(s) + "'");
    return v;
}

inline long parse_long(std::string_view s, const std::string& context) {
    long v = 0;
    auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc{} || res.ptr != s.data() + s.size())
        throw DataError(context + ": bad integer field '" + std::string(s) + "'");
    return v;
}

// Minimal comma-separated reader for the numeric schemas used here (no
// quoting). Validates the header and reports line numbers on error.
class CsvReader {
  public:
    CsvReader(const std::string& path, const std::string& expected_header) : path_(path), in_(path) {
        if (!in_) throw DataError("cannot open " + path);
        std::string header;
        if (!std::getline(in_, header)) throw DataError(path + ": empty file");
        if (!header.empty() && header.back() == '\r') header.pop_back();
        if (header != expected_header)
            throw DataError(path + ": unexpected header '" + header + "', want '" + expected_header + "'");
        line_ = 1;
    }

    // false at EOF
    bool next(std::vector<std::string>& fields) {
        std::string line;
        for (;;) {
            if (!std::getline(in_, line)) return false;
            ++line_;
            if (!line.empty() && line.back() == '\r') line.pop_back();
            if (!line.empty()) break;
        }
        fields.clear();
        std::size_t start = 0;
        for (;;) {
            std::size_t pos = line.find(',', start);
            if (pos == std::string::npos) {
                fields.emplace_back(line.substr(start));
                break;
            }
            fields.emplace_back(line.substr(start, pos - start));
            start = pos + 1;
        }
        return true;
    }

    std::string where() const { return path_ + ":" + std::to_string(line_); }

  private:
    std::string path_;
    std::ifstream in_;
    long line_ = 0;
};

class CsvWriter {
  public:
    CsvWriter(const std::string& path, const std::string& header) : path_(path), out_(path) {
        if (!out_) throw DataError("cannot open " + path + " for writing");
        out_ << header << "\n";
    }

    void field(const std::string& s) { sep(); out_ << s; }
    void field(double v) { sep(); out_ << format_double(v); }
    void field(long v) { sep(); out_ << v; }
    void field(int v) { sep(); out_ << v; }

    void end_row() {
        out_ << "\n";
        first_ = true;
    }

    void close() {
        out_.close();
        if (!out_) throw DataError("write failed for " + path_);
    }

  private:
    void sep() {
        if (!first_) out_ << ",";
        first_ = false;
    }

    std::string path_;
    std::ofstream out_;
    bool first_ = true;
};

}  // namespace lvtariff
