#pragma once

#include <cctype>
#include <charconv>
#include <cstdio>
#include <map>
#include <string>
#include <vector>

#include "demandscope/common.hpp"

namespace demandscope::data {

struct CsvTable {
    std::string path;
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;  // raw fields, header excluded
    std::vector<int> line_numbers;               // 1-based source line per row

    int column(const std::string& name) const {
        for (size_t i = 0; i < header.size(); ++i)
            if (header[i] == name) return static_cast<int>(i);
        throw ParseError(path + ": missing column '" + name + "'");
    }
};

// Simple comma-separated values, no quoting (ids here never contain commas).
inline CsvTable read_csv(const std::string& path) {
    std::FILE* f = std::fopen(path.c_str(), "rb");
    if (!f) throw IoError("cannot open " + path);
    std::string content;
    char buf[1 << 16];
    size_t n;
    while ((n = std::fread(buf, 1, sizeof(buf), f)) > 0) content.append(buf, n);
    std::fclose(f);

    CsvTable t;
    t.path = path;
    size_t pos = 0;
    int line = 0;
    auto next_line = [&](std::string& out) {
        if (pos >= content.size()) return false;
        size_t e = content.find('\n', pos);
        if (e == std::string::npos) e = content.size();
        out = content.substr(pos, e - pos);
        if (!out.empty() && out.back() == '\r') out.pop_back();
        pos = e + 1;
        ++line;
        return true;
    };
    std::string s;
    auto split = [](const std::string& row) {
        std::vector<std::string> fields;
        size_t start = 0;
        while (true) {
            size_t c = row.find(',', start);
            if (c == std::string::npos) {
                fields.push_back(row.substr(start));
                break;
            }
            fields.push_back(row.substr(start, c - start));
            start = c + 1;
        }
        return fields;
    };
    if (!next_line(s)) throw ParseError(path + ": empty file");
    t.header = split(s);
    while (next_line(s)) {
        if (s.empty()) continue;
        auto fields = split(s);
        if (fields.size() != t.header.size())
            throw ParseError(path + ":" + std::to_string(line) + ": expected " +
                             std::to_string(t.header.size()) + " fields, got " +
                             std::to_string(fields.size()));
        t.rows.push_back(std::move(fields));
        t.line_numbers.push_back(line);
    }
    return t;
}

inline double csv_double(const CsvTable& t, size_t row, int col) {
    const std::string& s = t.rows[row][static_cast<size_t>(col)];
    double out = 0;
    const char* b = s.data();
    const char* e = b + s.size();
    auto [p, ec] = std::from_chars(b, e, out);
    if (ec != std::errc{} || p != e)
        throw ParseError(t.path + ":" + std::to_string(t.line_numbers[row]) +
                         ": bad number '" + s + "'");
    return out;
}

inline int csv_int(const CsvTable& t, size_t row, int col) {
    const std::string& s = t.rows[row][static_cast<size_t>(col)];
    int out = 0;
    const char* b = s.data();
    const char* e = b + s.size();
    auto [p, ec] = std::from_chars(b, e, out);
    if (ec != std::errc{} || p != e)
        throw ParseError(t.path + ":" + std::to_string(t.line_numbers[row]) +
                         ": bad integer '" + s + "'");
    return out;
}

// Buffered writer with %g-style compact numbers; callers format rows.
class CsvWriter {
  public:
    explicit CsvWriter(const std::string& path) : path_(path) {
        f_ = std::fopen(path.c_str(), "wb");
        if (!f_) throw IoError("cannot write " + path);
    }
    ~CsvWriter() {
        if (f_) std::fclose(f_);
    }
    CsvWriter(const CsvWriter&) = delete;
    CsvWriter& operator=(const CsvWriter&) = delete;

    void row(const std::vector<std::string>& fields) {
        std::string line;
        for (size_t i = 0; i < fields.size(); ++i) {
            if (i) line += ',';
            line += fields[i];
        }
        line += '\n';
        if (std::fwrite(line.data(), 1, line.size(), f_) != line.size())
            throw IoError("short write to " + path_);
    }

    void close() {
        if (f_) {
            if (std::fclose(f_) != 0) throw IoError("close failed for " + path_);
            f_ = nullptr;
        }
    }

  private:
    std::string path_;
    std::FILE* f_ = nullptr;
};

inline std::string num(double v, int precision = 10) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.*g", precision, v);
    return buf;
}

}  // namespace demandscope::data
