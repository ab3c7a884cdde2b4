#pragma once

// Minimal CSV in and out. Input: header row, comma separated, '#' lines
// skipped, no quoting. Output: shortest round-trip doubles.

#include <charconv>
#include <fstream>
#include <sstream>
#include <string>
#include <system_error>
#include <vector>

#include "imcond/error.hpp"

namespace imcond::csv {

inline std::string format(double v) {
    char buf[64];
    const auto r = std::to_chars(buf, buf + sizeof buf, v);
    if (r.ec != std::errc()) throw Error("csv: cannot format number");
    return {buf, r.ptr};
}

inline std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    return s.substr(b, s.find_last_not_of(" \t\r") - b + 1);
}

inline std::vector<std::string> split(const std::string& line, char sep = ',') {
    std::vector<std::string> out;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, sep)) out.push_back(trim(cell));
    if (!line.empty() && line.back() == sep) out.emplace_back();
    return out;
}

inline double parse_double(const std::string& s) {
    double v = 0.0;
    const auto r = std::from_chars(s.data(), s.data() + s.size(), v);
    if (r.ec != std::errc() || r.ptr != s.data() + s.size()) throw DomainError("csv: not a number: '" + s + "'");
    return v;
}

struct Table {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    std::size_t column(const std::string& name) const {
        for (std::size_t i = 0; i < header.size(); ++i)
            if (header[i] == name) return i;
        throw DomainError("csv: missing column '" + name + "'");
    }
    std::vector<std::string> strings(const std::string& name) const {
        const std::size_t c = column(name);
        std::vector<std::string> v;
        v.reserve(rows.size());
        for (const auto& r : rows) v.push_back(r.at(c));
        return v;
    }
    std::vector<double> numbers(const std::string& name) const {
        std::vector<double> v;
        for (const auto& s : strings(name)) v.push_back(parse_double(s));
        return v;
    }
};

inline Table read(std::istream& in) {
    Table t;
    std::string line;
    while (std::getline(in, line)) {
        const std::string s = trim(line);
        if (s.empty() || s.front() == '#') continue;
        auto cells = split(s);
        if (t.header.empty()) {
            t.header = std::move(cells);
            continue;
        }
        if (cells.size() != t.header.size()) throw DomainError("csv: row has " + std::to_string(cells.size()) +
                                                               " fields, header has " + std::to_string(t.header.size()));
        t.rows.push_back(std::move(cells));
    }
    if (t.header.empty()) throw DomainError("csv: no header row");
    return t;
}

inline Table read_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DomainError("csv: cannot open '" + path + "'");
    return read(in);
}

/// Writer with a provenance comment line before the header.
class Writer {
public:
    Writer(std::ostream& out, const std::string& comment, const std::vector<std::string>& header) : out_(out) {
        out_ << "# " << comment << '\n';
        for (std::size_t i = 0; i < header.size(); ++i) out_ << (i ? "," : "") << header[i];
        out_ << '\n';
    }
    void row(const std::vector<double>& v) {
        for (std::size_t i = 0; i < v.size(); ++i) out_ << (i ? "," : "") << format(v[i]);
        out_ << '\n';
    }

private:
    std::ostream& out_;
};

} // namespace imcond::csv
