#pragma once

#include <fstream>
#include <functional>
#include <string>
#include <string_view>
#include <vector>

#include "ckg/error.hpp"

namespace ckg::csv {

/// Splits one CSV record honoring RFC 4180 double quotes. Returns false on an
/// unterminated quote.
inline bool split_record(std::string_view line, char sep, std::vector<std::string>& out) {
    out.clear();
    std::string field;
    bool quoted = false;
    bool was_quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        char c = line[i];
        if (quoted) {
            if (c == '"') {
                if (i + 1 < line.size() && line[i + 1] == '"') {
                    field.push_back('"');
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                field.push_back(c);
            }
        } else if (c == '"' && field.empty() && !was_quoted) {
            quoted = true;
            was_quoted = true;
        } else if (c == sep) {
            out.push_back(std::move(field));
            field.clear();
            was_quoted = false;
        } else {
            field.push_back(c);
        }
    }
    if (quoted) return false;
    out.push_back(std::move(field));
    return true;
}

inline std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

/// Reads a delimited file with a mandatory header. `row` receives the 1-based
/// line number and the fields, already checked against the header width.
inline void read_table(const std::string& path, char sep, const std::vector<std::string>& header,
                       const std::function<void(std::size_t, const std::vector<std::string>&)>& row) {
    std::ifstream in(path);
    if (!in) fail(Errc::Io, "cannot open " + path);
    std::string line;
    std::vector<std::string> fields;
    std::size_t lineno = 0;
    bool seen_header = false;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line[0] == '#') continue;
        if (!split_record(line, sep, fields)) {
            fail(Errc::Parse, path + ":" + std::to_string(lineno) + ": unterminated quote");
        }
        for (auto& f : fields) f = std::string(trim(f));
        if (!seen_header) {
            if (fields != header) {
                std::string want;
                for (const auto& h : header) want += (want.empty() ? "" : std::string(1, sep)) + h;
                fail(Errc::Parse, path + ":" + std::to_string(lineno) + ": expected header '" + want + "'");
            }
            seen_header = true;
            continue;
        }
        if (fields.size() != header.size()) {
            fail(Errc::Parse, path + ":" + std::to_string(lineno) + ": expected " +
                                  std::to_string(header.size()) + " fields, got " +
                                  std::to_string(fields.size()));
        }
        row(lineno, fields);
    }
    if (!seen_header) fail(Errc::Parse, path + ": missing header");
}

/// Quotes a CSV field only when needed.
inline std::string quote(std::string_view s) {
    if (s.find_first_of(",\"\n") == std::string_view::npos) return std::string(s);
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += "\"\"";
        else out.push_back(c);
    }
    out += '"';
    return out;
}

} // namespace ckg::csv
