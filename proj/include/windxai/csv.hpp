#pragma once

#include <cctype>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "windxai/core.hpp"
#include "windxai/util.hpp"

namespace windxai {

// Maps canonical field names (timestamp, v_w, rho, ti, delta_yaw, power,
// status_ok) to the column headers of a concrete CSV export. Unmapped
// optional fields fall back to defaults (delta_yaw = 0, status_ok = true).
using ColumnMap = std::map<std::string, std::string>;

inline ColumnMap default_column_map() {
    return {{"timestamp", "timestamp"}, {"v_w", "v_w"},     {"rho", "rho"},
            {"ti", "ti"},               {"delta_yaw", "delta_yaw"}, {"power", "power"},
            {"status_ok", "status_ok"}};
}

namespace detail {

inline std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    bool quoted = false;
    for (char c : line) {
        if (c == '"') {
            quoted = !quoted;
        } else if (c == ',' && !quoted) {
            out.push_back(cur);
            cur.clear();
        } else {
            cur += c;
        }
    }
    if (!cur.empty() && cur.back() == '\r') cur.pop_back();
    out.push_back(cur);
    return out;
}

inline bool parse_bool(std::string s, bool& out) {
    while (!s.empty() && (s.back() == '\r' || s.back() == ' ')) s.pop_back();
    std::size_t b = 0;
    while (b < s.size() && s[b] == ' ') ++b;
    s = s.substr(b);
    for (auto& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    if (s == "1" || s == "true" || s == "yes" || s == "ok") {
        out = true;
        return true;
    }
    if (s == "0" || s == "false" || s == "no") {
        out = false;
        return true;
    }
    return false;
}

}  // namespace detail

struct ParseReport {
    Records records;
    std::size_t rows_dropped = 0;
};

// Reads SCADA records from a CSV file with a header row. Rows whose mapped
// fields do not parse (or violate the record's field bounds) are dropped and
// counted rather than aborting the whole ingest.
inline ParseReport parse_scada_csv(const std::string& path, const ColumnMap& column_map = default_column_map()) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open CSV file: " + path);

    std::string header_line;
    if (!std::getline(in, header_line)) throw DataError("empty CSV file: " + path);
    const auto header = detail::split_csv_line(header_line);

    auto column_of = [&](const std::string& canonical) -> std::optional<std::size_t> {
        const auto it = column_map.find(canonical);
        if (it == column_map.end()) return std::nullopt;
        for (std::size_t i = 0; i < header.size(); ++i) {
            if (header[i] == it->second) return i;
        }
        throw DataError("missing column '" + it->second + "' (mapped from '" + canonical + "') in " + path);
    };

    struct Cols {
        std::optional<std::size_t> timestamp, v_w, rho, ti, delta_yaw, power, status_ok;
    } cols;
    cols.timestamp = column_of("timestamp");
    cols.v_w = column_of("v_w");
    cols.rho = column_of("rho");
    cols.ti = column_of("ti");
    cols.delta_yaw = column_of("delta_yaw");
    cols.power = column_of("power");
    cols.status_ok = column_of("status_ok");
    for (const auto& [name, col] : {std::pair{"timestamp", cols.timestamp},
                                    {"v_w", cols.v_w},
                                    {"rho", cols.rho},
                                    {"ti", cols.ti},
                                    {"power", cols.power}}) {
        if (!col) throw DataError(std::string("required field '") + name + "' has no column mapping");
    }

    ParseReport report;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty() || line == "\r") continue;
        const auto fields = detail::split_csv_line(line);
        auto get = [&](std::size_t i) -> const std::string& {
            static const std::string empty;
            return i < fields.size() ? fields[i] : empty;
        };
        ScadaRecord r;
        bool ok = parse_timestamp(get(*cols.timestamp), r.timestamp) &&
                  parse_double(get(*cols.v_w), r.v_w) && parse_double(get(*cols.rho), r.rho) &&
                  parse_double(get(*cols.ti), r.ti) && parse_double(get(*cols.power), r.power);
        if (ok && cols.delta_yaw) ok = parse_double(get(*cols.delta_yaw), r.delta_yaw);
        if (ok && cols.status_ok) ok = detail::parse_bool(get(*cols.status_ok), r.status_ok);
        if (ok && record_valid(r)) {
            report.records.push_back(r);
        } else {
            ++report.rows_dropped;
        }
    }
    if (report.records.empty()) throw DataError("no parseable rows in " + path);
    return report;
}

// Canonical column order used by every CSV this toolkit writes.
inline void write_scada_csv(const std::string& path, const Records& records) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write CSV file: " + path);
    out << "timestamp,v_w,rho,ti,delta_yaw,power,status_ok\n";
    for (const auto& r : records) {
        out << format_timestamp(r.timestamp) << ',' << format_double(r.v_w) << ','
            << format_double(r.rho) << ',' << format_double(r.ti) << ','
            << format_double(r.delta_yaw) << ',' << format_double(r.power) << ','
            << (r.status_ok ? "true" : "false") << '\n';
    }
}

}  // namespace windxai
