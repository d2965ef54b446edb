#pragma once

#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "ebt/measure.hpp"

namespace ebt {

/// Measure file: optional `# key=value` metadata lines, a `x,mass` header,
/// then one atom per row. Values are written with 17 significant digits so
/// a write/read round trip reproduces every double bitwise.
struct MeasureFile {
    DiscreteMeasure measure;
    std::vector<std::pair<std::string, std::string>> metadata;
};

inline void write_measure_csv(const std::string& path, const DiscreteMeasure& m,
                              const std::vector<std::pair<std::string, std::string>>& metadata = {}) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open for writing: " + path);
    for (const auto& [k, v] : metadata) out << "# " << k << "=" << v << "\n";
    out << "x,mass\n";
    char buf[64];
    for (std::size_t i = 0; i < m.size(); ++i) {
        std::snprintf(buf, sizeof buf, "%.17g,%.17g", m.points[i], m.masses[i]);
        out << buf << "\n";
    }
    if (!out) throw std::runtime_error("write failed: " + path);
}

inline MeasureFile read_measure_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open: " + path);
    MeasureFile out;
    std::string line;
    bool header_seen = false;
    std::size_t lineno = 0;
    auto fail = [&](const std::string& what) {
        throw std::runtime_error(path + ":" + std::to_string(lineno) + ": " + what);
    };
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        if (line[0] == '#') {
            std::string body = line.substr(1);
            const std::size_t eq = body.find('=');
            if (eq != std::string::npos) {
                std::string key = body.substr(0, eq);
                key.erase(0, key.find_first_not_of(' '));
                out.metadata.emplace_back(key, body.substr(eq + 1));
            }
            continue;
        }
        if (!header_seen) {
            if (line != "x,mass") fail("expected header 'x,mass'");
            header_seen = true;
            continue;
        }
        const std::size_t comma = line.find(',');
        if (comma == std::string::npos) fail("expected 'x,mass' row");
        double x = 0.0, mass = 0.0;
        const char* b = line.data();
        auto r1 = std::from_chars(b, b + comma, x);
        auto r2 = std::from_chars(b + comma + 1, b + line.size(), mass);
        if (r1.ec != std::errc{} || r2.ec != std::errc{}) fail("bad number");
        out.measure.points.push_back(x);
        out.measure.masses.push_back(mass);
    }
    if (!header_seen) fail("missing 'x,mass' header");
    out.measure = canonicalize(out.measure);
    return out;
}

}  // namespace ebt
