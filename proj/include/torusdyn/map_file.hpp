// Plain-text map definition files, shared by every tool.
//
//   # comment
//   [matrix]
//   m00 = 3
//   m01 = 0
//   m10 = 1
//   m11 = 1
//   [perturbation]
//   term = freq=(0,1) coeff=(0,0.05) phase=0
//   t = 0.02
//
// Keys outside a section or unknown keys are rejected so that typos do not
// silently change an experiment.
#pragma once

#include <cctype>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>

#include "torus_map.hpp"

namespace torusdyn {

struct MapFileError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

namespace detail {

inline std::string strip(const std::string& s) {
    std::size_t a = s.find_first_not_of(" \t\r\n");
    if (a == std::string::npos) return {};
    std::size_t b = s.find_last_not_of(" \t\r\n");
    return s.substr(a, b - a + 1);
}

inline FourierTerm parse_term(const std::string& value, const std::string& where) {
    FourierTerm tm;
    long long fx = 0, fy = 0;
    double cx = 0, cy = 0, ph = 0;
    int n = std::sscanf(value.c_str(), " freq=(%lld ,%lld ) coeff=(%lf ,%lf ) phase=%lf",
                        &fx, &fy, &cx, &cy, &ph);
    if (n != 5)
        throw MapFileError(where + ": malformed term '" + value +
                           "' (expected freq=(k1,k2) coeff=(c1,c2) phase=p)");
    tm.freq = {fx, fy};
    tm.coeff = {cx, cy};
    tm.phase = ph;
    return tm;
}

} // namespace detail

inline TorusMap parse_map_text(std::istream& in, const std::string& name) {
    TorusMap map;
    bool have[4] = {false, false, false, false};
    std::string line, section;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        std::string where = name + ":" + std::to_string(lineno);
        std::string s = detail::strip(line);
        if (s.empty() || s[0] == '#') continue;
        if (s.front() == '[' && s.back() == ']') {
            section = detail::strip(s.substr(1, s.size() - 2));
            if (section != "matrix" && section != "perturbation")
                throw MapFileError(where + ": unknown section [" + section + "]");
            continue;
        }
        std::size_t eq = s.find('=');
        if (eq == std::string::npos) throw MapFileError(where + ": expected key=value");
        std::string key = detail::strip(s.substr(0, eq));
        std::string value = detail::strip(s.substr(eq + 1));
        if (section == "matrix") {
            if (key.size() != 3 || key[0] != 'm' || key[1] < '0' || key[1] > '1' ||
                key[2] < '0' || key[2] > '1')
                throw MapFileError(where + ": unknown matrix key '" + key + "'");
            std::int64_t v = 0;
            try {
                std::size_t pos = 0;
                v = std::stoll(value, &pos);
                if (pos != value.size()) throw std::invalid_argument("");
            } catch (...) {
                throw MapFileError(where + ": matrix entries must be integers, got '" + value + "'");
            }
            int idx = (key[1] - '0') * 2 + (key[2] - '0');
            (idx == 0 ? map.matrix.a : idx == 1 ? map.matrix.b : idx == 2 ? map.matrix.c
                                                                          : map.matrix.d) = v;
            have[idx] = true;
        } else if (section == "perturbation") {
            if (key == "term") {
                map.g.terms.push_back(detail::parse_term(value, where));
            } else if (key == "t") {
                try {
                    std::size_t pos = 0;
                    map.g.t = std::stod(value, &pos);
                    if (pos != value.size()) throw std::invalid_argument("");
                } catch (...) {
                    throw MapFileError(where + ": t must be a real number, got '" + value + "'");
                }
            } else {
                throw MapFileError(where + ": unknown perturbation key '" + key + "'");
            }
        } else {
            throw MapFileError(where + ": key '" + key + "' outside any section");
        }
    }
    if (!(have[0] && have[1] && have[2] && have[3]))
        throw MapFileError(name + ": matrix entries m00..m11 are all required");
    if (map.matrix.det() == 0)
        throw MapFileError(name + ": matrix must have nonzero determinant");
    return map;
}

inline TorusMap load_map_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw MapFileError("cannot open map file '" + path + "'");
    return parse_map_text(in, path);
}

inline std::string format_map_text(const TorusMap& map) {
    char buf[256];
    std::ostringstream out;
    out << "[matrix]\n";
    out << "m00 = " << map.matrix.a << "\n";
    out << "m01 = " << map.matrix.b << "\n";
    out << "m10 = " << map.matrix.c << "\n";
    out << "m11 = " << map.matrix.d << "\n";
    out << "[perturbation]\n";
    for (const FourierTerm& tm : map.g.terms) {
        std::snprintf(buf, sizeof buf, "term = freq=(%lld,%lld) coeff=(%.17g,%.17g) phase=%.17g\n",
                      static_cast<long long>(tm.freq.x), static_cast<long long>(tm.freq.y),
                      tm.coeff.x, tm.coeff.y, tm.phase);
        out << buf;
    }
    std::snprintf(buf, sizeof buf, "t = %.17g\n", map.g.t);
    out << buf;
    return out.str();
}

inline void save_map_file(const TorusMap& map, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw MapFileError("cannot write map file '" + path + "'");
    out << format_map_text(map);
}

} // namespace torusdyn
