#pragma once

#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <string>

#include "lmc/grid.hpp"
#include "lmc/profile.hpp"
#include "lmc/rotation.hpp"
#include "lmc/solver.hpp"

namespace lmc {

inline std::string g17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

namespace detail {

inline std::vector<double> parse_csv_doubles(const std::string& s) {
    std::vector<double> out;
    std::stringstream ss(s);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
        if (tok.empty()) continue;
        std::size_t pos = 0;
        double v;
        try {
            v = std::stod(tok, &pos);
        } catch (...) {
            throw validation_error("csv: bad number '" + tok + "'");
        }
        out.push_back(v);
    }
    return out;
}

inline std::map<std::string, std::string> parse_header_fields(const std::string& line) {
    std::map<std::string, std::string> kv;
    std::stringstream ss(line);
    std::string tok;
    while (ss >> tok) {
        std::size_t eq = tok.find('=');
        if (eq == std::string::npos) continue;
        kv[tok.substr(0, eq)] = tok.substr(eq + 1);
    }
    return kv;
}

}  // namespace detail

/// Grid function CSV: `# grid n=<n> m=<m> h=<h> lo=<v1,...,vn>` then
/// lexicographic rows `x1,...,xn,value` at 17 significant digits.
inline void write_grid_csv(std::ostream& os, const GridFunction& u,
                           const std::vector<std::string>& footer = {}) {
    const GridSpec& g = u.spec;
    os << "# grid n=" << g.n << " m=" << g.m << " h=" << g17(g.h) << " lo=";
    for (int i = 0; i < g.n; ++i) os << (i ? "," : "") << g17(g.lo[i]);
    os << "\n";
    for_each_node(g, [&](std::size_t f, const MIdx& idx) {
        Vec x = g.point(idx);
        for (int i = 0; i < g.n; ++i) os << g17(x[i]) << ",";
        os << g17(u.values[f]) << "\n";
    });
    for (const std::string& line : footer) os << "# " << line << "\n";
}

inline void save_grid_csv(const std::string& path, const GridFunction& u,
                          const std::vector<std::string>& footer = {}) {
    std::ofstream os(path);
    if (!os) throw validation_error("cannot open output file: " + path);
    write_grid_csv(os, u, footer);
}

inline GridFunction read_grid_csv(std::istream& is) {
    std::string line;
    if (!std::getline(is, line) || line.rfind("# grid", 0) != 0)
        throw validation_error("grid csv: missing '# grid' header");
    auto kv = detail::parse_header_fields(line.substr(2));
    if (!kv.count("n") || !kv.count("m") || !kv.count("h") || !kv.count("lo"))
        throw validation_error("grid csv: incomplete header");
    int n = std::stoi(kv["n"]);
    int m = std::stoi(kv["m"]);
    double h = std::stod(kv["h"]);
    std::vector<double> lov = detail::parse_csv_doubles(kv["lo"]);
    if (int(lov.size()) != n) throw validation_error("grid csv: lo length mismatch");
    Vec lo{};
    for (int i = 0; i < n; ++i) lo[i] = lov[i];
    GridSpec spec(n, m, h, lo);
    GridFunction u(spec);
    std::size_t count = 0;
    while (count < spec.size() && std::getline(is, line)) {
        if (line.empty() || line[0] == '#') continue;
        std::vector<double> row = detail::parse_csv_doubles(line);
        if (int(row.size()) != n + 1) throw validation_error("grid csv: bad row width");
        u.values[count++] = row.back();
    }
    if (count != spec.size()) throw validation_error("grid csv: too few rows");
    u.check_finite();
    return u;
}

inline GridFunction load_grid_csv(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw validation_error("cannot open input file: " + path);
    return read_grid_csv(is);
}

/// Rotated potential CSV: `# rotated n=<n>`, scattered `xbar...,ubar` rows,
/// then a standard grid block for the resample.
inline void save_rotated_csv(const std::string& path, const RotatedPotential& rp) {
    std::ofstream os(path);
    if (!os) throw validation_error("cannot open output file: " + path);
    os << "# rotated n=" << rp.n << "\n";
    for (std::size_t i = 0; i < rp.points.size(); ++i) {
        for (int d = 0; d < rp.n; ++d) os << g17(rp.points[i][d]) << ",";
        os << g17(rp.values[i]) << "\n";
    }
    write_grid_csv(os, rp.resample);
}

inline RotatedPotential load_rotated_csv(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw validation_error("cannot open input file: " + path);
    std::string line;
    if (!std::getline(is, line) || line.rfind("# rotated", 0) != 0)
        throw validation_error("rotated csv: missing '# rotated' header");
    auto kv = detail::parse_header_fields(line.substr(2));
    if (!kv.count("n")) throw validation_error("rotated csv: missing dimension");
    RotatedPotential rp;
    rp.n = std::stoi(kv["n"]);
    std::streampos mark = is.tellg();
    while (std::getline(is, line)) {
        if (line.rfind("# grid", 0) == 0) {
            // rewind to hand the grid block to the grid reader
            is.seekg(mark);
            rp.resample = read_grid_csv(is);
            return rp;
        }
        if (line.empty() || line[0] == '#') {
            mark = is.tellg();
            continue;
        }
        std::vector<double> row = detail::parse_csv_doubles(line);
        if (int(row.size()) != rp.n + 1) throw validation_error("rotated csv: bad scattered row");
        Vec p{};
        for (int d = 0; d < rp.n; ++d) p[d] = row[d];
        rp.points.push_back(p);
        rp.values.push_back(row.back());
        mark = is.tellg();
    }
    throw validation_error("rotated csv: missing resample grid block");
}

/// Profile CSV: metadata comment, `# columns s,f,fp,fpp`, then the table.
inline void save_profile_csv(const std::string& path, const ProfileSolution& p) {
    std::ofstream os(path);
    if (!os) throw validation_error("cannot open output file: " + path);
    os << "# profile n=" << p.n << " a=" << g17(p.a) << " smax=" << g17(p.s_max)
       << " s0=" << g17(p.s0) << "\n";
    os << "# columns s,f,fp,fpp\n";
    for (std::size_t i = 0; i < p.s.size(); ++i)
        os << g17(p.s[i]) << "," << g17(p.f[i]) << "," << g17(p.fp[i]) << "," << g17(p.fpp[i])
           << "\n";
}

inline std::vector<std::string> solve_report_footer(const SolveReport& rep) {
    return {
        "solve.iterations = " + std::to_string(rep.iterations),
        "solve.final_update = " + g17(rep.final_update),
        "solve.final_residual = " + g17(rep.final_residual),
        "solve.converged = " + std::string(rep.converged ? "1" : "0"),
    };
}

}  // namespace lmc
