#pragma once

#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>

#include "lmc/common.hpp"
#include "lmc/grid.hpp"
#include "lmc/phase.hpp"
#include "lmc/solver.hpp"

namespace lmc {

/// Plain `section.key = value` configuration with `#` comments.  Keys must be
/// declared by the consuming command; unknown keys are rejected.
struct Config {
    std::map<std::string, std::string> kv;

    bool has(const std::string& key) const { return kv.count(key) > 0; }

    void set(const std::string& key, const std::string& value) { kv[key] = value; }

    std::string get(const std::string& key) const {
        auto it = kv.find(key);
        if (it == kv.end()) throw validation_error("config: missing key '" + key + "'");
        return it->second;
    }

    std::string get_or(const std::string& key, const std::string& fallback) const {
        auto it = kv.find(key);
        return it == kv.end() ? fallback : it->second;
    }

    double get_real(const std::string& key) const {
        try {
            return std::stod(get(key));
        } catch (const validation_error&) {
            throw;
        } catch (...) {
            throw validation_error("config: key '" + key + "' is not a number");
        }
    }

    double get_real_or(const std::string& key, double fallback) const {
        return has(key) ? get_real(key) : fallback;
    }

    long get_int(const std::string& key) const {
        try {
            return std::stol(get(key));
        } catch (const validation_error&) {
            throw;
        } catch (...) {
            throw validation_error("config: key '" + key + "' is not an integer");
        }
    }

    long get_int_or(const std::string& key, long fallback) const {
        return has(key) ? get_int(key) : fallback;
    }

    std::vector<double> get_reals(const std::string& key) const {
        std::vector<double> out;
        std::stringstream ss(get(key));
        std::string tok;
        while (std::getline(ss, tok, ',')) {
            if (tok.empty()) continue;
            try {
                out.push_back(std::stod(tok));
            } catch (...) {
                throw validation_error("config: key '" + key + "' has a bad number '" + tok + "'");
            }
        }
        return out;
    }

    void require_known(const std::set<std::string>& allowed) const {
        for (const auto& [k, v] : kv)
            if (!allowed.count(k)) throw validation_error("config: unknown key '" + k + "'");
    }
};

inline Config load_config(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw validation_error("cannot open config file: " + path);
    Config cfg;
    std::string line;
    int lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        std::size_t hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        auto strip = [](std::string s) {
            std::size_t b = s.find_first_not_of(" \t\r");
            if (b == std::string::npos) return std::string();
            std::size_t e = s.find_last_not_of(" \t\r");
            return s.substr(b, e - b + 1);
        };
        line = strip(line);
        if (line.empty()) continue;
        std::size_t eq = line.find('=');
        if (eq == std::string::npos)
            throw validation_error("config line " + std::to_string(lineno) + ": expected key = value");
        std::string key = strip(line.substr(0, eq));
        std::string val = strip(line.substr(eq + 1));
        if (key.empty()) throw validation_error("config line " + std::to_string(lineno) + ": empty key");
        cfg.kv[key] = val;
    }
    return cfg;
}

inline GridSpec grid_from_config(const Config& cfg) {
    int n = int(cfg.get_int("grid.n"));
    int m = int(cfg.get_int("grid.m"));
    double h = cfg.get_real("grid.h");
    std::vector<double> lov = cfg.get_reals("grid.lo");
    if (int(lov.size()) != n) throw validation_error("config: grid.lo length must equal grid.n");
    Vec lo{};
    for (int i = 0; i < n; ++i) lo[i] = lov[i];
    return GridSpec(n, m, h, lo);
}

inline PhaseSpec phase_from_config(const Config& cfg, int n) {
    PhaseSpec spec;
    spec.n = n;
    std::string variant = cfg.get("phase.variant");
    if (variant == "constant") {
        spec.variant = PhaseVariant::constant;
        spec.c = cfg.get_real("phase.c");
    } else if (variant == "self_similar") {
        spec.variant = PhaseVariant::self_similar;
        spec.c = cfg.get_real("phase.c");
        spec.b = cfg.get_real("phase.b");
    } else if (variant == "translator") {
        spec.variant = PhaseVariant::translator;
        spec.c = cfg.get_real("phase.c");
        std::vector<double> k = cfg.get_reals("phase.k");
        std::vector<double> l = cfg.get_reals("phase.l");
        if (int(k.size()) != n || int(l.size()) != n)
            throw validation_error("config: phase.k and phase.l must have grid.n entries");
        for (int i = 0; i < n; ++i) {
            spec.k[i] = k[i];
            spec.l[i] = l[i];
        }
    } else if (variant == "rotator") {
        spec.variant = PhaseVariant::rotator;
        spec.c = cfg.get_real("phase.c");
        spec.a = cfg.get_real("phase.a");
    } else if (variant == "singular_family") {
        spec.variant = PhaseVariant::singular_family;
        spec.beta = cfg.get_real("phase.beta");
    } else if (variant == "tabulated") {
        throw validation_error("config: tabulated phases are library-only (no file schema)");
    } else {
        throw validation_error("config: unknown phase.variant '" + variant + "'");
    }
    spec.validate();
    return spec;
}

inline SolveParams solve_from_config(const Config& cfg) {
    SolveParams p;
    p.dt = cfg.get_real_or("solve.dt", 0.0);
    p.max_iters = cfg.get_int_or("solve.max_iters", p.max_iters);
    p.tol = cfg.get_real_or("solve.tol", p.tol);
    std::string stencil = cfg.get_or("solve.stencil", "central");
    if (stencil == "central")
        p.stencil = Stencil::central;
    else if (stencil == "wide")
        p.stencil = Stencil::wide;
    else
        throw validation_error("config: solve.stencil must be central or wide");
    p.threads = int(cfg.get_int_or("threads", 1));
    return p;
}

}  // namespace lmc
