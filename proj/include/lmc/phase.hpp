#pragma once

#include <cmath>

#include "lmc/fd.hpp"
#include "lmc/grid.hpp"

namespace lmc {

enum class PhaseVariant {
    constant,
    self_similar,
    translator,
    rotator,
    singular_family,
    tabulated,
};

/// Right-hand side psi(x, u, Du) of the Lagrangian angle equation.
///
///   constant         psi = c
///   self_similar     psi = c + b (x.p - 2u)          (shrinker b>0, expander b<0)
///   translator       psi = c + k.x + l.p
///   rotator          psi = c + (a/2)(|x|^2 + |p|^2)
///   singular_family  psi = n pi/2 - (n-1) atan(|p|^{1/beta-1})
///                              - atan(beta^{-1} |p|^{1/beta-1}),  beta in (0,1)
///   tabulated        multilinear interpolation of a sampled table psi(x[,p])
struct PhaseSpec {
    PhaseVariant variant = PhaseVariant::constant;
    int n = 1;  // ambient dimension (sets the singular-family limit and k/l length)
    double c = 0.0;
    double b = 0.0;
    double a = 0.0;
    double beta = 0.5;
    Vec k{};
    Vec l{};
    // tabulated data: a grid over (x_1..x_xdim, p_1..p_pdim); pdim may be 0
    GridFunction table;
    int table_xdim = 0;
    int table_pdim = 0;

    void validate() const {
        if (n < 1 || n > kMaxDim) throw validation_error("phase: bad dimension");
        if (variant == PhaseVariant::singular_family && !(beta > 0.0 && beta < 1.0))
            throw validation_error("phase: singular family needs beta in (0,1)");
        if (variant == PhaseVariant::tabulated) {
            if (table_xdim + table_pdim != table.spec.n || table_xdim < 0 || table_pdim < 0)
                throw validation_error("phase: table dimensions inconsistent");
            if (table.values.empty()) throw validation_error("phase: empty table");
        }
    }
};

inline PhaseSpec constant_phase(int n, double c) {
    PhaseSpec s;
    s.variant = PhaseVariant::constant;
    s.n = n;
    s.c = c;
    return s;
}

inline PhaseSpec self_similar_phase(int n, double c, double b) {
    PhaseSpec s;
    s.variant = PhaseVariant::self_similar;
    s.n = n;
    s.c = c;
    s.b = b;
    return s;
}

inline PhaseSpec translator_phase(int n, double c, const Vec& k, const Vec& l) {
    PhaseSpec s;
    s.variant = PhaseVariant::translator;
    s.n = n;
    s.c = c;
    s.k = k;
    s.l = l;
    return s;
}

inline PhaseSpec rotator_phase(int n, double c, double a) {
    PhaseSpec s;
    s.variant = PhaseVariant::rotator;
    s.n = n;
    s.c = c;
    s.a = a;
    return s;
}

inline PhaseSpec singular_family_phase(int n, double beta) {
    PhaseSpec s;
    s.variant = PhaseVariant::singular_family;
    s.n = n;
    s.beta = beta;
    s.validate();
    return s;
}

inline double eval_phase(const PhaseSpec& spec, const Vec& x, double u, const Vec& p) {
    switch (spec.variant) {
        case PhaseVariant::constant:
            return spec.c;
        case PhaseVariant::self_similar:
            return spec.c + spec.b * (dot(x, p, spec.n) - 2.0 * u);
        case PhaseVariant::translator:
            return spec.c + dot(spec.k, x, spec.n) + dot(spec.l, p, spec.n);
        case PhaseVariant::rotator:
            return spec.c + 0.5 * spec.a * (norm_sq(x, spec.n) + norm_sq(p, spec.n));
        case PhaseVariant::singular_family: {
            // continuous up to |p| = 0 where the limit value n pi/2 is attained
            double r = norm(p, spec.n);
            double t = std::pow(r, 1.0 / spec.beta - 1.0);
            return spec.n * M_PI / 2.0 - (spec.n - 1) * std::atan(t) -
                   std::atan(t / spec.beta);
        }
        case PhaseVariant::tabulated: {
            Vec q{};
            for (int i = 0; i < spec.table_xdim; ++i) q[i] = x[i];
            for (int i = 0; i < spec.table_pdim; ++i) q[spec.table_xdim + i] = p[i];
            return spec.table.interp(q);  // throws outside the table
        }
    }
    throw validation_error("phase: unknown variant");
}

struct PartialConvexityReport {
    double min_eigenvalue = 0.0;
    double tol = 0.0;
    bool pass = false;
    Vec arg_x{};
    double arg_u = 0.0;
    Vec arg_p{};
};

/// Convexity of p -> psi(x, u, p) at each frozen (x, u) sample, via the
/// finite-difference Hessian on the supplied p-grid.  Nodes outside the
/// radial window [p_min, p_max] are skipped when p_max > 0.
inline PartialConvexityReport partial_convexity_check(const PhaseSpec& spec,
                                                      const std::vector<Vec>& x_samples,
                                                      const std::vector<double>& u_samples,
                                                      const GridSpec& p_grid,
                                                      double p_min = 0.0, double p_max = 0.0,
                                                      double tol_curvature = 1.0) {
    if (x_samples.size() != u_samples.size())
        throw validation_error("partial convexity: sample count mismatch");
    PartialConvexityReport rep;
    rep.tol = 1e-8 + tol_curvature * p_grid.h * p_grid.h;
    rep.min_eigenvalue = std::numeric_limits<double>::infinity();
    for (std::size_t s = 0; s < x_samples.size(); ++s) {
        GridFunction psi =
            sample(p_grid, [&](const Vec& p) { return eval_phase(spec, x_samples[s], u_samples[s], p); });
        for_each_interior(p_grid, 1, [&](std::size_t, const MIdx& idx) {
            Vec p = p_grid.point(idx);
            if (p_max > 0.0) {
                double r = norm(p, p_grid.n);
                if (r < p_min || r > p_max) return;
            }
            double lam = min_eigenvalue(hessian_central(psi, idx));
            if (lam < rep.min_eigenvalue) {
                rep.min_eigenvalue = lam;
                rep.arg_x = x_samples[s];
                rep.arg_u = u_samples[s];
                rep.arg_p = p;
            }
        });
    }
    rep.pass = rep.min_eigenvalue >= -rep.tol;
    return rep;
}

struct PhaseRangeReport {
    double min = 0.0;
    double max = 0.0;
    bool in_range = false;  // against [0, n pi/2]
    Vec argmin_x{}, argmin_p{};
    Vec argmax_x{}, argmax_p{};
};

struct PhaseSample {
    Vec x{};
    double u = 0.0;
    Vec p{};
};

inline PhaseRangeReport phase_range_check(const PhaseSpec& spec,
                                          const std::vector<PhaseSample>& samples) {
    if (samples.empty()) throw validation_error("phase range: no samples");
    PhaseRangeReport rep;
    rep.min = std::numeric_limits<double>::infinity();
    rep.max = -std::numeric_limits<double>::infinity();
    for (const auto& s : samples) {
        double v = eval_phase(spec, s.x, s.u, s.p);
        if (v < rep.min) {
            rep.min = v;
            rep.argmin_x = s.x;
            rep.argmin_p = s.p;
        }
        if (v > rep.max) {
            rep.max = v;
            rep.argmax_x = s.x;
            rep.argmax_p = s.p;
        }
    }
    rep.in_range = rep.min >= -1e-12 && rep.max <= spec.n * M_PI / 2.0 + 1e-12;
    return rep;
}

/// Product-box sampler for range checks: x over [x_lo, x_hi]^n, p over
/// [p_lo, p_hi]^n, u fixed (default 0).
inline std::vector<PhaseSample> box_samples(int n, double x_lo, double x_hi, double p_lo,
                                            double p_hi, int per_axis, double u = 0.0) {
    Vec lox{}, lop{};
    for (int i = 0; i < n; ++i) {
        lox[i] = x_lo;
        lop[i] = p_lo;
    }
    GridSpec gx(n, per_axis, (x_hi - x_lo) / (per_axis - 1), lox);
    GridSpec gp(n, per_axis, (p_hi - p_lo) / (per_axis - 1), lop);
    std::vector<PhaseSample> out;
    out.reserve(gx.size() * gp.size());
    for_each_node(gx, [&](std::size_t, const MIdx& ix) {
        for_each_node(gp, [&](std::size_t, const MIdx& ip) {
            PhaseSample s;
            s.x = gx.point(ix);
            s.p = gp.point(ip);
            s.u = u;
            out.push_back(s);
        });
    });
    return out;
}

}  // namespace lmc
