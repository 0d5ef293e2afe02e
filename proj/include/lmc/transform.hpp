#pragma once

#include <limits>

#include "lmc/fd.hpp"
#include "lmc/grid.hpp"
#include "lmc/matrix.hpp"

namespace lmc {

struct ConvexityReport {
    double min_eigenvalue = 0.0;
    MIdx argmin{};
    std::vector<std::size_t> violations;  // flat indices, lexicographic order
    double tol = 0.0;
    bool pass = false;
};

/// Minimum Hessian eigenvalue over interior nodes; passes iff min >= -tol.
/// Nodes within exclude_radius of exclude_center are skipped (used for
/// potentials with a known vertex).
inline ConvexityReport convexity_check(const GridFunction& u, double tol,
                                       double exclude_radius = 0.0,
                                       const Vec& exclude_center = Vec{}) {
    ConvexityReport rep;
    rep.tol = tol;
    rep.min_eigenvalue = std::numeric_limits<double>::infinity();
    for_each_interior(u.spec, 1, [&](std::size_t f, const MIdx& idx) {
        if (exclude_radius > 0.0 &&
            dist(u.spec.point(idx), exclude_center, u.spec.n) < exclude_radius)
            return;
        double lam = min_eigenvalue(hessian_central(u, idx));
        if (lam < rep.min_eigenvalue) {
            rep.min_eigenvalue = lam;
            rep.argmin = idx;
        }
        if (lam < -tol) rep.violations.push_back(f);
    });
    rep.pass = rep.violations.empty();
    return rep;
}

/// Discrete slope range of u along each axis: min/max of adjacent-node
/// difference quotients.  Bounds the subdifferential of the sampled function.
struct SlopeRange {
    Vec lo{};
    Vec hi{};
};

inline SlopeRange slope_range(const GridFunction& u) {
    SlopeRange r;
    for (int i = 0; i < u.spec.n; ++i) {
        r.lo[i] = std::numeric_limits<double>::infinity();
        r.hi[i] = -std::numeric_limits<double>::infinity();
    }
    for_each_node(u.spec, [&](std::size_t, const MIdx& idx) {
        for (int i = 0; i < u.spec.n; ++i) {
            if (idx[i] + 1 >= u.spec.m) continue;
            MIdx nb = idx;
            ++nb[i];
            double s = (u.at(nb) - u.at(idx)) / u.spec.h;
            r.lo[i] = std::min(r.lo[i], s);
            r.hi[i] = std::max(r.hi[i], s);
        }
    });
    return r;
}

/// Dual grid that covers the slope range of u, padded by 2h on each side.
inline GridSpec dual_grid_for(const GridFunction& u, int m_dual = 0) {
    SlopeRange sr = slope_range(u);
    int m = m_dual > 0 ? m_dual : u.spec.m;
    double width = 0.0;
    Vec lo{};
    for (int i = 0; i < u.spec.n; ++i)
        width = std::max(width, sr.hi[i] - sr.lo[i] + 4.0 * u.spec.h);
    for (int i = 0; i < u.spec.n; ++i) {
        double c = 0.5 * (sr.lo[i] + sr.hi[i]);
        lo[i] = c - 0.5 * width;
    }
    return GridSpec(u.spec.n, m, width / (m - 1), lo);
}

namespace detail {

inline std::vector<Vec> node_points(const GridSpec& g) {
    std::vector<Vec> pts(g.size());
    for_each_node(g, [&](std::size_t f, const MIdx& idx) { pts[f] = g.point(idx); });
    return pts;
}

// Brute-force conjugate sup_x (x . xbar - u(x)) over all primal nodes.
// Ties resolve to the lexicographically smallest primal node (first strict
// improvement wins in flat scan order).
inline void legendre_raw(const GridFunction& u, const GridSpec& dual, int threads,
                         GridFunction& out, std::vector<std::size_t>* argmax) {
    const std::size_t np = u.spec.size();
    std::vector<Vec> pts = node_points(u.spec);
    std::vector<Vec> dpts = node_points(dual);
    out = GridFunction(dual);
    if (argmax) argmax->assign(dual.size(), 0);
    const int n = u.spec.n;
    parallel_for(dual.size(), threads, [&](std::size_t j) {
        const Vec& xb = dpts[j];
        double best = -std::numeric_limits<double>::infinity();
        std::size_t bi = 0;
        for (std::size_t i = 0; i < np; ++i) {
            double v = dot(pts[i], xb, n) - u.values[i];
            if (v > best) {
                best = v;
                bi = i;
            }
        }
        out.values[j] = best;
        if (argmax) (*argmax)[j] = bi;
    });
}

}  // namespace detail

struct LegendrePair {
    GridFunction primal;
    GridFunction dual;
    GridSpec dual_spec;
    std::vector<std::size_t> argmax;  // flat primal index attaining the sup, per dual node
};

/// Discrete Legendre-Fenchel transform of a convex grid function onto
/// dual_spec.  dual_spec must cover the sampled slope range; otherwise the
/// sup sits on the primal boundary and duality is corrupted.
inline GridFunction legendre_transform(const GridFunction& u, const GridSpec& dual_spec,
                                       double convexity_tol = 1e-8, int threads = 1,
                                       std::vector<std::size_t>* argmax = nullptr) {
    if (u.spec.n != dual_spec.n) throw validation_error("legendre: dimension mismatch");
    ConvexityReport conv = convexity_check(u, convexity_tol);
    if (!conv.pass) throw validation_error("legendre: input not convex");
    SlopeRange sr = slope_range(u);
    for (int i = 0; i < u.spec.n; ++i) {
        if (dual_spec.lo[i] > sr.lo[i] + 1e-12 || dual_spec.upper(i) < sr.hi[i] - 1e-12)
            throw validation_error("dual range too small");
    }
    GridFunction out;
    detail::legendre_raw(u, dual_spec, threads, out, argmax);
    return out;
}

inline LegendrePair make_legendre_pair(const GridFunction& u, const GridSpec& dual_spec,
                                       int threads = 1) {
    LegendrePair p;
    p.primal = u;
    p.dual_spec = dual_spec;
    p.dual = legendre_transform(u, dual_spec, 1e-8, threads, &p.argmax);
    return p;
}

/// Largest convex minorant on the grid, computed as the double transform.
/// Idempotent; equals u wherever u is convex.
inline GridFunction convex_envelope(const GridFunction& u, int m_dual = 0, int threads = 1) {
    GridSpec dual = dual_grid_for(u, m_dual);
    GridFunction star;
    detail::legendre_raw(u, dual, threads, star, nullptr);
    GridFunction env;
    detail::legendre_raw(star, u.spec, threads, env, nullptr);
    return env;
}

}  // namespace lmc
