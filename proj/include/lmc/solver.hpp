#pragma once

#include <atomic>
#include <functional>

#include "lmc/phase.hpp"
#include "lmc/rotation.hpp"

namespace lmc {

enum class Stencil { central, wide };

struct SolveParams {
    double dt = 0.0;       // 0: h^2/(4n), half the explicit stability bound
    long max_iters = 200000;
    double tol = 1e-8;     // sup-norm of one update
    Stencil stencil = Stencil::central;
    std::vector<MIdx> directions;  // wide stencil; empty: axes + all diagonals
    int threads = 1;
};

struct SolveReport {
    long iterations = 0;
    double final_update = 0.0;
    double final_residual = 0.0;
    bool converged = false;
};

namespace detail {

inline std::vector<MIdx> default_directions(int n) {
    // all nonzero vectors with entries in {-1,0,1}, first nonzero positive
    std::vector<MIdx> dirs;
    int total = 1;
    for (int i = 0; i < n; ++i) total *= 3;
    for (int code = 0; code < total; ++code) {
        int c = code;
        MIdx d{};
        for (int i = 0; i < n; ++i) {
            d[i] = c % 3 - 1;
            c /= 3;
        }
        int first = 0;
        for (int i = 0; i < n; ++i) {
            if (d[i] != 0) {
                first = d[i];
                break;
            }
        }
        if (first == 1) dirs.push_back(d);
    }
    return dirs;
}

inline void validate_directions(const std::vector<MIdx>& dirs, int n) {
    auto has = [&](const MIdx& want) {
        for (const MIdx& d : dirs) {
            bool same = true, flip = true;
            for (int i = 0; i < n; ++i) {
                if (d[i] != want[i]) same = false;
                if (d[i] != -want[i]) flip = false;
            }
            if (same || flip) return true;
        }
        return false;
    };
    std::vector<MIdx> need = default_directions(n);
    for (const MIdx& d : need)
        if (!has(d)) throw validation_error("wide stencil: direction set must span axes and diagonals");
}

// Orthogonal n-tuples of stencil directions, by index into dirs.
inline std::vector<std::array<int, kMaxDim>> orthogonal_tuples(const std::vector<MIdx>& dirs,
                                                               int n) {
    std::vector<std::array<int, kMaxDim>> out;
    std::array<int, kMaxDim> pick{};
    auto ortho = [&](int a, int b) {
        int s = 0;
        for (int i = 0; i < n; ++i) s += dirs[a][i] * dirs[b][i];
        return s == 0;
    };
    std::function<void(int, int)> rec = [&](int depth, int start) {
        if (depth == n) {
            out.push_back(pick);
            return;
        }
        for (int k = start; k < int(dirs.size()); ++k) {
            bool ok = true;
            for (int d = 0; d < depth; ++d)
                if (!ortho(pick[d], k)) ok = false;
            if (!ok) continue;
            pick[depth] = k;
            rec(depth + 1, k + 1);
        }
    };
    rec(0, 0);
    if (out.empty()) throw validation_error("wide stencil: no orthogonal direction tuple");
    return out;
}

// Monotone angle approximation: directional curvatures over the stencil,
// eigenvalues through the minimax rule restricted to orthogonal tuples.
struct WideStencil {
    std::vector<MIdx> dirs;
    std::vector<double> inv_len2;
    std::vector<std::array<int, kMaxDim>> tuples;

    void build(const std::vector<MIdx>& directions, int n) {
        dirs = directions.empty() ? default_directions(n) : directions;
        validate_directions(dirs, n);
        inv_len2.resize(dirs.size());
        for (std::size_t k = 0; k < dirs.size(); ++k) {
            int l2 = 0;
            for (int i = 0; i < n; ++i) l2 += dirs[k][i] * dirs[k][i];
            inv_len2[k] = 1.0 / double(l2);
        }
        tuples = orthogonal_tuples(dirs, n);
    }

    // Eigenvalue surrogates restricted to stencil directions: extremes from
    // the direction set itself, middle values (n >= 3) from the min-max rule
    // over orthogonal tuples.  Monotone in the stencil data, first order.
    double angle(const GridFunction& u, const MIdx& idx) const {
        const int n = u.spec.n;
        const double h2 = u.spec.h * u.spec.h;
        double curv[64];
        const double uc = u.at(idx);
        for (std::size_t k = 0; k < dirs.size(); ++k) {
            MIdx p = idx, q = idx;
            for (int i = 0; i < n; ++i) {
                p[i] += dirs[k][i];
                q[i] -= dirs[k][i];
            }
            curv[k] = (u.at(p) - 2.0 * uc + u.at(q)) / h2 * inv_len2[k];
        }
        double lam[kMaxDim];
        double lo = curv[0], hi = curv[0];
        for (std::size_t k = 1; k < dirs.size(); ++k) {
            lo = std::min(lo, curv[k]);
            hi = std::max(hi, curv[k]);
        }
        lam[0] = lo;
        lam[n - 1] = hi;
        double tup[kMaxDim];
        for (int j = 1; j + 1 < n; ++j) lam[j] = std::numeric_limits<double>::infinity();
        if (n > 2) {
            for (const auto& t : tuples) {
                for (int j = 0; j < n; ++j) tup[j] = curv[t[j]];
                std::sort(tup, tup + n);
                for (int j = 1; j + 1 < n; ++j) lam[j] = std::min(lam[j], tup[j]);
            }
        }
        double s = 0;
        for (int j = 0; j < n; ++j) s += std::atan(lam[j]);
        return s;
    }
};

}  // namespace detail

/// Interior residual of the angle equation: theta(D^2 u) - psi(x, u, Du),
/// zero on boundary nodes.
inline GridFunction residual_field(const GridFunction& u, const PhaseSpec& spec,
                                   Stencil stencil = Stencil::central,
                                   const std::vector<MIdx>& directions = {}, int threads = 1) {
    const GridSpec& g = u.spec;
    GridFunction res(g);
    detail::WideStencil ws;
    if (stencil == Stencil::wide) ws.build(directions, g.n);

    std::vector<MIdx> nodes;
    std::vector<std::size_t> flats;
    for_each_interior(g, 1, [&](std::size_t f, const MIdx& idx) {
        nodes.push_back(idx);
        flats.push_back(f);
    });
    parallel_for(nodes.size(), threads, [&](std::size_t k) {
        const MIdx& idx = nodes[k];
        double theta = stencil == Stencil::wide ? ws.angle(u, idx)
                                                : lagrangian_angle(hessian_central(u, idx));
        Vec x = g.point(idx);
        Vec p = gradient_central(u, idx);
        res.values[flats[k]] = theta - eval_phase(spec, x, u.values[flats[k]], p);
    });
    return res;
}

namespace detail {

inline double stability_bound(const GridSpec& g) { return g.h * g.h / (2.0 * g.n); }

inline double pick_dt(const GridSpec& g, const SolveParams& p) {
    double dt = p.dt > 0.0 ? p.dt : g.h * g.h / (4.0 * g.n);
    if (dt > stability_bound(g) * (1.0 + 1e-12))
        throw validation_error("solver: dt exceeds the explicit stability bound h^2/(2n)");
    return dt;
}

// Nodes where the phase sits at or beyond the operator's supremum n*pi/2
// have no discrete steady value (theta < n*pi/2 strictly); they are held.
inline bool phase_at_supremum(const PhaseSpec& spec, int n, const Vec& x, double u, const Vec& p) {
    double psi = eval_phase(spec, x, u, p);
    return psi >= n * M_PI / 2.0 - 1e-12 || psi <= -n * M_PI / 2.0 + 1e-12;
}

}  // namespace detail

/// One explicit step of u_t = theta(D^2 u) - psi, Dirichlet boundary fixed.
inline GridFunction flow_step(const GridFunction& u, const PhaseSpec& spec,
                              const SolveParams& params) {
    const GridSpec& g = u.spec;
    double dt = detail::pick_dt(g, params);
    GridFunction res = residual_field(u, spec, params.stencil, params.directions, params.threads);
    GridFunction out = u;
    bool bad = false;
    for_each_interior(g, 1, [&](std::size_t f, const MIdx& idx) {
        Vec x = g.point(idx);
        Vec p = gradient_central(u, idx);
        if (detail::phase_at_supremum(spec, g.n, x, u.values[f], p)) return;
        out.values[f] = u.values[f] + dt * res.values[f];
        if (!std::isfinite(out.values[f])) bad = true;
    });
    if (bad) throw numerical_error("blow-up: reduce dt");
    return out;
}

/// Parabolic relaxation to the Dirichlet steady state.  The initial guess
/// carries the boundary data on its boundary nodes.  Non-convergence is
/// reported, not thrown.
inline std::pair<GridFunction, SolveReport> solve_dirichlet(const GridFunction& initial,
                                                            const PhaseSpec& spec,
                                                            const SolveParams& params) {
    initial.check_finite();
    const GridSpec& g = initial.spec;
    double dt = detail::pick_dt(g, params);

    detail::WideStencil ws;
    if (params.stencil == Stencil::wide) ws.build(params.directions, g.n);

    std::vector<MIdx> nodes;
    std::vector<std::size_t> flats;
    for_each_interior(g, 1, [&](std::size_t f, const MIdx& idx) {
        nodes.push_back(idx);
        flats.push_back(f);
    });

    GridFunction cur = initial;
    GridFunction nxt = initial;
    SolveReport rep;
    std::vector<double> upd(nodes.size(), 0.0);
    std::atomic<bool> bad{false};

    for (long it = 0; it < params.max_iters; ++it) {
        parallel_for(nodes.size(), params.threads, [&](std::size_t k) {
            const MIdx& idx = nodes[k];
            std::size_t f = flats[k];
            Vec x = g.point(idx);
            Vec p = gradient_central(cur, idx);
            double psi = eval_phase(spec, x, cur.values[f], p);
            if (psi >= g.n * M_PI / 2.0 - 1e-12 || psi <= -g.n * M_PI / 2.0 + 1e-12) {
                upd[k] = 0.0;
                nxt.values[f] = cur.values[f];
                return;
            }
            double theta = params.stencil == Stencil::wide
                               ? ws.angle(cur, idx)
                               : lagrangian_angle(hessian_central(cur, idx));
            double d = dt * (theta - psi);
            upd[k] = std::fabs(d);
            double v = cur.values[f] + d;
            if (!std::isfinite(v)) bad.store(true, std::memory_order_relaxed);
            nxt.values[f] = v;
        });
        if (bad.load()) throw numerical_error("blow-up: reduce dt");
        std::swap(cur.values, nxt.values);
        rep.iterations = it + 1;
        rep.final_update = 0.0;
        for (double d : upd) rep.final_update = std::max(rep.final_update, d);
        if (rep.final_update <= params.tol) {
            rep.converged = true;
            break;
        }
    }

    // residual over the nodes the solver actually updated
    GridFunction res = residual_field(cur, spec, params.stencil, params.directions, params.threads);
    rep.final_residual = 0.0;
    for (std::size_t k = 0; k < nodes.size(); ++k) {
        std::size_t f = flats[k];
        Vec x = g.point(nodes[k]);
        Vec p = gradient_central(cur, nodes[k]);
        if (detail::phase_at_supremum(spec, g.n, x, cur.values[f], p)) continue;
        rep.final_residual = std::max(rep.final_residual, std::fabs(res.values[f]));
    }
    return {std::move(cur), rep};
}

struct RotatedResidual {
    RotatedPotential rotated;
    GridFunction residual;  // on the resample grid, zero on its boundary
};

/// Residual of the rotated equation theta(D^2 ubar) =
/// psi(x(xbar), u(x(xbar)), s xbar + c D ubar) - n pi/4, with
/// x(xbar) = c xbar - s D ubar(xbar).
inline RotatedResidual rotated_equation_residual(const GridFunction& u, const PhaseSpec& spec,
                                                 const RotateOptions& opt = {}) {
    const double c = kHalfSqrt2, s = kHalfSqrt2;
    RotatedResidual out;
    out.rotated = lewy_yuan_rotate(u, opt);
    const GridFunction& rb = out.rotated.resample;
    const GridSpec& rg = rb.spec;
    out.residual = GridFunction(rg);
    for_each_interior(rg, 1, [&](std::size_t f, const MIdx& idx) {
        Vec xb = rg.point(idx);
        Vec gb = gradient_central(rb, idx);
        Vec x{}, p{};
        for (int i = 0; i < rg.n; ++i) {
            x[i] = c * xb[i] - s * gb[i];
            p[i] = s * xb[i] + c * gb[i];
        }
        double uval = u.interp(x);
        double theta = lagrangian_angle(hessian_central(rb, idx));
        out.residual.values[f] =
            theta - (eval_phase(spec, x, uval, p) - rg.n * M_PI / 4.0);
    });
    return out;
}

}  // namespace lmc
