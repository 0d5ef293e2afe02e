#pragma once

#include <cmath>
#include <random>

#include "lmc/rotation.hpp"
#include "lmc/solver.hpp"

namespace lmc {

/// Radial profile of the rotated rotator potential: ubar(xbar) = f(|xbar|^2/2)
/// with f(0) = 0, f'(0) = 1, f''(0) = 4a/(n+2), tabulated on [0, s_max].
struct ProfileSolution {
    int n = 1;
    double a = 0.0;
    double s0 = 1e-3;    // series/integrator handoff
    double s_max = 0.125;
    std::vector<double> s, f, fp, fpp;

    double eval_f(double sv) const { return eval(sv, 0); }
    double eval_fp(double sv) const { return eval(sv, 1); }

private:
    // cubic Hermite on the table; (f, f') and (f', f'') are consistent pairs
    double eval(double sv, int which) const {
        if (sv < 0.0 || sv > s_max * (1.0 + 1e-12))
            throw validation_error("profile: query outside tabulated range");
        sv = std::min(sv, s.back());
        std::size_t hi = std::lower_bound(s.begin(), s.end(), sv) - s.begin();
        if (hi == 0) return which == 0 ? f[0] : fp[0];
        std::size_t lo = hi - 1;
        double w = s[hi] - s[lo];
        double t = (sv - s[lo]) / w;
        const std::vector<double>& y = which == 0 ? f : fp;
        const std::vector<double>& d = which == 0 ? fp : fpp;
        double h00 = (1 + 2 * t) * (1 - t) * (1 - t);
        double h10 = t * (1 - t) * (1 - t);
        double h01 = t * t * (3 - 2 * t);
        double h11 = t * t * (t - 1);
        return h00 * y[lo] + w * h10 * d[lo] + h01 * y[hi] + w * h11 * d[hi];
    }
};

namespace detail {

// Residual of the radial rotator relation at s, given f' and f''.
inline double profile_relation(int n, double a, double s, double fp, double fpp) {
    return (n - 1) * std::atan(fp) + std::atan(2.0 * s * fpp + fp) - n * M_PI / 4.0 -
           a * s * (1.0 + fp * fp);
}

// Principal-branch argument of the tangent inversion.
inline double profile_tan_arg(int n, double a, double s, double fp) {
    return n * M_PI / 4.0 + a * s * (1.0 + fp * fp) - (n - 1) * std::atan(fp);
}

inline double profile_rhs(int n, double a, double s, double fp) {
    double arg = profile_tan_arg(n, a, s, fp);
    if (std::fabs(arg) >= M_PI / 2.0 - 1e-9)
        throw numerical_error("profile leaves principal branch");
    return (std::tan(arg) - fp) / (2.0 * s);
}

struct ProfileSeries {
    double b1, b2, b3;  // f'(s) = 1 + b1 s + b2 s^2 + b3 s^3

    double fp(double s) const { return 1.0 + s * (b1 + s * (b2 + s * b3)); }
    double fpp(double s) const { return b1 + s * (2.0 * b2 + 3.0 * s * b3); }
    double f(double s) const {
        return s * (1.0 + s * (b1 / 2.0 + s * (b2 / 3.0 + s * b3 / 4.0)));
    }
};

// Higher series coefficients are matched numerically against the defining
// relation near the handoff scale (the removable 1/(2s) factor rules out
// integrating from s = 0 directly).  Collocation sits a few multiples of s0
// out: closer in, the b2/b3 sensitivities drown in double rounding.
inline ProfileSeries fit_series(int n, double a, double s0, double s_max) {
    ProfileSeries ser{4.0 * a / (n + 2), 0.0, 0.0};
    const double s2 = std::min(8.0 * s0, 0.9 * s_max);
    const double s1 = 0.5 * s2;
    auto G = [&](double b2, double b3, double* out) {
        ProfileSeries t{ser.b1, b2, b3};
        out[0] = profile_relation(n, a, s1, t.fp(s1), t.fpp(s1));
        out[1] = profile_relation(n, a, s2, t.fp(s2), t.fpp(s2));
    };
    double b2 = 0.0, b3 = 0.0;
    for (int it = 0; it < 40; ++it) {
        double g0[2], gx[2], gy[2];
        G(b2, b3, g0);
        if (std::fabs(g0[0]) + std::fabs(g0[1]) < 1e-17) break;
        const double d2 = 1e-7 * (1.0 + std::fabs(b2));
        const double d3 = 1e-7 * (1.0 + std::fabs(b3));
        G(b2 + d2, b3, gx);
        G(b2, b3 + d3, gy);
        double j11 = (gx[0] - g0[0]) / d2, j12 = (gy[0] - g0[0]) / d3;
        double j21 = (gx[1] - g0[1]) / d2, j22 = (gy[1] - g0[1]) / d3;
        double det = j11 * j22 - j12 * j21;
        if (std::fabs(det) < 1e-300) break;
        b2 -= (j22 * g0[0] - j12 * g0[1]) / det;
        b3 -= (-j21 * g0[0] + j11 * g0[1]) / det;
    }
    ser.b2 = b2;
    ser.b3 = b3;
    return ser;
}

}  // namespace detail

/// Integrate the radial rotator profile: degree-4 series on [0, s0], then the
/// classical 4-stage one-step method on [s0, s_max].  The relation residual
/// is checked at every tabulated sample.
inline ProfileSolution rotator_profile(int n, double a, double s_max = 0.125, int steps = 4000) {
    if (n < 1 || n > kMaxDim) throw validation_error("profile: bad dimension");
    if (a > 0.0) throw validation_error("unsupported sign: rotator profile needs a <= 0");
    if (!(s_max > 0.0)) throw validation_error("profile: s_max must be positive");
    if (steps < 16) throw validation_error("profile: too few steps");

    ProfileSolution sol;
    sol.n = n;
    sol.a = a;
    sol.s_max = s_max;
    sol.s0 = std::min(1e-3, 0.5 * s_max);

    detail::ProfileSeries ser = detail::fit_series(n, a, sol.s0, s_max);

    const int series_samples = 8;
    for (int j = 0; j <= series_samples; ++j) {
        double sv = sol.s0 * j / series_samples;
        sol.s.push_back(sv);
        sol.f.push_back(ser.f(sv));
        sol.fp.push_back(ser.fp(sv));
        sol.fpp.push_back(ser.fpp(sv));
    }

    double sv = sol.s0;
    double fv = ser.f(sv);
    double gv = ser.fp(sv);
    const double hstep = (s_max - sol.s0) / steps;
    for (int k = 0; k < steps; ++k) {
        double k1g = detail::profile_rhs(n, a, sv, gv);
        double k1f = gv;
        double k2g = detail::profile_rhs(n, a, sv + 0.5 * hstep, gv + 0.5 * hstep * k1g);
        double k2f = gv + 0.5 * hstep * k1g;
        double k3g = detail::profile_rhs(n, a, sv + 0.5 * hstep, gv + 0.5 * hstep * k2g);
        double k3f = gv + 0.5 * hstep * k2g;
        double k4g = detail::profile_rhs(n, a, sv + hstep, gv + hstep * k3g);
        double k4f = gv + hstep * k3g;
        fv += hstep / 6.0 * (k1f + 2.0 * k2f + 2.0 * k3f + k4f);
        gv += hstep / 6.0 * (k1g + 2.0 * k2g + 2.0 * k3g + k4g);
        sv = sol.s0 + (k + 1) * hstep;
        sol.s.push_back(sv);
        sol.f.push_back(fv);
        sol.fp.push_back(gv);
        sol.fpp.push_back(detail::profile_rhs(n, a, sv, gv));
    }

    for (std::size_t i = 0; i < sol.s.size(); ++i) {
        if (sol.s[i] <= 0.0) continue;
        double r = detail::profile_relation(n, a, sol.s[i], sol.fp[i], sol.fpp[i]);
        if (std::fabs(r) > 1e-8) throw numerical_error("profile: relation residual above 1e-8");
    }
    return sol;
}

/// ubar(xbar) = f(|xbar|^2/2) sampled on a grid whose corners stay within the
/// tabulated range.
inline GridFunction build_rotated_rotator(const ProfileSolution& p, const GridSpec& grid) {
    if (grid.n != p.n) throw validation_error("rotator build: dimension mismatch");
    double corner2 = 0.0;
    for (int i = 0; i < grid.n; ++i) {
        double w = std::max(std::fabs(grid.lo[i]), std::fabs(grid.upper(i)));
        corner2 += w * w;
    }
    if (corner2 / 2.0 > p.s_max * (1.0 + 1e-12))
        throw validation_error("rotator build: grid exceeds profile range");
    return sample(grid, [&](const Vec& xb) { return p.eval_f(0.5 * norm_sq(xb, grid.n)); });
}

struct SingularRotator {
    GridFunction ubar;  // rotated potential f(|xbar|^2/2)
    GridFunction u;     // inverse-rotated potential, vertex at the origin
    GridFunction U;     // auxiliary convex potential s u + (c/2)|x|^2
};

/// Inverse rotation of the rotator profile: produces the potential with the
/// fractional-power vertex at the origin.  Requires a < 0.
inline SingularRotator build_singular_rotator(const ProfileSolution& p, const GridSpec& grid,
                                              int threads = 1) {
    if (!(p.a < 0.0)) throw validation_error("singular rotator: needs a < 0");
    SingularRotator out;
    out.ubar = build_rotated_rotator(p, grid);

    RotatedPotential rp;
    rp.n = grid.n;
    rp.resample = out.ubar;
    InverseOptions opt;
    opt.min_eig_floor = 0.0;                 // quartic-flat at the origin
    opt.exclude_radius = 2.5 * grid.h;       // strict convexity holds away from it
    opt.threads = threads;
    out.u = inverse_rotate(rp, opt);

    const double c = kHalfSqrt2, s = kHalfSqrt2;
    out.U = out.u;
    for_each_node(out.u.spec, [&](std::size_t f, const MIdx& idx) {
        Vec x = out.u.spec.point(idx);
        out.U.values[f] = s * out.u.values[f] + 0.5 * c * norm_sq(x, out.u.spec.n);
    });
    return out;
}

struct SelfSimilarOrder {
    bool exactly_zero = false;   // full residual vanishes identically
    double slope = 0.0;          // fitted order of the self-similar correction
    std::vector<double> sup_correction;  // per radius
    double full_residual_max = 0.0;      // sanity value over all samples
};

/// Order of the self-similar correction b(x.Du - 2u) for ubar = quadratic
/// (+ optional cubic): evaluated analytically on shrinking spheres and fitted
/// in log-log.  A pure quadratic gives the exactly-zero flag by Euler
/// homogeneity; the full residual uses c = theta(D^2 ubar(0)) so its constant
/// term cancels.
inline SelfSimilarOrder self_similar_residual_order(const SymmetricMatrix& q, double b,
                                                    const Vec& cubic,
                                                    const std::vector<double>& radii,
                                                    int dirs_per_radius = 64) {
    const int n = q.n;
    bool has_cubic = false;
    for (int i = 0; i < n; ++i)
        if (cubic[i] != 0.0) has_cubic = true;

    auto value = [&](const Vec& x) {
        double s = 0;
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) s += x[i] * q.at(i, j) * x[j];
        s *= 0.5;
        for (int i = 0; i < n; ++i) s += cubic[i] * x[i] * x[i] * x[i];
        return s;
    };
    auto grad = [&](const Vec& x) {
        Vec g{};
        for (int i = 0; i < n; ++i) {
            for (int j = 0; j < n; ++j) g[i] += q.at(i, j) * x[j];
            g[i] += 3.0 * cubic[i] * x[i] * x[i];
        }
        return g;
    };
    auto hess = [&](const Vec& x) {
        SymmetricMatrix m = q;
        for (int i = 0; i < n; ++i) m.set(i, i, m.at(i, i) + 6.0 * cubic[i] * x[i]);
        return m;
    };

    const double c0 = lagrangian_angle(q);

    // deterministic direction set: axes plus a fixed low-discrepancy spray
    std::vector<Vec> dirs;
    for (int i = 0; i < n; ++i) {
        Vec e{};
        e[i] = 1.0;
        dirs.push_back(e);
        e[i] = -1.0;
        dirs.push_back(e);
    }
    std::mt19937 rng(20240617);
    std::normal_distribution<double> gauss(0.0, 1.0);
    while (int(dirs.size()) < dirs_per_radius) {
        Vec v{};
        double len = 0;
        for (int i = 0; i < n; ++i) {
            v[i] = gauss(rng);
            len += v[i] * v[i];
        }
        len = std::sqrt(len);
        if (len < 1e-8) continue;
        for (int i = 0; i < n; ++i) v[i] /= len;
        dirs.push_back(v);
    }

    SelfSimilarOrder out;
    std::vector<double> lr, lc;
    for (double r : radii) {
        double supc = 0.0;
        for (const Vec& d : dirs) {
            Vec x{};
            for (int i = 0; i < n; ++i) x[i] = r * d[i];
            double corr = b * (dot(x, grad(x), n) - 2.0 * value(x));
            supc = std::max(supc, std::fabs(corr));
            double full = lagrangian_angle(hess(x)) - c0 - corr;
            out.full_residual_max = std::max(out.full_residual_max, std::fabs(full));
        }
        out.sup_correction.push_back(supc);
    }

    if (!has_cubic) {
        double worst = 0.0;
        for (double v : out.sup_correction) worst = std::max(worst, v);
        out.exactly_zero = worst < 1e-13 && out.full_residual_max < 1e-12;
        out.slope = std::numeric_limits<double>::infinity();
        return out;
    }

    for (std::size_t i = 0; i < radii.size(); ++i) {
        if (out.sup_correction[i] <= 0.0)
            throw numerical_error("self-similar order: zero correction with a cubic term");
        lr.push_back(std::log(radii[i]));
        lc.push_back(std::log(out.sup_correction[i]));
    }
    out.slope = fit_line(lr, lc).slope;
    return out;
}

}  // namespace lmc
