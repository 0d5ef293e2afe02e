#pragma once

#include <iomanip>
#include <iostream>
#include <random>

#include "lmc/diagnostics.hpp"
#include "lmc/profile.hpp"
#include "lmc/solver.hpp"

namespace lmc {

struct VerifyCheck {
    std::string name;
    double measured = 0.0;
    double bound = 0.0;
    bool upper = true;  // pass iff measured <= bound (else measured >= bound)
    bool pass() const { return upper ? measured <= bound : measured >= bound; }
};

namespace verify_detail {

inline GridSpec centered(int n, int m, double half) {
    Vec lo{};
    for (int i = 0; i < n; ++i) lo[i] = -half;
    return GridSpec(n, m, 2.0 * half / (m - 1), lo);
}

inline GridFunction quadratic(const GridSpec& g, const SymmetricMatrix& a) {
    return sample(g, [&](const Vec& x) {
        double s = 0;
        for (int i = 0; i < g.n; ++i)
            for (int j = 0; j < g.n; ++j) s += x[i] * a.at(i, j) * x[j];
        return 0.5 * s;
    });
}

inline SymmetricMatrix random_spd(std::mt19937& rng, int n, double lo, double hi) {
    std::uniform_real_distribution<double> ld(std::log(lo), std::log(hi));
    std::normal_distribution<double> gauss(0.0, 1.0);
    // orthogonal frame from Gram-Schmidt on a Gaussian draw
    double q[kMaxDim][kMaxDim];
    for (int col = 0; col < n; ++col) {
        double v[kMaxDim];
        for (int i = 0; i < n; ++i) v[i] = gauss(rng);
        for (int prev = 0; prev < col; ++prev) {
            double d = 0;
            for (int i = 0; i < n; ++i) d += v[i] * q[i][prev];
            for (int i = 0; i < n; ++i) v[i] -= d * q[i][prev];
        }
        double nn = 0;
        for (int i = 0; i < n; ++i) nn += v[i] * v[i];
        nn = std::sqrt(std::max(nn, 1e-30));
        for (int i = 0; i < n; ++i) q[i][col] = v[i] / nn;
    }
    double lam[kMaxDim];
    for (int i = 0; i < n; ++i) lam[i] = std::exp(ld(rng));
    SymmetricMatrix m(n);
    for (int i = 0; i < n; ++i)
        for (int j = i; j < n; ++j) {
            double s = 0;
            for (int k = 0; k < n; ++k) s += q[i][k] * lam[k] * q[j][k];
            m.set(i, j, s);
        }
    return m;
}

inline double power_radial(const Vec& x, int n, double p) {
    return std::pow(norm(x, n), p) / p;
}

inline std::vector<VerifyCheck> suite_duality() {
    std::vector<VerifyCheck> checks;

    {  // biconjugation on a convex quartic
        GridSpec g = centered(1, 201, 1.0);
        GridFunction u = sample(g, [](const Vec& x) {
            return 0.5 * x[0] * x[0] + 0.25 * std::pow(x[0], 4.0);
        });
        GridFunction env = convex_envelope(u);
        double gap = 0, viol = 0;
        for_each_node(g, [&](std::size_t f, const MIdx& idx) {
            viol = std::max(viol, env.values[f] - u.values[f]);
            if (std::fabs(g.point(idx)[0]) < 0.8)
                gap = std::max(gap, u.values[f] - env.values[f]);
        });
        checks.push_back({"duality: biconjugate below original (exact)", viol, 1e-12});
        checks.push_back({"duality: biconjugation gap on the inner box", gap, 2.0 * g.h});
    }

    {  // order reversal, exact nodewise
        std::mt19937 rng(101);
        GridSpec g = centered(2, 21, 1.0);
        GridFunction u = sample(g, [](const Vec& x) { return 0.5 * norm_sq(x, 2); });
        GridFunction v = u;
        std::uniform_real_distribution<double> d(0.0, 0.3);
        for (auto& val : v.values) val -= d(rng);
        GridSpec dual = dual_grid_for(u);
        GridFunction us, vs;
        detail::legendre_raw(u, dual, 1, us, nullptr);
        detail::legendre_raw(v, dual, 1, vs, nullptr);
        double worst = 0;
        for (std::size_t j = 0; j < us.values.size(); ++j)
            worst = std::max(worst, us.values[j] - vs.values[j]);
        checks.push_back({"duality: order reversal (exact)", worst, 0.0});
    }

    {  // power duality
        for (double p : {4.0 / 3.0, 1.5, 3.0, 4.0}) {
            double q = p / (p - 1.0);
            GridSpec g = centered(1, 801, 1.0);
            GridFunction u = sample(g, [&](const Vec& x) { return power_radial(x, 1, p); });
            GridFunction star = legendre_transform(u, dual_grid_for(u));
            double err = 0;
            for_each_interior(star.spec, 1, [&](std::size_t f, const MIdx& idx) {
                Vec xb = star.spec.point(idx);
                if (std::fabs(xb[0]) > 0.85) return;
                err = std::max(err, std::fabs(star.values[f] - power_radial(xb, 1, q)));
            });
            char name[64];
            std::snprintf(name, sizeof name, "duality: power pair p=%.3f", p);
            checks.push_back({name, err, 3.0 * g.h});
        }
    }
    return checks;
}

inline std::vector<VerifyCheck> suite_rotation() {
    std::vector<VerifyCheck> checks;
    std::mt19937 rng(202);

    for (int n : {1, 2, 3}) {  // angle rule on random convex quadratics
        int m = n == 3 ? 25 : 101;
        double half = 0.005 * (m - 1);
        GridSpec g = centered(n, m, half);
        SymmetricMatrix a = random_spd(rng, n, 0.15, 4.0);
        GridFunction u = quadratic(g, a);
        RotatedPotential rp = lewy_yuan_rotate(u);
        const double c = kHalfSqrt2, s = kHalfSqrt2;
        double worst = 0;
        for_each_interior(rp.resample.spec, 1, [&](std::size_t, const MIdx& idx) {
            Vec xb = rp.resample.spec.point(idx);
            Vec gb = gradient_central(rp.resample, idx);
            Vec x{};
            for (int i = 0; i < n; ++i) x[i] = c * xb[i] - s * gb[i];
            MIdx pidx{};
            for (int i = 0; i < n; ++i)
                pidx[i] = std::clamp(int(std::lround((x[i] - g.lo[i]) / g.h)), 1, g.m - 2);
            Spectrum sp = eigen_sym(hessian_central(u, pidx));
            Spectrum sb = eigen_sym(hessian_central(rp.resample, idx));
            for (int i = 0; i < n; ++i)
                worst = std::max(worst, std::fabs(std::atan(sb.lambda[i]) -
                                                  (std::atan(sp.lambda[i]) - M_PI / 4.0)));
        });
        char name[64];
        std::snprintf(name, sizeof name, "rotation: angle shift, n=%d", n);
        checks.push_back({name, worst, 5.0 * g.h});
    }

    {  // Hessian bounds with a fractional-power bump
        GridSpec g = centered(2, 101, 0.5);
        GridFunction u = sample(g, [&](const Vec& x) {
            Vec z{0.1, -0.15};
            Vec d{x[0] - z[0], x[1] - z[1]};
            return 0.4 * norm_sq(x, 2) + 0.2 * std::pow(norm(d, 2), 4.0 / 3.0);
        });
        RotatedPotential rp = lewy_yuan_rotate(u);
        double defect = 0;
        for_each_interior(rp.resample.spec, 1, [&](std::size_t, const MIdx& idx) {
            Spectrum sb = eigen_sym(hessian_central(rp.resample, idx));
            for (int i = 0; i < 2; ++i) defect = std::max(defect, std::fabs(sb.lambda[i]) - 1.0);
        });
        checks.push_back({"rotation: Hessian bounds with bump", defect, 10.0 * g.h});
    }

    {  // round trip
        GridSpec g = centered(2, 101, 1.0);
        SymmetricMatrix a = random_spd(rng, 2, 0.3, 2.0);
        GridFunction u = sample(g, [&](const Vec& x) {
            double s = 0;
            for (int i = 0; i < 2; ++i)
                for (int j = 0; j < 2; ++j) s += x[i] * a.at(i, j) * x[j];
            return 0.5 * s + 0.05 * (std::pow(x[0], 4.0) + std::pow(x[1], 4.0));
        });
        GridFunction back = inverse_rotate(lewy_yuan_rotate(u));
        double worst = 0;
        for_each_node(back.spec, [&](std::size_t f, const MIdx& idx) {
            worst = std::max(worst, std::fabs(back.values[f] - u.interp(back.spec.point(idx))));
        });
        checks.push_back({"rotation: round trip", worst, 5.0 * g.h});
    }
    return checks;
}

inline std::vector<VerifyCheck> suite_solver() {
    std::vector<VerifyCheck> checks;

    {  // n = 1, constant phase arctan 2
        GridSpec g = centered(1, 51, 1.0);
        GridFunction exact = sample(g, [](const Vec& x) { return x[0] * x[0]; });
        GridFunction init = exact;
        for_each_interior(g, 1, [&](std::size_t f, const MIdx&) { init.values[f] = 0.0; });
        SolveParams p;
        p.tol = 1e-13;
        p.max_iters = 200000;
        auto [sol, rep] = solve_dirichlet(init, constant_phase(1, std::atan(2.0)), p);
        double err = 0;
        for (std::size_t f = 0; f < sol.values.size(); ++f)
            err = std::max(err, std::fabs(sol.values[f] - exact.values[f]));
        checks.push_back({"solver: 1D quadratic recovery", err, 1e-8});
        checks.push_back({"solver: 1D converged", rep.converged ? 0.0 : 1.0, 0.5});
    }

    {  // n = 2 quadratic
        GridSpec g = centered(2, 31, 1.0);
        GridFunction exact = sample(g, [](const Vec& x) { return 0.5 * norm_sq(x, 2); });
        GridFunction init = exact;
        for_each_interior(g, 1, [&](std::size_t f, const MIdx&) { init.values[f] = 0.0; });
        SolveParams p;
        p.tol = 1e-10;
        p.max_iters = 400000;
        auto [sol, rep] = solve_dirichlet(init, constant_phase(2, M_PI / 2.0), p);
        double err = 0;
        for (std::size_t f = 0; f < sol.values.size(); ++f)
            err = std::max(err, std::fabs(sol.values[f] - exact.values[f]));
        checks.push_back({"solver: 2D quadratic recovery", err, 1e-6});
    }

    {  // consistency order on smooth data
        std::vector<double> lh, le;
        for (int m : {41, 81, 161}) {
            GridSpec g = centered(2, m, 1.0);
            GridFunction u = sample(g, [](const Vec& x) {
                return 0.5 * norm_sq(x, 2) + 0.05 * (std::pow(x[0], 4.0) + std::pow(x[1], 4.0));
            });
            PhaseSpec tab;
            tab.variant = PhaseVariant::tabulated;
            tab.n = 2;
            tab.table_xdim = 2;
            tab.table_pdim = 0;
            tab.table = sample(g, [](const Vec& x) {
                return std::atan(1.0 + 0.6 * x[0] * x[0]) + std::atan(1.0 + 0.6 * x[1] * x[1]);
            });
            GridFunction r = residual_field(u, tab);
            double sup = 0;
            for_each_interior(g, 1, [&](std::size_t f, const MIdx&) {
                sup = std::max(sup, std::fabs(r.values[f]));
            });
            lh.push_back(std::log(g.h));
            le.push_back(std::log(sup));
        }
        checks.push_back({"solver: consistency order", fit_line(lh, le).slope, 1.9, false});
    }
    return checks;
}

inline std::vector<VerifyCheck> suite_profile() {
    std::vector<VerifyCheck> checks;
    const std::pair<int, double> cases[] = {{1, -1.0}, {2, -0.5}, {3, -0.25}};
    for (auto [n, a] : cases) {
        ProfileSolution p = rotator_profile(n, a);
        char name[64];
        std::snprintf(name, sizeof name, "profile: curvature seed, n=%d", n);
        checks.push_back({name, std::fabs(p.fpp[0] - 4.0 * a / (n + 2)), 1e-10});
        double worst = 0;
        for (std::size_t i = 1; i + 1 < p.s.size(); ++i) {
            double dp = p.s[i + 1] - p.s[i], dm = p.s[i] - p.s[i - 1];
            if (dp <= 0 || dm <= 0 || p.s[i] <= 0) continue;
            // non-uniform centered first derivative of f'
            double fpp_num = (dm * dm * p.fp[i + 1] + (dp * dp - dm * dm) * p.fp[i] -
                              dp * dp * p.fp[i - 1]) /
                             (dp * dm * (dp + dm));
            worst = std::max(worst,
                             std::fabs(detail::profile_relation(n, a, p.s[i], p.fp[i], fpp_num)));
        }
        std::snprintf(name, sizeof name, "profile: relation residual, n=%d", n);
        checks.push_back({name, worst, 1e-8});
    }

    {  // vertex exponent of the inverse-rotated potential
        ProfileSolution p = rotator_profile(1, -1.0, 0.3, 4000);
        GridSpec g(1, 1601, 2.0 * 0.74 / 1600, Vec{-0.74});
        SingularRotator sr = build_singular_rotator(p, g);
        std::vector<double> radii;
        for (int i = 0; i < 8; ++i)
            radii.push_back(0.2 * sr.U.spec.upper(0) * std::pow(0.8, i));
        HolderFit fit = holder_exponent_fit(sr.U, Vec{}, radii);
        checks.push_back({"profile: vertex exponent 4/3", std::fabs(fit.gamma - 4.0 / 3.0), 0.02});
    }
    return checks;
}

inline std::vector<VerifyCheck> suite_diagnostics() {
    std::vector<VerifyCheck> checks;

    {  // exponent fits
        GridSpec g = centered(2, 401, 1.0);
        for (double gamma : {4.0 / 3.0, 2.0, 3.0}) {
            GridFunction u = sample(g, [&](const Vec& x) {
                return std::pow(norm(x, 2), gamma) / gamma;
            });
            std::vector<double> radii;
            for (int i = 0; i < 7; ++i) radii.push_back(0.5 * std::pow(0.7, i));
            HolderFit fit = holder_exponent_fit(u, Vec{}, radii);
            char name[64];
            std::snprintf(name, sizeof name, "diagnostics: exponent fit gamma=%.3f", gamma);
            checks.push_back({name, std::fabs(fit.gamma - gamma), 0.02});
        }
    }

    {  // vmo scale normalization
        GridSpec g = centered(2, 41, 1.0);
        GridFunction u = sample(g, [](const Vec& x) {
            return 0.5 * norm_sq(x, 2) + 0.1 * std::pow(x[0], 4.0);
        });
        MatrixField f = hessian_field(u);
        MatrixField f3 = f;
        for (auto& m : f3.values)
            for (int t = 0; t < 3; ++t) m.a[t] *= 3.0;
        std::vector<double> om = vmo_modulus(f, {0.2});
        std::vector<double> om3 = vmo_modulus(f3, {0.2});
        checks.push_back({"diagnostics: vmo scale normalization", std::fabs(om3[0] - 3.0 * om[0]),
                          1e-12 * (1.0 + om3[0])});
    }

    {  // rank invariance under affine additions
        GridSpec g = centered(2, 31, 1.0);
        GridFunction u = sample(g, [](const Vec& x) { return 0.5 * x[0] * x[0]; });
        GridFunction v = sample(g, [](const Vec& x) {
            return 0.5 * x[0] * x[0] + 3.0 + 2.0 * x[0] - x[1];
        });
        RankReport ru = rank_field(u);
        RankReport rv = rank_field(v);
        bool same = ru.rank == rv.rank && ru.constant && ru.rank_value == 1;
        checks.push_back({"diagnostics: rank affine invariance", same ? 0.0 : 1.0, 0.5});
    }
    return checks;
}

}  // namespace verify_detail

/// Run a named verification suite, printing one line per check.
/// Returns true iff every check passes.
inline bool run_verify_suite(const std::string& name, std::ostream& os) {
    std::vector<VerifyCheck> checks;
    auto append = [&](std::vector<VerifyCheck> more) {
        for (auto& c : more) checks.push_back(std::move(c));
    };
    if (name == "duality" || name == "all") append(verify_detail::suite_duality());
    if (name == "rotation" || name == "all") append(verify_detail::suite_rotation());
    if (name == "solver" || name == "all") append(verify_detail::suite_solver());
    if (name == "profile" || name == "all") append(verify_detail::suite_profile());
    if (name == "diagnostics" || name == "all") append(verify_detail::suite_diagnostics());
    if (checks.empty())
        throw validation_error(
            "verify: suite must be one of duality, rotation, solver, profile, diagnostics, all");

    bool ok = true;
    for (const VerifyCheck& c : checks) {
        bool p = c.pass();
        ok = ok && p;
        os << (p ? "PASS  " : "FAIL  ") << std::left << std::setw(44) << c.name << " measured "
           << std::setw(13) << c.measured << (c.upper ? " <= " : " >= ") << c.bound << "\n";
    }
    os << (ok ? "all checks passed" : "some checks FAILED") << "\n";
    return ok;
}

}  // namespace lmc
