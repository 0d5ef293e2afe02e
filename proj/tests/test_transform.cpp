#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "lmc/transform.hpp"
#include "test_util.hpp"

using namespace lmc;

namespace {

GridSpec box(int n, int m, double half) {
    Vec lo{};
    for (int i = 0; i < n; ++i) lo[i] = -half;
    return GridSpec(n, m, 2.0 * half / (m - 1), lo);
}

double power_radial(const Vec& x, int n, double p) {
    double r = norm(x, n);
    return std::pow(r, p) / p;
}

// 1D lower convex hull of the sampled points (monotone-chain), evaluated at
// the nodes.  Independent of the Legendre route it checks.
std::vector<double> lower_hull_1d(const GridFunction& u) {
    const int m = u.spec.m;
    std::vector<int> hull;
    auto xval = [&](int i) { return u.spec.lo[0] + i * u.spec.h; };
    for (int i = 0; i < m; ++i) {
        while (hull.size() >= 2) {
            int a = hull[hull.size() - 2], b = hull[hull.size() - 1];
            double cross = (xval(b) - xval(a)) * (u.values[i] - u.values[a]) -
                           (xval(i) - xval(a)) * (u.values[b] - u.values[a]);
            if (cross <= 0.0)
                hull.pop_back();
            else
                break;
        }
        hull.push_back(i);
    }
    std::vector<double> env(m);
    std::size_t seg = 0;
    for (int i = 0; i < m; ++i) {
        while (seg + 1 < hull.size() && hull[seg + 1] < i) ++seg;
        int a = hull[seg], b = hull[std::min(seg + 1, hull.size() - 1)];
        if (a == b) {
            env[i] = u.values[a];
        } else {
            double t = (xval(i) - xval(a)) / (xval(b) - xval(a));
            env[i] = (1.0 - t) * u.values[a] + t * u.values[b];
        }
    }
    return env;
}

}  // namespace

TEST_CASE("convexity_check: quadratics and the power family") {
    GridSpec g = box(2, 41, 1.0);
    GridFunction pos = sample(g, [](const Vec& x) { return 0.5 * norm_sq(x, 2); });
    ConvexityReport rp = convexity_check(pos, 1e-10);
    CHECK(rp.pass);
    CHECK(rp.min_eigenvalue == doctest::Approx(1.0).epsilon(1e-9));

    GridFunction neg = sample(g, [](const Vec& x) { return -0.5 * norm_sq(x, 2); });
    ConvexityReport rn = convexity_check(neg, 1e-10);
    CHECK_FALSE(rn.pass);
    CHECK(rn.min_eigenvalue == doctest::Approx(-1.0).epsilon(1e-9));
    CHECK_FALSE(rn.violations.empty());

    // |x|^{4/3}/(4/3): analytic spectrum |x|^{beta-1} {beta,1} with beta=1/3,
    // nonnegative; mask the vertex node
    GridFunction pw = sample(g, [](const Vec& x) { return power_radial(x, 2, 4.0 / 3.0); });
    ConvexityReport rm = convexity_check(pw, 1e-8, 1.5 * g.h, Vec{});
    CHECK(rm.pass);
    CHECK(rm.min_eigenvalue >= -1e-8);
}

TEST_CASE("legendre_transform: self-dual quadratic") {
    GridSpec g = box(1, 401, 1.0);
    GridFunction u = sample(g, [](const Vec& x) { return 0.5 * x[0] * x[0]; });
    GridSpec dual = dual_grid_for(u);
    GridFunction star = legendre_transform(u, dual);
    double err = 0;
    for_each_interior(dual, 1, [&](std::size_t f, const MIdx& idx) {
        Vec xb = dual.point(idx);
        if (std::fabs(xb[0]) > 0.9) return;  // interior of the slope range
        err = std::max(err, std::fabs(star.values[f] - 0.5 * xb[0] * xb[0]));
    });
    CHECK(err < 2.0 * g.h);
}

TEST_CASE("legendre_transform: quartic point value against finer-grid sup oracle") {
    // u = x^4/4 on [-1,1], evaluate u*(0.5); analytic value (3/4) 0.5^{4/3}
    const double xbar = 0.5;
    const double analytic = 0.75 * std::pow(xbar, 4.0 / 3.0);

    GridSpec g(1, 2001, 1e-3, Vec{-1.0});
    GridFunction u = sample(g, [](const Vec& x) { return 0.25 * std::pow(x[0], 4.0); });
    GridSpec dual(1, 9, 0.25, Vec{-1.0});  // node 6 sits at 0.5
    GridFunction star = legendre_transform(u, dual);
    MIdx at{6};
    CHECK(dual.point(at)[0] == doctest::Approx(0.5));

    // independent oracle: direct sup scan at 10x finer primal sampling
    double sup = -1e300;
    for (int k = 0; k <= 20000; ++k) {
        double x = -1.0 + k * 1e-4;
        sup = std::max(sup, x * xbar - 0.25 * std::pow(x, 4.0));
    }
    CHECK(std::fabs(star.at(at) - analytic) < 2e-3);
    CHECK(std::fabs(star.at(at) - sup) < 1e-3);
}

TEST_CASE("legendre_transform: dual range coverage is enforced") {
    GridSpec g = box(1, 101, 1.0);
    GridFunction u = sample(g, [](const Vec& x) { return 0.5 * x[0] * x[0]; });
    GridSpec small(1, 11, 0.02, Vec{-0.1});  // slopes reach +-1, range too small
    CHECK_THROWS_WITH_AS(legendre_transform(u, small), "dual range too small", validation_error);

    GridFunction nc = sample(g, [](const Vec& x) { return -x[0] * x[0]; });
    CHECK_THROWS_AS(legendre_transform(nc, dual_grid_for(nc)), validation_error);
}

TEST_CASE("power duality: |x|^p/p maps to |xbar|^q/q") {
    const double ps[] = {4.0 / 3.0, 1.5, 3.0, 4.0};
    for (double p : ps) {
        double q = p / (p - 1.0);
        GridSpec g = box(1, 801, 1.0);
        GridFunction u = sample(g, [&](const Vec& x) { return power_radial(x, 1, p); });
        GridSpec dual = dual_grid_for(u);
        GridFunction star = legendre_transform(u, dual);
        double err = 0;
        for_each_interior(dual, 1, [&](std::size_t f, const MIdx& idx) {
            Vec xb = dual.point(idx);
            if (std::fabs(xb[0]) > 0.85) return;
            err = std::max(err, std::fabs(star.values[f] - power_radial(xb, 1, q)));
        });
        CAPTURE(p);
        CHECK(err < 3.0 * g.h);
    }

    // n = 2 spot check for the pair (4/3, 4)
    GridSpec g2 = box(2, 101, 1.0);
    GridFunction u2 = sample(g2, [](const Vec& x) { return power_radial(x, 2, 4.0 / 3.0); });
    GridSpec dual2 = dual_grid_for(u2);
    GridFunction star2 = legendre_transform(u2, dual2);
    double err2 = 0;
    for_each_interior(dual2, 1, [&](std::size_t f, const MIdx& idx) {
        Vec xb = dual2.point(idx);
        if (norm(xb, 2) > 0.8) return;
        err2 = std::max(err2, std::fabs(star2.values[f] - power_radial(xb, 2, 4.0)));
    });
    CHECK(err2 < 5.0 * g2.h);
}

TEST_CASE("order reversal is exact nodewise") {
    std::mt19937 rng(31);
    GridSpec g = box(2, 21, 1.0);
    GridFunction u = sample(g, [](const Vec& x) { return 0.5 * norm_sq(x, 2); });
    GridFunction v = u;
    std::uniform_real_distribution<double> d(0.0, 0.3);
    for (auto& val : v.values) val -= d(rng);  // v <= u nodewise
    GridSpec dual = dual_grid_for(u);
    GridFunction us, vs;
    detail::legendre_raw(u, dual, 1, us, nullptr);
    detail::legendre_raw(v, dual, 1, vs, nullptr);
    for (std::size_t j = 0; j < us.values.size(); ++j) CHECK(vs.values[j] >= us.values[j]);
}

TEST_CASE("biconjugation: envelope of a convex function is the function") {
    GridSpec g = box(1, 201, 1.0);
    GridFunction u = sample(g, [](const Vec& x) { return 0.5 * x[0] * x[0] + 0.25 * std::pow(x[0], 4.0); });
    GridFunction env = convex_envelope(u);
    double inner_err = 0;
    for_each_node(g, [&](std::size_t f, const MIdx& idx) {
        CHECK(env.values[f] <= u.values[f] + 1e-12);  // Fenchel direction
        Vec x = g.point(idx);
        if (std::fabs(x[0]) < 0.8) inner_err = std::max(inner_err, u.values[f] - env.values[f]);
    });
    CHECK(inner_err < 2.0 * g.h);

    // biconjugation is idempotent
    GridFunction env2 = convex_envelope(env);
    double drift = 0;
    for_each_node(g, [&](std::size_t f, const MIdx& idx) {
        Vec x = g.point(idx);
        if (std::fabs(x[0]) < 0.8) drift = std::max(drift, std::fabs(env2.values[f] - env.values[f]));
    });
    CHECK(drift < 1e-9);
}

TEST_CASE("convex_envelope: nonconvex inputs against 1D lower-hull oracle") {
    GridSpec g = box(1, 201, 1.0);

    GridFunction cap = sample(g, [](const Vec& x) { return -x[0] * x[0]; });
    GridFunction env = convex_envelope(cap);
    std::vector<double> hull = lower_hull_1d(cap);
    double err = 0;
    for (std::size_t f = 0; f < env.values.size(); ++f)
        err = std::max(err, std::fabs(env.values[f] - hull[f]));
    CHECK(err < 2.0 * g.h);
    // chord of -x^2 on [-1,1] is the constant -1
    CHECK(std::fabs(env.at(MIdx{100}) + 1.0) < 2.0 * g.h);

    GridFunction well = sample(g, [](const Vec& x) {
        double r2 = x[0] * x[0];
        return r2 * (r2 - 1.0);
    });
    GridFunction well_env = convex_envelope(well);
    std::vector<double> well_hull = lower_hull_1d(well);
    double werr = 0;
    for (std::size_t f = 0; f < well_env.values.size(); ++f)
        werr = std::max(werr, std::fabs(well_env.values[f] - well_hull[f]));
    CHECK(werr < 2.0 * g.h);
    // flat at the well depth -1/4 between the minima
    CHECK(well_env.at(MIdx{100}) == doctest::Approx(-0.25).epsilon(0.05));
}

TEST_CASE("legendre pair: Fenchel-Young holds for all sampled pairs") {
    GridSpec g = box(2, 31, 1.0);
    GridFunction u = sample(g, [](const Vec& x) {
        return 0.5 * norm_sq(x, 2) + 0.1 * std::pow(x[0], 4.0);
    });
    LegendrePair pair = make_legendre_pair(u, dual_grid_for(u));
    for_each_node(pair.dual_spec, [&](std::size_t j, const MIdx& jd) {
        Vec xb = pair.dual_spec.point(jd);
        // spot-check primal nodes on a stride against every 7th dual node
        if (j % 7 != 0) return;
        for_each_node(g, [&](std::size_t i, const MIdx& id) {
            if (i % 13 != 0) return;
            Vec x = g.point(id);
            CHECK(pair.primal.values[i] + pair.dual.values[j] >= dot(x, xb, 2) - 1e-9);
        });
    });
}

TEST_CASE("legendre argmax ties resolve to the lexicographically smallest node") {
    // u = 0 makes every primal node attain the sup at the dual origin
    GridSpec g = box(2, 11, 1.0);
    GridFunction u(g);
    GridSpec dual(2, 5, 0.5, Vec{-1.0, -1.0});  // dual node (2,2) is the origin
    std::vector<std::size_t> argmax;
    GridFunction star = legendre_transform(u, dual, 1e-8, 1, &argmax);
    std::size_t origin = dual.flat(MIdx{2, 2});
    CHECK(star.values[origin] == 0.0);
    CHECK(argmax[origin] == 0);  // flat 0 = lexicographically smallest
}

TEST_CASE("convexity violation nodes come out in lexicographic order") {
    GridSpec g = box(2, 21, 1.0);
    GridFunction u = sample(g, [](const Vec& x) { return -0.5 * norm_sq(x, 2); });
    ConvexityReport r = convexity_check(u, 1e-10);
    REQUIRE(r.violations.size() > 1);
    for (std::size_t k = 1; k < r.violations.size(); ++k)
        CHECK(r.violations[k] > r.violations[k - 1]);
}
