#pragma once

#include <cmath>
#include <functional>

#include "lmc/rotation.hpp"
#include "lmc/transform.hpp"

namespace lmc {

struct HolderFit {
    Vec point{};
    std::vector<double> radii;  // effective radii: farthest node actually in the ball
    std::vector<double> osc;    // sup |u - affine| per radius
    double gamma = 0.0;         // fitted growth exponent
    double c = 0.0;             // fitted constant exp(intercept)
    double residual = 0.0;      // log-scale regression residual
};

namespace detail {

struct BallOsc {
    double osc = -1.0;
    double r_eff = 0.0;   // distance of the farthest included node
    double scale = 0.0;   // max |u| over the ball
};

// Least-squares affine fit over the nodes of a ball, then the sup deviation.
// Refitting per radius keeps exact powers exactly straight in log-log.
inline BallOsc ball_oscillation(const GridFunction& u, const Vec& pt, double r) {
    const GridSpec& g = u.spec;
    const int n = g.n;
    std::vector<std::size_t> nodes;
    std::vector<Vec> offs;
    BallOsc out;
    for_each_node(g, [&](std::size_t f, const MIdx& idx) {
        Vec x = g.point(idx);
        double d = dist(x, pt, n);
        if (d > r) return;
        out.r_eff = std::max(out.r_eff, d);
        out.scale = std::max(out.scale, std::fabs(u.values[f]));
        nodes.push_back(f);
        Vec o{};
        for (int i = 0; i < n; ++i) o[i] = (x[i] - pt[i]) / r;
        offs.push_back(o);
    });
    if (nodes.size() < std::size_t(n + 2) || out.r_eff == 0.0) return out;

    const int nc = n + 1;
    std::vector<double> A(nc * nc, 0.0), b(nc, 0.0);
    for (std::size_t k = 0; k < nodes.size(); ++k) {
        double row[kMaxDim + 1];
        row[0] = 1.0;
        for (int i = 0; i < n; ++i) row[1 + i] = offs[k][i];
        for (int i = 0; i < nc; ++i) {
            b[i] += row[i] * u.values[nodes[k]];
            for (int j = 0; j < nc; ++j) A[i * nc + j] += row[i] * row[j];
        }
    }
    for (int i = 0; i < nc; ++i) A[i * nc + i] += 1e-12 * (1.0 + A[i * nc + i]);
    if (!solve_spd(A, b, nc)) return out;

    double sup = 0.0;
    for (std::size_t k = 0; k < nodes.size(); ++k) {
        double fit = b[0];
        for (int i = 0; i < n; ++i) fit += b[1 + i] * offs[k][i];
        sup = std::max(sup, std::fabs(u.values[nodes[k]] - fit));
    }
    out.osc = sup;
    return out;
}

}  // namespace detail

/// Growth exponent of the oscillation of u minus its best local affine fit
/// on balls around a point: log sup-deviation regressed against log radius.
/// The regression abscissa is the effective ball radius, so node quantizing
/// does not tilt the slope.
inline HolderFit holder_exponent_fit(const GridFunction& u, const Vec& point,
                                     const std::vector<double>& radii) {
    HolderFit fit;
    fit.point = point;
    std::vector<double> lr, lo;
    for (double r : radii) {
        if (!(r > 0)) continue;
        bool inside = true;
        for (int i = 0; i < u.spec.n; ++i)
            if (point[i] - r < u.spec.lo[i] - 1e-12 || point[i] + r > u.spec.upper(i) + 1e-12)
                inside = false;
        if (!inside) continue;
        detail::BallOsc bo = detail::ball_oscillation(u, point, r);
        if (bo.osc < 0.0) continue;
        if (bo.osc <= 1e-10 * (1.0 + bo.scale))
            throw validation_error("holder fit: oscillation vanishes (affine data?)");
        // skip duplicate effective radii (two nominal radii, same node set)
        if (!fit.radii.empty() && std::fabs(bo.r_eff - fit.radii.back()) < 1e-14) continue;
        fit.radii.push_back(bo.r_eff);
        fit.osc.push_back(bo.osc);
        lr.push_back(std::log(bo.r_eff));
        lo.push_back(std::log(bo.osc));
    }
    if (fit.radii.size() < 4) throw validation_error("holder fit: fewer than 4 usable radii");
    LineFit line = fit_line(lr, lo);
    fit.gamma = line.slope;
    fit.c = std::exp(line.intercept);
    fit.residual = line.rms;
    return fit;
}

/// Hessian samples on the depth-1 interior of a grid.
struct MatrixField {
    GridSpec spec;
    std::vector<SymmetricMatrix> values;  // indexed by full-grid flat index
    std::vector<bool> defined;
};

inline MatrixField hessian_field(const GridFunction& u) {
    MatrixField f;
    f.spec = u.spec;
    f.values.assign(u.spec.size(), SymmetricMatrix(u.spec.n));
    f.defined.assign(u.spec.size(), false);
    for_each_interior(u.spec, 1, [&](std::size_t k, const MIdx& idx) {
        f.values[k] = hessian_central(u, idx);
        f.defined[k] = true;
    });
    return f;
}

/// Vanishing-mean-oscillation modulus of a matrix field: for each radius the
/// sup over interior centers of the mean Frobenius deviation from the ball
/// average.  Centers are kept far enough in that the whole ball is defined.
inline std::vector<double> vmo_modulus(const MatrixField& field, const std::vector<double>& radii) {
    const GridSpec& g = field.spec;
    const int n = g.n;
    const int tri = n * (n + 1) / 2;
    std::vector<double> out;
    for (double r : radii) {
        if (!(r > 0)) throw validation_error("vmo: radii must be positive");
        int span = int(std::floor(r / g.h));
        // ball offsets
        std::vector<MIdx> offs;
        MIdx d{};
        std::function<void(int)> rec = [&](int axis) {
            if (axis == n) {
                double len2 = 0;
                for (int i = 0; i < n; ++i) len2 += double(d[i]) * d[i];
                if (len2 * g.h * g.h <= r * r + 1e-15) offs.push_back(d);
                return;
            }
            for (int v = -span; v <= span; ++v) {
                d[axis] = v;
                rec(axis + 1);
            }
        };
        rec(0);

        double sup = 0.0;
        for_each_node(g, [&](std::size_t, const MIdx& idx) {
            for (int i = 0; i < n; ++i)
                if (idx[i] - span < 1 || idx[i] + span > g.m - 2) return;
            double mean[10] = {0};
            for (const MIdx& o : offs) {
                MIdx j = idx;
                for (int i = 0; i < n; ++i) j[i] += o[i];
                const SymmetricMatrix& m = field.values[g.flat(j)];
                for (int t = 0; t < tri; ++t) mean[t] += m.a[t];
            }
            for (int t = 0; t < tri; ++t) mean[t] /= double(offs.size());
            double dev = 0.0;
            for (const MIdx& o : offs) {
                MIdx j = idx;
                for (int i = 0; i < n; ++i) j[i] += o[i];
                const SymmetricMatrix& m = field.values[g.flat(j)];
                double fro = 0.0;
                int t = 0;
                for (int ii = 0; ii < n; ++ii)
                    for (int jj = ii; jj < n; ++jj) {
                        double e = m.a[t] - mean[t];
                        fro += (ii == jj ? 1.0 : 2.0) * e * e;
                        ++t;
                    }
                dev += std::sqrt(fro);
            }
            sup = std::max(sup, dev / double(offs.size()));
        });
        if (offs.empty() || sup == 0.0) {
            // radius below the grid scale still reports zero deviation
        }
        out.push_back(sup);
    }
    return out;
}

struct RankReport {
    std::vector<int> rank;    // full-grid flat order; -1 on boundary nodes
    double eig_tol = 0.0;
    bool constant = false;
    int rank_value = -1;      // when constant
    std::vector<std::size_t> region_boundary;  // interior nodes adjacent to a different rank
};

/// Hessian rank per interior node: eigenvalues above eig_tol (default the
/// second-difference noise floor 10h).
inline RankReport rank_field(const GridFunction& u, double eig_tol = -1.0) {
    const GridSpec& g = u.spec;
    RankReport rep;
    rep.eig_tol = eig_tol >= 0.0 ? eig_tol : 10.0 * g.h;
    rep.rank.assign(g.size(), -1);
    for_each_interior(g, 1, [&](std::size_t f, const MIdx& idx) {
        Spectrum sp = eigen_sym(hessian_central(u, idx));
        int r = 0;
        for (int i = 0; i < g.n; ++i)
            if (sp.lambda[i] > rep.eig_tol) ++r;
        rep.rank[f] = r;
    });
    rep.constant = true;
    for_each_interior(g, 1, [&](std::size_t f, const MIdx& idx) {
        if (rep.rank_value < 0) rep.rank_value = rep.rank[f];
        if (rep.rank[f] != rep.rank_value) rep.constant = false;
        for (int i = 0; i < g.n; ++i) {
            for (int sgn : {-1, 1}) {
                MIdx nb = idx;
                nb[i] += sgn;
                std::size_t fn = g.flat(nb);
                if (rep.rank[fn] >= 0 && rep.rank[fn] != rep.rank[f]) {
                    rep.region_boundary.push_back(f);
                    return;
                }
            }
        }
    });
    if (!rep.constant) rep.rank_value = -1;
    return rep;
}

namespace detail {

// Growth exponent of the dual around a degenerate point, anchored at the
// exact Fenchel sample nearest to it (the vertex is the image of a primal
// node, so an exact value/gradient pair exists there).  Only nodes whose
// gradient-sample resolution is finer than their distance to the anchor
// contribute; that keeps the data hole of the transform out of the fit.
inline double anchored_growth_exponent(const GridFunction& u, const Vec& anchor_pt,
                                       double anchor_val, const Vec& anchor_grad,
                                       const std::vector<double>& radii,
                                       const std::vector<double>& kth_dist) {
    const GridSpec& g = u.spec;
    const int n = g.n;
    std::vector<double> lr, lo;
    double prev_reff = -1.0;
    for (double r : radii) {
        double sup = 0.0, r_eff = 0.0;
        for_each_node(g, [&](std::size_t f, const MIdx& idx) {
            Vec x = g.point(idx);
            double d = dist(x, anchor_pt, n);
            if (d > r || kth_dist[f] > 0.25 * d) return;
            double tangent = anchor_val;
            for (int i = 0; i < n; ++i) tangent += anchor_grad[i] * (x[i] - anchor_pt[i]);
            double dev = std::fabs(u.values[f] - tangent);
            if (dev > sup) sup = dev;
            r_eff = std::max(r_eff, d);
        });
        if (sup <= 0.0 || r_eff < 0.5 * r || r_eff == prev_reff) continue;
        prev_reff = r_eff;
        lr.push_back(std::log(r_eff));
        lo.push_back(std::log(sup));
    }
    if (lr.size() < 4) throw numerical_error("dual convexity: too few usable flatness radii");
    return fit_line(lr, lo).slope;
}

}  // namespace detail

enum class DualConvexityClass {
    strongly_convex,
    borderline,             // exponent pair at the threshold 2+alpha = 1+1/beta
    degenerate_consistent,  // dual potential fails C^{2+alpha}: hypothesis void
    inconsistent,
};

struct DualConvexityReport {
    double min_lambda = 0.0;
    Vec argmin{};
    double flatness_exponent = 0.0;  // growth of the dual at its flattest point
    DualConvexityClass classification = DualConvexityClass::strongly_convex;
    bool dichotomy_consistent = true;
    GridFunction dual;  // resampled dual potential
};

/// Strong-convexity dichotomy of the Legendre transform of a strictly convex
/// potential: either the dual Hessian stays above a grid-scale floor, or its
/// flattest point carries a growth exponent that must reach 2+alpha when the
/// dual is C^{2+alpha}, and cannot beat 1+1/beta when the primal is C^{1,beta}.
inline DualConvexityReport dual_convexity_check(const GridFunction& u, double alpha, double beta,
                                                int threads = 1) {
    const GridSpec& g = u.spec;
    const int n = g.n;
    if (!convexity_check(u, 1e-8).pass)
        throw validation_error("dual convexity: input potential not convex");

    // dual potential sampled through the gradient graph: exact Fenchel-Young
    // values, gradients x, quadratic MLS resample
    detail::Cloud cloud;
    cloud.n = n;
    detail::ShrinkBox sb = detail::shrink_box(g, 0.9);
    Vec sub_lo{}, sub_hi{};
    for (int i = 0; i < n; ++i) {
        sub_lo[i] = std::numeric_limits<double>::infinity();
        sub_hi[i] = -std::numeric_limits<double>::infinity();
    }
    for_each_interior(g, 1, [&](std::size_t f, const MIdx& idx) {
        Vec x = g.point(idx);
        Vec xb = gradient_central(u, idx);
        cloud.pts.push_back(xb);
        cloud.vals.push_back(dot(x, xb, n) - u.values[f]);
        cloud.grads.push_back(x);
        bool in_sub = true;
        for (int i = 0; i < n; ++i)
            if (idx[i] < sb.lo[i] || idx[i] > sb.hi[i]) in_sub = false;
        if (in_sub)
            for (int i = 0; i < n; ++i) {
                sub_lo[i] = std::min(sub_lo[i], xb[i]);
                sub_hi[i] = std::max(sub_hi[i], xb[i]);
            }
    });

    Vec center_img = gradient_central(u, g.center());
    const int passes = 3;
    GridSpec cube = detail::pick_inner_cube(u, center_img, sub_lo, sub_hi, sb.lo, sb.hi, g.m,
                                            passes + 1);
    DualConvexityReport rep;
    rep.dual = detail::smoothed_trim(detail::mls_resample(cloud, cube, threads), passes);

    // Distance from each dual node to its k-th nearest gradient sample: the
    // local resolution of the transform data.
    const GridSpec& dg = rep.dual.spec;
    const int kth = 2 * n + 2;
    std::vector<double> kth_dist(dg.size(), 0.0);
    {
        double vol = 1.0;
        for (int i = 0; i < n; ++i) vol *= std::max(sub_hi[i] - sub_lo[i], 1e-12);
        double spacing = std::pow(vol / double(cloud.pts.size()), 1.0 / n);
        detail::NeighborIndex bins;
        bins.build(cloud.pts, n, std::max(2.0 * spacing, dg.h));
        for_each_node(dg, [&](std::size_t f, const MIdx& idx) {
            Vec x = dg.point(idx);
            std::vector<double> ds;
            double r = std::max(2.0 * spacing, dg.h);
            for (int attempt = 0; attempt < 40; ++attempt) {
                ds.clear();
                bins.for_each_near(x, r, [&](std::uint32_t kk) {
                    double d = dist(cloud.pts[kk], x, n);
                    if (d <= r) ds.push_back(d);
                });
                if (int(ds.size()) > kth) break;
                r *= 1.6;
            }
            std::sort(ds.begin(), ds.end());
            kth_dist[f] = ds.size() > std::size_t(kth) ? ds[kth] : r;
        });
    }

    // The minimum search stays away from the cube edge, where one-sided fits
    // make the sampled curvature dip.  The reported minimum comes from nodes
    // whose local data resolution is grid-fine; the raw minimum (holes
    // included) still locates the degenerate point.
    const int edge = std::max(1, dg.m / 7);
    double min_raw = std::numeric_limits<double>::infinity();
    rep.min_lambda = std::numeric_limits<double>::infinity();
    double max_lambda = -std::numeric_limits<double>::infinity();
    MIdx argmin{};
    for_each_interior(dg, edge, [&](std::size_t f, const MIdx& idx) {
        Spectrum sp = eigen_sym(hessian_central(rep.dual, idx));
        if (sp.lambda[0] < min_raw) {
            min_raw = sp.lambda[0];
            argmin = idx;
        }
        if (kth_dist[f] <= 6.0 * dg.h) rep.min_lambda = std::min(rep.min_lambda, sp.lambda[0]);
        max_lambda = std::max(max_lambda, sp.lambda[n - 1]);
    });
    if (!std::isfinite(rep.min_lambda)) rep.min_lambda = min_raw;
    rep.argmin = dg.point(argmin);

    // Grid-scale floor with a curvature-relative part: degenerate powers keep
    // an O(h^small) curvature at the resolvable scale, so a purely absolute
    // floor cannot separate them from strong convexity.
    const double floor = std::max(10.0 * dg.h, 0.35 * max_lambda);
    if (std::min(rep.min_lambda, min_raw) >= floor) {
        rep.classification = DualConvexityClass::strongly_convex;
        rep.dichotomy_consistent = true;
        rep.flatness_exponent = 2.0;
        return rep;
    }

    // growth exponent of the dual at the degenerate point, anchored at the
    // nearest exact transform sample and measured on trusted nodes
    std::size_t anchor = 0;
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < cloud.pts.size(); ++i) {
        double d = dist(cloud.pts[i], rep.argmin, n);
        if (d < best) {
            best = d;
            anchor = i;
        }
    }
    const Vec anchor_pt = cloud.pts[anchor];
    double max_r = std::numeric_limits<double>::infinity();
    for (int i = 0; i < n; ++i)
        max_r = std::min(max_r, std::min(anchor_pt[i] - dg.lo[i], dg.upper(i) - anchor_pt[i]));
    double r_hi = 0.9 * max_r;
    double r_lo = std::max(8.0 * dg.h, 0.02 * r_hi);
    const int nrad = 10;
    std::vector<double> radii;
    double q = std::pow(r_lo / r_hi, 1.0 / (nrad - 1));
    for (int i = 0; i < nrad; ++i) radii.push_back(r_hi * std::pow(q, i));
    rep.flatness_exponent = detail::anchored_growth_exponent(
        rep.dual, anchor_pt, cloud.vals[anchor], cloud.grads[anchor], radii, kth_dist);

    const double margin = 0.1;
    bool applicable = 2.0 + alpha > 1.0 + 1.0 / beta + margin;
    if (rep.flatness_exponent < 2.0 + alpha - margin) {
        rep.classification = DualConvexityClass::degenerate_consistent;
        rep.dichotomy_consistent = true;
    } else if (!applicable) {
        rep.classification = DualConvexityClass::borderline;
        rep.dichotomy_consistent = true;
    } else {
        rep.classification = DualConvexityClass::inconsistent;
        rep.dichotomy_consistent = false;
    }
    return rep;
}

}  // namespace lmc
