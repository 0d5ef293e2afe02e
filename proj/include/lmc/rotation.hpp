#pragma once

#include <atomic>
#include <cstdint>
#include <cstdio>

#include "lmc/transform.hpp"

namespace lmc {

inline constexpr double kHalfSqrt2 = 0.70710678118654752440;  // cos(pi/4) = sin(pi/4)

inline std::string node_str(const GridSpec& g, const MIdx& idx) {
    Vec x = g.point(idx);
    std::string s = "(";
    char buf[32];
    for (int i = 0; i < g.n; ++i) {
        std::snprintf(buf, sizeof buf, "%.6g", x[i]);
        s += buf;
        if (i + 1 < g.n) s += ", ";
    }
    s += ")";
    return s;
}

/// Image of a potential's gradient graph under the pi/4 rotation: scattered
/// points xbar_i = c x_i + s y_i with values and gradients of the rotated
/// potential, plus a grid resample on an axis-aligned box inside the cloud.
struct RotatedPotential {
    int n = 1;
    std::vector<Vec> points;
    std::vector<double> values;
    std::vector<Vec> gradients;
    GridFunction resample;
};

struct RotateOptions {
    double shrink = 0.8;       // primal sub-box feeding the resample region
    int m_out = 0;             // 0: same node count as the input grid
    double convexity_tol = 1e-8;
    int smooth_passes = 3;     // binomial passes on the resample
    int threads = 1;
};

struct InverseOptions {
    double min_eig_floor = -1.0;  // <0: grid-scale default 10*h
    double exclude_radius = 0.0;  // skip the convexity check near the origin
    double shrink = 0.8;
    int m_out = 0;
    int smooth_passes = 3;
    int threads = 1;
};

namespace detail {

struct Cloud {
    int n = 1;
    std::vector<Vec> pts;
    std::vector<double> vals;
    std::vector<Vec> grads;
};

struct NeighborIndex {
    int n = 1;
    Vec lo{};
    double cell = 1.0;
    MIdx dims{};
    std::vector<std::vector<std::uint32_t>> bins;

    void build(const std::vector<Vec>& pts, int n_, double cell_) {
        n = n_;
        cell = cell_;
        Vec hi{};
        for (int i = 0; i < n; ++i) {
            lo[i] = std::numeric_limits<double>::infinity();
            hi[i] = -std::numeric_limits<double>::infinity();
        }
        for (const Vec& p : pts)
            for (int i = 0; i < n; ++i) {
                lo[i] = std::min(lo[i], p[i]);
                hi[i] = std::max(hi[i], p[i]);
            }
        for (;;) {
            double total = 1;
            for (int i = 0; i < n; ++i) {
                dims[i] = int((hi[i] - lo[i]) / cell) + 1;
                total *= dims[i];
            }
            if (total <= 4e6) break;
            cell *= 2.0;  // keep the bin table bounded
        }
        std::size_t total = 1;
        for (int i = 0; i < n; ++i) total *= std::size_t(dims[i]);
        bins.assign(total, {});
        for (std::uint32_t k = 0; k < pts.size(); ++k) bins[bin_of(pts[k])].push_back(k);
    }

    std::size_t bin_of(const Vec& p) const {
        std::size_t f = 0;
        for (int i = 0; i < n; ++i) {
            int b = std::clamp(int((p[i] - lo[i]) / cell), 0, dims[i] - 1);
            f = f * std::size_t(dims[i]) + std::size_t(b);
        }
        return f;
    }

    template <class F>
    void for_each_near(const Vec& c, double r, F&& fn) const {
        MIdx blo{}, bhi{};
        for (int i = 0; i < n; ++i) {
            blo[i] = std::clamp(int((c[i] - r - lo[i]) / cell), 0, dims[i] - 1);
            bhi[i] = std::clamp(int((c[i] + r - lo[i]) / cell), 0, dims[i] - 1);
        }
        MIdx idx = blo;
        for (;;) {
            std::size_t f = 0;
            for (int i = 0; i < n; ++i) f = f * std::size_t(dims[i]) + std::size_t(idx[i]);
            for (std::uint32_t k : bins[f]) fn(k);
            int axis = n - 1;
            while (axis >= 0) {
                if (++idx[axis] <= bhi[axis]) break;
                idx[axis] = blo[axis];
                --axis;
            }
            if (axis < 0) break;
        }
    }
};

// Weighted moving least squares with quadratic basis, fitted to values and
// gradients of the cloud.  Reproduces quadratics exactly; the fitted value is
// a C^2 function of the query point thanks to the Wendland weight.
inline GridFunction mls_resample(const Cloud& cloud, const GridSpec& target, int threads) {
    const int n = cloud.n;
    const int nc = 1 + n + n * (n + 1) / 2;
    const int nmin = nc + 3 * n + 2;
    if (cloud.pts.size() < std::size_t(nmin))
        throw numerical_error("resample: cloud too small");

    Vec blo{}, bhi{};
    for (int i = 0; i < n; ++i) {
        blo[i] = std::numeric_limits<double>::infinity();
        bhi[i] = -std::numeric_limits<double>::infinity();
    }
    for (const Vec& p : cloud.pts)
        for (int i = 0; i < n; ++i) {
            blo[i] = std::min(blo[i], p[i]);
            bhi[i] = std::max(bhi[i], p[i]);
        }
    double vol = 1.0, diag2 = 0.0;
    for (int i = 0; i < n; ++i) {
        double w = std::max(bhi[i] - blo[i], 1e-12);
        vol *= w;
        diag2 += w * w;
    }
    double spacing = std::pow(vol / double(cloud.pts.size()), 1.0 / n);
    double rho0 = std::max(2.2 * spacing, 1.2 * target.h);
    double rhomax = 0.5 * std::sqrt(diag2) + rho0;

    NeighborIndex bins;
    bins.build(cloud.pts, n, rho0);

    GridFunction out(target);
    std::atomic<bool> failed{false};

    parallel_for(target.size(), threads, [&](std::size_t f) {
        if (failed.load(std::memory_order_relaxed)) return;
        Vec x0 = target.point(target.unflat(f));

        // The support radius must vary continuously with x0 or the fitted
        // field picks up node-scale wiggles that second differences amplify.
        // Anchor it to the distance of the nmin-th nearest cloud point.
        std::vector<std::pair<double, std::uint32_t>> cand;
        cand.reserve(96);
        double rgather = rho0;
        for (int attempt = 0; attempt < 48; ++attempt) {
            cand.clear();
            bins.for_each_near(x0, rgather, [&](std::uint32_t k) {
                double d = dist(cloud.pts[k], x0, n);
                if (d <= rgather) cand.emplace_back(d, k);
            });
            if (int(cand.size()) >= nmin + 2 || rgather > rhomax) break;
            rgather *= 1.5;
        }
        if (int(cand.size()) < nc) {
            failed.store(true, std::memory_order_relaxed);
            return;
        }
        std::sort(cand.begin(), cand.end());
        std::size_t kth = std::min<std::size_t>(nmin - 1, cand.size() - 1);
        double rho = 1.8 * cand[kth].first + 0.4 * rho0;
        // re-gather at the final radius so no in-support point is missed
        std::vector<std::uint32_t> idxs;
        idxs.reserve(96);
        bins.for_each_near(x0, rho, [&](std::uint32_t k) {
            if (dist(cloud.pts[k], x0, n) < rho) idxs.push_back(k);
        });
        if (int(idxs.size()) < nc) {
            failed.store(true, std::memory_order_relaxed);
            return;
        }

        double A[15 * 15] = {0};
        double rhs[15] = {0};
        double phi[15], dphi[15];

        auto accumulate = [&](const double* row, double y, double w) {
            for (int a = 0; a < nc; ++a) {
                double wa = w * row[a];
                rhs[a] += wa * y;
                for (int b = a; b < nc; ++b) A[a * nc + b] += wa * row[b];
            }
        };

        for (std::uint32_t k : idxs) {
            Vec xi{};
            double d2 = 0;
            for (int i = 0; i < n; ++i) {
                xi[i] = (cloud.pts[k][i] - x0[i]) / rho;
                d2 += xi[i] * xi[i];
            }
            double q = std::sqrt(d2);
            if (q > 1.0) continue;
            double om = 1.0 - q;
            double w = om * om * om * om * (4.0 * q + 1.0);

            phi[0] = 1.0;
            for (int i = 0; i < n; ++i) phi[1 + i] = xi[i];
            int t = 1 + n;
            for (int a = 0; a < n; ++a)
                for (int b = a; b < n; ++b) phi[t++] = (a == b) ? 0.5 * xi[a] * xi[a] : xi[a] * xi[b];
            accumulate(phi, cloud.vals[k], w);

            for (int g = 0; g < n; ++g) {
                dphi[0] = 0.0;
                for (int i = 0; i < n; ++i) dphi[1 + i] = (i == g) ? 1.0 : 0.0;
                t = 1 + n;
                for (int a = 0; a < n; ++a)
                    for (int b = a; b < n; ++b) {
                        if (a == b)
                            dphi[t] = (a == g) ? xi[a] : 0.0;
                        else
                            dphi[t] = (a == g ? xi[b] : 0.0) + (b == g ? xi[a] : 0.0);
                        ++t;
                    }
                accumulate(dphi, rho * cloud.grads[k][g], w);
            }
        }

        for (int a = 0; a < nc; ++a)
            for (int b = 0; b < a; ++b) A[a * nc + b] = A[b * nc + a];

        double tr = 0;
        for (int a = 0; a < nc; ++a) tr += A[a * nc + a];
        double ridge = 1e-13 * tr / nc + 1e-300;
        for (int attempt = 0; attempt < 4; ++attempt) {
            std::vector<double> As(A, A + nc * nc);
            std::vector<double> bs(rhs, rhs + nc);
            for (int a = 0; a < nc; ++a) As[a * nc + a] += ridge;
            if (solve_spd(As, bs, nc)) {
                out.values[f] = bs[0];
                return;
            }
            ridge *= 1e3;
        }
        failed.store(true, std::memory_order_relaxed);
    });

    if (failed.load()) throw numerical_error("resample: cloud coverage or fit failed");
    return out;
}

// One 1-2-1 binomial pass per axis; trims the border ring, shifting lo by h
// and dropping m by 2.  Kills node-scale wiggle left by blended local fits;
// quadratic fields keep their exact Hessian (values shift by a constant).
inline GridFunction binomial_smooth(const GridFunction& in) {
    const GridSpec& g = in.spec;
    if (g.m < 7) throw numerical_error("smooth: grid too small");
    GridFunction mid = in;
    GridFunction tmp(g);
    for (int axis = 0; axis < g.n; ++axis) {
        for_each_node(g, [&](std::size_t f, const MIdx& idx) {
            if (idx[axis] == 0 || idx[axis] == g.m - 1) {
                tmp.values[f] = mid.values[f];
                return;
            }
            MIdx p = idx, q = idx;
            ++p[axis];
            --q[axis];
            tmp.values[f] = 0.25 * mid.at(q) + 0.5 * mid.values[f] + 0.25 * mid.at(p);
        });
        std::swap(mid.values, tmp.values);
    }
    Vec lo = g.lo;
    for (int i = 0; i < g.n; ++i) lo[i] += g.h;
    GridSpec inner(g.n, g.m - 2, g.h, lo);
    GridFunction out(inner);
    for_each_node(inner, [&](std::size_t f, const MIdx& idx) {
        MIdx src = idx;
        for (int i = 0; i < g.n; ++i) ++src[i];
        out.values[f] = mid.at(src);
    });
    return out;
}

// Binomial passes plus a compensation step removing the smoother's value
// shift: each pass acts as I + (h^2/4) D2 per axis, so subtracting
// passes*(h^2/4) times the discrete Laplacian of the smoothed field restores
// quadratics exactly while keeping the high-frequency damping.
inline GridFunction smoothed_trim(const GridFunction& raw, int passes) {
    if (passes <= 0) return raw;
    GridFunction v = raw;
    for (int p = 0; p < passes; ++p) v = binomial_smooth(v);
    const GridSpec& g = v.spec;
    Vec lo = g.lo;
    for (int i = 0; i < g.n; ++i) lo[i] += g.h;
    GridSpec inner(g.n, g.m - 2, g.h, lo);
    GridFunction out(inner);
    const double cq = passes * 0.25;
    for_each_node(inner, [&](std::size_t f, const MIdx& idx) {
        MIdx src = idx;
        for (int i = 0; i < g.n; ++i) ++src[i];
        double lap = 0.0;  // h^2-scaled second differences
        for (int axis = 0; axis < g.n; ++axis) {
            MIdx p = src, q = src;
            ++p[axis];
            --q[axis];
            lap += v.at(p) - 2.0 * v.at(src) + v.at(q);
        }
        out.values[f] = v.at(src) - cq * lap;
    });
    return out;
}

// Largest centered cube (as a GridSpec) whose probe points map back, through
// the discrete subdifferential inverse of the convex potential phi, into the
// designated primal sub-box.  This keeps every resample node strictly inside
// the cloud's convex hull.  pad_cells border rings are added for smoothing
// passes that trim them again.
inline GridSpec pick_inner_cube(const GridFunction& phi, const Vec& center, const Vec& sub_lo,
                                const Vec& sub_hi, const MIdx& idx_lo, const MIdx& idx_hi,
                                int m_out, int pad_cells) {
    const int n = phi.spec.n;
    const std::vector<Vec> pts = node_points(phi.spec);

    auto argmax_interior = [&](const Vec& p) {
        double best = -std::numeric_limits<double>::infinity();
        std::size_t bi = 0;
        for (std::size_t i = 0; i < pts.size(); ++i) {
            double v = dot(pts[i], p, n) - phi.values[i];
            if (v > best) {
                best = v;
                bi = i;
            }
        }
        MIdx idx = phi.spec.unflat(bi);
        for (int i = 0; i < n; ++i)
            if (idx[i] <= idx_lo[i] || idx[i] >= idx_hi[i]) return false;
        return true;
    };

    double lmax = std::numeric_limits<double>::infinity();
    for (int i = 0; i < n; ++i)
        lmax = std::min(lmax, 2.0 * std::min(sub_hi[i] - center[i], center[i] - sub_lo[i]));
    if (!(lmax > 0)) throw numerical_error("rotation: empty resample region");

    auto valid = [&](double side) {
        Vec p{};
        if (!argmax_interior(center)) return false;
        int corners = 1 << n;
        for (int cmask = 0; cmask < corners; ++cmask) {
            for (int i = 0; i < n; ++i)
                p[i] = center[i] + ((cmask >> i) & 1 ? 0.5 : -0.5) * side;
            if (!argmax_interior(p)) return false;
        }
        for (int i = 0; i < n; ++i) {
            for (double sgn : {-0.5, 0.5}) {
                p = center;
                p[i] += sgn * side;
                if (!argmax_interior(p)) return false;
            }
        }
        return true;
    };

    double good = 0.0;
    if (valid(lmax)) {
        good = lmax;
    } else {
        double lo = 0.0, hi = lmax;
        for (int it = 0; it < 30; ++it) {
            double mid = 0.5 * (lo + hi);
            if (valid(mid))
                lo = mid;
            else
                hi = mid;
        }
        good = lo;
    }
    if (!(good > 0)) throw numerical_error("rotation: no interior resample box");

    int m = m_out > 0 ? m_out : phi.spec.m;
    double side = 0.98 * good / (1.0 + 2.0 * pad_cells / double(m - 1));
    double hbar = side / (m - 1);
    Vec lo{};
    for (int i = 0; i < n; ++i) lo[i] = center[i] - 0.5 * side - pad_cells * hbar;
    return GridSpec(n, m + 2 * pad_cells, hbar, lo);
}

struct ShrinkBox {
    MIdx lo{}, hi{};
};

inline ShrinkBox shrink_box(const GridSpec& g, double shrink) {
    ShrinkBox b;
    double half = 0.5 * (g.m - 1);
    double span = shrink * half;
    for (int i = 0; i < g.n; ++i) {
        b.lo[i] = std::max(1, int(std::ceil(half - span)));
        b.hi[i] = std::min(g.m - 2, int(std::floor(half + span)));
        if (b.hi[i] - b.lo[i] < 4) throw validation_error("rotation: shrink box too small");
    }
    return b;
}

}  // namespace detail

/// Lewy-Yuan pi/4 rotation of the gradient graph of a convex potential.
/// Values on the rotated graph come from the Legendre transform evaluated at
/// its own subdifferential points (where the sup is attained), gradients from
/// the rotation formula; the resample is a quadratic MLS fit of that data.
inline RotatedPotential lewy_yuan_rotate(const GridFunction& u, const RotateOptions& opt = {}) {
    const double c = kHalfSqrt2, s = kHalfSqrt2;
    const GridSpec& g = u.spec;
    const int n = g.n;

    ConvexityReport conv = convexity_check(u, opt.convexity_tol);
    if (!conv.pass) {
        MIdx first = g.unflat(conv.violations.front());
        char buf[64];
        std::snprintf(buf, sizeof buf, "%.3e", conv.min_eigenvalue);
        throw validation_error("rotate: input not convex, first violating node " +
                               node_str(g, first) + ", min eigenvalue " + buf);
    }

    GridFunction tilde(g);
    for_each_node(g, [&](std::size_t f, const MIdx& idx) {
        Vec x = g.point(idx);
        tilde.values[f] = s * u.values[f] + 0.5 * c * norm_sq(x, n);
    });

    detail::Cloud cloud;
    cloud.n = n;
    detail::ShrinkBox sb = detail::shrink_box(g, opt.shrink);
    Vec sub_lo{}, sub_hi{};
    for (int i = 0; i < n; ++i) {
        sub_lo[i] = std::numeric_limits<double>::infinity();
        sub_hi[i] = -std::numeric_limits<double>::infinity();
    }

    for_each_interior(g, 1, [&](std::size_t f, const MIdx& idx) {
        Vec x = g.point(idx);
        Vec y = gradient_central(u, idx);
        Vec xb{}, gb{};
        for (int i = 0; i < n; ++i) {
            xb[i] = c * x[i] + s * y[i];
            gb[i] = -s * x[i] + c * y[i];
        }
        double conj = dot(x, xb, n) - tilde.values[f];  // Fenchel-Young at xb in the subdifferential
        double ubar = 0.5 * (c / s) * norm_sq(xb, n) - conj / s;
        cloud.pts.push_back(xb);
        cloud.vals.push_back(ubar);
        cloud.grads.push_back(gb);

        bool in_sub = true;
        for (int i = 0; i < n; ++i)
            if (idx[i] < sb.lo[i] || idx[i] > sb.hi[i]) in_sub = false;
        if (in_sub)
            for (int i = 0; i < n; ++i) {
                sub_lo[i] = std::min(sub_lo[i], xb[i]);
                sub_hi[i] = std::max(sub_hi[i], xb[i]);
            }
    });

    MIdx cidx = g.center();
    Vec center_img{};
    {
        Vec x = g.point(cidx);
        Vec y = gradient_central(u, cidx);
        for (int i = 0; i < n; ++i) center_img[i] = c * x[i] + s * y[i];
    }

    int pad = opt.smooth_passes > 0 ? opt.smooth_passes + 1 : 0;
    GridSpec cube = detail::pick_inner_cube(tilde, center_img, sub_lo, sub_hi, sb.lo, sb.hi,
                                            opt.m_out, pad);

    RotatedPotential rp;
    rp.n = n;
    rp.resample = detail::smoothed_trim(detail::mls_resample(cloud, cube, opt.threads),
                                        opt.smooth_passes);
    rp.points = std::move(cloud.pts);
    rp.values = std::move(cloud.vals);
    rp.gradients = std::move(cloud.grads);
    return rp;
}

/// Inverse of the rotation: rebuilds the primal potential from the resampled
/// rotated potential through the auxiliary convex function
/// Ubar = -s ubar + (c/2)|xbar|^2, whose gradient graph is the primal one.
inline GridFunction inverse_rotate(const RotatedPotential& rp, const InverseOptions& opt = {}) {
    const double c = kHalfSqrt2, s = kHalfSqrt2;
    const GridFunction& rb = rp.resample;
    const GridSpec& g = rb.spec;
    const int n = g.n;

    GridFunction ubig(g);
    for_each_node(g, [&](std::size_t f, const MIdx& idx) {
        Vec xb = g.point(idx);
        ubig.values[f] = -s * rb.values[f] + 0.5 * c * norm_sq(xb, n);
    });

    double floor = opt.min_eig_floor >= 0.0 ? opt.min_eig_floor : 10.0 * g.h;
    double min_eig = std::numeric_limits<double>::infinity();
    for_each_interior(g, 1, [&](std::size_t, const MIdx& idx) {
        if (opt.exclude_radius > 0.0 && norm(g.point(idx), n) < opt.exclude_radius) return;
        min_eig = std::min(min_eig, min_eigenvalue(hessian_central(ubig, idx)));
    });
    if (!(min_eig > floor)) throw numerical_error("rotated potential not invertible");

    detail::Cloud cloud;
    cloud.n = n;
    detail::ShrinkBox sb = detail::shrink_box(g, opt.shrink);
    Vec sub_lo{}, sub_hi{};
    for (int i = 0; i < n; ++i) {
        sub_lo[i] = std::numeric_limits<double>::infinity();
        sub_hi[i] = -std::numeric_limits<double>::infinity();
    }

    for_each_interior(g, 1, [&](std::size_t f, const MIdx& idx) {
        Vec xb = g.point(idx);
        Vec gb = gradient_central(rb, idx);
        Vec x{}, y{};
        for (int i = 0; i < n; ++i) {
            x[i] = c * xb[i] - s * gb[i];  // = D Ubar(xb)
            y[i] = s * xb[i] + c * gb[i];
        }
        double conj = dot(x, xb, n) - ubig.values[f];  // U(x) by Fenchel-Young
        double uval = (conj - 0.5 * c * norm_sq(x, n)) / s;
        cloud.pts.push_back(x);
        cloud.vals.push_back(uval);
        cloud.grads.push_back(y);

        bool in_sub = true;
        for (int i = 0; i < n; ++i)
            if (idx[i] < sb.lo[i] || idx[i] > sb.hi[i]) in_sub = false;
        if (in_sub)
            for (int i = 0; i < n; ++i) {
                sub_lo[i] = std::min(sub_lo[i], x[i]);
                sub_hi[i] = std::max(sub_hi[i], x[i]);
            }
    });

    MIdx cidx = g.center();
    Vec center_img{};
    {
        Vec xb = g.point(cidx);
        Vec gb = gradient_central(rb, cidx);
        for (int i = 0; i < n; ++i) center_img[i] = c * xb[i] - s * gb[i];
    }

    int pad = opt.smooth_passes > 0 ? opt.smooth_passes + 1 : 0;
    GridSpec cube = detail::pick_inner_cube(ubig, center_img, sub_lo, sub_hi, sb.lo, sb.hi,
                                            opt.m_out, pad);
    return detail::smoothed_trim(detail::mls_resample(cloud, cube, opt.threads),
                                 opt.smooth_passes);
}

}  // namespace lmc
