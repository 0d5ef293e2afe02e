#pragma once

#include <cmath>
#include <cstddef>

#include "lmc/common.hpp"

namespace lmc {

/// Uniform tensor-product grid: m nodes per axis, spacing h, lower corner lo.
/// Axis 0 varies slowest in the flat node order, the last axis fastest, so
/// flat order equals lexicographic order of the node coordinates.
struct GridSpec {
    int n = 1;
    int m = 5;
    double h = 1.0;
    Vec lo{};

    GridSpec() = default;
    GridSpec(int n_, int m_, double h_, const Vec& lo_) : n(n_), m(m_), h(h_), lo(lo_) {
        validate();
    }

    void validate() const {
        if (n < 1 || n > kMaxDim) throw validation_error("grid: dimension must be in [1,4]");
        if (m < 5) throw validation_error("grid: need at least 5 points per axis");
        if (!(h > 0.0) || !std::isfinite(h)) throw validation_error("grid: spacing must be positive");
        for (int i = 0; i < n; ++i)
            if (!std::isfinite(lo[i])) throw validation_error("grid: corner must be finite");
        double count = std::pow(double(m), n);
        if (count > 5e8) throw validation_error("grid: too many nodes");
    }

    std::size_t size() const {
        std::size_t s = 1;
        for (int i = 0; i < n; ++i) s *= std::size_t(m);
        return s;
    }

    double upper(int axis) const { return lo[axis] + (m - 1) * h; }

    std::size_t flat(const MIdx& idx) const {
        std::size_t f = 0;
        for (int i = 0; i < n; ++i) f = f * std::size_t(m) + std::size_t(idx[i]);
        return f;
    }

    MIdx unflat(std::size_t f) const {
        MIdx idx{};
        for (int i = n - 1; i >= 0; --i) {
            idx[i] = int(f % std::size_t(m));
            f /= std::size_t(m);
        }
        return idx;
    }

    Vec point(const MIdx& idx) const {
        Vec x{};
        for (int i = 0; i < n; ++i) x[i] = lo[i] + h * idx[i];
        return x;
    }

    bool interior(const MIdx& idx, int depth = 1) const {
        for (int i = 0; i < n; ++i)
            if (idx[i] < depth || idx[i] > m - 1 - depth) return false;
        return true;
    }

    bool contains(const Vec& x, double pad = 0.0) const {
        for (int i = 0; i < n; ++i)
            if (x[i] < lo[i] - pad || x[i] > upper(i) + pad) return false;
        return true;
    }

    MIdx center() const {
        MIdx c{};
        for (int i = 0; i < n; ++i) c[i] = (m - 1) / 2;
        return c;
    }
};

// Visit every node in flat order, keeping the multi-index as an odometer.
template <class F>
void for_each_node(const GridSpec& g, F&& fn) {
    MIdx idx{};
    std::size_t total = g.size();
    for (std::size_t f = 0; f < total; ++f) {
        fn(f, idx);
        for (int i = g.n - 1; i >= 0; --i) {
            if (++idx[i] < g.m) break;
            idx[i] = 0;
        }
    }
}

template <class F>
void for_each_interior(const GridSpec& g, int depth, F&& fn) {
    for_each_node(g, [&](std::size_t f, const MIdx& idx) {
        if (g.interior(idx, depth)) fn(f, idx);
    });
}

/// Scalar samples on a GridSpec; the universal carrier for potentials.
struct GridFunction {
    GridSpec spec;
    std::vector<double> values;

    GridFunction() = default;
    explicit GridFunction(const GridSpec& s) : spec(s), values(s.size(), 0.0) {}
    GridFunction(const GridSpec& s, std::vector<double> v) : spec(s), values(std::move(v)) {
        if (values.size() != spec.size())
            throw validation_error("grid function: value count does not match grid");
    }

    double at(const MIdx& idx) const { return values[spec.flat(idx)]; }
    double& at(const MIdx& idx) { return values[spec.flat(idx)]; }

    void check_finite() const {
        for (double v : values)
            if (!std::isfinite(v)) throw validation_error("grid function: non-finite value");
    }

    /// Multilinear interpolation; x must lie inside the grid box.
    double interp(const Vec& x) const {
        const int n = spec.n;
        MIdx base{};
        Vec t{};
        for (int i = 0; i < n; ++i) {
            double s = (x[i] - spec.lo[i]) / spec.h;
            if (s < -1e-9 || s > spec.m - 1 + 1e-9)
                throw validation_error("interp: point outside grid");
            int b = int(std::floor(s));
            b = std::clamp(b, 0, spec.m - 2);
            base[i] = b;
            t[i] = std::clamp(s - b, 0.0, 1.0);
        }
        int corners = 1 << n;
        double acc = 0.0;
        for (int c = 0; c < corners; ++c) {
            MIdx idx = base;
            double w = 1.0;
            for (int i = 0; i < n; ++i) {
                if (c & (1 << i)) {
                    idx[i] += 1;
                    w *= t[i];
                } else {
                    w *= 1.0 - t[i];
                }
            }
            acc += w * at(idx);
        }
        return acc;
    }
};

template <class F>
GridFunction sample(const GridSpec& g, F&& fn) {
    GridFunction u(g);
    for_each_node(g, [&](std::size_t f, const MIdx& idx) { u.values[f] = fn(g.point(idx)); });
    return u;
}

}  // namespace lmc
