#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace lmc {

inline constexpr int kMaxDim = 4;

// Fixed-capacity point / multi-index; the active dimension travels with GridSpec.
using Vec = std::array<double, kMaxDim>;
using MIdx = std::array<int, kMaxDim>;

struct error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Bad inputs: malformed files, violated preconditions, unknown config keys.
struct validation_error : error {
    using error::error;
};

// Runtime numerics: blow-up, principal-branch exit, failed invertibility.
struct numerical_error : error {
    using error::error;
};

inline double dot(const Vec& a, const Vec& b, int n) {
    double s = 0.0;
    for (int i = 0; i < n; ++i) s += a[i] * b[i];
    return s;
}

inline double norm_sq(const Vec& a, int n) { return dot(a, a, n); }

inline double norm(const Vec& a, int n) { return std::sqrt(norm_sq(a, n)); }

inline double dist(const Vec& a, const Vec& b, int n) {
    double s = 0.0;
    for (int i = 0; i < n; ++i) {
        double d = a[i] - b[i];
        s += d * d;
    }
    return std::sqrt(s);
}

template <class F>
void parallel_for(std::size_t count, int threads, F&& fn) {
    if (threads <= 1 || count < 64) {
        for (std::size_t i = 0; i < count; ++i) fn(i);
        return;
    }
    int nw = std::min<std::size_t>(threads, count);
    std::vector<std::thread> pool;
    pool.reserve(nw);
    std::size_t chunk = (count + nw - 1) / nw;
    for (int w = 0; w < nw; ++w) {
        std::size_t b = w * chunk;
        std::size_t e = std::min(count, b + chunk);
        if (b >= e) break;
        pool.emplace_back([&fn, b, e] {
            for (std::size_t i = b; i < e; ++i) fn(i);
        });
    }
    for (auto& t : pool) t.join();
}

struct LineFit {
    double slope = 0.0;
    double intercept = 0.0;
    double rms = 0.0;  // residual of the fit, same units as y
};

inline LineFit fit_line(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size() || x.size() < 2)
        throw validation_error("fit_line: need at least two points");
    std::size_t n = x.size();
    double mx = 0, my = 0;
    for (std::size_t i = 0; i < n; ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= n;
    my /= n;
    double sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < n; ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
    }
    if (sxx == 0.0) throw validation_error("fit_line: degenerate abscissae");
    LineFit f;
    f.slope = sxy / sxx;
    f.intercept = my - f.slope * mx;
    double r2 = 0;
    for (std::size_t i = 0; i < n; ++i) {
        double e = y[i] - (f.intercept + f.slope * x[i]);
        r2 += e * e;
    }
    f.rms = std::sqrt(r2 / n);
    return f;
}

// In-place LDL^T solve for a small SPD system (row-major). Returns false on a
// non-positive pivot; callers add a ridge and retry.
inline bool solve_spd(std::vector<double>& a, std::vector<double>& b, int n) {
    for (int k = 0; k < n; ++k) {
        double piv = a[k * n + k];
        if (!(piv > 0.0) || !std::isfinite(piv)) return false;
        for (int i = k + 1; i < n; ++i) {
            double f = a[i * n + k] / piv;
            for (int j = k; j < n; ++j) a[i * n + j] -= f * a[k * n + j];
            b[i] -= f * b[k];
        }
    }
    for (int i = n - 1; i >= 0; --i) {
        double s = b[i];
        for (int j = i + 1; j < n; ++j) s -= a[i * n + j] * b[j];
        b[i] = s / a[i * n + i];
    }
    return true;
}

}  // namespace lmc
