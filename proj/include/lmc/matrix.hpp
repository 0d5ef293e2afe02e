#pragma once

#include <cmath>

#include "lmc/common.hpp"

namespace lmc {

/// n x n symmetric matrix, upper triangle packed row-major.
struct SymmetricMatrix {
    int n = 1;
    std::array<double, 10> a{};  // n(n+1)/2 entries, n <= 4

    SymmetricMatrix() = default;
    explicit SymmetricMatrix(int n_) : n(n_) {
        if (n < 1 || n > kMaxDim) throw validation_error("symmetric matrix: bad dimension");
    }

    static int tri(int n, int i, int j) {
        if (i > j) std::swap(i, j);
        // offset of row i in the packed upper triangle
        return i * n - i * (i - 1) / 2 + (j - i);
    }

    double at(int i, int j) const { return a[tri(n, i, j)]; }
    void set(int i, int j, double v) { a[tri(n, i, j)] = v; }

    bool finite() const {
        int cnt = n * (n + 1) / 2;
        for (int k = 0; k < cnt; ++k)
            if (!std::isfinite(a[k])) return false;
        return true;
    }

    double max_abs() const {
        int cnt = n * (n + 1) / 2;
        double s = 0;
        for (int k = 0; k < cnt; ++k) s = std::max(s, std::fabs(a[k]));
        return s;
    }

    static SymmetricMatrix identity(int n) {
        SymmetricMatrix m(n);
        for (int i = 0; i < n; ++i) m.set(i, i, 1.0);
        return m;
    }
};

inline SymmetricMatrix operator-(const SymmetricMatrix& x) {
    SymmetricMatrix r = x;
    int cnt = x.n * (x.n + 1) / 2;
    for (int k = 0; k < cnt; ++k) r.a[k] = -x.a[k];
    return r;
}

inline SymmetricMatrix operator-(const SymmetricMatrix& x, const SymmetricMatrix& y) {
    SymmetricMatrix r = x;
    int cnt = x.n * (x.n + 1) / 2;
    for (int k = 0; k < cnt; ++k) r.a[k] = x.a[k] - y.a[k];
    return r;
}

inline SymmetricMatrix operator+(const SymmetricMatrix& x, const SymmetricMatrix& y) {
    SymmetricMatrix r = x;
    int cnt = x.n * (x.n + 1) / 2;
    for (int k = 0; k < cnt; ++k) r.a[k] = x.a[k] + y.a[k];
    return r;
}

/// Eigenvalues ascending plus an orthonormal eigenvector matrix
/// (column k of q is the eigenvector for lambda[k], stored row-major).
struct Spectrum {
    int n = 1;
    std::array<double, kMaxDim> lambda{};
    std::array<double, 16> q{};

    double vec(int row, int col) const { return q[row * n + col]; }
};

/// Cyclic Jacobi sweeps until the off-diagonal Frobenius mass is below
/// 1e-12 times the Frobenius norm of the input.
inline Spectrum eigen_sym(const SymmetricMatrix& m) {
    if (!m.finite()) throw validation_error("eigen: non-finite entry");
    const int n = m.n;
    double a[kMaxDim][kMaxDim];
    double v[kMaxDim][kMaxDim];
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            a[i][j] = m.at(i, j);
            v[i][j] = (i == j) ? 1.0 : 0.0;
        }

    double fro = 0.0;
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) fro += a[i][j] * a[i][j];
    fro = std::sqrt(fro);
    const double stop = 1e-12 * fro;

    auto off = [&]() {
        double s = 0.0;
        for (int i = 0; i < n; ++i)
            for (int j = i + 1; j < n; ++j) s += 2.0 * a[i][j] * a[i][j];
        return std::sqrt(s);
    };

    for (int sweep = 0; sweep < 64 && off() > stop; ++sweep) {
        for (int p = 0; p < n - 1; ++p) {
            for (int q = p + 1; q < n; ++q) {
                double apq = a[p][q];
                if (apq == 0.0) continue;
                double tau = (a[q][q] - a[p][p]) / (2.0 * apq);
                double t = (tau >= 0.0 ? 1.0 : -1.0) / (std::fabs(tau) + std::sqrt(1.0 + tau * tau));
                double c = 1.0 / std::sqrt(1.0 + t * t);
                double s = t * c;
                for (int k = 0; k < n; ++k) {
                    double akp = a[k][p], akq = a[k][q];
                    a[k][p] = c * akp - s * akq;
                    a[k][q] = s * akp + c * akq;
                }
                for (int k = 0; k < n; ++k) {
                    double apk = a[p][k], aqk = a[q][k];
                    a[p][k] = c * apk - s * aqk;
                    a[q][k] = s * apk + c * aqk;
                }
                for (int k = 0; k < n; ++k) {
                    double vkp = v[k][p], vkq = v[k][q];
                    v[k][p] = c * vkp - s * vkq;
                    v[k][q] = s * vkp + c * vkq;
                }
            }
        }
    }

    int order[kMaxDim] = {0, 1, 2, 3};
    std::sort(order, order + n, [&](int x, int y) { return a[x][x] < a[y][y]; });

    Spectrum sp;
    sp.n = n;
    for (int k = 0; k < n; ++k) {
        sp.lambda[k] = a[order[k]][order[k]];
        for (int r = 0; r < n; ++r) sp.q[r * n + k] = v[r][order[k]];
    }
    return sp;
}

inline double min_eigenvalue(const SymmetricMatrix& m) { return eigen_sym(m).lambda[0]; }

/// Lagrangian angle of a Hessian sample: sum of principal arctangents of the
/// eigenvalues, valued in (-n*pi/2, n*pi/2).
inline double lagrangian_angle(const SymmetricMatrix& m) {
    Spectrum sp = eigen_sym(m);
    double s = 0.0;
    for (int i = 0; i < m.n; ++i) s += std::atan(sp.lambda[i]);
    return s;
}

}  // namespace lmc
