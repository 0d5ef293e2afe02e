#pragma once

#include "lmc/grid.hpp"
#include "lmc/matrix.hpp"

namespace lmc {

namespace detail {
inline void require_interior(const GridSpec& g, const MIdx& idx) {
    if (!g.interior(idx, 1)) throw validation_error("index not interior");
}
}  // namespace detail

/// Central difference gradient at an interior node.
inline Vec gradient_central(const GridFunction& u, const MIdx& idx) {
    detail::require_interior(u.spec, idx);
    Vec g{};
    for (int i = 0; i < u.spec.n; ++i) {
        MIdx p = idx, m = idx;
        ++p[i];
        --m[i];
        g[i] = (u.at(p) - u.at(m)) / (2.0 * u.spec.h);
    }
    return g;
}

/// Central difference Hessian: standard second differences on the diagonal,
/// 4-point cross differences off the diagonal.
inline SymmetricMatrix hessian_central(const GridFunction& u, const MIdx& idx) {
    detail::require_interior(u.spec, idx);
    const double h2 = u.spec.h * u.spec.h;
    SymmetricMatrix m(u.spec.n);
    const double uc = u.at(idx);
    for (int i = 0; i < u.spec.n; ++i) {
        MIdx p = idx, q = idx;
        ++p[i];
        --q[i];
        m.set(i, i, (u.at(p) - 2.0 * uc + u.at(q)) / h2);
        for (int j = i + 1; j < u.spec.n; ++j) {
            MIdx pp = idx, pm = idx, mp = idx, mm = idx;
            ++pp[i]; ++pp[j];
            ++pm[i]; --pm[j];
            --mp[i]; ++mp[j];
            --mm[i]; --mm[j];
            m.set(i, j, (u.at(pp) - u.at(pm) - u.at(mp) + u.at(mm)) / (4.0 * h2));
        }
    }
    return m;
}

}  // namespace lmc
