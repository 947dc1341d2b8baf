#pragma once

// Independent reference computations for the tests: high-resolution
// quadrature, finite differences, brute-force minimizers and the exact heat
// semigroup. Deliberately naive; correctness over speed.

#include <gradflow/estimator.hpp>

#include <functional>

namespace oracles {

using gradflow::Field;
using gradflow::SpectralBasis;
using gradflow::Vec;

/// Midpoint integral of fn over (0,1) with many nodes.
inline double integrate(const std::function<double(double)>& fn, int n = 1 << 16) {
    double s = 0.0;
    const double h = 1.0 / n;
    for (int j = 0; j < n; ++j) s += fn((j + 0.5) * h);
    return s * h;
}

/// Central-difference gradient of a scalar function of the coefficients.
inline Vec fd_gradient(const std::function<double(const Vec&)>& fn, const Vec& x,
                       double h = 1e-6) {
    Vec g(x.size());
    for (int i = 0; i < x.size(); ++i) {
        Vec xp = x, xm = x;
        xp[i] += h;
        xm[i] -= h;
        g[i] = (fn(xp) - fn(xm)) / (2.0 * h);
    }
    return g;
}

/// Second central difference of fn along direction w.
inline double fd_second_directional(const std::function<double(const Vec&)>& fn, const Vec& x,
                                    const Vec& w, double h = 1e-4) {
    return (fn(x + h * w) - 2.0 * fn(x) + fn(x - h * w)) / (h * h);
}

/// Exact sine coefficients of the heat semigroup e^{t Laplace} x0.
inline Vec heat_semigroup(const Vec& c0, const SpectralBasis& basis, double t) {
    Vec c = c0;
    for (int k = 0; k < basis.n_modes(); ++k) c[k] *= std::exp(-basis.eigenvalue(k) * t);
    return c;
}

/// Exact value of int_0^T t |dphi(e^{t Laplace} x0)|_{L^2}^2 dt for the linear
/// heat flow: sum_k c_k^2 lambda_k^2 int_0^T t e^{-2 lambda_k t} dt.
inline double heat_regularity_integral(const Vec& c0, const SpectralBasis& basis, double T) {
    double s = 0.0;
    for (int k = 0; k < basis.n_modes(); ++k) {
        const double lam = basis.eigenvalue(k);
        // int_0^T t e^{-2 lam t} dt = (1 - (1 + 2 lam T) e^{-2 lam T}) / (4 lam^2)
        const double I = (1.0 - (1.0 + 2.0 * lam * T) * std::exp(-2.0 * lam * T)) /
                         (4.0 * lam * lam);
        s += c0[k] * c0[k] * lam * lam * I;
    }
    return s;
}

/// Deterministic pseudo-random field with coefficients in [-scale, scale].
inline Field random_field(const SpectralBasis& basis, std::uint64_t seed, int index,
                          double scale = 1.0) {
    gradflow::WienerStream st{seed, static_cast<std::uint64_t>(index), 1};
    Vec c(basis.n_modes());
    for (int k = 0; k < basis.n_modes(); ++k) c[k] = scale * (2.0 * st.uniform(11, k) - 1.0);
    return Field(basis, c);
}

/// Brute-force 1-D minimizer of fn over [lo, hi]: coarse scan plus ternary
/// refinement.
inline double argmin_scan(const std::function<double(double)>& fn, double lo, double hi,
                          int coarse = 2000) {
    double best_x = lo, best_v = fn(lo);
    for (int i = 1; i <= coarse; ++i) {
        const double x = lo + (hi - lo) * i / coarse;
        const double v = fn(x);
        if (v < best_v) {
            best_v = v;
            best_x = x;
        }
    }
    double a = std::max(lo, best_x - (hi - lo) / coarse);
    double b = std::min(hi, best_x + (hi - lo) / coarse);
    for (int it = 0; it < 200; ++it) {
        const double m1 = a + (b - a) / 3.0, m2 = b - (b - a) / 3.0;
        if (fn(m1) < fn(m2))
            b = m2;
        else
            a = m1;
    }
    return 0.5 * (a + b);
}

}  // namespace oracles
