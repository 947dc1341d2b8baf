#pragma once

// Dirichlet sine discretization of (0,1): basis e_k(x) = sqrt(2) sin(k pi x),
// midpoint collocation, and the L^2 / H^{-1} / H^1_0 norms used everywhere else.

#include <Eigen/Dense>
#include <cmath>
#include <numbers>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace gradflow {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

inline constexpr double pi = std::numbers::pi;

/// Which inner product "H" means for a given equation family.
enum class SpaceTag { L2, Hminus1, H1zero };

inline const char* to_string(SpaceTag tag) {
    switch (tag) {
        case SpaceTag::L2: return "L2";
        case SpaceTag::Hminus1: return "Hminus1";
        case SpaceTag::H1zero: return "H1zero";
    }
    return "?";
}

/// Spectral weight of mode k in the H-inner product: <e_k,e_k>_H.
inline double space_weight(SpaceTag tag, double eigenvalue) {
    switch (tag) {
        case SpaceTag::L2: return 1.0;
        case SpaceTag::Hminus1: return 1.0 / eigenvalue;
        case SpaceTag::H1zero: return eigenvalue;
    }
    return 1.0;
}

class SpectralBasis {
public:
    /// n_quad defaults to dealias_factor * n_modes (composite midpoint rule).
    explicit SpectralBasis(int n_modes, int n_quad = 0, int dealias_factor = 4)
        : n_modes_(n_modes), n_quad_(n_quad > 0 ? n_quad : dealias_factor * n_modes) {
        if (n_modes_ < 1) throw std::invalid_argument("SpectralBasis: n_modes must be positive");
        if (n_quad_ < n_modes_)
            throw std::invalid_argument("SpectralBasis: n_quad < n_modes would alias every mode");
        eigenvalues_.resize(n_modes_);
        for (int k = 0; k < n_modes_; ++k) {
            const double kpi = (k + 1) * pi;
            eigenvalues_[k] = kpi * kpi;
        }
        quad_nodes_.resize(n_quad_);
        quad_weights_.resize(n_quad_);
        const double h = 1.0 / n_quad_;
        for (int j = 0; j < n_quad_; ++j) {
            quad_nodes_[j] = (j + 0.5) * h;
            quad_weights_[j] = h;
        }
        sin_table_.resize(n_quad_, n_modes_);
        cos_table_.resize(n_quad_, n_modes_);
        const double s2 = std::sqrt(2.0);
        for (int k = 0; k < n_modes_; ++k) {
            const double kpi = (k + 1) * pi;
            for (int j = 0; j < n_quad_; ++j) {
                sin_table_(j, k) = s2 * std::sin(kpi * quad_nodes_[j]);
                cos_table_(j, k) = s2 * kpi * std::cos(kpi * quad_nodes_[j]);
            }
        }
    }

    int n_modes() const { return n_modes_; }
    int n_quad() const { return n_quad_; }
    double eigenvalue(int k) const { return eigenvalues_[k]; }  // lambda_{k+1} = ((k+1)pi)^2
    const std::vector<double>& eigenvalues() const { return eigenvalues_; }
    const std::vector<double>& quad_nodes() const { return quad_nodes_; }
    const std::vector<double>& quad_weights() const { return quad_weights_; }
    /// sin_table(j,k) = sqrt(2) sin((k+1) pi x_j)
    const Mat& sin_table() const { return sin_table_; }
    /// cos_table(j,k) = sqrt(2) (k+1) pi cos((k+1) pi x_j), i.e. e_k'(x_j)
    const Mat& cos_table() const { return cos_table_; }

private:
    int n_modes_;
    int n_quad_;
    std::vector<double> eigenvalues_;
    std::vector<double> quad_nodes_, quad_weights_;
    Mat sin_table_, cos_table_;
};

/// A function on (0,1) held as sine coefficients; collocation values cached on request.
class Field {
public:
    Field(const SpectralBasis& basis, Vec coeffs)
        : basis_(&basis), coeffs_(std::move(coeffs)) {
        if (coeffs_.size() != basis.n_modes())
            throw std::invalid_argument("Field: coefficient count does not match basis");
    }

    static Field zero(const SpectralBasis& basis) {
        return Field(basis, Vec::Zero(basis.n_modes()));
    }

    /// Unit coefficient on mode k (1-based, matching e_k).
    static Field mode(const SpectralBasis& basis, int k, double amplitude = 1.0) {
        if (k < 1 || k > basis.n_modes())
            throw std::invalid_argument("Field::mode: mode index out of range");
        Vec c = Vec::Zero(basis.n_modes());
        c[k - 1] = amplitude;
        return Field(basis, c);
    }

    const SpectralBasis& basis() const { return *basis_; }
    const Vec& coeffs() const { return coeffs_; }
    double coeff(int k) const { return coeffs_[k - 1]; }  // 1-based

    /// Collocation values at the quadrature nodes, computed once per Field.
    const Vec& values() const {
        if (!values_) values_ = basis_->sin_table() * coeffs_;
        return *values_;
    }

private:
    const SpectralBasis* basis_;
    Vec coeffs_;
    mutable std::optional<Vec> values_;
};

/// values[j] = sum_k c_k sqrt(2) sin(k pi x_j).
inline Vec synthesize(const Field& f) { return f.basis().sin_table() * f.coeffs(); }

/// Quadrature projection onto the sine modes: c_k = sum_j w_j values[j] e_k(x_j).
inline Field analyze(const Vec& values, const SpectralBasis& basis) {
    if (values.size() != basis.n_quad())
        throw std::invalid_argument("analyze: value count does not match n_quad");
    Vec weighted = values;
    for (int j = 0; j < basis.n_quad(); ++j) weighted[j] *= basis.quad_weights()[j];
    return Field(basis, basis.sin_table().transpose() * weighted);
}

inline double norm(const Field& f, SpaceTag tag) {
    double s = 0.0;
    for (int k = 0; k < f.basis().n_modes(); ++k) {
        const double c = f.coeffs()[k];
        s += space_weight(tag, f.basis().eigenvalue(k)) * c * c;
    }
    return std::sqrt(s);
}

inline double inner(const Field& f, const Field& g, SpaceTag tag) {
    double s = 0.0;
    for (int k = 0; k < f.basis().n_modes(); ++k)
        s += space_weight(tag, f.basis().eigenvalue(k)) * f.coeffs()[k] * g.coeffs()[k];
    return s;
}

/// Quadrature approximation of the L^q norm on (0,1).
inline double lp_norm(const Field& f, double q) {
    if (q < 1.0) throw std::invalid_argument("lp_norm: q must be >= 1");
    const Vec& v = f.values();
    double s = 0.0;
    for (int j = 0; j < f.basis().n_quad(); ++j)
        s += f.basis().quad_weights()[j] * std::pow(std::abs(v[j]), q);
    return std::pow(s, 1.0 / q);
}

/// f'(x_j), term-by-term differentiation of the sine series.
inline Vec spectral_derivative(const Field& f) { return f.basis().cos_table() * f.coeffs(); }

///// Galerkin representation of div g from nodal values of g, via integration by
/// parts: coefficient d_k = -int_0^1 g(x) sqrt(2) k pi cos(k pi x) dx, so that
/// weak_divergence(spectral_derivative(f)) = -lambda .* f for band-limited f.
inline Field weak_divergence(const Vec& g, const SpectralBasis& basis) {
    if (g.size() != basis.n_quad())
        throw std::invalid_argument("weak_divergence: value count does not match n_quad");
    Vec weighted = g;
    for (int j = 0; j < basis.n_quad(); ++j) weighted[j] *= basis.quad_weights()[j];
    return Field(basis, -(basis.cos_table().transpose() * weighted));
}

/// Embed a field in a basis with at least as many modes (same quadrature family).
inline Field embed(const Field& f, const SpectralBasis& fine) {
    if (fine.n_modes() < f.basis().n_modes())
        throw std::invalid_argument("embed: target basis has fewer modes");
    Vec c = Vec::Zero(fine.n_modes());
    c.head(f.basis().n_modes()) = f.coeffs();
    return Field(fine, c);
}

inline Field operator+(const Field& a, const Field& b) {
    return Field(a.basis(), a.coeffs() + b.coeffs());
}
inline Field operator-(const Field& a, const Field& b) {
    return Field(a.basis(), a.coeffs() - b.coeffs());
}
inline Field operator*(double s, const Field& a) { return Field(a.basis(), s * a.coeffs()); }

}  // namespace gradflow
