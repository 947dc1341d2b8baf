#pragma once

// The energy functionals driving dX = -dphi(X) dt + B dW for the three
// equation families, together with their comparison functionals, subgradients,
// Hessian forms and executable assumption diagnostics.

#include "gradflow/spectral.hpp"

#include <algorithm>
#include <functional>
#include <set>
#include <utility>

namespace gradflow {

enum class Family { PorousMedium, ReactionDiffusion, PLaplace };

inline const char* to_string(Family f) {
    switch (f) {
        case Family::PorousMedium: return "porous_medium";
        case Family::ReactionDiffusion: return "reaction_diffusion";
        case Family::PLaplace: return "p_laplace";
    }
    return "?";
}

using ScalarFn = std::function<double(double)>;

/// Nonlinearity of the porous-medium drift L Phi(X). Default is the power law
/// Phi(r) = |r|^{p-1} r with antiderivative Psi(r) = |r|^{p+1}/(p+1).
struct PorousMediumParams {
    double p = 2.0;
    ScalarFn phi;    // Phi, with Phi(0) = 0
    ScalarFn dphi;   // Phi'
    ScalarFn psi;    // antiderivative of Phi

    static PorousMediumParams power_law(double p) {
        PorousMediumParams out;
        out.p = p;
        out.phi = [p](double r) { return std::pow(std::abs(r), p - 1.0) * r; };
        out.dphi = [p](double r) { return p * std::pow(std::abs(r), p - 1.0); };
        out.psi = [p](double r) { return std::pow(std::abs(r), p + 1.0) / (p + 1.0); };
        return out;
    }
};

/// One reaction term f with antiderivative F, growth order r and sup f'.
struct ReactionTerm {
    ScalarFn f;
    ScalarFn df;
    ScalarFn F;
    double r = 2.0;       // growth order, r >= 2
    double df_sup = 0.0;  // upper bound on f' (enters lambda_qc)

    /// f(t) = t - t^3, the classic bistable term; r = 4, f' <= 1.
    static ReactionTerm allen_cahn() {
        ReactionTerm t;
        t.f = [](double s) { return s - s * s * s; };
        t.df = [](double s) { return 1.0 - 3.0 * s * s; };
        t.F = [](double s) { return 0.5 * s * s - 0.25 * s * s * s * s; };
        t.r = 4.0;
        t.df_sup = 1.0;
        return t;
    }

    /// f(t) = -t^3 (convex energy); r = 4, f' <= 0.
    static ReactionTerm cubic_decay() {
        ReactionTerm t;
        t.f = [](double s) { return -s * s * s; };
        t.df = [](double s) { return -3.0 * s * s; };
        t.F = [](double s) { return -0.25 * s * s * s * s; };
        t.r = 4.0;
        t.df_sup = 0.0;
        return t;
    }
};

/// Gradient nonlinearity of the p-Laplace drift div Phi(grad X), Phi = Psi'.
/// Default Psi(x) = |x|^m / m.
struct PLaplaceParams {
    double m = 2.0;
    ScalarFn psi;    // convex Psi with Psi'(0) = 0
    ScalarFn phi;    // Psi'
    ScalarFn d2psi;  // Psi''

    static PLaplaceParams power_law(double m) {
        PLaplaceParams out;
        out.m = m;
        out.psi = [m](double x) { return std::pow(std::abs(x), m) / m; };
        out.phi = [m](double x) { return std::pow(std::abs(x), m - 1.0) * (x < 0 ? -1.0 : (x > 0 ? 1.0 : 0.0)); };
        out.d2psi = [m](double x) { return (m - 1.0) * std::pow(std::abs(x), m - 2.0); };
        return out;
    }
};

struct A2Report {
    double lhs = 0.0;
    double rhs = 0.0;
    double constant = 0.0;  // lhs / rhs
};

struct CoercivityReport {
    double pairing = 0.0;        // 2 <-Dphi(v), v>
    double bound_a4 = 0.0;       // pairing / (1 + |v|_H^2)
    double bound_a4prime = 0.0;  // (pairing + C1 phi(v)) / (1 + |v|_H^2)
};

class Potential {
public:
    static Potential porous_medium(double p) {
        Potential P;
        P.family_ = Family::PorousMedium;
        P.pm_ = PorousMediumParams::power_law(p);
        P.h_tag_ = SpaceTag::Hminus1;
        P.lambda_qc_ = 0.0;
        P.p_list_ = {(p + 1.0) / 2.0};
        P.homogeneity_degrees_ = {p + 1.0};
        return P;
    }

    static Potential porous_medium(PorousMediumParams params) {
        Potential P = porous_medium(params.p);
        P.pm_ = std::move(params);
        return P;
    }

    static Potential reaction_diffusion(std::vector<ReactionTerm> terms = {}) {
        Potential P;
        P.family_ = Family::ReactionDiffusion;
        P.reactions_ = std::move(terms);
        P.h_tag_ = SpaceTag::L2;
        P.lambda_qc_ = 0.0;
        P.homogeneity_degrees_ = {2.0};
        for (const auto& t : P.reactions_) {
            P.lambda_qc_ = std::max(P.lambda_qc_, t.df_sup);
            P.p_list_.push_back(t.r / 2.0);
            P.homogeneity_degrees_.push_back(t.r);
        }
        if (P.p_list_.empty()) P.p_list_ = {1.0};
        return P;
    }

    static Potential p_laplace(double m, std::vector<ReactionTerm> terms = {}) {
        Potential P;
        P.family_ = Family::PLaplace;
        P.pl_ = PLaplaceParams::power_law(m);
        P.reactions_ = std::move(terms);
        P.h_tag_ = SpaceTag::L2;
        P.lambda_qc_ = 0.0;
        P.p_list_ = {m / 2.0};
        P.homogeneity_degrees_ = {m};
        for (const auto& t : P.reactions_) {
            P.lambda_qc_ = std::max(P.lambda_qc_, t.df_sup);
            P.p_list_.push_back(t.r / 2.0);
            P.homogeneity_degrees_.push_back(t.r);
        }
        return P;
    }

    Family family() const { return family_; }
    SpaceTag h_tag() const { return h_tag_; }
    double lambda_qc() const { return lambda_qc_; }
    const std::vector<double>& p_list() const { return p_list_; }
    const std::vector<ReactionTerm>& reactions() const { return reactions_; }
    double porous_exponent() const { return pm_.p; }
    double plaplace_exponent() const { return pl_.m; }

    /// Max homogeneity degree of the summands of phi_tilde_1 (>= 2, the
    /// quadratic part); gives the subhomogeneity constant 2^d_max.
    double d_max() const {
        double d = 2.0;
        for (double h : homogeneity_degrees_) d = std::max(d, h);
        return d;
    }

    /// Exponents {p_0 = 1} u {p_i} of (A2)/(A6), deduplicated.
    std::vector<double> p_exponents() const {
        std::set<double> s{1.0};
        s.insert(p_list_.begin(), p_list_.end());
        return {s.begin(), s.end()};
    }

    /// True when phi is the pure Dirichlet form (linear drift, diagonal in the
    /// sine basis); used for exact scalar-resolvent shortcuts.
    bool is_linear_diagonal() const {
        return family_ == Family::ReactionDiffusion && reactions_.empty();
    }

    /// True when phi_tilde_1 is a diagonal quadratic in the sine basis.
    bool phi_tilde_is_quadratic() const {
        if (family_ != Family::ReactionDiffusion) return false;
        return std::all_of(reactions_.begin(), reactions_.end(),
                           [](const ReactionTerm& t) { return t.r == 2.0; });
    }

    /// Diagnostics worth surfacing in reports (e.g. nonsmooth Hessian for p < 2).
    std::vector<std::string> flags() const {
        std::vector<std::string> out;
        if (family_ == Family::PorousMedium && pm_.p < 2.0)
            out.push_back("p < 2: Phi' is only Holder continuous at 0; Hessian values at sign changes are one-sided");
        if (family_ == Family::PLaplace && pl_.m < 2.0)
            out.push_back("m < 2: Psi'' unbounded at 0");
        return out;
    }

    double eval_phi(const Field& v) const {
        const SpectralBasis& b = v.basis();
        switch (family_) {
            case Family::PorousMedium: {
                const Vec& vals = v.values();
                double s = 0.0;
                for (int j = 0; j < b.n_quad(); ++j) s += b.quad_weights()[j] * pm_.psi(vals[j]);
                check_finite(s, "eval_phi");
                return s;
            }
            case Family::ReactionDiffusion: {
                double s = dirichlet_form(v);
                s -= reaction_integral(v, &ReactionTerm::F);
                check_finite(s, "eval_phi");
                return s;
            }
            case Family::PLaplace: {
                const Vec dv = spectral_derivative(v);
                double s = 0.0;
                for (int j = 0; j < b.n_quad(); ++j) s += b.quad_weights()[j] * pl_.psi(dv[j]);
                s -= reaction_integral(v, &ReactionTerm::F);
                check_finite(s, "eval_phi");
                return s;
            }
        }
        return 0.0;
    }

    double eval_phi_tilde(const Field& v) const {
        const SpectralBasis& b = v.basis();
        switch (family_) {
            case Family::PorousMedium: {
                const double q = pm_.p + 1.0;
                return std::pow(lp_norm(v, q), q) / q;
            }
            case Family::ReactionDiffusion: {
                double s = dirichlet_form(v);
                for (const auto& t : reactions_) s += std::pow(lp_norm(v, t.r), t.r);
                return s;
            }
            case Family::PLaplace: {
                const Vec dv = spectral_derivative(v);
                double s = 0.0;
                for (int j = 0; j < b.n_quad(); ++j)
                    s += b.quad_weights()[j] * std::pow(std::abs(dv[j]), pl_.m);
                s /= pl_.m;
                for (const auto& t : reactions_) s += std::pow(lp_norm(v, t.r), t.r);
                return s;
            }
        }
        return 0.0;
    }

    /// phi_tilde_1 = phi_tilde + (1/2)|.|_H^2, the strictly convex weight of
    /// the best-approximation map.
    double phi_tilde1(const Field& v) const {
        const double nh = norm(v, h_tag_);
        return eval_phi_tilde(v) + 0.5 * nh * nh;
    }

    /// Gateaux derivative Dphi(v)(w) as a quadrature pairing.
    double pairing(const Field& v, const Field& w) const {
        return dphi_coeff(v).dot(w.coeffs());
    }

    /// Euclidean coefficient gradient: component k equals Dphi(v)(e_k).
    Vec dphi_coeff(const Field& v) const {
        const SpectralBasis& b = v.basis();
        switch (family_) {
            case Family::PorousMedium: {
                const Vec& vals = v.values();
                Vec g(b.n_quad());
                for (int j = 0; j < b.n_quad(); ++j)
                    g[j] = b.quad_weights()[j] * pm_.phi(vals[j]);
                return b.sin_table().transpose() * g;
            }
            case Family::ReactionDiffusion: {
                Vec g(b.n_modes());
                for (int k = 0; k < b.n_modes(); ++k) g[k] = b.eigenvalue(k) * v.coeffs()[k];
                g -= reaction_coeffs(v);
                return g;
            }
            case Family::PLaplace: {
                const Vec dv = spectral_derivative(v);
                Vec g(b.n_quad());
                for (int j = 0; j < b.n_quad(); ++j)
                    g[j] = b.quad_weights()[j] * pl_.phi(dv[j]);
                Vec out = b.cos_table().transpose() * g;
                out -= reaction_coeffs(v);
                return out;
            }
        }
        return Vec::Zero(b.n_modes());
    }

    /// Euclidean coefficient Hessian: entry (j,k) equals D^2 phi(v)(e_j, e_k).
    Mat d2phi_coeff(const Field& v) const {
        const SpectralBasis& b = v.basis();
        switch (family_) {
            case Family::PorousMedium: {
                const Vec& vals = v.values();
                Vec d(b.n_quad());
                for (int j = 0; j < b.n_quad(); ++j)
                    d[j] = b.quad_weights()[j] * pm_.dphi(vals[j]);
                return weighted_gram(b.sin_table(), d);
            }
            case Family::ReactionDiffusion: {
                Mat H = Mat::Zero(b.n_modes(), b.n_modes());
                for (int k = 0; k < b.n_modes(); ++k) H(k, k) = b.eigenvalue(k);
                if (!reactions_.empty()) H -= weighted_gram(b.sin_table(), reaction_dprime(v));
                return H;
            }
            case Family::PLaplace: {
                const Vec dv = spectral_derivative(v);
                Vec d(b.n_quad());
                for (int j = 0; j < b.n_quad(); ++j)
                    d[j] = b.quad_weights()[j] * pl_.d2psi(dv[j]);
                Mat H = weighted_gram(b.cos_table(), d);
                if (!reactions_.empty()) H -= weighted_gram(b.sin_table(), reaction_dprime(v));
                return H;
            }
        }
        return Mat::Zero(b.n_modes(), b.n_modes());
    }

    /// H-representer of Dphi(v): the Field g with <g, e_k>_H = Dphi(v)(e_k).
    /// For the porous-medium H = F_e^* this is lambda_k (Phi(v))_k in L^2
    /// coefficients, i.e. -Delta Phi(v).
    Field subgradient(const Field& v) const {
        Vec g = dphi_coeff(v);
        for (int k = 0; k < v.basis().n_modes(); ++k)
            g[k] /= space_weight(h_tag_, v.basis().eigenvalue(k));
        return Field(v.basis(), g);
    }

    /// D^2 phi(v)(w, w).
    double hessian_qform(const Field& v, const Field& w) const {
        return w.coeffs().dot(d2phi_coeff(v) * w.coeffs());
    }

    /// Coefficient gradient of phi_tilde_1 at v (component k = D phi_tilde_1(v)(e_k)).
    Vec phi_tilde1_grad(const Field& v) const {
        const SpectralBasis& b = v.basis();
        Vec g = Vec::Zero(b.n_modes());
        switch (family_) {
            case Family::PorousMedium: {
                const Vec& vals = v.values();
                Vec q(b.n_quad());
                for (int j = 0; j < b.n_quad(); ++j)
                    q[j] = b.quad_weights()[j] * power_odd(vals[j], pm_.p);
                g = b.sin_table().transpose() * q;
                break;
            }
            case Family::ReactionDiffusion: {
                for (int k = 0; k < b.n_modes(); ++k) g[k] = b.eigenvalue(k) * v.coeffs()[k];
                g += lr_power_coeffs(v);
                break;
            }
            case Family::PLaplace: {
                const Vec dv = spectral_derivative(v);
                Vec q(b.n_quad());
                for (int j = 0; j < b.n_quad(); ++j)
                    q[j] = b.quad_weights()[j] * power_odd(dv[j], pl_.m - 1.0);
                g = b.cos_table().transpose() * q;
                g += lr_power_coeffs(v);
                break;
            }
        }
        for (int k = 0; k < b.n_modes(); ++k)
            g[k] += space_weight(h_tag_, b.eigenvalue(k)) * v.coeffs()[k];
        return g;
    }

    /// Coefficient Hessian of phi_tilde_1 at v.
    Mat phi_tilde1_hess(const Field& v) const {
        const SpectralBasis& b = v.basis();
        Mat H = Mat::Zero(b.n_modes(), b.n_modes());
        switch (family_) {
            case Family::PorousMedium: {
                const Vec& vals = v.values();
                Vec d(b.n_quad());
                for (int j = 0; j < b.n_quad(); ++j)
                    d[j] = b.quad_weights()[j] * pm_.p * std::pow(std::abs(vals[j]), pm_.p - 1.0);
                H = weighted_gram(b.sin_table(), d);
                break;
            }
            case Family::ReactionDiffusion: {
                for (int k = 0; k < b.n_modes(); ++k) H(k, k) = b.eigenvalue(k);
                H += lr_power_hess(v);
                break;
            }
            case Family::PLaplace: {
                const Vec dv = spectral_derivative(v);
                Vec d(b.n_quad());
                for (int j = 0; j < b.n_quad(); ++j)
                    d[j] = b.quad_weights()[j] * (pl_.m - 1.0) *
                           std::pow(std::abs(dv[j]), pl_.m - 2.0);
                H = weighted_gram(b.cos_table(), d);
                H += lr_power_hess(v);
                break;
            }
        }
        for (int k = 0; k < b.n_modes(); ++k)
            H(k, k) += space_weight(h_tag_, b.eigenvalue(k));
        return H;
    }

    /// Ratio diagnostic for the (A2) trace bound.
    A2Report check_a2_bound(const Field& v, const std::vector<Field>& ws) const {
        A2Report rep;
        for (const auto& w : ws) rep.lhs += hessian_qform(v, w);
        rep.rhs = 1.0 + eval_phi(v);
        for (double pi_exp : p_exponents()) {
            double inner_sum = 0.0;
            for (const auto& w : ws) inner_sum += std::pow(phi_tilde1(w), 1.0 / pi_exp);
            rep.rhs += std::pow(inner_sum, pi_exp);
        }
        rep.constant = ws.empty() ? 0.0 : rep.lhs / rep.rhs;
        return rep;
    }

    /// (A4)/(A4') ratio diagnostics; pairing = 2 <-Dphi(v), v>.
    CoercivityReport check_coercivity(const Field& v, double c1 = 1.0) const {
        CoercivityReport rep;
        rep.pairing = -2.0 * pairing(v, v);
        const double nh = norm(v, h_tag_);
        rep.bound_a4 = rep.pairing / (1.0 + nh * nh);
        rep.bound_a4prime = (rep.pairing + c1 * eval_phi(v)) / (1.0 + nh * nh);
        return rep;
    }

private:
    static void check_finite(double x, const char* where) {
        if (!std::isfinite(x)) throw std::runtime_error(std::string(where) + ": diverged energy");
    }

    static double power_odd(double x, double q) {
        // |x|^{q-1} x
        return std::pow(std::abs(x), q - 1.0) * x;
    }

    static Mat weighted_gram(const Mat& table, const Vec& diag) {
        // table^T * diag * table; diag already carries the quadrature weights
        return table.transpose() * diag.asDiagonal() * table;
    }

    double dirichlet_form(const Field& v) const {
        double s = 0.0;
        for (int k = 0; k < v.basis().n_modes(); ++k)
            s += v.basis().eigenvalue(k) * v.coeffs()[k] * v.coeffs()[k];
        return 0.5 * s;
    }

    double reaction_integral(const Field& v, ScalarFn ReactionTerm::* member) const {
        if (reactions_.empty()) return 0.0;
        const SpectralBasis& b = v.basis();
        const Vec& vals = v.values();
        double s = 0.0;
        for (const auto& t : reactions_)
            for (int j = 0; j < b.n_quad(); ++j)
                s += b.quad_weights()[j] * (t.*member)(vals[j]);
        return s;
    }

    /// Coefficients of sum_i f_i(v) in the sine basis.
    Vec reaction_coeffs(const Field& v) const {
        const SpectralBasis& b = v.basis();
        if (reactions_.empty()) return Vec::Zero(b.n_modes());
        const Vec& vals = v.values();
        Vec q = Vec::Zero(b.n_quad());
        for (const auto& t : reactions_)
            for (int j = 0; j < b.n_quad(); ++j)
                q[j] += b.quad_weights()[j] * t.f(vals[j]);
        return b.sin_table().transpose() * q;
    }

    /// Quadrature diagonal of sum_i f_i'(v), including weights.
    Vec reaction_dprime(const Field& v) const {
        const SpectralBasis& b = v.basis();
        const Vec& vals = v.values();
        Vec d = Vec::Zero(b.n_quad());
        for (const auto& t : reactions_)
            for (int j = 0; j < b.n_quad(); ++j)
                d[j] += b.quad_weights()[j] * t.df(vals[j]);
        return d;
    }

    /// Coefficient gradient of sum_i int |v|^{r_i}.
    Vec lr_power_coeffs(const Field& v) const {
        const SpectralBasis& b = v.basis();
        if (reactions_.empty()) return Vec::Zero(b.n_modes());
        const Vec& vals = v.values();
        Vec q = Vec::Zero(b.n_quad());
        for (const auto& t : reactions_)
            for (int j = 0; j < b.n_quad(); ++j)
                q[j] += b.quad_weights()[j] * t.r * power_odd(vals[j], t.r - 1.0);
        return b.sin_table().transpose() * q;
    }

    Mat lr_power_hess(const Field& v) const {
        const SpectralBasis& b = v.basis();
        if (reactions_.empty()) return Mat::Zero(b.n_modes(), b.n_modes());
        const Vec& vals = v.values();
        Vec d = Vec::Zero(b.n_quad());
        for (const auto& t : reactions_)
            for (int j = 0; j < b.n_quad(); ++j)
                d[j] += b.quad_weights()[j] * t.r * (t.r - 1.0) *
                        std::pow(std::abs(vals[j]), t.r - 2.0);
        return weighted_gram(b.sin_table(), d);
    }

    Family family_ = Family::ReactionDiffusion;
    PorousMediumParams pm_;
    PLaplaceParams pl_;
    std::vector<ReactionTerm> reactions_;
    SpaceTag h_tag_ = SpaceTag::L2;
    double lambda_qc_ = 0.0;
    std::vector<double> p_list_;
    std::vector<double> homogeneity_degrees_;
};

}  // namespace gradflow
