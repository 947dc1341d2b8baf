#pragma once

// Diffusion operators B and their (A5)/(A6) diagnostics. The noise space is
// U = L^2(0,1) with basis e~_k = e_k; additive noise B(u) = sum g_k (e~_k, u),
// linear multiplicative noise B(v)(h) = sum mu_k e~_k v (e~_k, h).

#include "gradflow/potential.hpp"
#include "gradflow/projection.hpp"
#include "gradflow/rng.hpp"

namespace gradflow {

enum class NoiseKind { Zero, Additive, LinearMultiplicative };
enum class NoiseProjection { Orthogonal, Weighted };

inline const char* to_string(NoiseKind k) {
    switch (k) {
        case NoiseKind::Zero: return "zero";
        case NoiseKind::Additive: return "additive";
        case NoiseKind::LinearMultiplicative: return "multiplicative";
    }
    return "?";
}

class NoiseOperator {
public:
    static NoiseOperator zero() {
        NoiseOperator B;
        B.kind_ = NoiseKind::Zero;
        B.K_ = 0;
        return B;
    }

    static NoiseOperator additive(std::vector<Field> g,
                                  NoiseProjection proj = NoiseProjection::Weighted) {
        NoiseOperator B;
        B.kind_ = NoiseKind::Additive;
        B.g_ = std::move(g);
        B.K_ = static_cast<int>(B.g_.size());
        B.projection_ = proj;
        return B;
    }

    static NoiseOperator multiplicative(std::vector<double> mu,
                                        NoiseProjection proj = NoiseProjection::Weighted) {
        NoiseOperator B;
        B.kind_ = NoiseKind::LinearMultiplicative;
        B.mu_ = std::move(mu);
        B.K_ = static_cast<int>(B.mu_.size());
        B.projection_ = proj;
        return B;
    }

    /// g_k = amplitude k^{-decay} e_k on the given basis.
    static NoiseOperator additive_powerlaw(const SpectralBasis& basis, int K, double amplitude,
                                           double decay,
                                           NoiseProjection proj = NoiseProjection::Weighted) {
        std::vector<Field> g;
        for (int k = 1; k <= K; ++k)
            g.push_back(Field::mode(basis, k, amplitude * std::pow(k, -decay)));
        return additive(std::move(g), proj);
    }

    /// mu_k = amplitude k^{-decay}.
    static NoiseOperator multiplicative_powerlaw(int K, double amplitude, double decay,
                                                 NoiseProjection proj = NoiseProjection::Weighted) {
        std::vector<double> mu;
        for (int k = 1; k <= K; ++k) mu.push_back(amplitude * std::pow(k, -decay));
        return multiplicative(std::move(mu), proj);
    }

    NoiseKind kind() const { return kind_; }
    int modes() const { return K_; }
    NoiseProjection projection_mode() const { return projection_; }
    const std::vector<double>& mu() const { return mu_; }
    const std::vector<Field>& g() const { return g_; }

    bool is_zero() const { return kind_ == NoiseKind::Zero || K_ == 0; }

    /// B(v)(e~_k), 1-based k. Multiplicative products are formed pointwise at
    /// the quadrature nodes of v's basis and re-analyzed.
    Field apply_mode(const Field& v, int k) const {
        if (k < 1 || k > std::max(K_, 1))
            throw std::invalid_argument("NoiseOperator::apply_mode: mode index out of range");
        switch (kind_) {
            case NoiseKind::Zero: return Field::zero(v.basis());
            case NoiseKind::Additive: return g_[k - 1];
            case NoiseKind::LinearMultiplicative: {
                const SpectralBasis& b = v.basis();
                const Vec& vals = v.values();
                Vec prod(b.n_quad());
                const double s2 = std::sqrt(2.0);
                for (int j = 0; j < b.n_quad(); ++j)
                    prod[j] = mu_[k - 1] * s2 * std::sin(k * pi * b.quad_nodes()[j]) * vals[j];
                return analyze(prod, b);
            }
        }
        return Field::zero(v.basis());
    }

    /// Per-mode integrands projected into the run space H_n (Eq.-(3.2)-style
    /// Galerkin truncation). Modes already in H_n pass through unchanged.
    std::vector<Field> projected_modes(const Field& v, const SpectralBasis& run_basis,
                                       const Potential& potential) const {
        std::vector<Field> out;
        out.reserve(K_);
        for (int k = 1; k <= K_; ++k)
            out.push_back(project_into(apply_mode(v, k), run_basis, potential));
        return out;
    }

    /// sum_k Pi(B(v)(e~_k)) sqrt(dt) zeta_k with zeta_k = stream draw at
    /// (step, k). `prepared` may carry the projected modes (additive noise is
    /// state-independent, so they are computed once by the caller).
    Field sample_increment(const Field& v, double dt, const WienerStream& stream,
                           std::uint64_t step, const Potential& potential,
                           const std::vector<Field>* prepared = nullptr) const {
        if (dt <= 0.0) throw std::invalid_argument("sample_increment: dt must be positive");
        const SpectralBasis& b = v.basis();
        Vec acc = Vec::Zero(b.n_modes());
        if (is_zero()) return Field(b, acc);
        const double sq = std::sqrt(dt);
        for (int k = 1; k <= K_; ++k) {
            const double z = stream.gauss(step, static_cast<std::uint64_t>(k));
            Field mode_field = prepared ? (*prepared)[k - 1]
                                        : project_into(apply_mode(v, k), b, potential);
            acc += (sq * z) * mode_field.coeffs();
        }
        return Field(b, acc);
    }

    /// Empirical (A5) constant: max over sampled pairs of
    /// sum_k |B(v)(e~_k) - B(w)(e~_k)|_H^2 / |v - w|_H^2. Exactly 0 for
    /// additive and zero noise.
    double a5_lipschitz_estimate(const SpectralBasis& basis, SpaceTag tag, int samples,
                                 std::uint64_t seed) const {
        if (samples < 1) throw std::invalid_argument("a5_lipschitz_estimate: samples >= 1");
        if (kind_ != NoiseKind::LinearMultiplicative) return 0.0;
        double worst = 0.0;
        for (int s = 0; s < samples; ++s) {
            WienerStream st{seed, static_cast<std::uint64_t>(s), 1};
            Vec cv(basis.n_modes()), cw(basis.n_modes());
            for (int k = 0; k < basis.n_modes(); ++k) {
                cv[k] = 2.0 * st.uniform(0, k) - 1.0;
                cw[k] = 2.0 * st.uniform(1, k) - 1.0;
            }
            Field v(basis, cv), w(basis, cw);
            const double denom_n = norm(v - w, tag);
            if (denom_n == 0.0) continue;
            double num = 0.0;
            for (int k = 1; k <= K_; ++k) {
                const double d = norm(apply_mode(v, k) - apply_mode(w, k), tag);
                num += d * d;
            }
            worst = std::max(worst, num / (denom_n * denom_n));
        }
        return worst;
    }

    struct A6Report {
        double value = 0.0;  // sum_i (sum_k phi_tilde_1(B(v)(e~_k))^{1/p_i})^{p_i}
        double ratio = 0.0;  // value / (1 + phi(v) + |v|_H^2)
    };

    A6Report a6_norm(const Field& v, const Potential& potential) const {
        A6Report rep;
        if (is_zero()) return rep;
        std::vector<double> per_mode;
        per_mode.reserve(K_);
        for (int k = 1; k <= K_; ++k) per_mode.push_back(potential.phi_tilde1(apply_mode(v, k)));
        for (double p : potential.p_exponents()) {
            double inner_sum = 0.0;
            for (double x : per_mode) inner_sum += std::pow(x, 1.0 / p);
            rep.value += std::pow(inner_sum, p);
        }
        const double nh = norm(v, potential.h_tag());
        rep.ratio = rep.value / (1.0 + potential.eval_phi(v) + nh * nh);
        return rep;
    }

    /// Size of the K-th term of the family's summability series for
    /// power-law multiplicative coefficients; the presets require it <= tol.
    /// In 1-D |e_k|_inf = sqrt(2), so the uniform eigenfunction bound holds
    /// with a dimension-independent constant.
    double summability_defect(const Potential& potential) const {
        if (kind_ != NoiseKind::LinearMultiplicative || K_ == 0) return 0.0;
        const int k = K_;
        const double mu_abs = std::abs(mu_[k - 1]);
        const double lam = (k * pi) * (k * pi);
        switch (potential.family()) {
            case Family::PorousMedium: {
                const double e = 4.0 / (potential.porous_exponent() + 1.0);
                return std::pow(mu_abs * lam, e);
            }
            case Family::ReactionDiffusion:
            case Family::PLaplace: {
                // lambda_k = |e_k|_inf + |e_k'|_inf, the sup-norm growth of the mode
                const double lk = std::sqrt(2.0) * (1.0 + k * pi);
                double e = 1.0;
                for (double r : potential.p_list()) e = std::min(e, 2.0 / r);  // 4/(2 p_i)
                return std::pow(mu_abs * lk, e);
            }
        }
        return 0.0;
    }

private:
    Field project_into(const Field& f, const SpectralBasis& run_basis,
                       const Potential& potential) const {
        const int n = run_basis.n_modes();
        if (f.basis().n_modes() <= n) {
            // already inside H_n: both projection modes are the identity
            if (&f.basis() == &run_basis) return f;
            Vec c = Vec::Zero(n);
            c.head(f.basis().n_modes()) = f.coeffs();
            return Field(run_basis, c);
        }
        Field proj = (projection_ == NoiseProjection::Weighted)
                         ? project_weighted({f, n, &potential, {}})
                         : project_orthogonal(f, n);
        return Field(run_basis, proj.coeffs().head(n));
    }

    NoiseKind kind_ = NoiseKind::Zero;
    int K_ = 0;
    NoiseProjection projection_ = NoiseProjection::Weighted;
    std::vector<Field> g_;
    std::vector<double> mu_;
};

}  // namespace gradflow
