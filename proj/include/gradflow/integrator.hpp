#pragma once

// Time stepping for the Galerkin SDE: a drift-implicit proximal scheme built
// on the resolvent (I + dt dphi)^{-1}, an explicit Euler-Maruyama cross-check,
// and the Picard fixed-point construction for multiplicative noise.

#include "gradflow/noise.hpp"

namespace gradflow {

enum class Scheme { ProximalEM, ExplicitEM };
enum class InitialProjection { Orthogonal, Weighted, LevelSet };

inline const char* to_string(Scheme s) {
    return s == Scheme::ProximalEM ? "proximal_em" : "explicit_em";
}

struct SchemeConfig {
    Scheme scheme = Scheme::ProximalEM;
    double dt = 1e-2;
    double t_end = 1.0;
    double newton_tol = 1e-10;
    int newton_max = 100;
    std::uint64_t seed = 0;
    InitialProjection initial_projection = InitialProjection::Orthogonal;
    double levelset_level = 1.0;
    double cfl_safety = 0.5;

    int n_steps() const { return static_cast<int>(std::llround(t_end / dt)); }

    std::vector<std::string> validate(const Potential& P, const SpectralBasis& basis) const {
        std::vector<std::string> errs;
        if (dt <= 0.0) errs.push_back("scheme.dt must be positive");
        if (t_end < 0.0) errs.push_back("scheme.t_end must be nonnegative");
        if (scheme == Scheme::ProximalEM && P.lambda_qc() > 0.0 && dt >= 1.0 / P.lambda_qc())
            errs.push_back("proximal_em requires dt < 1/lambda_qc = " +
                           std::to_string(1.0 / P.lambda_qc()) +
                           " so the per-step objective stays strictly convex");
        if (scheme == Scheme::ExplicitEM) {
            const double lam_max = basis.eigenvalue(basis.n_modes() - 1);
            if (dt > cfl_safety / lam_max)
                errs.push_back("explicit_em requires dt <= cfl_safety/lambda_max = " +
                               std::to_string(cfl_safety / lam_max));
        }
        return errs;
    }
};

struct PathSolution {
    std::vector<double> times;
    std::vector<Field> states;
    std::vector<double> energies;          // phi(X_t)
    std::vector<double> subgrad_h_norms;   // |dphi(X_t)|_H
    std::uint64_t increments_consumed = 0;
};

class DivergedPathError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Resolvent step: argmin_z phi(z) + |z - w|_H^2 / (2 dt) over H_n. Linear
/// diagonal drift short-circuits to the scalar resolvent c_k / (1 + dt l_k);
/// otherwise damped Newton with a 500-step gradient-descent fallback.
inline Field prox_step(const Potential& P, const Field& w, double dt, double newton_tol = 1e-10,
                       int newton_max = 100) {
    const SpectralBasis& b = w.basis();
    if (P.lambda_qc() > 0.0 && dt >= 1.0 / P.lambda_qc())
        throw std::invalid_argument("prox_step: dt >= 1/lambda_qc");
    if (P.is_linear_diagonal()) {
        Vec c = w.coeffs();
        for (int k = 0; k < b.n_modes(); ++k) c[k] /= 1.0 + dt * b.eigenvalue(k);
        return Field(b, c);
    }
    std::vector<double> hw(b.n_modes());
    for (int k = 0; k < b.n_modes(); ++k) hw[k] = space_weight(P.h_tag(), b.eigenvalue(k));

    auto value = [&](const Vec& c) {
        double dist = 0.0;
        for (int k = 0; k < b.n_modes(); ++k) {
            const double d = c[k] - w.coeffs()[k];
            dist += hw[k] * d * d;
        }
        return P.eval_phi(Field(b, c)) + dist / (2.0 * dt);
    };
    auto grad = [&](const Vec& c) -> Vec {
        Vec g = P.dphi_coeff(Field(b, c));
        for (int k = 0; k < b.n_modes(); ++k) g[k] += hw[k] * (c[k] - w.coeffs()[k]) / dt;
        return g;
    };
    auto hess = [&](const Vec& c) -> Mat {
        Mat H = P.d2phi_coeff(Field(b, c));
        for (int k = 0; k < b.n_modes(); ++k) H(k, k) += hw[k] / dt;
        return H;
    };

    SolverOptions opt;
    opt.tol_grad = newton_tol;
    opt.max_iter = newton_max;
    try {
        return Field(b, detail::minimize_convex(Vec(w.coeffs()), value, grad, hess, opt));
    } catch (const ConvergenceError&) {
        SolverOptions gd;
        gd.method = ConvexSolver::GradientDescent;
        gd.tol_grad = newton_tol;
        gd.max_iter = 500;
        return Field(b, detail::minimize_convex(Vec(w.coeffs()), value, grad, hess, gd));
    }
}

/// One Euler-Maruyama step; the noise is evaluated at the pre-step state
/// (Ito convention).
inline Field step(const Field& state, const Potential& P, const NoiseOperator& B,
                  const SchemeConfig& cfg, const WienerStream& stream, std::uint64_t step_index,
                  const std::vector<Field>* prepared_noise = nullptr) {
    Field incr = B.is_zero() ? Field::zero(state.basis())
                             : B.sample_increment(state, cfg.dt, stream, step_index, P,
                                                  prepared_noise);
    Field next = Field::zero(state.basis());
    if (cfg.scheme == Scheme::ProximalEM) {
        next = prox_step(P, state + incr, cfg.dt, cfg.newton_tol, cfg.newton_max);
    } else {
        next = state - cfg.dt * P.subgradient(state) + incr;
    }
    if (!next.coeffs().allFinite() || norm(next, P.h_tag()) > 1e12)
        throw DivergedPathError("step: path diverged at step " + std::to_string(step_index));
    return next;
}

/// Project an initial datum (possibly given on a finer mode set) into H_n.
inline Field project_initial(const Field& x0, const SpectralBasis& run_basis, const Potential& P,
                             const SchemeConfig& cfg) {
    const int n = run_basis.n_modes();
    Field in_run = Field::zero(run_basis);
    switch (cfg.initial_projection) {
        case InitialProjection::Orthogonal: {
            Vec c = Vec::Zero(n);
            const int m = std::min<int>(n, x0.basis().n_modes());
            c.head(m) = x0.coeffs().head(m);
            return Field(run_basis, c);
        }
        case InitialProjection::Weighted: {
            const int m = std::min<int>(n, x0.basis().n_modes());
            Field proj = project_weighted({x0, m, &P, {}});
            Vec c = Vec::Zero(n);
            c.head(m) = proj.coeffs().head(m);
            return Field(run_basis, c);
        }
        case InitialProjection::LevelSet: {
            Field proj = project_levelset({x0, cfg.levelset_level, &P});
            // G_n projection happens in the full space; truncate afterwards
            Vec c = Vec::Zero(n);
            const int m = std::min<int>(n, x0.basis().n_modes());
            c.head(m) = proj.coeffs().head(m);
            return Field(run_basis, c);
        }
    }
    return in_run;
}

/// Simulate one path of the Galerkin SDE, recording phi(X_t) and |dphi(X_t)|_H
/// at every node.
inline PathSolution simulate_path(const Field& x0, const Potential& P, const NoiseOperator& B,
                                  const SchemeConfig& cfg, const SpectralBasis& run_basis,
                                  const WienerStream& stream) {
    PathSolution sol;
    Field x = project_initial(x0, run_basis, P, cfg);
    const int n_steps = cfg.n_steps();

    std::vector<Field> prepared;
    const std::vector<Field>* prepared_ptr = nullptr;
    if (B.kind() == NoiseKind::Additive) {
        prepared = B.projected_modes(x, run_basis, P);
        prepared_ptr = &prepared;
    }

    auto record = [&](double t, const Field& f) {
        sol.times.push_back(t);
        sol.energies.push_back(P.eval_phi(f));
        sol.subgrad_h_norms.push_back(norm(P.subgradient(f), P.h_tag()));
        sol.states.push_back(f);
    };
    record(0.0, x);
    for (int j = 0; j < n_steps; ++j) {
        x = step(x, P, B, cfg, stream, static_cast<std::uint64_t>(j), prepared_ptr);
        if (!B.is_zero()) sol.increments_consumed += B.modes();
        record((j + 1) * cfg.dt, x);
    }
    return sol;
}

struct PicardReport {
    int iterations = 0;
    int subdivisions = 0;
    std::vector<double> contraction_ratios;
};

namespace detail {

/// Fixed-point solve on the step range [begin, end): freeze B along the
/// previous iterate (left step endpoints), solve the resulting additive
/// equation on the same Brownian path by a drift-then-kick splitting,
/// repeat. Stalled contraction subdivides the interval (the discrete
/// continuation argument). The splitting makes the fixed point a distinct
/// consistent discretization: it deviates from the direct Ito scheme by an
/// O(dt) pathwise splitting error.
inline std::vector<Field> picard_range(Field x_init, const Potential& P, const NoiseOperator& B,
                                       const SchemeConfig& cfg, const WienerStream& stream,
                                       int begin, int end, double tol, int max_iter,
                                       PicardReport& report, int depth) {
    const SpectralBasis& b = x_init.basis();
    const int len = end - begin;
    // initial guess: drift-only path
    std::vector<Field> prev;
    prev.reserve(len);
    {
        Field x = x_init;
        for (int j = 0; j < len; ++j) {
            x = prox_step(P, x, cfg.dt, cfg.newton_tol, cfg.newton_max);
            prev.push_back(x);
        }
    }
    double last_dist = std::numeric_limits<double>::infinity();
    for (int it = 0; it < max_iter; ++it) {
        std::vector<Field> cur;
        cur.reserve(len);
        Field x = x_init;
        for (int j = 0; j < len; ++j) {
            const Field& frozen_state = j == 0 ? x_init : prev[j - 1];
            Field incr = B.sample_increment(frozen_state, cfg.dt, stream,
                                            static_cast<std::uint64_t>(begin + j), P);
            x = prox_step(P, x, cfg.dt, cfg.newton_tol, cfg.newton_max) + incr;
            if (!x.coeffs().allFinite() || norm(x, P.h_tag()) > 1e12)
                throw DivergedPathError("picard_solve: path diverged at step " +
                                        std::to_string(begin + j));
            cur.push_back(x);
        }
        double dist = 0.0;
        for (int j = 0; j < len; ++j) dist = std::max(dist, norm(cur[j] - prev[j], P.h_tag()));
        ++report.iterations;
        if (last_dist < std::numeric_limits<double>::infinity() && last_dist > 0.0)
            report.contraction_ratios.push_back(dist / last_dist);
        prev = std::move(cur);
        if (dist <= tol) return prev;
        const bool stalled = !report.contraction_ratios.empty() &&
                             report.contraction_ratios.back() >= 1.0 && it >= 2;
        if (stalled || it == max_iter - 1) {
            if (len <= 1 || depth > 20)
                throw ConvergenceError("picard_solve: contraction stalled", dist, prev.back().coeffs());
            ++report.subdivisions;
            const int mid = begin + len / 2;
            std::vector<Field> left = picard_range(x_init, P, B, cfg, stream, begin, mid, tol,
                                                   max_iter, report, depth + 1);
            std::vector<Field> right = picard_range(left.back(), P, B, cfg, stream, mid, end, tol,
                                                    max_iter, report, depth + 1);
            left.insert(left.end(), right.begin(), right.end());
            return left;
        }
        last_dist = dist;
    }
    return prev;
}

}  // namespace detail

/// Banach fixed-point construction: solve the additive-noise equation with
/// B frozen along the previous iterate, on a fixed Brownian path, until the
/// sup-in-time H-distance falls below picard_tol. Additive noise converges in
/// one iteration since the map does not depend on the iterate.
inline PathSolution picard_solve(const Field& x0, const Potential& P, const NoiseOperator& B,
                                 const SchemeConfig& cfg, const SpectralBasis& run_basis,
                                 const WienerStream& stream, double picard_tol = 1e-10,
                                 int picard_max = 50, PicardReport* report_out = nullptr) {
    PicardReport report;
    if (B.kind() != NoiseKind::LinearMultiplicative) {
        PathSolution sol = simulate_path(x0, P, B, cfg, run_basis, stream);
        report.iterations = 1;
        if (report_out) *report_out = report;
        return sol;
    }
    Field x = project_initial(x0, run_basis, P, cfg);
    const int n_steps = cfg.n_steps();
    std::vector<Field> states = detail::picard_range(x, P, B, cfg, stream, 0, n_steps, picard_tol,
                                                     picard_max, report, 0);
    PathSolution sol;
    auto record = [&](double t, const Field& f) {
        sol.times.push_back(t);
        sol.energies.push_back(P.eval_phi(f));
        sol.subgrad_h_norms.push_back(norm(P.subgradient(f), P.h_tag()));
        sol.states.push_back(f);
    };
    record(0.0, x);
    for (int j = 0; j < n_steps; ++j) record((j + 1) * cfg.dt, states[j]);
    sol.increments_consumed = static_cast<std::uint64_t>(n_steps) * B.modes();
    if (report_out) *report_out = report;
    return sol;
}

/// CSV dump: t, energy, subgrad_h_norm [, coeff_1..coeff_n].
inline std::string path_csv(const PathSolution& sol, bool full_state = false) {
    std::ostringstream os;
    os.precision(17);
    os << "t,energy,subgrad_h_norm";
    if (full_state && !sol.states.empty())
        for (int k = 1; k <= sol.states.front().basis().n_modes(); ++k) os << ",coeff_" << k;
    os << '\n';
    for (std::size_t i = 0; i < sol.times.size(); ++i) {
        os << sol.times[i] << ',' << sol.energies[i] << ',' << sol.subgrad_h_norms[i];
        if (full_state)
            for (int k = 0; k < sol.states[i].basis().n_modes(); ++k)
                os << ',' << sol.states[i].coeffs()[k];
        os << '\n';
    }
    return os.str();
}

}  // namespace gradflow
