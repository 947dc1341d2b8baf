#pragma once

// The three projection maps onto H_n: orthogonal truncation, the
// phi_tilde_1-weighted best approximation, and the H-best approximation onto
// the level set G_n = {h : phi_tilde_1(h) <= n}.

#include "gradflow/potential.hpp"

#include <sstream>

namespace gradflow {

class ConvergenceError : public std::runtime_error {
public:
    ConvergenceError(const std::string& what, double residual, Vec last_iterate)
        : std::runtime_error(what), residual(residual), last_iterate(std::move(last_iterate)) {}
    double residual;
    Vec last_iterate;
};

enum class ConvexSolver { Newton, GradientDescent };

struct SolverOptions {
    ConvexSolver method = ConvexSolver::Newton;
    double tol_grad = 1e-10;  // infinity norm of the coefficient-space gradient
    int max_iter = 200;
    double armijo_slope = 1e-4;
    double backtrack = 0.5;
    double levenberg = 1e-8;  // damping added to degenerate Hessians
};

namespace detail {

/// Damped Newton with Armijo backtracking on a smooth convex objective given
/// by value/gradient/Hessian callbacks; falls back to gradient descent steps
/// when the Newton direction fails to descend.
template <typename ValueFn, typename GradFn, typename HessFn>
Vec minimize_convex(Vec x, ValueFn value, GradFn grad, HessFn hess, const SolverOptions& opt) {
    double fx = value(x);
    // The gradient cannot be driven below round-off in value/grad evaluation,
    // so the tolerance and the stall threshold scale with the initial gradient.
    double tol_eff = opt.tol_grad;
    double stall_tol = 0.0;
    for (int it = 0; it < opt.max_iter; ++it) {
        Vec g = grad(x);
        const double gnorm = g.lpNorm<Eigen::Infinity>();
        if (it == 0) {
            const double scale = std::max({1.0, gnorm, std::abs(fx)});
            tol_eff = opt.tol_grad * std::max(1.0, gnorm);
            stall_tol = std::cbrt(std::numeric_limits<double>::epsilon()) * scale;
        }
        if (gnorm <= tol_eff) return x;

        Vec dir;
        if (opt.method == ConvexSolver::Newton) {
            Mat H = hess(x);
            H.diagonal().array() += opt.levenberg;
            Eigen::LDLT<Mat> ldlt(H);
            dir = -ldlt.solve(g);
            // Near the optimum the Newton slope -g.H^{-1}g rounds to zero; only
            // a clearly positive slope signals indefinite curvature.
            const double slope_tol =
                std::numeric_limits<double>::epsilon() * std::max(1.0, std::abs(fx));
            if (ldlt.info() != Eigen::Success || !dir.allFinite() || g.dot(dir) > slope_tol)
                dir = -g;  // degenerate curvature, take the steepest-descent direction
        } else {
            dir = -g;
        }

        const double slope = g.dot(dir);
        double step = 1.0;
        bool accepted = false;
        bool progressed = false;
        for (int ls = 0; ls < 60; ++ls) {
            Vec cand = x + step * dir;
            const double fc = value(cand);
            if (std::isfinite(fc) && fc <= fx + opt.armijo_slope * step * slope) {
                progressed = fc < fx;
                x = std::move(cand);
                fx = fc;
                accepted = true;
                break;
            }
            step *= opt.backtrack;
        }
        // Rounding stall: the line search explored steps down to 2^-60 along a
        // descent direction and found no representable decrease, and the
        // gradient already sits at round-off scale; accept the iterate.
        if ((!accepted || !progressed) && gnorm <= stall_tol) return x;
        if (!accepted)
            throw ConvergenceError("convex solve: line search failed", gnorm, x);
    }
    Vec g_final = grad(x);
    const double gnorm = g_final.lpNorm<Eigen::Infinity>();
    if (gnorm <= std::max(tol_eff, stall_tol)) return x;
    throw ConvergenceError("convex solve: no convergence within max_iter", gnorm, x);
}

}  // namespace detail

struct WeightedProjectionProblem {
    Field target;
    int n;  // subspace dimension
    const Potential* potential;
    SolverOptions solver;
};

struct LevelSetProjectionProblem {
    Field target;
    double level;
    const Potential* potential;
    double dual_tol = 1e-10;
    SolverOptions solver;
};

/// P_n h: coefficient truncation to the first n modes. Correct in every space
/// tag since the sine modes stay orthogonal under all three inner products.
inline Field project_orthogonal(const Field& h, int n) {
    if (n < 1 || n > h.basis().n_modes())
        throw std::invalid_argument("project_orthogonal: n out of range");
    Vec c = h.coeffs();
    c.tail(c.size() - n).setZero();
    return Field(h.basis(), c);
}

/// The phi_tilde_1-best approximation onto H_n: argmin over a in R^n of
/// phi_tilde_1(target - sum a_k e_k). Returned on the target's basis with the
/// tail modes zero.
inline Field project_weighted(const WeightedProjectionProblem& prob) {
    const Field& h = prob.target;
    const SpectralBasis& b = h.basis();
    const int n = prob.n;
    if (n < 1 || n > b.n_modes())
        throw std::invalid_argument("project_weighted: n out of range");
    const Potential& P = *prob.potential;

    auto make_field = [&](const Vec& a) {
        Vec c = Vec::Zero(b.n_modes());
        c.head(n) = a;
        return Field(b, h.coeffs() - c);  // residual target - sum a_k e_k
    };
    auto value = [&](const Vec& a) { return P.phi_tilde1(make_field(a)); };
    auto grad = [&](const Vec& a) -> Vec {
        return -P.phi_tilde1_grad(make_field(a)).head(n);
    };
    auto hess = [&](const Vec& a) -> Mat {
        return P.phi_tilde1_hess(make_field(a)).topLeftCorner(n, n);
    };

    // Warm start at the orthogonal truncation: exact for quadratic phi_tilde_1.
    Vec a0 = h.coeffs().head(n);
    Vec a = detail::minimize_convex(std::move(a0), value, grad, hess, prob.solver);
    Vec c = Vec::Zero(b.n_modes());
    c.head(n) = a;
    return Field(b, c);
}

/// H-best approximation onto G_level = {g : phi_tilde_1(g) <= level}, by
/// bisection on the KKT multiplier of the penalized problem.
inline Field project_levelset(const LevelSetProjectionProblem& prob) {
    if (prob.level <= 0.0) throw std::invalid_argument("project_levelset: level must be positive");
    const Potential& P = *prob.potential;
    const Field& h = prob.target;
    const SpectralBasis& b = h.basis();
    const double tag_weighted = P.phi_tilde1(h);
    if (tag_weighted <= prob.level) return h;

    std::vector<double> w(b.n_modes());
    for (int k = 0; k < b.n_modes(); ++k) w[k] = space_weight(P.h_tag(), b.eigenvalue(k));

    auto solve_inner = [&](double theta) {
        auto value = [&](const Vec& c) {
            double dist = 0.0;
            for (int k = 0; k < b.n_modes(); ++k) {
                const double d = c[k] - h.coeffs()[k];
                dist += w[k] * d * d;
            }
            return dist + theta * P.phi_tilde1(Field(b, c));
        };
        auto grad = [&](const Vec& c) -> Vec {
            Vec g = theta * P.phi_tilde1_grad(Field(b, c));
            for (int k = 0; k < b.n_modes(); ++k) g[k] += 2.0 * w[k] * (c[k] - h.coeffs()[k]);
            return g;
        };
        auto hess = [&](const Vec& c) -> Mat {
            Mat H = theta * P.phi_tilde1_hess(Field(b, c));
            for (int k = 0; k < b.n_modes(); ++k) H(k, k) += 2.0 * w[k];
            return H;
        };
        Vec c = detail::minimize_convex(Vec(h.coeffs()), value, grad, hess, prob.solver);
        return Field(b, c);
    };

    double lo = 0.0, hi = 1.0;
    Field g = solve_inner(hi);
    int doublings = 0;
    while (P.phi_tilde1(g) > prob.level) {
        hi *= 2.0;
        if (++doublings > 80)
            throw std::runtime_error("project_levelset: could not bracket the multiplier");
        g = solve_inner(hi);
    }
    // phi_tilde_1(g(theta)) decreases in theta; bisect to hit the level.
    while (hi - lo > prob.dual_tol * std::max(1.0, hi)) {
        const double mid = 0.5 * (lo + hi);
        Field gm = solve_inner(mid);
        const double val = P.phi_tilde1(gm);
        if (std::abs(val - prob.level) <= 1e-8 * prob.level) return gm;
        if (val > prob.level)
            lo = mid;
        else {
            hi = mid;
            g = std::move(gm);
        }
    }
    return g;
}

struct ProjectionStudyRow {
    int n;
    double err;       // phi_tilde_1(h - proj)
    double phi_proj;  // phi_tilde_1(proj)
    double ratio;     // phi_proj / phi_tilde_1(h)
};

/// Convergence table of the weighted projection over increasing n; checks the
/// nesting property (errors cannot increase) as it goes.
inline std::vector<ProjectionStudyRow> projection_study(const Field& h,
                                                        const std::vector<int>& n_list,
                                                        const Potential& potential,
                                                        SolverOptions solver = {}) {
    std::vector<ProjectionStudyRow> rows;
    const double total = potential.phi_tilde1(h);
    double prev_err = std::numeric_limits<double>::infinity();
    for (int n : n_list) {
        Field proj = project_weighted({h, n, &potential, solver});
        ProjectionStudyRow row;
        row.n = n;
        row.err = potential.phi_tilde1(h - proj);
        row.phi_proj = potential.phi_tilde1(proj);
        row.ratio = total > 0.0 ? row.phi_proj / total : 0.0;
        if (row.err > prev_err + 1e-9 * (1.0 + prev_err))
            throw std::runtime_error("projection_study: approximation error increased with n");
        prev_err = row.err;
        rows.push_back(row);
    }
    return rows;
}

inline std::string projection_study_csv(const std::vector<ProjectionStudyRow>& rows) {
    std::ostringstream os;
    os.precision(17);
    os << "n,err,phi_proj,ratio\n";
    for (const auto& r : rows)
        os << r.n << ',' << r.err << ',' << r.phi_proj << ',' << r.ratio << '\n';
    return os.str();
}

}  // namespace gradflow
