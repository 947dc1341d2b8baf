#pragma once

// Monte Carlo verification of the quantitative estimates: the a priori energy
// bound, continuous dependence on initial data, the Galerkin Cauchy property,
// the t^{1/2} regularization integral, and exact-law OU calibration.

#include "gradflow/integrator.hpp"

#include <json.hpp>

#include <atomic>
#include <iomanip>
#include <map>
#include <thread>

namespace gradflow {

enum class Verdict { Bounded, Violated, Inconclusive };

inline const char* to_string(Verdict v) {
    switch (v) {
        case Verdict::Bounded: return "bounded";
        case Verdict::Violated: return "violated";
        case Verdict::Inconclusive: return "inconclusive";
    }
    return "?";
}

struct MeanSE {
    double mean = 0.0;
    double se = 0.0;
    int n = 0;
};

/// Compensated (Kahan) mean and standard error; summation runs in index
/// order so the estimate is independent of which worker produced which path.
inline MeanSE compensated_mean(const std::vector<double>& xs) {
    MeanSE out;
    out.n = static_cast<int>(xs.size());
    if (xs.empty()) return out;
    double sum = 0.0, comp = 0.0;
    for (double x : xs) {
        const double y = x - comp;
        const double t = sum + y;
        comp = (t - sum) - y;
        sum = t;
    }
    out.mean = (sum - comp) / out.n;  // fold the residual compensation back in
    if (out.n > 1) {
        double s2 = 0.0, c2 = 0.0;
        for (double x : xs) {
            const double d = (x - out.mean) * (x - out.mean) - c2;
            const double t = s2 + d;
            c2 = (t - s2) - d;
            s2 = t;
        }
        out.se = std::sqrt((s2 - c2) / (out.n - 1) / out.n);
    }
    return out;
}

/// Runs fn(path_index) for every path, partitioned across workers. Results
/// must be written into per-path slots; determinism then holds for any
/// worker count.
template <typename Fn>
void parallel_for_paths(int n_paths, int workers, Fn fn) {
    workers = std::max(1, workers);
    if (workers == 1 || n_paths < 2 * workers) {
        for (int p = 0; p < n_paths; ++p) fn(p);
        return;
    }
    std::vector<std::thread> pool;
    std::atomic<int> next{0};
    for (int w = 0; w < workers; ++w)
        pool.emplace_back([&] {
            for (int p = next.fetch_add(1); p < n_paths; p = next.fetch_add(1)) fn(p);
        });
    for (auto& t : pool) t.join();
}

struct EstimatorReport {
    std::string name;
    double lhs = 0.0, lhs_se = 0.0;
    double rhs = 0.0, rhs_se = 0.0;
    int n_paths = 0;
    int diverged = 0;
    Verdict verdict = Verdict::Inconclusive;
    std::vector<std::map<std::string, double>> ladder;
    std::string fingerprint;
    std::vector<std::string> notes;

    nlohmann::json to_json() const {
        nlohmann::json j;
        j["name"] = name;
        j["lhs"] = lhs;
        j["lhs_se"] = lhs_se;
        j["rhs"] = rhs;
        j["rhs_se"] = rhs_se;
        j["n_paths"] = n_paths;
        j["diverged"] = diverged;
        j["verdict"] = to_string(verdict);
        j["ladder"] = ladder;
        j["fingerprint"] = fingerprint;
        j["notes"] = notes;
        return j;
    }

    std::string to_text() const {
        std::ostringstream os;
        os << std::setprecision(6);
        os << name << ": " << to_string(verdict) << "\n"
           << "  lhs = " << lhs << " (se " << lhs_se << ")\n"
           << "  rhs = " << rhs << " (se " << rhs_se << ")\n"
           << "  n_paths = " << n_paths << ", diverged = " << diverged << "\n";
        for (const auto& row : ladder) {
            os << " ";
            for (const auto& [k, v] : row) os << "  " << k << "=" << v;
            os << "\n";
        }
        for (const auto& n : notes) os << "  note: " << n << "\n";
        return os.str();
    }
};

namespace detail {

/// Shared verdict policy: no verdict when the SE dominates the estimate.
inline Verdict se_guard(double value, double se, Verdict tentative) {
    if (se > 0.25 * std::abs(value) && value != 0.0) return Verdict::Inconclusive;
    return tentative;
}

}  // namespace detail

struct RefinementRung {
    int n_modes;
    double dt;
};

/// Lemma-3.2-style a priori bound: empirical constant
///   [sup_t E(phi + |X|_H^2) + E int |dphi|_H^2] /
///   [E phi_tilde_1(X_0) + 1 + E int |B|_{A6} dr]
/// across a refinement ladder; bounded when the ratios stay within a factor 2.
inline EstimatorReport energy_apriori(const Potential& P, const NoiseOperator& B, const Field& x0,
                                      SchemeConfig cfg, int n_paths,
                                      const std::vector<RefinementRung>& ladder, int workers = 1) {
    EstimatorReport rep;
    rep.name = "energy_apriori(lemma_3.2)";
    rep.n_paths = n_paths;
    std::atomic<int> diverged{0};
    double ratio_min = std::numeric_limits<double>::infinity(), ratio_max = 0.0;

    for (const auto& rung : ladder) {
        SpectralBasis basis(rung.n_modes);
        SchemeConfig c = cfg;
        c.dt = rung.dt;
        const int n_steps = c.n_steps();
        std::vector<std::vector<double>> energy_plus_h2(n_paths);  // per node
        std::vector<double> grad_integral(n_paths, 0.0), a6_integral(n_paths, 0.0);
        parallel_for_paths(n_paths, workers, [&](int p) {
            try {
                WienerStream stream{c.seed, static_cast<std::uint64_t>(p), 1};
                PathSolution sol = simulate_path(x0, P, B, c, basis, stream);
                auto& row = energy_plus_h2[p];
                row.resize(sol.times.size());
                double gi = 0.0, ai = 0.0;
                for (std::size_t j = 0; j < sol.times.size(); ++j) {
                    const double nh = norm(sol.states[j], P.h_tag());
                    row[j] = sol.energies[j] + nh * nh;
                    if (j + 1 < sol.times.size()) {
                        gi += c.dt * sol.subgrad_h_norms[j] * sol.subgrad_h_norms[j];
                        ai += c.dt * B.a6_norm(sol.states[j], P).value;
                    }
                }
                grad_integral[p] = gi;
                a6_integral[p] = ai;
            } catch (const DivergedPathError&) {
                ++diverged;
            }
        });
        // sup over time of the per-node mean
        double sup_mean = 0.0, sup_se = 0.0;
        std::vector<double> node_vals(n_paths);
        for (int j = 0; j <= n_steps; ++j) {
            for (int p = 0; p < n_paths; ++p)
                node_vals[p] = j < static_cast<int>(energy_plus_h2[p].size())
                                   ? energy_plus_h2[p][j] : 0.0;
            MeanSE m = compensated_mean(node_vals);
            if (m.mean > sup_mean) {
                sup_mean = m.mean;
                sup_se = m.se;
            }
        }
        MeanSE gi = compensated_mean(grad_integral);
        MeanSE ai = compensated_mean(a6_integral);
        Field x0p = project_initial(x0, basis, P, cfg);
        const double lhs = sup_mean + gi.mean;
        const double rhs = P.phi_tilde1(x0p) + 1.0 + ai.mean;
        const double ratio = lhs / rhs;
        ratio_min = std::min(ratio_min, ratio);
        ratio_max = std::max(ratio_max, ratio);
        rep.ladder.push_back({{"n", double(rung.n_modes)},
                              {"dt", rung.dt},
                              {"lhs", lhs},
                              {"lhs_se", std::sqrt(sup_se * sup_se + gi.se * gi.se)},
                              {"rhs", rhs},
                              {"ratio", ratio}});
        rep.lhs = lhs;
        rep.lhs_se = std::sqrt(sup_se * sup_se + gi.se * gi.se);
        rep.rhs = rhs;
        rep.rhs_se = ai.se;
    }
    rep.diverged = diverged.load();
    Verdict v = (ratio_max / std::max(ratio_min, 1e-300) <= 2.0) ? Verdict::Bounded
                                                                 : Verdict::Violated;
    if (rep.diverged > 0) {
        v = Verdict::Violated;
        rep.notes.push_back("diverged paths present");
    }
    rep.verdict = detail::se_guard(rep.lhs, rep.lhs_se, v);
    return rep;
}

/// Continuous dependence on initial data: coupled-path empirical constant
/// E sup_t |X1 - X2|_H^2 / E |X0_1 - X0_2|_H^2 across a shrinking
/// perturbation ladder eps, eps/2, eps/4.
inline EstimatorReport dep_ic_ratio(const Potential& P, const NoiseOperator& B, const Field& x0,
                                    const Field& direction, double eps, SchemeConfig cfg,
                                    int n_paths, int workers = 1) {
    EstimatorReport rep;
    rep.name = "dep_ic_ratio(eq_2.2)";
    rep.n_paths = n_paths;
    double c_min = std::numeric_limits<double>::infinity(), c_max = 0.0;
    for (int rung = 0; rung < 3; ++rung) {
        const double e = eps / (1 << rung);
        Field x0b = x0 + e * direction;
        std::vector<double> sup_sq(n_paths, 0.0);
        std::atomic<std::uint64_t> consumed_a{0}, consumed_b{0};
        SpectralBasis basis(x0.basis().n_modes(), x0.basis().n_quad());
        parallel_for_paths(n_paths, workers, [&](int p) {
            WienerStream stream{cfg.seed, static_cast<std::uint64_t>(p), 1};
            PathSolution a = simulate_path(x0, P, B, cfg, basis, stream);
            PathSolution b = simulate_path(x0b, P, B, cfg, basis, stream);
            consumed_a += a.increments_consumed;
            consumed_b += b.increments_consumed;
            double sup = 0.0;
            for (std::size_t j = 0; j < a.times.size(); ++j) {
                const double d = norm(a.states[j] - b.states[j], P.h_tag());
                sup = std::max(sup, d * d);
            }
            sup_sq[p] = sup;
        });
        if (consumed_a.load() != consumed_b.load())
            throw std::logic_error("dep_ic_ratio: coupled arms consumed different increments");
        MeanSE m = compensated_mean(sup_sq);
        Field d0 = project_initial(x0, basis, P, cfg) - project_initial(x0b, basis, P, cfg);
        const double denom = norm(d0, P.h_tag()) * norm(d0, P.h_tag());
        const double C = denom > 0.0 ? m.mean / denom : 0.0;
        c_min = std::min(c_min, C);
        c_max = std::max(c_max, C);
        rep.ladder.push_back({{"eps", e},
                              {"lhs", m.mean},
                              {"lhs_se", m.se},
                              {"rhs", denom},
                              {"C", C},
                              {"C_se", denom > 0.0 ? m.se / denom : 0.0}});
        rep.lhs = m.mean;
        rep.lhs_se = m.se;
        rep.rhs = denom;
    }
    Verdict v = (c_max / std::max(c_min, 1e-300) <= 2.0) ? Verdict::Bounded : Verdict::Violated;
    rep.verdict = detail::se_guard(rep.lhs, rep.lhs_se, v);
    return rep;
}

/// Theorem 2.6 diagnostic: E sum_j dt t_j |dphi(X_{t_j})|_H^2 across a
/// refinement ladder; bounded when successive estimates change by <= 20%.
inline EstimatorReport regularity_integral(const Potential& P, const NoiseOperator& B,
                                           const Field& x0, SchemeConfig cfg, int n_paths,
                                           const std::vector<RefinementRung>& ladder,
                                           int workers = 1) {
    EstimatorReport rep;
    rep.name = "regularity_integral(thm_2.6)";
    rep.n_paths = n_paths;
    double prev = std::numeric_limits<double>::quiet_NaN();
    bool stable = true;
    for (const auto& rung : ladder) {
        SpectralBasis basis(rung.n_modes);
        SchemeConfig c = cfg;
        c.dt = rung.dt;
        std::vector<double> integrals(n_paths, 0.0);
        std::vector<std::vector<double>> weighted(n_paths);
        parallel_for_paths(n_paths, workers, [&](int p) {
            WienerStream stream{c.seed, static_cast<std::uint64_t>(p), 1};
            PathSolution sol = simulate_path(x0, P, B, c, basis, stream);
            double acc = 0.0;
            auto& row = weighted[p];
            row.resize(sol.times.size());
            for (std::size_t j = 0; j < sol.times.size(); ++j) {
                const double term = sol.times[j] * sol.subgrad_h_norms[j] * sol.subgrad_h_norms[j];
                row[j] = term;
                acc += c.dt * term;
            }
            integrals[p] = acc;
        });
        MeanSE m = compensated_mean(integrals);
        // sup_j t_j E |dphi(X_{t_j})|^2
        double sup_tj = 0.0;
        std::vector<double> node(n_paths);
        for (std::size_t j = 0; j < weighted.front().size(); ++j) {
            for (int p = 0; p < n_paths; ++p) node[p] = weighted[p][j];
            sup_tj = std::max(sup_tj, compensated_mean(node).mean);
        }
        if (!std::isnan(prev) && prev > 0.0 && std::abs(m.mean - prev) / prev > 0.20)
            stable = false;
        prev = m.mean;
        rep.ladder.push_back({{"n", double(rung.n_modes)},
                              {"dt", rung.dt},
                              {"integral", m.mean},
                              {"se", m.se},
                              {"sup_t_weighted", sup_tj}});
        rep.lhs = m.mean;
        rep.lhs_se = m.se;
    }
    const double nh = norm(x0, P.h_tag());
    rep.rhs = nh * nh + 1.0;
    rep.verdict = detail::se_guard(rep.lhs, rep.lhs_se,
                                   stable ? Verdict::Bounded : Verdict::Violated);
    return rep;
}

/// Theorem 2.4 diagnostic: E sup_t |X^n - X^{2n}|_H^2 for consecutive
/// resolutions, coupled through the same Brownian path; the column must
/// decrease within 3 SE.
inline EstimatorReport galerkin_cauchy(const Potential& P, const NoiseOperator& B, const Field& x0,
                                       SchemeConfig cfg, const std::vector<int>& n_list,
                                       int n_paths, int workers = 1) {
    EstimatorReport rep;
    rep.name = "galerkin_cauchy(thm_2.4)";
    rep.n_paths = n_paths;
    if (n_list.size() < 2) throw std::invalid_argument("galerkin_cauchy: need at least two n");
    bool decreasing = true;
    double prev_mean = std::numeric_limits<double>::infinity(), prev_se = 0.0;
    for (std::size_t i = 0; i + 1 < n_list.size(); ++i) {
        const int n_lo = n_list[i], n_hi = n_list[i + 1];
        SpectralBasis basis_lo(n_lo), basis_hi(n_hi);
        std::vector<double> sup_sq(n_paths, 0.0);
        parallel_for_paths(n_paths, workers, [&](int p) {
            WienerStream stream{cfg.seed, static_cast<std::uint64_t>(p), 1};
            PathSolution lo = simulate_path(x0, P, B, cfg, basis_lo, stream);
            PathSolution hi = simulate_path(x0, P, B, cfg, basis_hi, stream);
            double sup = 0.0;
            for (std::size_t j = 0; j < lo.times.size(); ++j) {
                double s = 0.0;
                for (int k = 0; k < n_hi; ++k) {
                    const double cl = k < n_lo ? lo.states[j].coeffs()[k] : 0.0;
                    const double d = cl - hi.states[j].coeffs()[k];
                    s += space_weight(P.h_tag(), basis_hi.eigenvalue(k)) * d * d;
                }
                sup = std::max(sup, s);
            }
            sup_sq[p] = sup;
        });
        MeanSE m = compensated_mean(sup_sq);
        if (m.mean > prev_mean + 3.0 * std::sqrt(m.se * m.se + prev_se * prev_se))
            decreasing = false;
        prev_mean = m.mean;
        prev_se = m.se;
        rep.ladder.push_back(
            {{"n", double(n_lo)}, {"n2", double(n_hi)}, {"E_sup_diff_sq", m.mean}, {"se", m.se}});
        rep.lhs = m.mean;
        rep.lhs_se = m.se;
    }
    rep.verdict = decreasing ? Verdict::Bounded : Verdict::Violated;
    return rep;
}

/// Exact-law calibration on the linear stochastic heat equation: per mode the
/// solution is an OU process with mean c_k(0) e^{-l_k T} and variance
/// g_k^2 (1 - e^{-2 l_k T}) / (2 l_k).
inline EstimatorReport ou_exact_check(const Potential& P, const NoiseOperator& B, const Field& x0,
                                      SchemeConfig cfg, int n_paths, int workers = 1) {
    EstimatorReport rep;
    rep.name = "ou_exact_check";
    rep.n_paths = n_paths;
    if (!P.is_linear_diagonal())
        throw std::invalid_argument("ou_exact_check requires the linear heat drift (SRDE, f == 0)");
    if (B.kind() == NoiseKind::LinearMultiplicative)
        throw std::invalid_argument("ou_exact_check requires additive or zero noise");
    SpectralBasis basis(x0.basis().n_modes(), x0.basis().n_quad());
    const int n = basis.n_modes();
    std::vector<std::vector<double>> terminal(n_paths);
    parallel_for_paths(n_paths, workers, [&](int p) {
        WienerStream stream{cfg.seed, static_cast<std::uint64_t>(p), 1};
        PathSolution sol = simulate_path(x0, P, B, cfg, basis, stream);
        const Vec& c = sol.states.back().coeffs();
        terminal[p].assign(c.data(), c.data() + n);
    });
    const double T = cfg.t_end;
    bool ok = true;
    for (int k = 1; k <= n; ++k) {
        double gk = 0.0;
        if (B.kind() == NoiseKind::Additive)
            for (const auto& g : B.g())
                if (g.basis().n_modes() >= k) gk += g.coeffs()[k - 1];  // component on e_k
        const double lam = basis.eigenvalue(k - 1);
        const double exact_mean = x0.coeffs()[k - 1] * std::exp(-lam * T);
        const double exact_var = gk * gk * (1.0 - std::exp(-2.0 * lam * T)) / (2.0 * lam);
        std::vector<double> vals(n_paths);
        for (int p = 0; p < n_paths; ++p) vals[p] = terminal[p][k - 1];
        MeanSE m = compensated_mean(vals);
        double var = 0.0;
        for (double v : vals) var += (v - m.mean) * (v - m.mean);
        var /= std::max(1, n_paths - 1);
        // Time stepping biases the mean by a factor exp(+-lam^2 T dt / 2 + ...);
        // allow that bias (with margin 2) on top of the Monte Carlo band.
        const double bias =
            exact_mean == 0.0
                ? 0.0
                : std::abs(exact_mean) * std::expm1(std::min(lam * lam * T * cfg.dt, 700.0));
        const bool mean_ok = std::abs(m.mean - exact_mean) <=
                             bias + 1e-9 + 3.0 * std::max(m.se, 0.0);
        const bool var_ok = exact_var == 0.0 ? var <= 1e-12
                                             : std::abs(var - exact_var) / exact_var <= 0.10;
        if (x0.coeffs()[k - 1] != 0.0 || gk != 0.0) {
            ok = ok && mean_ok && var_ok;
            rep.ladder.push_back({{"mode", double(k)},
                                  {"mean", m.mean},
                                  {"mean_se", m.se},
                                  {"exact_mean", exact_mean},
                                  {"var", var},
                                  {"exact_var", exact_var}});
        }
    }
    rep.lhs = rep.ladder.empty() ? 0.0 : rep.ladder.front().at("mean");
    rep.lhs_se = rep.ladder.empty() ? 0.0 : rep.ladder.front().at("mean_se");
    rep.rhs = rep.ladder.empty() ? 0.0 : rep.ladder.front().at("exact_mean");
    rep.verdict = ok ? Verdict::Bounded : Verdict::Violated;
    return rep;
}

}  // namespace gradflow
