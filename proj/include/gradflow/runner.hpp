#pragma once

// Subcommand implementations behind the CLI: simulate paths to CSV, run the
// structural assumption checkers, run the quantitative estimators, and dump a
// projection study. All file outputs are deterministic for a fixed config and
// seed; the only timestamp lives in the run manifest.

#include "gradflow/config.hpp"

#include <chrono>
#include <filesystem>

namespace gradflow {

namespace detail {

inline void write_text_file(const std::filesystem::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << content;
}

inline void write_json_file(const std::filesystem::path& path, const nlohmann::json& j) {
    write_text_file(path, j.dump(2) + "\n");
}

/// Deterministic sample fields on the basis, coefficients in [-1, 1].
inline Field sample_field(const SpectralBasis& basis, std::uint64_t seed, int index,
                          double scale = 1.0) {
    WienerStream st{seed, static_cast<std::uint64_t>(index), 1};
    Vec c(basis.n_modes());
    for (int k = 0; k < basis.n_modes(); ++k) c[k] = scale * (2.0 * st.uniform(7, k) - 1.0);
    return Field(basis, c);
}

}  // namespace detail

/// Resolve the output directory: GRADFLOW_OUT env var beats the --out flag,
/// which beats the config file.
inline std::string resolve_out_dir(const ExperimentConfig& cfg, const std::string& flag_out) {
    if (const char* env = std::getenv("GRADFLOW_OUT"); env && *env) return env;
    if (!flag_out.empty()) return flag_out;
    return cfg.out_dir;
}

inline nlohmann::json run_manifest(const ExperimentConfig& cfg) {
    nlohmann::json m;
    nlohmann::json echo;
    for (const auto& [k, v] : cfg.table.values())
        std::visit([&echo, &k](const auto& x) { echo[k] = x; }, v);
    m["config"] = echo;
    m["content_hash"] = cfg.table.fingerprint();
    m["seed"] = cfg.scheme.seed;
    const auto now = std::chrono::system_clock::now();
    m["timestamp_unix"] = std::chrono::duration_cast<std::chrono::seconds>(
                              now.time_since_epoch()).count();
    return m;
}

/// simulate: one CSV per path plus a manifest.
inline void cmd_simulate(const ExperimentConfig& cfg, const std::string& out_dir) {
    namespace fs = std::filesystem;
    fs::create_directories(out_dir);
    SpectralBasis basis = cfg.make_basis();
    SpectralBasis fine = cfg.make_fine_basis();
    NoiseOperator B = cfg.make_noise(basis);
    Field x0 = cfg.make_initial(fine);
    const int n_paths = cfg.table.integer("simulate.n_paths", 1);

    std::vector<std::string> csvs(n_paths);
    parallel_for_paths(n_paths, cfg.workers, [&](int p) {
        WienerStream stream{cfg.scheme.seed, static_cast<std::uint64_t>(p), 1};
        PathSolution sol = picard_solve(x0, cfg.potential, B, cfg.scheme, basis, stream);
        csvs[p] = path_csv(sol, cfg.full_state);
    });
    for (int p = 0; p < n_paths; ++p) {
        std::ostringstream name;
        name << "path_" << std::setw(4) << std::setfill('0') << p << ".csv";
        detail::write_text_file(fs::path(out_dir) / name.str(), csvs[p]);
    }
    detail::write_json_file(fs::path(out_dir) / "manifest.json", run_manifest(cfg));
}

/// check: one JSON report per structural assumption, with empirical constants
/// over a deterministic sample of fields, plus the projection study.
inline void cmd_check(const ExperimentConfig& cfg, const std::string& out_dir) {
    namespace fs = std::filesystem;
    fs::create_directories(out_dir);
    SpectralBasis basis = cfg.make_basis();
    NoiseOperator B = cfg.make_noise(basis);
    const Potential& P = cfg.potential;
    const std::uint64_t seed = cfg.scheme.seed;
    const int samples = cfg.table.integer("check.samples", 50);

    // a1: sandwich C1 phi_tilde - C2 <= phi <= C2 (phi_tilde + |v|^2/2 + 1)
    // and subhomogeneity phi_tilde(2v) <= 2^d_max phi_tilde(v)
    {
        double lower_c1 = std::numeric_limits<double>::infinity();
        double upper_c2 = 0.0, subhom = 0.0;
        for (int s = 0; s < samples; ++s) {
            Field v = detail::sample_field(basis, seed, s);
            const double pt = P.eval_phi_tilde(v);
            const double ph = P.eval_phi(v);
            const double nh = norm(v, P.h_tag());
            if (pt > 1e-12) {
                lower_c1 = std::min(lower_c1, (ph + 1.0) / pt);
                subhom = std::max(subhom, P.eval_phi_tilde(2.0 * v) / pt);
            }
            upper_c2 = std::max(upper_c2, ph / (pt + 0.5 * nh * nh + 1.0));
        }
        nlohmann::json j;
        j["assumption"] = "a1_sandwich";
        j["lower_constant_c1"] = lower_c1;
        j["upper_constant_c2"] = upper_c2;
        j["subhomogeneity_ratio"] = subhom;
        j["subhomogeneity_bound"] = std::pow(2.0, P.d_max());
        j["samples"] = samples;
        j["ok"] = std::isfinite(lower_c1) && lower_c1 > 0.0 &&
                  subhom <= std::pow(2.0, P.d_max()) + 1e-9;
        detail::write_json_file(fs::path(out_dir) / "assumption_a1.json", j);
    }
    // a2: second-derivative trace bound against the weighted mode norm
    {
        double worst = 0.0;
        for (int s = 0; s < samples; ++s) {
            Field v = detail::sample_field(basis, seed, 1000 + s);
            std::vector<Field> ws;
            for (int k = 1; k <= basis.n_modes(); ++k) ws.push_back(Field::mode(basis, k));
            auto rep = P.check_a2_bound(v, ws);
            worst = std::max(worst, rep.constant);
        }
        nlohmann::json j;
        j["assumption"] = "a2_second_derivative";
        j["empirical_constant"] = worst;
        j["samples"] = samples;
        j["ok"] = std::isfinite(worst);
        detail::write_json_file(fs::path(out_dir) / "assumption_a2.json", j);
    }
    // a3: midpoint convexity of phi_lambda at lambda = lambda_qc
    {
        double worst_defect = -std::numeric_limits<double>::infinity();
        const double lam = P.lambda_qc();
        auto phi_lam = [&](const Field& v) {
            const double nh = norm(v, P.h_tag());
            return P.eval_phi(v) + 0.5 * lam * nh * nh;
        };
        for (int s = 0; s < samples; ++s) {
            Field v = detail::sample_field(basis, seed, 2000 + s);
            Field w = detail::sample_field(basis, seed, 3000 + s);
            const double defect =
                phi_lam(0.5 * (v + w)) - 0.5 * (phi_lam(v) + phi_lam(w));
            worst_defect = std::max(worst_defect, defect);
        }
        nlohmann::json j;
        j["assumption"] = "a3_quasi_convexity";
        j["lambda"] = lam;
        j["worst_midpoint_defect"] = worst_defect;
        j["samples"] = samples;
        j["ok"] = worst_defect <= 1e-8;
        detail::write_json_file(fs::path(out_dir) / "assumption_a3.json", j);
    }
    // a4 / a4': weak coercivity constants
    {
        double c_a4 = -std::numeric_limits<double>::infinity();
        double c_a4p = -std::numeric_limits<double>::infinity();
        for (int s = 0; s < samples; ++s) {
            Field v = detail::sample_field(basis, seed, 4000 + s);
            auto rep = P.check_coercivity(v);
            c_a4 = std::max(c_a4, rep.bound_a4);
            c_a4p = std::max(c_a4p, rep.bound_a4prime);
        }
        nlohmann::json j4, j4p;
        j4["assumption"] = "a4_weak_coercivity";
        j4["empirical_constant"] = c_a4;
        j4["samples"] = samples;
        j4["ok"] = std::isfinite(c_a4);
        detail::write_json_file(fs::path(out_dir) / "assumption_a4.json", j4);
        j4p["assumption"] = "a4prime_coercivity";
        j4p["empirical_constant"] = c_a4p;
        j4p["samples"] = samples;
        j4p["ok"] = std::isfinite(c_a4p);
        detail::write_json_file(fs::path(out_dir) / "assumption_a4prime.json", j4p);
    }
    // a5: Lipschitz constant of the noise
    {
        nlohmann::json j;
        j["assumption"] = "a5_noise_lipschitz";
        j["empirical_constant"] = B.a5_lipschitz_estimate(basis, P.h_tag(), samples, seed);
        j["noise"] = to_string(B.kind());
        j["samples"] = samples;
        j["ok"] = true;
        detail::write_json_file(fs::path(out_dir) / "assumption_a5.json", j);
    }
    // a6: noise regularity ratio and summability tail
    {
        double worst_ratio = 0.0;
        for (int s = 0; s < samples; ++s) {
            Field v = detail::sample_field(basis, seed, 5000 + s);
            worst_ratio = std::max(worst_ratio, B.a6_norm(v, P).ratio);
        }
        nlohmann::json j;
        j["assumption"] = "a6_noise_regularity";
        j["worst_ratio"] = worst_ratio;
        j["summability_tail"] = B.summability_defect(P);
        j["noise"] = to_string(B.kind());
        j["samples"] = samples;
        j["ok"] = std::isfinite(worst_ratio);
        detail::write_json_file(fs::path(out_dir) / "assumption_a6.json", j);
    }
    // best-approximation decay in the phi_tilde_1 metric
    {
        SpectralBasis fine = cfg.make_fine_basis();
        Field x0 = cfg.make_initial(fine);
        std::vector<int> n_list;
        for (int n = 2; n <= fine.n_modes() / 2; n *= 2) n_list.push_back(n);
        if (n_list.size() >= 2)
            detail::write_text_file(fs::path(out_dir) / "projection_study.csv",
                                    projection_study_csv(projection_study(x0, n_list, P)));
    }
    detail::write_json_file(fs::path(out_dir) / "manifest.json", run_manifest(cfg));
}

inline std::vector<RefinementRung> estimate_ladder(const ExperimentConfig& cfg) {
    std::vector<RefinementRung> ladder;
    const auto ns = cfg.table.numbers("estimate.ladder_n");
    const auto dts = cfg.table.numbers("estimate.ladder_dt");
    if (!ns.empty() && ns.size() == dts.size()) {
        for (std::size_t i = 0; i < ns.size(); ++i)
            ladder.push_back({static_cast<int>(std::llround(ns[i])), dts[i]});
    } else {
        ladder.push_back({cfg.n_modes, cfg.scheme.dt});
        ladder.push_back({2 * cfg.n_modes, cfg.scheme.dt / 2.0});
    }
    return ladder;
}

/// estimate: one JSON + text report per selected estimator.
inline void cmd_estimate(const ExperimentConfig& cfg, const std::string& out_dir) {
    namespace fs = std::filesystem;
    fs::create_directories(out_dir);
    SpectralBasis basis = cfg.make_basis();
    SpectralBasis fine = cfg.make_fine_basis();
    NoiseOperator B = cfg.make_noise(basis);
    Field x0 = cfg.make_initial(fine);
    const Potential& P = cfg.potential;

    auto emit = [&](EstimatorReport rep, const std::string& stem) {
        rep.fingerprint = cfg.table.fingerprint();
        detail::write_json_file(fs::path(out_dir) / (stem + ".json"), rep.to_json());
        detail::write_text_file(fs::path(out_dir) / (stem + ".txt"), rep.to_text());
    };

    for (const auto& name : cfg.estimators) {
        if (name == "ou_exact") {
            Field x0_run = project_initial(x0, basis, P, cfg.scheme);
            emit(ou_exact_check(P, B, x0_run, cfg.scheme, cfg.n_paths, cfg.workers), "ou_exact");
        } else if (name == "energy_apriori") {
            emit(energy_apriori(P, B, x0, cfg.scheme, cfg.n_paths, estimate_ladder(cfg),
                                cfg.workers),
                 "energy_apriori");
        } else if (name == "dep_ic") {
            Field x0_run = project_initial(x0, basis, P, cfg.scheme);
            Field dir = Field::mode(basis, 1);
            emit(dep_ic_ratio(P, B, x0_run, dir, cfg.dep_eps, cfg.scheme, cfg.n_paths,
                              cfg.workers),
                 "dep_ic");
        } else if (name == "regularity") {
            emit(regularity_integral(P, B, x0, cfg.scheme, cfg.n_paths, estimate_ladder(cfg),
                                     cfg.workers),
                 "regularity");
        } else if (name == "galerkin_cauchy") {
            std::vector<int> n_list;
            for (double n : cfg.table.numbers("estimate.n_list"))
                n_list.push_back(static_cast<int>(std::llround(n)));
            if (n_list.empty()) n_list = {cfg.n_modes, 2 * cfg.n_modes};
            emit(galerkin_cauchy(P, B, x0, cfg.scheme, n_list, cfg.n_paths, cfg.workers),
                 "galerkin_cauchy");
        }
    }
    detail::write_json_file(fs::path(out_dir) / "manifest.json", run_manifest(cfg));
}

/// projection-study: best-approximation error decay CSV.
inline void cmd_projection_study(const ExperimentConfig& cfg, const std::string& out_dir) {
    namespace fs = std::filesystem;
    fs::create_directories(out_dir);
    SpectralBasis fine = cfg.make_fine_basis();
    Field x0 = cfg.make_initial(fine);
    std::vector<int> n_list;
    for (double n : cfg.table.numbers("study.n_list"))
        n_list.push_back(static_cast<int>(std::llround(n)));
    if (n_list.empty())
        for (int n = 2; n <= fine.n_modes(); n *= 2) n_list.push_back(n);
    detail::write_text_file(fs::path(out_dir) / "projection_study.csv",
                            projection_study_csv(projection_study(x0, n_list, cfg.potential)));
    detail::write_json_file(fs::path(out_dir) / "manifest.json", run_manifest(cfg));
}

}  // namespace gradflow
