#pragma once

// Experiment configuration: a small TOML-style config file (sections,
// key = value, scalars and flat arrays) mapped onto the library's objects,
// with aggregated validation.

#include "gradflow/estimator.hpp"

#include <cctype>
#include <cstdint>
#include <fstream>
#include <variant>

namespace gradflow {

using ConfigValue = std::variant<double, bool, std::string, std::vector<double>>;

class ConfigError : public std::runtime_error {
public:
    explicit ConfigError(std::vector<std::string> problems)
        : std::runtime_error(join(problems)), problems(std::move(problems)) {}
    std::vector<std::string> problems;

private:
    static std::string join(const std::vector<std::string>& ps) {
        std::string s = "invalid configuration:";
        for (const auto& p : ps) s += "\n  - " + p;
        return s;
    }
};

/// Parsed key-value store, keys flattened as "section.key".
class ConfigTable {
public:
    static ConfigTable parse(const std::string& text) {
        ConfigTable t;
        t.source_ = text;
        std::istringstream in(text);
        std::string line, section;
        int lineno = 0;
        while (std::getline(in, line)) {
            ++lineno;
            std::string s = strip(line);
            if (auto hash = find_comment(s); hash != std::string::npos) s = strip(s.substr(0, hash));
            if (s.empty()) continue;
            if (s.front() == '[') {
                if (s.back() != ']')
                    throw ConfigError({"line " + std::to_string(lineno) + ": unterminated section header"});
                section = strip(s.substr(1, s.size() - 2));
                continue;
            }
            const auto eq = s.find('=');
            if (eq == std::string::npos)
                throw ConfigError({"line " + std::to_string(lineno) + ": expected key = value"});
            const std::string key = strip(s.substr(0, eq));
            const std::string val = strip(s.substr(eq + 1));
            t.values_[section.empty() ? key : section + "." + key] = parse_value(val, lineno);
        }
        return t;
    }

    static ConfigTable parse_file(const std::string& path) {
        std::ifstream in(path);
        if (!in) throw ConfigError({"cannot open config file: " + path});
        std::ostringstream ss;
        ss << in.rdbuf();
        return parse(ss.str());
    }

    /// CLI override "section.key=value".
    void set_override(const std::string& assignment) {
        const auto eq = assignment.find('=');
        if (eq == std::string::npos)
            throw ConfigError({"override must look like section.key=value: " + assignment});
        values_[strip(assignment.substr(0, eq))] = parse_value(strip(assignment.substr(eq + 1)), 0);
    }

    bool has(const std::string& key) const { return values_.count(key) > 0; }

    double number(const std::string& key, double fallback) const {
        auto it = values_.find(key);
        if (it == values_.end()) return fallback;
        if (const double* d = std::get_if<double>(&it->second)) return *d;
        throw ConfigError({key + ": expected a number"});
    }

    int integer(const std::string& key, int fallback) const {
        return static_cast<int>(std::llround(number(key, fallback)));
    }

    std::uint64_t unsigned64(const std::string& key, std::uint64_t fallback) const {
        auto it = values_.find(key);
        if (it == values_.end()) return fallback;
        if (const double* d = std::get_if<double>(&it->second))
            return static_cast<std::uint64_t>(std::llround(*d));
        throw ConfigError({key + ": expected an integer"});
    }

    bool boolean(const std::string& key, bool fallback) const {
        auto it = values_.find(key);
        if (it == values_.end()) return fallback;
        if (const bool* b = std::get_if<bool>(&it->second)) return *b;
        throw ConfigError({key + ": expected a boolean"});
    }

    std::string text(const std::string& key, const std::string& fallback) const {
        auto it = values_.find(key);
        if (it == values_.end()) return fallback;
        if (const std::string* s = std::get_if<std::string>(&it->second)) return *s;
        throw ConfigError({key + ": expected a string"});
    }

    std::vector<double> numbers(const std::string& key) const {
        auto it = values_.find(key);
        if (it == values_.end()) return {};
        if (const auto* a = std::get_if<std::vector<double>>(&it->second)) return *a;
        if (const double* d = std::get_if<double>(&it->second)) return {*d};
        throw ConfigError({key + ": expected an array of numbers"});
    }

    std::vector<std::string> texts(const std::string& key) const {
        auto it = values_.find(key);
        if (it == values_.end()) return {};
        if (const std::string* s = std::get_if<std::string>(&it->second)) return split_list(*s);
        throw ConfigError({key + ": expected a string or comma-separated list"});
    }

    /// Canonical sorted dump, used for the manifest echo and the fingerprint.
    std::string canonical() const {
        std::ostringstream os;
        os.precision(17);
        for (const auto& [k, v] : values_) {
            os << k << " = ";
            std::visit(
                [&os](const auto& x) {
                    using T = std::decay_t<decltype(x)>;
                    if constexpr (std::is_same_v<T, std::vector<double>>) {
                        os << '[';
                        for (std::size_t i = 0; i < x.size(); ++i)
                            os << (i ? "," : "") << x[i];
                        os << ']';
                    } else if constexpr (std::is_same_v<T, bool>) {
                        os << (x ? "true" : "false");
                    } else {
                        os << x;
                    }
                },
                v);
            os << '\n';
        }
        return os.str();
    }

    /// FNV-1a content hash of the canonical dump.
    std::string fingerprint() const {
        std::uint64_t h = 0xcbf29ce484222325ULL;
        for (unsigned char c : canonical()) {
            h ^= c;
            h *= 0x100000001b3ULL;
        }
        std::ostringstream os;
        os << std::hex << std::setw(16) << std::setfill('0') << h;
        return os.str();
    }

    const std::map<std::string, ConfigValue>& values() const { return values_; }

private:
    static std::string strip(const std::string& s) {
        std::size_t a = 0, b = s.size();
        while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
        while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
        return s.substr(a, b - a);
    }

    static std::size_t find_comment(const std::string& s) {
        bool in_str = false;
        for (std::size_t i = 0; i < s.size(); ++i) {
            if (s[i] == '"') in_str = !in_str;
            if (s[i] == '#' && !in_str) return i;
        }
        return std::string::npos;
    }

    static std::vector<std::string> split_list(const std::string& s) {
        std::vector<std::string> out;
        std::string cur;
        for (char c : s) {
            if (c == ',') {
                if (!strip(cur).empty()) out.push_back(strip(cur));
                cur.clear();
            } else
                cur += c;
        }
        if (!strip(cur).empty()) out.push_back(strip(cur));
        return out;
    }

    static ConfigValue parse_value(const std::string& v, int lineno) {
        if (v.empty()) throw ConfigError({"line " + std::to_string(lineno) + ": empty value"});
        if (v.front() == '"') {
            if (v.size() < 2 || v.back() != '"')
                throw ConfigError({"line " + std::to_string(lineno) + ": unterminated string"});
            return v.substr(1, v.size() - 2);
        }
        if (v == "true") return true;
        if (v == "false") return false;
        if (v.front() == '[') {
            if (v.back() != ']')
                throw ConfigError({"line " + std::to_string(lineno) + ": unterminated array"});
            std::vector<double> arr;
            for (const auto& item : split_list(v.substr(1, v.size() - 2)))
                arr.push_back(to_number(item, lineno));
            return arr;
        }
        return to_number(v, lineno);
    }

    static double to_number(const std::string& s, int lineno) {
        std::size_t pos = 0;
        double d;
        try {
            d = std::stod(s, &pos);
        } catch (const std::exception&) {
            throw ConfigError({"line " + std::to_string(lineno) + ": not a number: " + s});
        }
        if (pos != s.size())
            throw ConfigError({"line " + std::to_string(lineno) + ": trailing junk in number: " + s});
        return d;
    }

    std::map<std::string, ConfigValue> values_;
    std::string source_;
};

/// Fully resolved experiment: every cross-field constraint validated before
/// any run; construction throws one ConfigError listing every violation.
struct ExperimentConfig {
    ConfigTable table;
    Potential potential = Potential::reaction_diffusion();
    int n_modes = 16;
    int n_quad = 64;
    NoiseKind noise_kind = NoiseKind::Zero;
    int noise_modes = 0;
    double noise_amplitude = 0.0;
    double noise_decay = 0.0;
    NoiseProjection noise_projection = NoiseProjection::Weighted;
    SchemeConfig scheme;
    // initial condition
    std::string initial_kind = "modes";  // "modes" | "powerlaw"
    std::vector<double> initial_coeffs = {1.0};
    double initial_alpha = 0.6;
    double initial_amplitude = 1.0;
    int initial_fine_modes = 0;  // 0: same as n_modes
    // estimation
    std::vector<std::string> estimators;
    int n_paths = 100;
    double dep_eps = 0.1;
    int workers = 1;
    bool full_state = false;
    std::string out_dir = "out";

    static ExperimentConfig from_table(ConfigTable t) {
        std::vector<std::string> errs;
        ExperimentConfig cfg;
        cfg.table = t;

        const std::string family = t.text("equation.family", "reaction_diffusion");
        const std::string reaction = t.text("equation.reaction", "none");
        std::vector<ReactionTerm> terms;
        if (reaction == "allen_cahn")
            terms.push_back(ReactionTerm::allen_cahn());
        else if (reaction == "cubic_decay")
            terms.push_back(ReactionTerm::cubic_decay());
        else if (reaction != "none")
            errs.push_back("equation.reaction: unknown preset '" + reaction + "'");

        if (family == "porous_medium") {
            const double p = t.number("equation.p", 2.0);
            if (p < 1.0) errs.push_back("equation.p must be >= 1");
            else cfg.potential = Potential::porous_medium(p);
            if (!terms.empty()) errs.push_back("porous_medium takes no reaction terms");
        } else if (family == "reaction_diffusion") {
            cfg.potential = Potential::reaction_diffusion(terms);
        } else if (family == "p_laplace") {
            const double m = t.number("equation.m", 2.0);
            if (m < 2.0) errs.push_back("equation.m must be >= 2");
            else cfg.potential = Potential::p_laplace(m, terms);
        } else {
            errs.push_back("equation.family: unknown family '" + family + "'");
        }
        // pluggable Phi hook: a constant offset models a user Phi with Phi(0) != 0
        const double phi0 = t.number("equation.phi_zero_offset", 0.0);
        if (phi0 != 0.0) errs.push_back("equation.phi_zero_offset: Phi(0) must equal 0");

        cfg.n_modes = t.integer("basis.n_modes", 16);
        if (cfg.n_modes < 1) errs.push_back("basis.n_modes must be positive");
        cfg.n_quad = t.integer("basis.n_quad", 4 * std::max(cfg.n_modes, 1));
        if (cfg.n_quad < cfg.n_modes) errs.push_back("basis.n_quad must be >= n_modes");

        const std::string preset = t.text("noise.preset", "zero");
        cfg.noise_modes = t.integer("noise.K", cfg.n_modes);
        cfg.noise_amplitude = t.number("noise.amplitude", 0.1);
        cfg.noise_decay = t.number("noise.decay", 2.0);
        const std::string proj = t.text("noise.projection", "weighted");
        if (proj == "weighted")
            cfg.noise_projection = NoiseProjection::Weighted;
        else if (proj == "orthogonal")
            cfg.noise_projection = NoiseProjection::Orthogonal;
        else
            errs.push_back("noise.projection must be 'weighted' or 'orthogonal'");
        if (preset == "zero")
            cfg.noise_kind = NoiseKind::Zero;
        else if (preset == "additive_powerlaw")
            cfg.noise_kind = NoiseKind::Additive;
        else if (preset == "multiplicative_powerlaw")
            cfg.noise_kind = NoiseKind::LinearMultiplicative;
        else
            errs.push_back("noise.preset: unknown preset '" + preset + "'");
        if (cfg.noise_kind != NoiseKind::Zero && cfg.noise_modes < 1)
            errs.push_back("noise.K must be positive");

        const std::string scheme = t.text("scheme.type", "proximal_em");
        if (scheme == "proximal_em")
            cfg.scheme.scheme = Scheme::ProximalEM;
        else if (scheme == "explicit_em")
            cfg.scheme.scheme = Scheme::ExplicitEM;
        else
            errs.push_back("scheme.type must be 'proximal_em' or 'explicit_em'");
        cfg.scheme.dt = t.number("scheme.dt", 1e-2);
        cfg.scheme.t_end = t.number("scheme.t_end", 1.0);
        cfg.scheme.newton_tol = t.number("scheme.newton_tol", 1e-10);
        cfg.scheme.newton_max = t.integer("scheme.newton_max", 100);
        cfg.scheme.cfl_safety = t.number("scheme.cfl_safety", 0.5);
        cfg.scheme.seed = t.unsigned64("seed", 0);

        const std::string init_proj = t.text("initial.projection", "orthogonal");
        if (init_proj == "orthogonal")
            cfg.scheme.initial_projection = InitialProjection::Orthogonal;
        else if (init_proj == "weighted")
            cfg.scheme.initial_projection = InitialProjection::Weighted;
        else if (init_proj == "levelset")
            cfg.scheme.initial_projection = InitialProjection::LevelSet;
        else
            errs.push_back("initial.projection must be orthogonal, weighted or levelset");
        cfg.scheme.levelset_level = t.number("initial.level", 1.0);
        if (cfg.scheme.initial_projection == InitialProjection::LevelSet &&
            cfg.scheme.levelset_level <= 0.0)
            errs.push_back("initial.level must be positive");

        cfg.initial_kind = t.text("initial.kind", "modes");
        if (cfg.initial_kind == "modes") {
            cfg.initial_coeffs = t.numbers("initial.coeffs");
            if (cfg.initial_coeffs.empty()) cfg.initial_coeffs = {1.0};
        } else if (cfg.initial_kind == "powerlaw") {
            cfg.initial_alpha = t.number("initial.alpha", 0.6);
            cfg.initial_amplitude = t.number("initial.amplitude", 1.0);
        } else {
            errs.push_back("initial.kind must be 'modes' or 'powerlaw'");
        }
        cfg.initial_fine_modes = t.integer("initial.fine_modes", 0);

        cfg.estimators = t.texts("estimate.names");
        for (const auto& e : cfg.estimators)
            if (e != "ou_exact" && e != "energy_apriori" && e != "dep_ic" &&
                e != "regularity" && e != "galerkin_cauchy")
                errs.push_back("estimate.names: unknown estimator '" + e + "'");
        cfg.n_paths = t.integer("estimate.n_paths", 100);
        if (cfg.n_paths < 1) errs.push_back("estimate.n_paths must be positive");
        cfg.dep_eps = t.number("estimate.eps", 0.1);
        cfg.full_state = t.boolean("output.full_state", false);
        cfg.out_dir = t.text("output.dir", "out");

        if (!errs.empty()) {
            // family-independent scheme checks still run when earlier fields failed
            if (cfg.scheme.dt <= 0.0) errs.push_back("scheme.dt must be positive");
            if (cfg.scheme.t_end < 0.0) errs.push_back("scheme.t_end must be nonnegative");
        }
        if (errs.empty()) {
            SpectralBasis basis(cfg.n_modes, cfg.n_quad);
            auto scheme_errs = cfg.scheme.validate(cfg.potential, basis);
            errs.insert(errs.end(), scheme_errs.begin(), scheme_errs.end());
            if (cfg.noise_kind == NoiseKind::LinearMultiplicative) {
                NoiseOperator B = cfg.make_noise(basis);
                const double defect = B.summability_defect(cfg.potential);
                if (defect > 1e-6)
                    errs.push_back("noise decay too slow for the family's summability requirement "
                                   "(tail term " + std::to_string(defect) + " > 1e-6 at K)");
            }
        }
        if (!errs.empty()) throw ConfigError(errs);
        return cfg;
    }

    SpectralBasis make_basis() const { return SpectralBasis(n_modes, n_quad); }

    SpectralBasis make_fine_basis() const {
        const int fine = initial_fine_modes > 0 ? initial_fine_modes : n_modes;
        return SpectralBasis(std::max(fine, n_modes));
    }

    NoiseOperator make_noise(const SpectralBasis& basis) const {
        switch (noise_kind) {
            case NoiseKind::Zero: return NoiseOperator::zero();
            case NoiseKind::Additive:
                return NoiseOperator::additive_powerlaw(basis, std::min(noise_modes, basis.n_modes()),
                                                        noise_amplitude, noise_decay,
                                                        noise_projection);
            case NoiseKind::LinearMultiplicative:
                return NoiseOperator::multiplicative_powerlaw(std::min(noise_modes, basis.n_modes()),
                                                              noise_amplitude, noise_decay,
                                                              noise_projection);
        }
        return NoiseOperator::zero();
    }

    Field make_initial(const SpectralBasis& fine) const {
        Vec c = Vec::Zero(fine.n_modes());
        if (initial_kind == "modes") {
            for (std::size_t k = 0; k < initial_coeffs.size() && k < static_cast<std::size_t>(fine.n_modes()); ++k)
                c[k] = initial_coeffs[k];
        } else {
            // k^{-alpha} amplitudes with deterministic alternating signs
            for (int k = 1; k <= fine.n_modes(); ++k)
                c[k - 1] = initial_amplitude * std::pow(k, -initial_alpha) * (k % 2 ? 1.0 : -1.0);
        }
        return Field(fine, c);
    }
};

}  // namespace gradflow
