#include "oracles.hpp"

#include <catch2/catch_amalgamated.hpp>

using namespace gradflow;

TEST_CASE("proximal step on the linear drift is the scalar resolvent") {
    SpectralBasis b(4);
    Potential P = Potential::reaction_diffusion();
    Field w = oracles::random_field(b, 1, 0);
    const double dt = 0.01;
    Field z = prox_step(P, w, dt);
    for (int k = 0; k < 4; ++k)
        CHECK(z.coeffs()[k] == Catch::Approx(w.coeffs()[k] / (1.0 + dt * b.eigenvalue(k))));
}

TEST_CASE("proximal step satisfies its optimality condition") {
    SpectralBasis b(4, 64);
    for (const Potential& P : {Potential::porous_medium(2.0), Potential::p_laplace(3.0)}) {
        Field w = oracles::random_field(b, 2, 0, 0.5);
        const double dt = 0.005;
        Field z = prox_step(P, w, dt);
        // dphi(z) + (z - w)_H / dt = 0 in coefficient pairing form
        Vec residual = P.dphi_coeff(z);
        for (int k = 0; k < 4; ++k)
            residual[k] +=
                space_weight(P.h_tag(), b.eigenvalue(k)) * (z.coeffs()[k] - w.coeffs()[k]) / dt;
        CHECK(residual.lpNorm<Eigen::Infinity>() < 1e-8);
    }
}

TEST_CASE("proximal step rejects dt beyond the quasi-convexity window") {
    SpectralBasis b(2);
    Potential P = Potential::reaction_diffusion({ReactionTerm::allen_cahn()});
    REQUIRE(P.lambda_qc() == 1.0);
    CHECK_THROWS_AS(prox_step(P, Field::mode(b, 1), 1.5), std::invalid_argument);
}

TEST_CASE("per-step dissipation of the proximal scheme") {
    SpectralBasis b(4, 64);
    for (const Potential& P : {Potential::porous_medium(2.0),
                               Potential::reaction_diffusion({ReactionTerm::cubic_decay()}),
                               Potential::p_laplace(3.0)}) {
        Field x = oracles::random_field(b, 3, 0, 0.5);
        const double dt = 0.01;
        for (int j = 0; j < 20; ++j) {
            Field next = prox_step(P, x, dt);
            const double d = norm(next - x, P.h_tag());
            CHECK(P.eval_phi(next) + d * d / (2.0 * dt) <= P.eval_phi(x) + 1e-10);
            x = next;
        }
    }
}

TEST_CASE("deterministic heat flow reproduces the discrete resolvent power") {
    SpectralBasis b(4);
    Potential P = Potential::reaction_diffusion();
    SchemeConfig cfg;
    cfg.dt = 1e-3;
    cfg.t_end = 0.05;
    Field x0 = oracles::random_field(b, 4, 0);
    WienerStream st{0, 0, 1};
    PathSolution sol = simulate_path(x0, P, NoiseOperator::zero(), cfg, b, st);
    REQUIRE(sol.times.size() == 51);
    for (int k = 0; k < 4; ++k) {
        const double expected =
            x0.coeffs()[k] / std::pow(1.0 + cfg.dt * b.eigenvalue(k), 50.0);
        CHECK(sol.states.back().coeffs()[k] == Catch::Approx(expected).epsilon(1e-12));
        // and the resolvent power approximates the heat semigroup, with the
        // O(lambda^2 T dt) bias of the implicit scheme
        const double lam = b.eigenvalue(k);
        const double semigroup = x0.coeffs()[k] * std::exp(-lam * cfg.t_end);
        const double bias = std::abs(semigroup) * std::expm1(lam * lam * cfg.t_end * cfg.dt);
        CHECK(std::abs(sol.states.back().coeffs()[k] - semigroup) <=
              bias + 1e-6 * std::abs(x0.coeffs()[k]));
    }
    CHECK(sol.energies.front() == Catch::Approx(P.eval_phi(x0)));
    CHECK(sol.increments_consumed == 0);
}

TEST_CASE("explicit scheme matches its linear recursion and its CFL guard") {
    SpectralBasis b(2);
    Potential P = Potential::reaction_diffusion();
    SchemeConfig cfg;
    cfg.scheme = Scheme::ExplicitEM;
    cfg.dt = 1e-3;
    cfg.t_end = 0.01;
    Field x0 = Field::mode(b, 1);
    WienerStream st{0, 0, 1};
    PathSolution sol = simulate_path(x0, P, NoiseOperator::zero(), cfg, b, st);
    CHECK(sol.states.back().coeffs()[0] ==
          Catch::Approx(std::pow(1.0 - cfg.dt * b.eigenvalue(0), 10.0)).epsilon(1e-12));

    SchemeConfig bad = cfg;
    bad.dt = 1.0;  // violates dt <= cfl_safety / lambda_max
    CHECK_FALSE(bad.validate(P, b).empty());
    CHECK(cfg.validate(P, b).empty());
}

TEST_CASE("unstable explicit stepping raises DivergedPathError") {
    SpectralBasis b(2);
    Potential P = Potential::reaction_diffusion();
    SchemeConfig cfg;
    cfg.scheme = Scheme::ExplicitEM;
    cfg.dt = 1.0;  // amplification factor |1 - lambda| ~ 8.9 per step
    cfg.t_end = 20.0;
    WienerStream st{0, 0, 1};
    CHECK_THROWS_AS(simulate_path(Field::mode(b, 1), P, NoiseOperator::zero(), cfg, b, st),
                    DivergedPathError);
}

TEST_CASE("initial projections agree where they should") {
    SpectralBasis fine(8, 64), run(4, 32);
    Potential P = Potential::reaction_diffusion();
    Field x0 = oracles::random_field(fine, 5, 0);
    SchemeConfig cfg;
    cfg.initial_projection = InitialProjection::Orthogonal;
    Field a = project_initial(x0, run, P, cfg);
    CHECK(a.coeffs() == x0.coeffs().head(4));
    cfg.initial_projection = InitialProjection::Weighted;
    Field w = project_initial(x0, run, P, cfg);
    // quadratic phi_tilde_1: weighted == orthogonal
    CHECK((w.coeffs() - a.coeffs()).lpNorm<Eigen::Infinity>() < 1e-9);
    cfg.initial_projection = InitialProjection::LevelSet;
    cfg.levelset_level = 0.5 * P.phi_tilde1(x0);
    Field l = project_initial(x0, run, P, cfg);
    CHECK(P.phi_tilde1(Field(fine, embed(l, fine).coeffs())) <= cfg.levelset_level * (1.0 + 1e-4));
}

TEST_CASE("stochastic paths are reproducible and consume bookkept increments") {
    SpectralBasis b(4, 32);
    Potential P = Potential::reaction_diffusion();
    NoiseOperator B = NoiseOperator::additive_powerlaw(b, 3, 0.2, 1.0);
    SchemeConfig cfg;
    cfg.dt = 1e-3;
    cfg.t_end = 0.02;
    cfg.seed = 17;
    WienerStream st{cfg.seed, 0, 1};
    PathSolution s1 = simulate_path(Field::mode(b, 1), P, B, cfg, b, st);
    PathSolution s2 = simulate_path(Field::mode(b, 1), P, B, cfg, b, st);
    CHECK(s1.states.back().coeffs() == s2.states.back().coeffs());
    CHECK(s1.increments_consumed == 20u * 3u);
}

TEST_CASE("picard: additive noise converges in one iteration") {
    SpectralBasis b(4, 32);
    Potential P = Potential::reaction_diffusion();
    NoiseOperator B = NoiseOperator::additive_powerlaw(b, 2, 0.3, 1.0);
    SchemeConfig cfg;
    cfg.dt = 1e-3;
    cfg.t_end = 0.01;
    PicardReport rep;
    WienerStream st{3, 0, 1};
    PathSolution sol = picard_solve(Field::mode(b, 1), P, B, cfg, b, st, 1e-10, 50, &rep);
    CHECK(rep.iterations == 1);
    CHECK(rep.subdivisions == 0);
    WienerStream st2{3, 0, 1};
    PathSolution direct = simulate_path(Field::mode(b, 1), P, B, cfg, b, st2);
    CHECK((sol.states.back().coeffs() - direct.states.back().coeffs()).lpNorm<Eigen::Infinity>() <
          1e-14);
}

TEST_CASE("picard: multiplicative noise contracts and tracks the direct scheme") {
    SpectralBasis b(4, 32);
    Potential P = Potential::reaction_diffusion();
    NoiseOperator B = NoiseOperator::multiplicative_powerlaw(2, 0.2, 2.0);
    SchemeConfig cfg;
    cfg.dt = 2e-3;
    cfg.t_end = 0.02;
    PicardReport rep;
    WienerStream st{5, 0, 1};
    PathSolution sol = picard_solve(Field::mode(b, 1), P, B, cfg, b, st, 1e-12, 50, &rep);
    CHECK(rep.iterations >= 2);
    for (double r : rep.contraction_ratios) CHECK(r < 1.0);
    WienerStream st2{5, 0, 1};
    PathSolution direct = simulate_path(Field::mode(b, 1), P, B, cfg, b, st2);
    // freezing the noise along the path costs O(dt) against the direct scheme
    double dist = 0.0;
    for (std::size_t j = 0; j < sol.times.size(); ++j)
        dist = std::max(dist, norm(sol.states[j] - direct.states[j], P.h_tag()));
    CHECK(dist > 0.0);
    CHECK(dist < 10.0 * cfg.dt);
}

TEST_CASE("path CSV format") {
    SpectralBasis b(2);
    Potential P = Potential::reaction_diffusion();
    SchemeConfig cfg;
    cfg.dt = 0.1;
    cfg.t_end = 0.0;
    WienerStream st{0, 0, 1};
    PathSolution sol = simulate_path(Field::mode(b, 1), P, NoiseOperator::zero(), cfg, b, st);
    std::string csv = path_csv(sol, true);
    CHECK(csv.rfind("t,energy,subgrad_h_norm,coeff_1,coeff_2\n", 0) == 0);
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 2);  // header + single t=0 row
    CHECK(path_csv(sol, false).rfind("t,energy,subgrad_h_norm\n", 0) == 0);
}
