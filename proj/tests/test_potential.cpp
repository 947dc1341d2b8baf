#include "oracles.hpp"

#include <catch2/catch_amalgamated.hpp>

using namespace gradflow;

namespace {

std::vector<Potential> all_families() {
    return {Potential::porous_medium(2.0),
            Potential::reaction_diffusion({ReactionTerm::allen_cahn()}),
            Potential::p_laplace(3.0, {ReactionTerm::cubic_decay()})};
}

}  // namespace

TEST_CASE("porous medium energy of e_1 matches the quadrature oracle") {
    SpectralBasis b(1, 512);
    Potential P = Potential::porous_medium(2.0);
    Field e1 = Field::mode(b, 1);
    const double expected = oracles::integrate([](double x) {
        const double v = std::sqrt(2.0) * std::sin(pi * x);
        return std::pow(std::abs(v), 3.0) / 3.0;
    });
    CHECK(P.eval_phi(e1) == Catch::Approx(expected).epsilon(1e-6));
    CHECK(P.eval_phi_tilde(e1) == Catch::Approx(expected).epsilon(1e-6));
    CHECK(P.phi_tilde1(e1) ==
          Catch::Approx(expected + 0.5 / (pi * pi)).epsilon(1e-6));  // H = H^{-1}
}

TEST_CASE("porous medium Hessian form at e_1") {
    SpectralBasis b(1, 1024);
    Potential P = Potential::porous_medium(2.0);
    Field e1 = Field::mode(b, 1);
    // D^2 phi(v)(w,w) = int Phi'(v) w^2 = 2 int |v| v^2 with v = w = e_1
    const double expected = oracles::integrate([](double x) {
        const double v = std::sqrt(2.0) * std::sin(pi * x);
        return 2.0 * std::abs(v) * v * v;
    });
    CHECK(expected == Catch::Approx(2.0 * 2.0 * std::sqrt(2.0) * 4.0 / (3.0 * pi)).epsilon(1e-9));
    CHECK(P.hessian_qform(e1, e1) == Catch::Approx(expected).epsilon(1e-5));
    // cross-check against the second difference of the energy itself
    auto phi_of = [&](const Vec& c) { return P.eval_phi(Field(b, c)); };
    const double fd = oracles::fd_second_directional(phi_of, e1.coeffs(), e1.coeffs());
    CHECK(P.hessian_qform(e1, e1) == Catch::Approx(fd).epsilon(1e-4));
}

TEST_CASE("linear reaction-diffusion energy is the Dirichlet form") {
    SpectralBasis b(4);
    Potential P = Potential::reaction_diffusion();
    Field f = oracles::random_field(b, 5, 0);
    double expected = 0.0;
    for (int k = 0; k < 4; ++k) expected += 0.5 * b.eigenvalue(k) * f.coeffs()[k] * f.coeffs()[k];
    CHECK(P.eval_phi(f) == Catch::Approx(expected).epsilon(1e-12));
    CHECK(P.is_linear_diagonal());
    CHECK(P.phi_tilde_is_quadratic());
    CHECK(P.lambda_qc() == 0.0);
}

TEST_CASE("allen-cahn reaction energy matches the oracle") {
    SpectralBasis b(2, 256);
    Potential P = Potential::reaction_diffusion({ReactionTerm::allen_cahn()});
    Vec c(2);
    c << 0.7, -0.3;
    Field f(b, c);
    const double dirichlet = 0.5 * (b.eigenvalue(0) * 0.49 + b.eigenvalue(1) * 0.09);
    const double reaction = oracles::integrate([&](double x) {
        const double v = 0.7 * std::sqrt(2.0) * std::sin(pi * x) -
                         0.3 * std::sqrt(2.0) * std::sin(2.0 * pi * x);
        return 0.5 * v * v - 0.25 * v * v * v * v;
    });
    CHECK(P.eval_phi(f) == Catch::Approx(dirichlet - reaction).epsilon(1e-6));
    CHECK(P.lambda_qc() == 1.0);
    CHECK_FALSE(P.is_linear_diagonal());
}

TEST_CASE("gradients agree with central differences in every family") {
    SpectralBasis b(6, 96);
    for (const Potential& P : all_families()) {
        for (int s = 0; s < 8; ++s) {
            Field v = oracles::random_field(b, 100 + s, s, 0.8);
            auto phi_of = [&](const Vec& c) { return P.eval_phi(Field(b, c)); };
            Vec fd = oracles::fd_gradient(phi_of, v.coeffs());
            Vec g = P.dphi_coeff(v);
            CHECK((g - fd).lpNorm<Eigen::Infinity>() <
                  1e-5 * std::max(1.0, fd.lpNorm<Eigen::Infinity>()));
        }
    }
}

TEST_CASE("hessian quadratic forms agree with second differences") {
    SpectralBasis b(5, 80);
    for (const Potential& P : all_families()) {
        for (int s = 0; s < 5; ++s) {
            Field v = oracles::random_field(b, 200 + s, s, 0.8);
            Field w = oracles::random_field(b, 300 + s, s, 1.0);
            auto phi_of = [&](const Vec& c) { return P.eval_phi(Field(b, c)); };
            const double fd = oracles::fd_second_directional(phi_of, v.coeffs(), w.coeffs());
            CHECK(P.hessian_qform(v, w) == Catch::Approx(fd).margin(1e-4 * std::abs(fd) + 1e-4));
        }
    }
}

TEST_CASE("phi_tilde_1 derivatives agree with finite differences") {
    SpectralBasis b(5, 80);
    for (const Potential& P : all_families()) {
        Field v = oracles::random_field(b, 400, 0, 0.7);
        auto pt1 = [&](const Vec& c) { return P.phi_tilde1(Field(b, c)); };
        Vec fd = oracles::fd_gradient(pt1, v.coeffs());
        CHECK((P.phi_tilde1_grad(v) - fd).lpNorm<Eigen::Infinity>() <
              1e-4 * std::max(1.0, fd.lpNorm<Eigen::Infinity>()));
        Field w = oracles::random_field(b, 401, 1);
        const double fd2 = oracles::fd_second_directional(pt1, v.coeffs(), w.coeffs());
        const double qf = w.coeffs().dot(P.phi_tilde1_hess(v) * w.coeffs());
        CHECK(qf == Catch::Approx(fd2).margin(1e-3 * std::abs(fd2) + 1e-3));
    }
}

TEST_CASE("the subgradient is the H-representer of the derivative") {
    SpectralBasis b(5, 80);
    for (const Potential& P : all_families()) {
        Field v = oracles::random_field(b, 500, 0, 0.6);
        Field g = P.subgradient(v);
        Vec d = P.dphi_coeff(v);
        for (int k = 1; k <= 5; ++k)
            CHECK(inner(g, Field::mode(b, k), P.h_tag()) == Catch::Approx(d[k - 1]).margin(1e-10));
    }
}

TEST_CASE("exponent bookkeeping per family") {
    Potential pm = Potential::porous_medium(2.0);
    CHECK(pm.h_tag() == SpaceTag::Hminus1);
    CHECK(pm.p_list() == std::vector<double>{1.5});
    CHECK(pm.p_exponents() == std::vector<double>{1.0, 1.5});
    CHECK(pm.d_max() == 3.0);

    Potential rd = Potential::reaction_diffusion({ReactionTerm::allen_cahn()});
    CHECK(rd.h_tag() == SpaceTag::L2);
    CHECK(rd.p_list() == std::vector<double>{2.0});
    CHECK(rd.d_max() == 4.0);

    Potential lin = Potential::reaction_diffusion();
    CHECK(lin.p_exponents() == std::vector<double>{1.0});  // p_0 merges with trivial p_list
    CHECK(lin.d_max() == 2.0);

    Potential pl = Potential::p_laplace(3.0, {ReactionTerm::cubic_decay()});
    CHECK(pl.p_list() == (std::vector<double>{1.5, 2.0}));
    CHECK(pl.p_exponents() == (std::vector<double>{1.0, 1.5, 2.0}));
    CHECK(pl.plaplace_exponent() == 3.0);
}

TEST_CASE("assumption diagnostics produce finite constants") {
    SpectralBasis b(4, 64);
    for (const Potential& P : all_families()) {
        Field v = oracles::random_field(b, 600, 0, 0.5);
        std::vector<Field> ws;
        for (int k = 1; k <= 4; ++k) ws.push_back(Field::mode(b, k));
        auto a2 = P.check_a2_bound(v, ws);
        CHECK(std::isfinite(a2.constant));
        CHECK(a2.rhs > 0.0);
        auto co = P.check_coercivity(v);
        CHECK(std::isfinite(co.bound_a4));
        CHECK(std::isfinite(co.bound_a4prime));
    }
    // the linear drift is dissipative: 2<-Dphi(v),v> = -2 sum lambda c^2 < 0
    Potential lin = Potential::reaction_diffusion();
    Field v = oracles::random_field(b, 601, 0);
    CHECK(lin.check_coercivity(v).pairing < 0.0);
}

TEST_CASE("subhomogeneity of phi_tilde holds with constant 2^d_max") {
    SpectralBasis b(4, 64);
    for (const Potential& P : all_families()) {
        for (int s = 0; s < 20; ++s) {
            Field v = oracles::random_field(b, 700 + s, s);
            const double lhs = P.eval_phi_tilde(2.0 * v);
            const double rhs = std::pow(2.0, P.d_max()) * P.eval_phi_tilde(v);
            CHECK(lhs <= rhs * (1.0 + 1e-12));
        }
    }
}

TEST_CASE("nonsmooth parameter ranges are flagged") {
    CHECK(Potential::porous_medium(1.5).flags().size() == 1);
    CHECK(Potential::porous_medium(2.0).flags().empty());
    CHECK(Potential::p_laplace(2.0).flags().empty());
}
