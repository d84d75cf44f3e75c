#include <cmath>
#include <numbers>
#include <random>

#include "doctest.h"
#include "nodal/error.hpp"
#include "nodal/flow.hpp"

using namespace nodal;
constexpr double kPi = std::numbers::pi;

namespace {

struct Fixture {
    MeshPtr mesh = Mesh::build(Square{kPi}, kPi / 24);
    Nonlinearity spec = Nonlinearity::allen_cahn(5.2);
    FlowConfig cfg;

    ScalarField mode(int k, int l, double amp) const {
        return ScalarField::sample(mesh, [=](Point p) { return amp * std::sin(k * p.x) * std::sin(l * p.y); });
    }
    ScalarField positive() const {
        auto rep = flow_to_equilibrium(mode(1, 1, 0.1), spec, cfg);
        REQUIRE(rep.converged);
        return newton_refine(rep.field, spec, 1e-12).field;
    }
};

}  // namespace

TEST_CASE("flow config validation") {
    FlowConfig c;
    c.tau = 1.5;
    CHECK_THROWS_AS(validate(c), PreconditionError);
    c.tau = 0.5;
    c.residual_tol = 0.0;
    CHECK_THROWS_AS(validate(c), PreconditionError);
}

TEST_CASE("sign classification") {
    CHECK(classify_sign(Vector{0.0, 0.0}, 1e-10) == SignClass::Zero);
    CHECK(classify_sign(Vector{1.0, 1e-8}, 1e-10) == SignClass::Positive);
    CHECK(classify_sign(Vector{1.0, -1e-7}, 1e-10) == SignClass::Positive);
    CHECK(classify_sign(Vector{1.0, -1e-5}, 1e-10) == SignClass::Nodal);
    CHECK(classify_sign(Vector{-1.0, 0.0}, 1e-10) == SignClass::Negative);
}

TEST_CASE("energy of zero and of a small first mode") {
    Fixture fx;
    CHECK(energy(ScalarField::zeros(fx.mesh), fx.spec) == 0.0);
    CHECK(energy(fx.mode(1, 1, 1e-3), fx.spec) < 0.0);
}

TEST_CASE("zero start converges immediately") {
    Fixture fx;
    auto rep = flow_to_equilibrium(ScalarField::zeros(fx.mesh), fx.spec, fx.cfg);
    CHECK(rep.converged);
    CHECK(rep.steps == 0);
    CHECK(rep.sign_class == SignClass::Zero);
    CHECK(k_map(ScalarField::zeros(fx.mesh), fx.spec, 1.0).sup_norm() == 0.0);
}

TEST_CASE("positive solution from the first mode") {
    Fixture fx;
    auto rep = flow_to_equilibrium(fx.mode(1, 1, 0.1), fx.spec, fx.cfg);
    REQUIRE(rep.converged);
    CHECK(rep.sign_class == SignClass::Positive);
    CHECK(rep.field.sup_norm() < 1.0);
    CHECK(rep.energy < 0.0);
    CHECK(rep.residual <= default_residual_tol(*fx.mesh));
    CHECK(residual_norm(rep.field, fx.spec) <= default_residual_tol(*fx.mesh));
    for (std::size_t k = 1; k < rep.energy_trace.size(); ++k) CHECK(rep.energy_trace[k] <= rep.energy_trace[k - 1]);
}

TEST_CASE("newton sharpens a flow limit quadratically") {
    Fixture fx;
    FlowConfig loose = fx.cfg;
    loose.residual_tol = 1e-4;
    auto rep = flow_to_equilibrium(fx.mode(1, 1, 0.1), fx.spec, loose);
    REQUIRE(rep.converged);
    auto nr = newton_refine(rep.field, fx.spec, 1e-12);
    CHECK(nr.residual <= 1e-12);
    CHECK(nr.steps <= 10);
    auto again = newton_refine(nr.field, fx.spec, 1e-12);
    CHECK(again.steps == 0);
}

TEST_CASE("newton and linearization refuse non-C1 families") {
    Fixture fx;
    auto spec = Nonlinearity::power(0.5);
    CHECK_THROWS_AS(newton_refine(fx.mode(1, 1, 0.5), spec, 1e-10), NotC1Error);
    CHECK_THROWS_AS(linearization(fx.mode(1, 1, 0.5), spec), NotC1Error);
}

TEST_CASE("equilibria are fixed points of K and of the flow step") {
    Fixture fx;
    auto w = fx.positive();
    const double kappa = resolve_kappa(fx.cfg, fx.spec);
    auto kw = k_map(w, fx.spec, kappa);
    CHECK((kw - w).sup_norm() < 1e-10);
    auto step = flow_step(w, 0.9, fx.spec, kappa);
    CHECK((step - w).sup_norm() < 1e-10);
    auto u = fx.mode(1, 2, 0.3);
    auto one = flow_step(u, 1.0, fx.spec, kappa);
    CHECK((one - k_map(u, fx.spec, kappa)).sup_norm() < 1e-12);
}

TEST_CASE("order interval [0, w] is invariant") {
    Fixture fx;
    auto w = fx.positive();
    const double kappa = resolve_kappa(fx.cfg, fx.spec);
    const Nonlinearity fs = flow_nonlinearity(fx.spec);
    std::mt19937 rng(17);
    std::uniform_real_distribution<double> U(0, 1);
    for (int trial = 0; trial < 5; ++trial) {
        Vector x(w.size());
        for (std::size_t k = 0; k < x.size(); ++k) x[k] = U(rng) * w[k];
        ScalarField u(fx.mesh, x);
        auto ku = k_map(u, fs, kappa);
        for (std::size_t k = 0; k < x.size(); ++k) {
            CHECK(ku[k] >= -1e-10);
            CHECK(ku[k] <= w[k] + 1e-10);
        }
    }
}

TEST_CASE("energy is nonincreasing from random starts") {
    Fixture fx;
    FlowConfig cfg = fx.cfg;
    cfg.max_steps = 60;
    std::mt19937 rng(23);
    std::uniform_real_distribution<double> U(-1, 1);
    for (int trial = 0; trial < 10; ++trial) {
        Vector x(fx.mesh->size());
        for (double& v : x) v = U(rng);
        auto rep = flow_to_equilibrium(ScalarField(fx.mesh, x), fx.spec, cfg);
        for (std::size_t k = 1; k < rep.energy_trace.size(); ++k)
            CHECK(rep.energy_trace[k] <= rep.energy_trace[k - 1]);
    }
}

TEST_CASE("symmetric starts keep their symmetry exactly") {
    Fixture fx;
    FlowConfig cfg = fx.cfg;
    cfg.max_steps = 40;
    // sampled sines are only symmetric to rounding; project exactly
    auto raw = fx.mode(1, 2, 0.2) + fx.mode(3, 2, 0.1);
    auto even = 0.5 * (raw + reflect(raw, Reflection::YAxis));
    auto u0 = 0.5 * (even - reflect(even, Reflection::XAxis));
    bool ok = true;
    auto obs = [&](int, std::span<const double> u, double, double) {
        ScalarField f(fx.mesh, Vector(u.begin(), u.end()));
        auto ry = reflect(f, Reflection::YAxis);
        auto rx = reflect(f, Reflection::XAxis);
        for (std::size_t k = 0; k < u.size(); ++k) {
            if (ry[k] != u[k] || rx[k] != -u[k]) ok = false;
        }
        return true;
    };
    flow_to_equilibrium(u0, fx.spec, cfg, obs);
    CHECK(ok);
}

TEST_CASE("no nodal equilibrium below the second eigenvalue") {
    Fixture fx;
    auto rep = flow_to_equilibrium(fx.mode(1, 2, 0.1), Nonlinearity::allen_cahn(4.5), fx.cfg);
    CHECK(rep.converged);
    CHECK(rep.sign_class != SignClass::Nodal);
}
