#include <algorithm>
#include <cmath>
#include <numbers>

#include "doctest.h"
#include "nodal/bifurcation.hpp"
#include "nodal/error.hpp"
#include "nodal/linalg.hpp"

using namespace nodal;
constexpr double kPi = std::numbers::pi;

namespace {

struct Branches {
    MeshPtr mesh = Mesh::build(Square{kPi}, kPi / 48);
    EigenspaceBasis basis = second_eigenspace(mesh);
    std::vector<double> grid = default_lambda_grid(basis.lambda2h, 0.02, 0.4, 5);
    Branch m = continue_branch(mesh, basis, 0.0, grid, std::nullopt, ContinuationConfig{});
    Branch d = continue_branch(mesh, basis, kPi / 4, grid, std::nullopt, ContinuationConfig{});
};

const Branches& branches() {
    static const Branches b;
    return b;
}

}  // namespace

TEST_CASE("analytic sigma and energy ratio") {
    CHECK(analytic_sigma(0.0) == doctest::Approx(9.0 / 16));
    CHECK(analytic_sigma(kPi / 4) == doctest::Approx(21.0 / 32));
    CHECK(analytic_sigma(kPi / 2) == doctest::Approx(9.0 / 16));
    CHECK(expected_energy_ratio(9.0 / 16) == doctest::Approx(-kPi * kPi / 9));
    CHECK(expected_energy_ratio(21.0 / 32) == doctest::Approx(-2 * kPi * kPi / 21));
}

TEST_CASE("lambda grid") {
    const auto g = default_lambda_grid(5.0);
    REQUIRE(g.size() == 12);
    CHECK(g.front() > 5.02);
    CHECK(g.back() == doctest::Approx(5.4));
    for (std::size_t i = 1; i < g.size(); ++i) CHECK(g[i] > g[i - 1]);
    CHECK_THROWS_AS(default_lambda_grid(5.0, 0.4, 0.02), PreconditionError);
}

TEST_CASE("sigma fit on synthetic data") {
    std::vector<double> lam;
    std::vector<double> s;
    for (int k = 1; k <= 6; ++k) {
        s.push_back(0.1 * k);
        lam.push_back(5.0 + 0.7 * 0.01 * k * k);
    }
    const SigmaFit f = fit_sigma(lam, s, 5.0);
    CHECK(f.sigma_hat == doctest::Approx(0.7).epsilon(1e-12));
    CHECK(f.stderr_ < 1e-10);
    CHECK_THROWS_AS(fit_sigma({5.1, 5.2}, {0.1, 0.2}, 5.0), PreconditionError);
}

TEST_CASE("energy identity on the zero field") {
    const MeshPtr m = Mesh::build(Square{kPi}, kPi / 8);
    CHECK(energy_identity_check(ScalarField::zeros(m), 5.0) == 0.0);
}

TEST_CASE("branches near the bifurcation point") {
    const Branches& b = branches();
    REQUIRE_FALSE(b.m.truncated);
    REQUIRE_FALSE(b.d.truncated);
    REQUIRE(b.m.points.size() == 5);
    REQUIRE(b.d.points.size() == 5);
    CHECK(std::abs(b.m.sigma_hat / (9.0 / 16) - 1) < 0.07);
    CHECK(std::abs(b.d.sigma_hat / (21.0 / 32) - 1) < 0.07);
    for (std::size_t k = 0; k < b.m.points.size(); ++k) {
        const BranchPoint& pm = b.m.points[k];
        const BranchPoint& pd = b.d.points[k];
        CHECK(pm.type == BranchType::M);
        CHECK(pd.type == BranchType::D);
        CHECK(pm.morse == 1);
        CHECK(pd.morse == 2);
        CHECK(pm.zeros_flagged == 0);
        CHECK(pd.zeros_flagged == 0);
        CHECK(pm.energy_J < pd.energy_J);
        CHECK(pm.energy_u == doctest::Approx(pm.lambda * pm.energy_J).epsilon(1e-10));
        CHECK(energy_identity_check(pm) < 1e-6);
        CHECK(energy_identity_check(pd) < 1e-6);
        if (k > 0) CHECK(pm.s > b.m.points[k - 1].s);
    }
    const auto rm = energy_ratio_check(b.m);
    const auto rd = energy_ratio_check(b.d);
    CHECK(std::abs(rm.front().ratio / expected_energy_ratio(9.0 / 16) - 1) < 0.1);
    CHECK(std::abs(rd.front().ratio / expected_energy_ratio(21.0 / 32) - 1) < 0.1);
}

TEST_CASE("u-form and v-form Morse indices agree") {
    const Branches& b = branches();
    for (const Branch* br : {&b.m, &b.d}) {
        const BranchPoint& p = br->points.back();
        const ScalarField u = std::sqrt(p.lambda) * p.field;
        const NegativeCount nc = count_negative_eigs(u_form_linearization(u, p.lambda));
        CHECK(nc.negatives == p.morse);
        CHECK(nc.zeros_flagged == 0);
    }
}

TEST_CASE("branches at alpha and alpha + pi/2 are mirror images") {
    const Branches& b = branches();
    const Branch other = continue_branch(b.mesh, b.basis, kPi / 2, {b.grid.front()}, std::nullopt,
                                         ContinuationConfig{});
    REQUIRE(other.points.size() == 1);
    const BranchPoint& p = b.m.points.front();
    const BranchPoint& q = other.points.front();
    CHECK(q.energy_J == doctest::Approx(p.energy_J).epsilon(1e-9));
    const ScalarField mirrored = reflect(p.field, Reflection::Diagonal);
    CHECK(std::min((mirrored - q.field).sup_norm(), (mirrored + q.field).sup_norm()) < 1e-8);
}

TEST_CASE("branch csv") {
    const std::string csv = branch_csv(branches().m);
    CHECK(csv.rfind("lambda,s,energy_J,energy_u,morse,zeros_flagged,alpha_deg,residual\n", 0) == 0);
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 6);
}
