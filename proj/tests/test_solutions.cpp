#include <algorithm>
#include <cmath>
#include <numbers>

#include "doctest.h"
#include "nodal/error.hpp"
#include "nodal/solutions.hpp"

using namespace nodal;
constexpr double kPi = std::numbers::pi;

namespace {

struct Square32 {
    MeshPtr mesh = Mesh::build(Square{kPi}, kPi / 32);
    Nonlinearity spec = Nonlinearity::allen_cahn(5.2);
    FlowConfig cfg;
    EigenspaceBasis basis = second_eigenspace(mesh);
};

const Square32& fixture() {
    static const Square32 fx;
    return fx;
}

const PositiveSolution& positive() {
    static const PositiveSolution ps = positive_solution(fixture().mesh, fixture().spec, fixture().cfg);
    return ps;
}

const NodalCatalog& catalog() {
    static const NodalCatalog cat =
        nodal_search(fixture().mesh, fixture().spec, {}, SearchConfig{}, &fixture().basis);
    return cat;
}

}  // namespace

TEST_CASE("first mode") {
    const FirstMode fm = first_mode(fixture().mesh);
    CHECK(fm.phi.sup_norm() == doctest::Approx(1.0));
    CHECK(fm.phi.min() > 0.0);
    CHECK(fm.lambda1h == doctest::Approx(2.0).epsilon(2e-3));
}

TEST_CASE("positive solution on the square") {
    const PositiveSolution& ps = positive();
    CHECK(ps.assumptions_hold);
    CHECK(ps.report.converged);
    CHECK(ps.report.sign_class == SignClass::Positive);
    CHECK(ps.cross_check <= 1e-6);
    CHECK(ps.report.field.sup_norm() <= 1.0 + 1e-8);
    CHECK(ps.report.energy < 0.0);
    CHECK(residual_norm(ps.report.field, fixture().spec) <= 1e-10);
    CHECK(morse_index(ps.report.field, fixture().spec).index == 0);
    // even under every symmetry of the square
    for (Reflection r : kAllReflections) {
        CHECK((reflect(ps.report.field, r) - ps.report.field).sup_norm() < 1e-10);
    }
}

TEST_CASE("positive solution below the first eigenvalue decays") {
    const PositiveSolution ps = positive_solution(fixture().mesh, Nonlinearity::allen_cahn(1.5), FlowConfig{});
    CHECK_FALSE(ps.assumptions_hold);
    CHECK(ps.report.sign_class == SignClass::Zero);
}

TEST_CASE("sublinear power") {
    const MeshPtr m = Mesh::build(Square{kPi}, kPi / 24);
    const Nonlinearity spec = Nonlinearity::power(0.5);
    const PositiveSolution ps = positive_solution(m, spec, FlowConfig{});
    CHECK(ps.report.converged);
    CHECK(ps.report.sign_class == SignClass::Positive);
    CHECK(ps.report.energy < 0.0);
    CHECK_THROWS_AS(morse_index(ps.report.field, spec), NotC1Error);
    CHECK_THROWS_AS(newton_refine(ps.report.field, spec, 1e-10), NotC1Error);
}

TEST_CASE("default seeds") {
    const auto seeds = default_seeds(fixture().basis, 0.1, 8);
    CHECK(seeds.size() == 16);
    for (const auto& [name, s] : seeds) CHECK(s.sup_norm() == doctest::Approx(0.1));
}

TEST_CASE("nodal catalog at lambda 5.2") {
    const NodalCatalog& cat = catalog();
    REQUIRE(cat.entries.size() == 4);
    const ScalarField& w = positive().report.field;
    int n_m = 0;
    int n_d = 0;
    for (const auto& e : cat.entries) {
        const ScalarField& u = e.report.field;
        CHECK(e.report.sign_class == SignClass::Nodal);
        CHECK(e.report.residual <= 1e-10);
        CHECK(e.report.energy < 0.0);
        CHECK(e.report.energy > positive().report.energy);
        for (std::size_t k = 0; k < u.size(); ++k) CHECK(std::abs(u[k]) <= w[k] + 1e-6);
        const BranchClass bc = classify_square_branch(u, fixture().basis);
        const MorseResult mi = morse_index(u, fixture().spec);
        CHECK(mi.zeros_flagged == 0);
        if (bc.type == BranchType::M) {
            ++n_m;
            CHECK(mi.index == 1);
            CHECK(nodal_domains(u) == 2);
        } else {
            REQUIRE(bc.type == BranchType::D);
            ++n_d;
            CHECK(mi.index == 2);
        }
    }
    CHECK(n_m == 2);
    CHECK(n_d == 2);
    CHECK(classify_square_branch(cat.entries[cat.best].report.field, fixture().basis).type == BranchType::M);
    CHECK(cat.c_nod == doctest::Approx(cat.entries[cat.best].report.energy));
}

TEST_CASE("catalog is closed under u -> -u and the square symmetries") {
    const NodalCatalog& cat = catalog();
    REQUIRE_FALSE(cat.empty());
    // every symmetric image of an entry is again an entry up to sign
    for (const auto& e : cat.entries) {
        for (Reflection r : kAllReflections) {
            const ScalarField img = reflect(e.report.field, r);
            double best = INFINITY;
            for (const auto& f : cat.entries) {
                best = std::min({best, (img - f.report.field).sup_norm(), (img + f.report.field).sup_norm()});
            }
            CHECK(best < 1e-6);
        }
    }
}

TEST_CASE("no nodal solutions below the second eigenvalue") {
    const NodalCatalog cat = nodal_search(fixture().mesh, Nonlinearity::allen_cahn(4.5), {}, SearchConfig{},
                                          &fixture().basis);
    CHECK(cat.empty());
}

TEST_CASE("nodal_solve from a projected seed keeps its symmetry to round-off") {
    const ScalarField seed = symmetrize_seed(0.1 * fixture().basis.psi1);
    const SolveReport r = nodal_solve(seed, fixture().spec, SearchConfig{});
    CHECK(r.converged);
    CHECK((r.field + reflect(r.field, Reflection::XAxis)).sup_norm() < 1e-14);
    CHECK((r.field - reflect(r.field, Reflection::YAxis)).sup_norm() < 1e-14);
}

TEST_CASE("morse index of zero counts eigenvalues below lambda") {
    const MorseResult mi = morse_index(ScalarField::zeros(fixture().mesh), fixture().spec);
    CHECK(mi.index == 3);
    CHECK(mi.zeros_flagged == 0);
}

TEST_CASE("constructive mountain-pass path") {
    const NodalCatalog& cat = catalog();
    const ScalarField& u = cat.entries[cat.best].report.field;
    const PathEstimate p =
        constructive_mp_path(u, positive().report.field, fixture().spec, fixture().cfg, 0.05 * u.sup_norm(), 20);
    CHECK(p.certificate);
    CHECK(p.max_energy <= cat.c_nod + 1e-3 * std::abs(cat.c_nod));
    CHECK(p.energies.front() == doctest::Approx(positive().report.energy).epsilon(1e-6));
    CHECK(p.energies.back() == doctest::Approx(positive().report.energy).epsilon(1e-6));
    // the path runs from -w through u to w
    CHECK((p.images.front() + positive().report.field).sup_norm() < 1e-3);
    CHECK((p.images.back() - positive().report.field).sup_norm() < 1e-3);
}

TEST_CASE("string method finds the least-energy saddle") {
    const PathEstimate p = string_saddle(positive().report.field, fixture().basis.psi2, fixture().spec,
                                         fixture().cfg, StringConfig{});
    CHECK(p.ok);
    CHECK(p.saddle_residual <= 1e-5);
    CHECK(std::abs(p.max_energy - catalog().c_nod) <= 1e-2 * std::abs(catalog().c_nod));
    const ScalarField& z = p.images[p.argmax];
    CHECK(classify_square_branch(z, fixture().basis).type == BranchType::M);
}

TEST_CASE("worker count") { CHECK(worker_count() >= 1); }
