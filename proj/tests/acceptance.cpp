// One PASS/FAIL line per acceptance criterion; exit status 1 if any fails.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include "nodal/bifurcation.hpp"
#include "nodal/error.hpp"
#include "nodal/solutions.hpp"

using namespace nodal;
constexpr double kPi = std::numbers::pi;

namespace {

struct Outcome {
    bool pass = true;
    std::string detail;

    void require(bool ok, const std::string& what) {
        pass = pass && ok;
        if (!detail.empty()) detail += "; ";
        detail += (ok ? "" : "FAILED ") + what;
    }
};

std::string f6(double v) {
    char buf[48];
    std::snprintf(buf, sizeof buf, "%.6g", v);
    return buf;
}

// eigenvalues of the 5-point stencil on the square of side pi: (4/h^2)(sin^2(kh/2) + sin^2(lh/2))
double stencil_eig(int k, int l, double h) {
    return 4.0 / (h * h) * (std::pow(std::sin(k * h / 2), 2) + std::pow(std::sin(l * h / 2), 2));
}

Outcome spectrum() {
    Outcome o;
    const std::vector<double> hs = {kPi / 16, kPi / 32, kPi / 64};
    std::vector<double> e1;
    std::vector<double> e2;
    for (double h : hs) {
        const auto eig = smallest_eigs(neg_laplacian(*Mesh::build(Square{kPi}, h)), 3);
        o.require(std::abs(eig[0].value - stencil_eig(1, 1, h)) < 1e-8 &&
                      std::abs(eig[1].value - stencil_eig(1, 2, h)) < 1e-8 &&
                      std::abs(eig[2].value - stencil_eig(2, 1, h)) < 1e-8,
                  "h=pi/" + f6(kPi / h) + " matches the stencil formula");
        e1.push_back(std::abs(eig[0].value - 2.0));
        e2.push_back(std::abs(eig[1].value - 5.0));
        if (h == hs.back()) {
            o.require(e1.back() <= 1e-2, "lambda1h=" + f6(eig[0].value));
            o.require(e2.back() <= 3e-2, "lambda2h=" + f6(eig[1].value));
        }
    }
    for (std::size_t i = 0; i + 1 < hs.size(); ++i) {
        const double r1 = std::log(e1[i] / e1[i + 1]) / std::log(hs[i] / hs[i + 1]);
        const double r2 = std::log(e2[i] / e2[i + 1]) / std::log(hs[i] / hs[i + 1]);
        o.require(std::abs(r1 - 2) <= 0.2 && std::abs(r2 - 2) <= 0.2, "rates " + f6(r1) + ", " + f6(r2));
    }
    return o;
}

struct SquareBranches {
    MeshPtr mesh = Mesh::build(Square{kPi}, kPi / 96);
    EigenspaceBasis basis = second_eigenspace(mesh);
    std::vector<double> grid = default_lambda_grid(basis.lambda2h);
    Branch m = continue_branch(mesh, basis, 0.0, grid, std::nullopt, ContinuationConfig{});
    Branch d = continue_branch(mesh, basis, kPi / 4, grid, std::nullopt, ContinuationConfig{});
};

const SquareBranches& branches() {
    static const SquareBranches b;
    return b;
}

Outcome sigma_validation() {
    Outcome o;
    const SquareBranches& b = branches();
    for (const Branch* br : {&b.m, &b.d}) {
        const double sa = analytic_sigma(br->alpha_target);
        o.require(!br->truncated && br->points.size() == b.grid.size(),
                  f6(br->points.size()) + " points" + (br->note.empty() ? "" : " (" + br->note + ")"));
        if (br->points.size() < 4) continue;
        const double rel = std::abs(br->sigma_hat / sa - 1);
        o.require(rel <= 0.07, "sigma_hat=" + f6(br->sigma_hat) + " vs " + f6(sa) + " (rel " + f6(rel) + ")");
    }
    return o;
}

Outcome morse_indices() {
    Outcome o;
    for (double h : {kPi / 48, kPi / 64}) {
        const MeshPtr m = Mesh::build(Square{kPi}, h);
        const EigenspaceBasis b = second_eigenspace(m);
        for (double a : {0.0, kPi / 4}) {
            const Branch br = continue_branch(m, b, a, {b.lambda2h + 0.2}, std::nullopt, ContinuationConfig{});
            const std::string tag = std::string(a == 0.0 ? "M" : "D") + " at h=pi/" + f6(kPi / h);
            if (br.points.size() != 1) {
                o.require(false, tag + " not found");
                continue;
            }
            const BranchPoint& p = br.points[0];
            const int want = a == 0.0 ? 1 : 2;
            o.require(p.type == (a == 0.0 ? BranchType::M : BranchType::D) && p.morse == want &&
                          p.zeros_flagged == 0,
                      tag + ": index " + f6(p.morse) + " zeros " + f6(p.zeros_flagged));
        }
    }
    return o;
}

struct SquareCatalog {
    MeshPtr mesh = Mesh::build(Square{kPi}, kPi / 64);
    Nonlinearity spec = Nonlinearity::allen_cahn(5.2);
    EigenspaceBasis basis = second_eigenspace(mesh);
    PositiveSolution pos = positive_solution(mesh, spec, FlowConfig{});
    NodalCatalog cat = nodal_search(mesh, spec, {}, SearchConfig{}, &basis);
};

const SquareCatalog& square_catalog() {
    static const SquareCatalog c;
    return c;
}

Outcome energy_asymptotics() {
    Outcome o;
    const SquareBranches& b = branches();
    for (const Branch* br : {&b.m, &b.d}) {
        const auto r = energy_ratio_check(*br);
        if (r.empty()) {
            o.require(false, "empty branch");
            continue;
        }
        const double want = expected_energy_ratio(analytic_sigma(br->alpha_target));
        const double rel = std::abs(r.front().ratio / want - 1);
        o.require(rel <= 0.1, "ratio " + f6(r.front().ratio) + " vs " + f6(want) + " (rel " + f6(rel) + ")");
    }
    const SquareCatalog& c = square_catalog();
    o.require(c.spec.lambda() - c.basis.lambda2h > 0.19 && c.spec.lambda() - c.basis.lambda2h < 0.21,
              "catalog at lambda2h+" + f6(c.spec.lambda() - c.basis.lambda2h));
    if (c.cat.empty()) {
        o.require(false, "catalog empty");
        return o;
    }
    const BranchClass bc = classify_square_branch(c.cat.entries[c.cat.best].report.field, c.basis);
    o.require(bc.type == BranchType::M, "least-energy entry type " + to_string(bc.type));
    return o;
}

Outcome disk_structure() {
    Outcome o;
    const MeshPtr m = Mesh::build(Disk{1.0}, 1.0 / 32);
    const EigenspaceBasis b = second_eigenspace(m);
    const Nonlinearity spec = Nonlinearity::allen_cahn(b.lambda2h + 1.0);
    const PositiveSolution pos = positive_solution(m, spec, FlowConfig{});
    const NodalCatalog cat = nodal_search(m, spec, {}, SearchConfig{}, &b);
    if (cat.empty()) {
        o.require(false, "catalog empty");
        return o;
    }
    const ScalarField& u = cat.entries[cat.best].report.field;
    const double tol = 2e-2;
    const SymmetryReport s = foliated_schwarz_check(u, 24, 90, tol);
    o.require(s.radial_variance > 10 * tol, "radial variance " + f6(s.radial_variance));
    o.require(s.is_foliated_schwarz, "foliated Schwarz (axial " + f6(s.axial_deviation) + ", violation " +
                                         f6(s.monotonicity_violation) + ")");
    o.require(s.diameter_odd_deviation <= 0.02, "odd deviation " + f6(s.diameter_odd_deviation));
    const MorseResult mi = morse_index(u, spec);
    o.require(mi.index == 1 && mi.zeros_flagged == 0, "Morse " + f6(mi.index));
    o.require(nodal_domains(u) == 2, f6(nodal_domains(u)) + " nodal domains");
    const PathEstimate p = constructive_mp_path(u, pos.report.field, spec, FlowConfig{}, 0.05 * u.sup_norm(), 20,
                                                1e-2 * std::abs(cat.c_nod));
    o.require(p.certificate, "path max " + f6(p.max_energy) + " vs c_nod " + f6(cat.c_nod));
    return o;
}

Outcome dumbbell_gap() {
    Outcome o;
    const Nonlinearity spec = Nonlinearity::allen_cahn(20.0);
    std::optional<DumbbellResult> chosen;
    for (double delta : {0.2, 0.1, 0.05}) {
        DumbbellResult r = dumbbell_experiment(1.0, delta, 1.0, 0.025, spec, FlowConfig{}, StringConfig{});
        if (r.w_limit_nodal && r.w_limit.converged) chosen = std::move(r);
    }
    if (!chosen) {
        o.require(false, "no converged nodal W-limit");
        return o;
    }
    const DumbbellResult& r = *chosen;
    o.require(true, "delta=" + f6(r.delta));
    o.require(r.morse_w_limit.index == 0, "Morse of W-limit " + f6(r.morse_w_limit.index));
    o.require(r.path.ok, "string residual " + f6(r.path.saddle_residual));
    o.require(r.gap > 0.05 * std::abs(r.c_nod),
              "c_mp_est " + f6(r.c_mp_est) + " - c_nod " + f6(r.c_nod) + " = " + f6(r.gap));
    return o;
}

Outcome no_nodal_below_lambda2() {
    Outcome o;
    const MeshPtr m = Mesh::build(Square{kPi}, kPi / 64);
    const EigenspaceBasis b = second_eigenspace(m);
    const NodalCatalog cat = nodal_search(m, Nonlinearity::allen_cahn(4.5), {}, SearchConfig{}, &b);
    o.require(cat.empty(), f6(cat.entries.size()) + " entries from " + f6(default_seeds(b, 0.1).size()) + " seeds");
    return o;
}

Outcome positive_properties() {
    Outcome o;
    const SquareCatalog& c = square_catalog();
    const ScalarField& w = c.pos.report.field;
    o.require(c.pos.cross_check <= 1e-6, "cross-check " + f6(c.pos.cross_check));
    o.require(w.sup_norm() <= 1 + 1e-8, "sup " + f6(w.sup_norm()));
    const MorseResult mi = morse_index(w, c.spec);
    o.require(mi.index == 0 && mi.zeros_flagged == 0, "Morse(w) " + f6(mi.index));
    double excess = -INFINITY;
    for (const auto& e : c.cat.entries) {
        for (std::size_t k = 0; k < w.size(); ++k) excess = std::max(excess, std::abs(e.report.field[k]) - w[k]);
    }
    o.require(!c.cat.empty() && excess <= 1e-6,
              f6(c.cat.entries.size()) + " entries, max(|u| - w) = " + f6(excess));
    return o;
}

Outcome flow_invariants() {
    Outcome o;
    const MeshPtr m = Mesh::build(Square{kPi}, kPi / 32);
    const Nonlinearity spec = Nonlinearity::allen_cahn(5.2);
    const ScalarField w = positive_solution(m, spec, FlowConfig{}).report.field;
    FlowConfig cfg;
    cfg.max_steps = 300;
    std::mt19937_64 rng(20261015);
    std::uniform_real_distribution<double> unit(-1.0, 1.0);
    std::uniform_real_distribution<double> frac(0.0, 1.0);
    const std::vector<Reflection> mirrors(kAllReflections.begin(), kAllReflections.end());
    int bad_energy = 0;
    int bad_order = 0;
    int bad_symmetry = 0;
    const int n = 100;
    for (int trial = 0; trial < n; ++trial) {
        // bounded start: random values scaled into [-2, 2]
        Vector v(m->size());
        const double amp = 2.0 * frac(rng);
        for (double& x : v) x = amp * unit(rng);
        double prev = INFINITY;
        bool mono = true;
        flow_to_equilibrium(ScalarField(m, v), spec, cfg, [&](int, std::span<const double> u, double, double) {
            const double e = energy(ScalarField(m, Vector(u.begin(), u.end())), spec.with_truncation(true));
            mono = mono && e <= prev + 1e-12 * std::max(1.0, std::abs(e));
            prev = e;
            return true;
        });
        bad_energy += !mono;

        // start inside the order interval [0, w]
        for (std::size_t k = 0; k < v.size(); ++k) v[k] = frac(rng) * w[k];
        bool inside = true;
        flow_to_equilibrium(ScalarField(m, v), spec, cfg, [&](int, std::span<const double> u, double, double) {
            for (std::size_t k = 0; k < u.size(); ++k) inside = inside && u[k] >= -1e-8 && u[k] <= w[k] + 1e-8;
            return true;
        });
        bad_order += !inside;

        // start even or odd under a random symmetry of the square
        for (double& x : v) x = unit(rng);
        const Reflection r = mirrors[trial % mirrors.size()];
        const bool odd = (trial / mirrors.size()) % 2 == 1;
        const ScalarField s0 = odd ? odd_part(ScalarField(m, v), r) : even_part(ScalarField(m, v), r);
        const auto& map = m->reflection_map(r);
        bool exact = true;
        flow_to_equilibrium(s0, spec, cfg, [&](int, std::span<const double> u, double, double) {
            for (std::size_t k = 0; k < u.size(); ++k) exact = exact && u[map[k]] == (odd ? -u[k] : u[k]);
            return true;
        });
        bad_symmetry += !exact;
    }
    o.require(bad_energy == 0, f6(bad_energy) + "/" + f6(n) + " energy traces increase");
    o.require(bad_order == 0, f6(bad_order) + "/" + f6(n) + " leave [0, w]");
    o.require(bad_symmetry == 0, f6(bad_symmetry) + "/" + f6(n) + " lose their symmetry");
    return o;
}

Outcome sublinear_smoke() {
    Outcome o;
    const MeshPtr m = Mesh::build(Square{kPi}, kPi / 32);
    const Nonlinearity spec = Nonlinearity::power(0.5);
    const PositiveSolution ps = positive_solution(m, spec, FlowConfig{});
    o.require(ps.report.converged && ps.report.sign_class == SignClass::Positive,
              "converged " + to_string(ps.report.sign_class) + " in " + f6(ps.report.steps) + " steps");
    o.require(ps.report.energy < 0, "energy " + f6(ps.report.energy));
    auto refuses = [](const std::function<void()>& fn) {
        try {
            fn();
        } catch (const NotC1Error&) {
            return true;
        }
        return false;
    };
    o.require(refuses([&] { morse_index(ps.report.field, spec); }), "Morse refuses");
    o.require(refuses([&] { newton_refine(ps.report.field, spec, 1e-10); }), "Newton refuses");
    return o;
}

}  // namespace

int main() {
    const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
        {"discrete spectrum", spectrum},
        {"sigma validation", sigma_validation},
        {"Morse indices", morse_indices},
        {"energy asymptotics", energy_asymptotics},
        {"disk structure", disk_structure},
        {"dumbbell gap", dumbbell_gap},
        {"no nodal solutions below lambda2", no_nodal_below_lambda2},
        {"positive-solution properties", positive_properties},
        {"flow invariants", flow_invariants},
        {"sublinear power smoke", sublinear_smoke},
    };
    int failed = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        const auto t0 = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = criteria[i].second();
        } catch (const std::exception& e) {
            o.pass = false;
            o.detail = std::string("exception: ") + e.what();
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        std::printf("%s %2zu %s: %s [%.1fs]\n", o.pass ? "PASS" : "FAIL", i + 1, criteria[i].first.c_str(),
                    o.detail.c_str(), secs);
        std::fflush(stdout);
        failed += !o.pass;
    }
    std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
    return failed == 0 ? 0 : 1;
}
