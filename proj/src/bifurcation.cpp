#include "nodal/bifurcation.hpp"

#include <cmath>
#include <cstdio>
#include <numbers>
#include <sstream>

#include "nodal/error.hpp"

namespace nodal {

namespace {
constexpr double kPi = std::numbers::pi;
}

double analytic_sigma(double alpha) { return 3.0 / 64.0 * (13.0 - std::cos(4.0 * alpha)); }

double expected_energy_ratio(double sigma) { return -kPi * kPi / (16.0 * sigma); }

ScalarField discrete_phi(const EigenspaceBasis& basis, double alpha) {
    return (kPi / 2) * (std::cos(alpha) * basis.psi1 + std::sin(alpha) * basis.psi2);
}

std::vector<double> default_lambda_grid(double lambda2h, double lo, double hi, int n) {
    if (n < 1 || !(hi > lo)) throw PreconditionError("lambda grid: need n >= 1 and hi > lo");
    std::vector<double> g;
    for (int k = 1; k <= n; ++k) g.push_back(lambda2h + lo + (hi - lo) * k / n);
    return g;
}

namespace {

BranchPoint make_point(const SolveReport& rep, double lambda, const ScalarField& phi, const EigenspaceBasis& basis,
                       double angle_tol) {
    const Nonlinearity spec = Nonlinearity::allen_cahn(lambda, 3.0);
    BranchPoint p;
    p.lambda = lambda;
    p.field = rep.field;
    p.residual = rep.residual;
    const ScalarField u = std::sqrt(lambda) * rep.field;
    p.s = inner_l2(u, phi) / inner_l2(phi, phi);
    p.energy_J = energy(rep.field, spec);
    p.energy_u = lambda * p.energy_J;
    const MorseResult mr = morse_index(rep.field, spec);
    p.morse = mr.index;
    p.zeros_flagged = mr.zeros_flagged;
    const BranchClass bc = classify_square_branch(rep.field, basis, angle_tol);
    p.alpha = bc.alpha;
    p.type = bc.type;
    return p;
}

double angle_gap(double a, double b) {
    double d = std::fmod(std::abs(a - b), kPi);
    return std::min(d, kPi - d);
}

}  // namespace

Branch continue_branch(const MeshPtr& mesh, const EigenspaceBasis& basis, double alpha,
                       const std::vector<double>& lambda_grid, std::optional<double> s0,
                       const ContinuationConfig& cfg) {
    require_same_mesh(ScalarField::zeros(mesh), basis.psi1);
    if (lambda_grid.empty()) throw PreconditionError("continue_branch: empty lambda grid");
    for (std::size_t i = 0; i < lambda_grid.size(); ++i) {
        if (i == 0 ? !(lambda_grid[0] > basis.lambda2h) : !(lambda_grid[i] > lambda_grid[i - 1])) {
            throw PreconditionError("continue_branch: lambda grid must ascend from above lambda2h");
        }
    }
    Branch br;
    br.alpha_target = alpha;
    br.lambda2h = basis.lambda2h;
    const ScalarField phi = discrete_phi(basis, alpha);
    const double sigma = analytic_sigma(alpha);

    std::optional<ScalarField> prev;
    double prev_gap = 0.0;
    for (double lambda : lambda_grid) {
        const Nonlinearity spec = Nonlinearity::allen_cahn(lambda, 3.0);
        const double gap = lambda - basis.lambda2h;
        std::optional<SolveReport> rep;
        if (!prev) {
            const double amp = s0.value_or(std::sqrt(gap / sigma));
            const ScalarField seed = (amp / std::sqrt(lambda)) * phi;
            rep = nodal_solve(seed, spec, cfg.search);
        } else {
            // predictor: amplitude grows like sqrt(lambda - lambda2)
            const ScalarField guess = std::sqrt(gap / prev_gap) * *prev;
            try {
                rep = newton_refine(symmetrize_seed(guess), spec, cfg.search.newton_tol);
            } catch (const SolverError&) {
                rep.reset();
            }
            if (!rep || rep->sign_class != SignClass::Nodal) rep = nodal_solve(guess, spec, cfg.search);
        }
        if (!rep->converged || rep->sign_class != SignClass::Nodal) {
            br.truncated = true;
            char buf[96];
            std::snprintf(buf, sizeof buf, "no nodal solution at lambda=%.6g", lambda);
            br.note = buf;
            break;
        }
        BranchPoint p = make_point(*rep, lambda, phi, basis, cfg.angle_tol);
        if (angle_gap(p.alpha, alpha) > cfg.angle_tol) {
            br.truncated = true;
            char buf[96];
            std::snprintf(buf, sizeof buf, "left the target angle at lambda=%.6g (alpha=%.2f deg)", lambda,
                          p.alpha * 180 / kPi);
            br.note = buf;
            break;
        }
        prev = p.field;
        prev_gap = gap;
        br.points.push_back(std::move(p));
    }
    if (br.points.size() >= 4) {
        const SigmaFit f = fit_sigma(br);
        br.sigma_hat = f.sigma_hat;
        br.sigma_stderr = f.stderr_;
    }
    return br;
}

SigmaFit fit_sigma(const std::vector<double>& lambdas, const std::vector<double>& s, double lambda2h) {
    if (lambdas.size() != s.size()) throw PreconditionError("fit_sigma: size mismatch");
    const std::size_t n = lambdas.size();
    if (n < 4) throw PreconditionError("fit_sigma: needs at least 4 branch points");
    double sxx = 0.0;
    double sxy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double x = s[i] * s[i];
        sxx += x * x;
        sxy += x * (lambdas[i] - lambda2h);
    }
    SigmaFit f;
    f.sigma_hat = sxy / sxx;
    double rss = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double r = lambdas[i] - lambda2h - f.sigma_hat * s[i] * s[i];
        rss += r * r;
    }
    f.stderr_ = std::sqrt(rss / static_cast<double>(n - 1) / sxx);
    return f;
}

SigmaFit fit_sigma(const Branch& branch) {
    std::vector<double> l;
    std::vector<double> s;
    for (const auto& p : branch.points) {
        l.push_back(p.lambda);
        s.push_back(p.s);
    }
    return fit_sigma(l, s, branch.lambda2h);
}

std::vector<EnergyRatio> energy_ratio_check(const Branch& branch) {
    std::vector<EnergyRatio> out;
    for (const auto& p : branch.points) {
        const double d = p.lambda - branch.lambda2h;
        out.push_back({p.lambda, p.energy_J * p.lambda / (d * d)});
    }
    return out;
}

double energy_identity_check(const ScalarField& v, double lambda) {
    const double j = energy(v, Nonlinearity::allen_cahn(lambda, 3.0));
    double q = 0.0;
    for (double x : v.values()) q += (x * x) * (x * x);
    const double h = v.mesh().h();
    const double rhs = -lambda / 4.0 * h * h * q;
    if (j == 0.0 && rhs == 0.0) return 0.0;
    return std::abs(j - rhs) / std::abs(j);
}

double energy_identity_check(const BranchPoint& p) { return energy_identity_check(p.field, p.lambda); }

SparseOperator u_form_linearization(const ScalarField& u, double lambda) {
    Vector d(u.size());
    for (std::size_t k = 0; k < d.size(); ++k) d[k] = lambda - 3.0 * u[k] * u[k];
    return neg_laplacian(u.mesh()).minus_diagonal(d);
}

std::string branch_csv(const Branch& branch) {
    std::ostringstream os;
    os << "lambda,s,energy_J,energy_u,morse,zeros_flagged,alpha_deg,residual\n";
    char buf[256];
    for (const auto& p : branch.points) {
        std::snprintf(buf, sizeof buf, "%.12g,%.12g,%.12g,%.12g,%d,%d,%.12g,%.12g\n", p.lambda, p.s, p.energy_J,
                      p.energy_u, p.morse, p.zeros_flagged, p.alpha * 180.0 / kPi, p.residual);
        os << buf;
    }
    return os.str();
}

}  // namespace nodal
