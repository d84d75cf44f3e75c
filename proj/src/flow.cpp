#include "nodal/flow.hpp"

#include <algorithm>
#include <cmath>

namespace nodal {

void validate(const FlowConfig& cfg) {
    if (!(cfg.tau > 0.0 && cfg.tau <= 1.0)) throw PreconditionError("flow: tau must lie in (0, 1]");
    if (cfg.kappa && !(*cfg.kappa >= 0.0)) throw PreconditionError("flow: kappa must be >= 0");
    if (cfg.residual_tol && !(*cfg.residual_tol > 0.0)) {
        throw PreconditionError("flow: residual_tol must be positive");
    }
    if (cfg.max_steps < 0) throw PreconditionError("flow: max_steps must be >= 0");
    if (!(cfg.cg_tol > 0.0)) throw PreconditionError("flow: cg_tol must be positive");
}

double default_residual_tol(const Mesh& mesh) {
    return 1e-8 * std::sqrt(static_cast<double>(mesh.size()));
}

std::string to_string(SignClass c) {
    switch (c) {
        case SignClass::Positive: return "positive";
        case SignClass::Negative: return "negative";
        case SignClass::Nodal: return "nodal";
        case SignClass::Zero: return "zero";
    }
    return "?";
}

SignClass classify_sign(std::span<const double> u, double zero_floor) {
    const double sup = norm_inf(u);
    if (sup <= zero_floor) return SignClass::Zero;
    const double floor = 1e-6 * sup;
    double hi = -sup;
    double lo = sup;
    for (double v : u) {
        hi = std::max(hi, v);
        lo = std::min(lo, v);
    }
    const bool pos = hi > floor;
    const bool neg = lo < -floor;
    if (pos && neg) return SignClass::Nodal;
    return pos ? SignClass::Positive : SignClass::Negative;
}

namespace {

double energy_of(const Mesh& mesh, std::span<const double> u, const Nonlinearity& spec, Vector& scratch) {
    scratch.resize(u.size());
    mesh.apply_laplacian(u, scratch);
    double quad = 0.0;
    double pot = 0.0;
    for (std::size_t k = 0; k < u.size(); ++k) {
        quad += u[k] * scratch[k];
        pot += spec.F(u[k]);
    }
    const double h2 = mesh.h() * mesh.h();
    return h2 * (0.5 * quad - pot);
}

double residual_of(const Mesh& mesh, std::span<const double> u, const Nonlinearity& spec, Vector& scratch) {
    scratch.resize(u.size());
    mesh.apply_laplacian(u, scratch);
    double s = 0.0;
    for (std::size_t k = 0; k < u.size(); ++k) {
        const double r = scratch[k] - spec.f(u[k]);
        s += r * r;
    }
    return mesh.h() * std::sqrt(s);
}

// E(c) - E(u), formed from differences so that it stays accurate when c is
// close to u
double energy_change(const Mesh& mesh, std::span<const double> u, std::span<const double> c,
                     const Nonlinearity& spec, Vector& sum, Vector& scratch) {
    sum.resize(u.size());
    scratch.resize(u.size());
    for (std::size_t k = 0; k < u.size(); ++k) sum[k] = c[k] + u[k];
    mesh.apply_laplacian(sum, scratch);
    double quad = 0.0;
    double pot = 0.0;
    for (std::size_t k = 0; k < u.size(); ++k) {
        quad += (c[k] - u[k]) * scratch[k];
        pot += spec.F_diff(c[k], u[k]);
    }
    const double h2 = mesh.h() * mesh.h();
    return h2 * (0.5 * quad - pot);
}

void k_map_into(const Mesh& mesh, std::span<const double> u, const Nonlinearity& spec, double kappa,
                double cg_tol, std::span<const double> warm, Vector& out) {
    Vector rhs(u.size());
    for (std::size_t k = 0; k < u.size(); ++k) rhs[k] = spec.f(u[k]) + kappa * u[k];
    auto apply = [&mesh, kappa](std::span<const double> x, std::span<double> y) {
        mesh.apply_laplacian(x, y, kappa);
    };
    const int budget = 20 * static_cast<int>(u.size()) + 100;
    out = conjugate_gradient(apply, rhs, cg_tol, budget, warm).x;
}

}  // namespace

double energy(const ScalarField& u, const Nonlinearity& spec) {
    Vector scratch;
    return energy_of(u.mesh(), u.values(), spec, scratch);
}

Vector residual_vector(const ScalarField& u, const Nonlinearity& spec) {
    Vector r(u.size());
    u.mesh().apply_laplacian(u.values(), r);
    for (std::size_t k = 0; k < r.size(); ++k) r[k] -= spec.f(u[k]);
    return r;
}

double residual_norm(const ScalarField& u, const Nonlinearity& spec) {
    Vector scratch;
    return residual_of(u.mesh(), u.values(), spec, scratch);
}

Nonlinearity flow_nonlinearity(const Nonlinearity& spec) {
    return spec.s_f() ? spec.with_truncation(true) : spec;
}

double resolve_kappa(const FlowConfig& cfg, const Nonlinearity& spec) {
    if (cfg.kappa) return *cfg.kappa;
    return kappa_for(flow_nonlinearity(spec), std::max(1.0, spec.s_f().value_or(1.0)));
}

ScalarField k_map(const ScalarField& u, const Nonlinearity& spec, double kappa, double cg_tol,
                  const ScalarField* warm) {
    if (!(kappa >= 0.0)) throw PreconditionError("k_map: kappa must be >= 0");
    if (warm) require_same_mesh(u, *warm);
    Vector out;
    k_map_into(u.mesh(), u.values(), spec, kappa, cg_tol,
               warm ? warm->values() : std::span<const double>{}, out);
    return ScalarField(u.mesh_ptr(), std::move(out));
}

ScalarField flow_step(const ScalarField& u, double tau, const Nonlinearity& spec, double kappa) {
    if (!(tau > 0.0 && tau <= 1.0)) throw PreconditionError("flow_step: tau must lie in (0, 1]");
    const ScalarField k = k_map(u, spec, kappa);
    if (tau == 1.0) return k;
    Vector v(u.size());
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = (1.0 - tau) * u[i] + tau * k[i];
    return ScalarField(u.mesh_ptr(), std::move(v));
}

SolveReport flow_to_equilibrium(const ScalarField& u0, const Nonlinearity& spec, const FlowConfig& cfg,
                                const FlowObserver& observer) {
    validate(cfg);
    const Mesh& mesh = u0.mesh();
    const Nonlinearity fs = flow_nonlinearity(spec);
    const double kappa = resolve_kappa(cfg, spec);
    const double tol = cfg.residual_tol.value_or(default_residual_tol(mesh));

    Vector u = u0.vec();
    Vector k_prev = u;
    Vector k_new;
    Vector cand(u.size());
    Vector scratch;
    Vector sum;

    SolveReport rep{u0, 0.0, 0.0, 0, {}, false, SignClass::Zero, {}};
    double e = energy_of(mesh, u, fs, scratch);
    rep.energy_trace.push_back(e);
    double r = residual_of(mesh, u, fs, scratch);
    int step = 0;
    for (;; ++step) {
        if (observer && !observer(step, u, e, r)) {
            rep.note = "stopped by observer";
            break;
        }
        if (r <= tol) {
            rep.converged = true;
            break;
        }
        if (step >= cfg.max_steps) {
            rep.note = "max_steps reached";
            break;
        }
        k_map_into(mesh, u, fs, kappa, cfg.cg_tol, k_prev, k_new);
        double t = cfg.tau;
        bool accepted = false;
        double de = 0.0;
        for (int halving = 0; halving <= 20; ++halving) {
            for (std::size_t i = 0; i < u.size(); ++i) cand[i] = (1.0 - t) * u[i] + t * k_new[i];
            de = energy_change(mesh, u, cand, fs, sum, scratch);
            if (!cfg.backtracking || de <= 0.0) {
                accepted = true;
                break;
            }
            t *= 0.5;
        }
        if (!accepted) {
            rep.note = "stalled: no energy-decreasing step";
            break;
        }
        u.swap(cand);
        k_prev.swap(k_new);
        e += de;
        rep.energy_trace.push_back(e);
        r = residual_of(mesh, u, fs, scratch);
    }
    rep.steps = step;
    rep.residual = r;
    rep.field = ScalarField(u0.mesh_ptr(), std::move(u));
    const double sup = rep.field.sup_norm();
    // report the untruncated energy whenever the field stays inside [-s_f, s_f]
    const auto sf = spec.s_f();
    rep.energy = (sf && sup <= *sf) ? energy(rep.field, spec.with_truncation(false)) : e;
    rep.sign_class = classify_sign(rep.field.values(), 100.0 * tol);
    return rep;
}

SparseOperator linearization(const ScalarField& u, const Nonlinearity& spec) {
    if (!spec.is_c1()) throw NotC1Error("linearization requires a C^1 nonlinearity");
    Vector fp(u.size());
    for (std::size_t k = 0; k < fp.size(); ++k) fp[k] = spec.fprime(u[k]);
    return neg_laplacian(u.mesh()).minus_diagonal(fp);
}

SolveReport newton_refine(const ScalarField& u, const Nonlinearity& spec, double tol, int max_steps) {
    if (!spec.is_c1()) throw NotC1Error("newton_refine requires a C^1 nonlinearity");
    if (!(tol > 0.0)) throw PreconditionError("newton_refine: tol must be positive");
    const Nonlinearity fs = spec.with_truncation(false);
    const Mesh& mesh = u.mesh();
    const double h = mesh.h();

    Vector x = u.vec();
    Vector scratch;
    double r = residual_of(mesh, x, fs, scratch);
    SolveReport rep{u, r, 0.0, 0, {}, false, SignClass::Zero, {}};
    rep.energy_trace.push_back(energy_of(mesh, x, fs, scratch));
    int steps = 0;
    while (r > tol) {
        if (steps >= max_steps) {
            throw SolverError("newton_refine: no convergence after " + std::to_string(max_steps) +
                                  " damped steps",
                              r);
        }
        const ScalarField cur(u.mesh_ptr(), x);
        SymmetricSolver solver(linearization(cur, fs));
        if (!solver.ok()) throw SolverError("newton_refine: singular Jacobian (near-degenerate solution)", r);
        Vector rhs = residual_vector(cur, fs);
        for (double& v : rhs) v = -v;
        const Vector d = solver.solve(rhs);
        double t = 1.0;
        bool accepted = false;
        Vector cand(x.size());
        for (int halving = 0; halving < 40; ++halving) {
            for (std::size_t i = 0; i < x.size(); ++i) cand[i] = x[i] + t * d[i];
            const double rc = residual_of(mesh, cand, fs, scratch);
            if (std::isfinite(rc) && rc < r) {
                x.swap(cand);
                r = rc;
                accepted = true;
                break;
            }
            t *= 0.5;
        }
        if (!accepted) {
            // the residual sits at its round-off floor
            rep.note = "stagnated at residual floor";
            break;
        }
        ++steps;
        rep.energy_trace.push_back(energy_of(mesh, x, fs, scratch));
    }
    (void)h;
    rep.steps = steps;
    rep.residual = r;
    rep.converged = r <= tol;
    rep.field = ScalarField(u.mesh_ptr(), std::move(x));
    rep.energy = energy(rep.field, fs);
    rep.sign_class = classify_sign(rep.field.values(), 100.0 * tol);
    if (!rep.converged) {
        throw SolverError("newton_refine: residual stagnated above tolerance", r);
    }
    return rep;
}

}  // namespace nodal
