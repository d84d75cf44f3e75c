#include "nodal/solutions.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <numbers>

#include "nodal/error.hpp"
#include "nodal/linalg.hpp"
#include "parallel.hpp"

namespace nodal {

namespace {

constexpr double kPi = std::numbers::pi;

ScalarField unit_sup(const ScalarField& u) {
    const double s = u.sup_norm();
    if (s == 0.0) throw PreconditionError("cannot normalize a zero field");
    return u * (1.0 / s);
}

double sup_distance(const ScalarField& a, const ScalarField& b) { return (a - b).sup_norm(); }

}  // namespace

int worker_count() {
    if (const char* env = std::getenv("NODAL_LAB_THREADS")) {
        const int n = std::atoi(env);
        if (n > 0) return n;
    }
    return 1;
}

FirstMode first_mode(const MeshPtr& mesh) {
    const auto eig = smallest_eigs(neg_laplacian(*mesh), 1);
    ScalarField phi(mesh, eig[0].vector);
    double sum = 0.0;
    for (double v : phi.values()) sum += v;
    if (sum < 0) phi = -phi;
    return {eig[0].value, unit_sup(phi)};
}

PositiveSolution positive_solution(const MeshPtr& mesh, const Nonlinearity& spec, const FlowConfig& cfg,
                                   double newton_tol) {
    validate(cfg);
    const FirstMode fm = first_mode(mesh);
    PositiveSolution out;
    out.lambda1h = fm.lambda1h;
    const AssumptionReport ar = check_assumptions(spec, fm.lambda1h, fm.lambda1h);
    out.assumptions_hold = ar.a3;

    const double cap = spec.s_f().value_or(1.0);
    const double eps = 0.1 * std::min(1.0, cap);
    const double flow_tol = cfg.residual_tol.value_or(default_residual_tol(*mesh));

    auto solve = [&](const ScalarField& start) {
        SolveReport rep = flow_to_equilibrium(start, spec, cfg);
        if (!rep.converged) throw SolverError("positive_solution: flow did not converge (" + rep.note + ")", rep.residual);
        if (spec.is_c1()) {
            SolveReport nr = newton_refine(rep.field, spec, newton_tol);
            nr.steps += rep.steps;
            nr.energy_trace.insert(nr.energy_trace.begin(), rep.energy_trace.begin(), rep.energy_trace.end());
            nr.note = "flow " + std::to_string(rep.steps) + " steps, newton";
            return nr;
        }
        return rep;
    };

    out.report = solve(fm.phi * eps);
    if (!ar.a3) {
        out.report.note += "; lim f(s)/s <= lambda1h, no positive solution expected";
        return out;
    }
    if (out.report.sign_class != SignClass::Positive || out.report.field.min() <= 0.0) {
        throw SolverError("positive_solution: limit is not strictly positive (" + to_string(out.report.sign_class) + ")",
                          out.report.residual);
    }
    Vector second(fm.phi.size());
    for (std::size_t k = 0; k < second.size(); ++k) second[k] = std::min(cap, 4.0 * eps * fm.phi[k]);
    const SolveReport other = solve(ScalarField(mesh, std::move(second)));
    out.cross_check = sup_distance(out.report.field, other.field);
    out.cross_check_tol = 10.0 * (spec.is_c1() ? newton_tol : flow_tol);
    if (out.cross_check > out.cross_check_tol) {
        throw SolverError("positive_solution: cross-check mismatch, discretization too coarse?", out.cross_check);
    }
    return out;
}

std::vector<std::pair<std::string, ScalarField>> default_seeds(const EigenspaceBasis& basis, double amplitude,
                                                               int n_angles) {
    std::vector<std::pair<std::string, ScalarField>> seeds;
    for (int k = 0; k < n_angles; ++k) {
        const double t = kPi * k / n_angles;
        const ScalarField dir = unit_sup(std::cos(t) * basis.psi1 + std::sin(t) * basis.psi2) * amplitude;
        char buf[48];
        std::snprintf(buf, sizeof buf, "alpha=%.4gdeg", t * 180.0 / kPi);
        seeds.emplace_back(std::string(buf) + ",+", dir);
        seeds.emplace_back(std::string(buf) + ",-", -dir);
    }
    return seeds;
}

ScalarField symmetrize_seed(const ScalarField& u, double rel) {
    const Mesh& m = u.mesh();
    ScalarField v = u;
    for (int pass = 0; pass < 2; ++pass) {
        for (Reflection r : kAllReflections) {
            if (!m.symmetric_under(r)) continue;
            const double sup = v.sup_norm();
            if (sup == 0.0) return v;
            const ScalarField rv = reflect(v, r);
            if ((v - rv).sup_norm() <= rel * sup) {
                v = 0.5 * (v + rv);
            } else if ((v + rv).sup_norm() <= rel * sup) {
                v = 0.5 * (v - rv);
            }
        }
    }
    return v;
}

SolveReport nodal_solve(const ScalarField& seed, const Nonlinearity& spec, const SearchConfig& cfg) {
    const ScalarField start = symmetrize_seed(seed);
    FlowConfig fc = cfg.flow;
    const double tol = fc.residual_tol.value_or(default_residual_tol(seed.mesh()));
    if (spec.is_c1()) fc.residual_tol = std::max(tol, cfg.basin_tol);
    fc.max_steps = std::min(fc.max_steps, cfg.seed_max_steps);
    const double floor = 100.0 * fc.residual_tol.value_or(tol);

    // closest approach to a nodal equilibrium along the trajectory
    Vector best;
    double best_r = INFINITY;
    auto observer = [&](int, std::span<const double> u, double, double r) {
        if (r < best_r && classify_sign(u, floor) == SignClass::Nodal) {
            best_r = r;
            best.assign(u.begin(), u.end());
        }
        return true;
    };
    SolveReport rep = flow_to_equilibrium(start, spec, fc, observer);
    if (!spec.is_c1()) return rep;

    std::vector<ScalarField> candidates;
    if (rep.converged || rep.sign_class == SignClass::Nodal) candidates.push_back(rep.field);
    if (rep.sign_class != SignClass::Nodal && !best.empty()) {
        candidates.emplace_back(seed.mesh_ptr(), best);
    }
    SolveReport fallback = rep;
    for (std::size_t c = 0; c < candidates.size(); ++c) {
        try {
            SolveReport nr = newton_refine(candidates[c], spec, cfg.newton_tol);
            nr.steps += rep.steps;
            nr.note = c == 0 && (rep.converged || rep.sign_class == SignClass::Nodal)
                          ? "flow limit, newton"
                          : "closest nodal approach (residual " + std::to_string(best_r) + "), newton";
            if (nr.sign_class == SignClass::Nodal) return nr;
            if (c == 0) fallback = nr;
        } catch (const SolverError&) {
        }
    }
    return fallback;
}

NodalCatalog nodal_search(const MeshPtr& mesh, const Nonlinearity& spec,
                          const std::vector<std::pair<std::string, ScalarField>>& extra_seeds,
                          const SearchConfig& cfg, const EigenspaceBasis* basis) {
    validate(cfg.flow);
    EigenspaceBasis own;
    if (!basis) {
        own = second_eigenspace(mesh);
        basis = &own;
    }
    NodalCatalog cat;
    const AssumptionReport ar = check_assumptions(spec, basis->lambda1h, basis->lambda2h);
    if (!ar.a3prime) cat.note = "lim f(s)/s <= lambda2h: no nodal solutions expected";

    const double amp = cfg.seed_amplitude * std::min(1.0, spec.s_f().value_or(1.0));
    auto seeds = default_seeds(*basis, amp, cfg.n_angles);
    for (const auto& s : extra_seeds) {
        require_same_mesh(s.second, basis->psi1);
        seeds.push_back(s);
    }
    std::vector<std::optional<SolveReport>> results(seeds.size());
    std::vector<std::string> failures(seeds.size());
    detail::parallel_for(seeds.size(), worker_count(), [&](std::size_t i) {
        try {
            results[i] = nodal_solve(seeds[i].second, spec, cfg);
        } catch (const Error& e) {
            failures[i] = e.what();
        }
    });

    for (std::size_t i = 0; i < seeds.size(); ++i) {
        if (!results[i] || results[i]->sign_class != SignClass::Nodal) continue;
        if (!results[i]->converged) continue;
        const SolveReport& rep = *results[i];
        const double tol = cfg.dedup_rel * rep.field.sup_norm();
        bool dup = false;
        for (auto& e : cat.entries) {
            if (sup_distance(e.report.field, rep.field) < tol || (e.report.field + rep.field).sup_norm() < tol) {
                dup = true;
                if (rep.residual < e.report.residual) e = {rep, seeds[i].first};
                break;
            }
        }
        if (!dup) cat.entries.push_back({rep, seeds[i].first});
    }
    for (std::size_t i = 0; i < cat.entries.size(); ++i) {
        if (cat.best < 0 || cat.entries[i].report.energy < cat.c_nod) {
            cat.best = static_cast<int>(i);
            cat.c_nod = cat.entries[i].report.energy;
        }
    }
    int failed = 0;
    for (const auto& f : failures) failed += !f.empty();
    if (failed) {
        if (!cat.note.empty()) cat.note += "; ";
        cat.note += std::to_string(failed) + " seed(s) failed";
    }
    return cat;
}

MorseResult morse_index(const ScalarField& u, const Nonlinearity& spec) {
    const SparseOperator j = linearization(u, spec.with_truncation(false));
    const NegativeCount c = count_negative_eigs(j);
    return {c.negatives, c.zeros_flagged, c.zero_band, c.eigenvalues};
}

std::string to_string(PathMethod m) { return m == PathMethod::Constructive ? "constructive" : "string"; }

namespace {

/// Keeps at most `cap` states of a trajectory by doubling the stride.
struct TrajectoryRecorder {
    int cap = 2;
    int stride = 1;
    std::vector<Vector> states;
    Vector last;

    bool operator()(int step, std::span<const double> u) {
        last.assign(u.begin(), u.end());
        if (step % stride != 0) return true;
        states.emplace_back(u.begin(), u.end());
        if (static_cast<int>(states.size()) > cap) {
            std::vector<Vector> kept;
            for (std::size_t i = 0; i < states.size(); i += 2) kept.push_back(std::move(states[i]));
            states = std::move(kept);
            stride *= 2;
        }
        return true;
    }
};

double report_energy(const ScalarField& u, const Nonlinearity& spec) {
    const auto sf = spec.s_f();
    const Nonlinearity e = (sf && u.sup_norm() > *sf) ? spec.with_truncation(true) : spec.with_truncation(false);
    return energy(u, e);
}

}  // namespace

PathEstimate constructive_mp_path(const ScalarField& u_nodal, const ScalarField& w, const Nonlinearity& spec,
                                  const FlowConfig& cfg, double eps, int n_images, std::optional<double> path_tol) {
    if (!spec.is_c1()) throw NotC1Error("constructive_mp_path needs a C^1 nonlinearity");
    require_same_mesh(u_nodal, w);
    if (!(eps > 0.0)) throw PreconditionError("constructive_mp_path: eps must be positive");
    if (n_images < 3) throw PreconditionError("constructive_mp_path: need at least 3 images");
    const MeshPtr& mesh = u_nodal.mesh_ptr();
    const SparseOperator jac = linearization(u_nodal, spec.with_truncation(false));
    const auto eig = smallest_eigs(jac, 1);
    if (eig[0].value >= -default_zero_band(jac)) {
        throw PreconditionError("constructive_mp_path: linearization has no negative eigenvalue");
    }
    ScalarField phi = unit_sup(ScalarField(mesh, eig[0].vector));
    if (inner_l2(phi, w) < 0) phi = -phi;

    PathEstimate path;
    path.method = PathMethod::Constructive;
    const double e0 = report_energy(u_nodal, spec);
    const double tol_path = path_tol.value_or(1e-3 * std::abs(e0));
    const double end_tol = 1e-4 * w.sup_norm();

    auto run = [&](double sign, std::vector<ScalarField>& states, int& end_side) {
        TrajectoryRecorder rec;
        rec.cap = std::max(2, n_images);
        const ScalarField start = u_nodal + (sign * eps) * phi;
        const SolveReport rep =
            flow_to_equilibrium(start, spec, cfg, [&](int s, std::span<const double> u, double, double) {
                return rec(s, u);
            });
        for (auto& v : rec.states) states.emplace_back(mesh, std::move(v));
        if (states.empty() || sup_distance(states.back(), rep.field) > 0) states.push_back(rep.field);
        if (!rep.converged) {
            end_side = 0;
            return rep;
        }
        if (sup_distance(rep.field, w) <= end_tol) end_side = 1;
        else if ((rep.field + w).sup_norm() <= end_tol) end_side = -1;
        else end_side = 0;
        return rep;
    };
    std::vector<ScalarField> plus;
    std::vector<ScalarField> minus;
    int side_plus = 0;
    int side_minus = 0;
    const SolveReport rp = run(1.0, plus, side_plus);
    const SolveReport rm = run(-1.0, minus, side_minus);
    if (side_plus == 0 || side_minus == 0) {
        path.ok = false;
        path.interloper = side_plus == 0 ? rp : rm;
        path.note = "trajectory ended at an equilibrium other than +-w (" + to_string(path.interloper->sign_class) +
                    ", energy " + std::to_string(path.interloper->energy) + ")";
    } else if (side_plus == side_minus) {
        path.ok = false;
        path.note = "both trajectories reached the same endpoint";
    }
    if (side_plus == -1 && side_minus == 1) std::swap(plus, minus);
    const double s_sign = (side_plus == -1 && side_minus == 1) ? -1.0 : 1.0;

    // -w ... u - eps phi, segment, u + eps phi ... w
    for (auto it = minus.rbegin(); it != minus.rend(); ++it) path.images.push_back(*it);
    const int n_seg = std::max(3, n_images | 1);
    for (int i = 1; i + 1 < n_seg; ++i) {
        const double s = -eps + 2.0 * eps * i / (n_seg - 1);
        path.images.push_back(u_nodal + (s_sign * s) * phi);
    }
    for (auto& v : plus) path.images.push_back(v);
    for (const auto& im : path.images) path.energies.push_back(report_energy(im, spec));
    const auto mx = std::max_element(path.energies.begin(), path.energies.end());
    path.max_energy = *mx;
    path.argmax = static_cast<int>(mx - path.energies.begin());
    path.certificate = path.ok && path.max_energy <= e0 + tol_path;
    return path;
}

namespace {

void reparametrize(std::vector<Vector>& z, std::size_t lo, std::size_t hi) {
    if (hi <= lo + 1) return;
    std::vector<double> s(hi - lo + 1, 0.0);
    for (std::size_t i = lo + 1; i <= hi; ++i) {
        Vector d = z[i];
        axpy(-1.0, z[i - 1], d);
        s[i - lo] = s[i - lo - 1] + norm2(d);
    }
    const double total = s.back();
    if (!(total > 0.0)) throw SolverError("string_saddle: images collapsed", 0.0);
    std::vector<Vector> out(z.begin() + lo, z.begin() + hi + 1);
    std::size_t seg = 0;
    const std::size_t n = hi - lo;
    for (std::size_t i = 1; i < n; ++i) {
        const double target = total * i / n;
        while (seg + 1 < n && s[seg + 1] < target) ++seg;
        const double len = s[seg + 1] - s[seg];
        const double t = len > 0 ? (target - s[seg]) / len : 0.0;
        const Vector& a = z[lo + seg];
        const Vector& b = z[lo + seg + 1];
        for (std::size_t k = 0; k < a.size(); ++k) out[i][k] = (1.0 - t) * a[k] + t * b[k];
    }
    for (std::size_t i = 1; i < n; ++i) z[lo + i] = std::move(out[i]);
}

}  // namespace

PathEstimate string_saddle(const ScalarField& w, const ScalarField& direction, const Nonlinearity& spec,
                           const FlowConfig& cfg, const StringConfig& scfg) {
    validate(cfg);
    if (scfg.n_images < 3) throw PreconditionError("string_saddle: need at least 3 images");
    if (!(scfg.tau > 0.0 && scfg.tau <= 1.0)) throw PreconditionError("string_saddle: tau must lie in (0, 1]");
    const MeshPtr& mesh = w.mesh_ptr();
    const Mesh& m = *mesh;
    const Nonlinearity fs = flow_nonlinearity(spec);
    const double kappa = resolve_kappa(cfg, spec);
    const std::size_t n = static_cast<std::size_t>(scfg.n_images);
    const std::size_t dim = w.size();
    const double wsup = w.sup_norm();

    Vector dir(dim, 0.0);
    if (direction.size() > 0 && scfg.perturbation != 0.0) {
        require_same_mesh(w, direction);
        const ScalarField d = unit_sup(direction) * (scfg.perturbation * wsup);
        dir = d.vec();
    }
    std::vector<Vector> z(n, Vector(dim));
    for (std::size_t i = 0; i < n; ++i) {
        const double t = static_cast<double>(i) / (n - 1);
        const double bump = (i == 0 || i + 1 == n) ? 0.0 : std::sin(kPi * t);
        for (std::size_t k = 0; k < dim; ++k) z[i][k] = (2.0 * t - 1.0) * w[k] + bump * dir[k];
    }
    std::vector<Vector> warm = z;
    std::vector<double> e(n);
    Vector g(dim);
    Vector tmp(dim);
    auto energy_of = [&](const Vector& v) { return energy(ScalarField(mesh, v), fs); };
    auto residual_into = [&](const Vector& v, Vector& out) {
        m.apply_laplacian(v, out);
        for (std::size_t k = 0; k < dim; ++k) out[k] -= fs.f(v[k]);
    };

    PathEstimate path;
    path.method = PathMethod::String;
    std::size_t top = 1;
    int it = 0;
    bool converged = false;
    for (; it < scfg.max_iter; ++it) {
        for (std::size_t i = 1; i + 1 < n; ++i) e[i] = energy_of(z[i]);
        top = 1;
        for (std::size_t i = 2; i + 1 < n; ++i) {
            if (e[i] > e[top]) top = i;
        }
        // residual of the highest image, full and orthogonal to the tangent
        Vector tan = z[top + 1];
        axpy(-1.0, z[top - 1], tan);
        residual_into(z[top], g);
        const double tt = dot(tan, tan);
        path.saddle_residual = m.h() * norm2(g);
        if (tt > 0) {
            const double gt = dot(g, tan) / tt;
            for (std::size_t k = 0; k < dim; ++k) tmp[k] = g[k] - gt * tan[k];
            path.saddle_residual_perp = m.h() * norm2(tmp);
        }
        const double measure = scfg.climbing ? path.saddle_residual : path.saddle_residual_perp;
        if (measure <= scfg.saddle_tol) {
            converged = true;
            break;
        }
        for (std::size_t i = 1; i + 1 < n; ++i) {
            ScalarField zi(mesh, z[i]);
            ScalarField wi(mesh, warm[i]);
            ScalarField ki = k_map(zi, fs, kappa, cfg.cg_tol, &wi);
            warm[i] = ki.vec();
            Vector d = ki.vec();
            axpy(-1.0, z[i], d);
            if (scfg.climbing && i == top) {
                // reverse the descent component along the tangent in the (A + kappa) metric
                Vector t = z[i + 1];
                axpy(-1.0, z[i - 1], t);
                m.apply_laplacian(t, tmp, kappa);
                const double tgt = dot(t, tmp);
                if (tgt > 0) {
                    const double c = 2.0 * dot(d, tmp) / tgt;
                    axpy(-c, t, d);
                }
            }
            axpy(scfg.tau, d, z[i]);
        }
        if (scfg.climbing) {
            reparametrize(z, 0, top);
            reparametrize(z, top, n - 1);
        } else {
            reparametrize(z, 0, n - 1);
        }
    }
    path.iterations = it;
    path.ok = converged;
    if (!converged) path.note = "iteration budget exhausted";
    for (std::size_t i = 0; i < n; ++i) {
        path.images.emplace_back(mesh, z[i]);
        path.energies.push_back(report_energy(path.images.back(), spec));
    }
    const auto mx = std::max_element(path.energies.begin(), path.energies.end());
    path.max_energy = *mx;
    path.argmax = static_cast<int>(mx - path.energies.begin());
    return path;
}

DumbbellResult dumbbell_experiment(double lobe_r, double delta, double channel_len, double h,
                                   const Nonlinearity& spec, const FlowConfig& cfg, const StringConfig& scfg) {
    if (!spec.is_c1()) throw NotC1Error("dumbbell_experiment needs a C^1 nonlinearity");
    DumbbellResult out;
    out.delta = delta;
    const MeshPtr mesh = Mesh::build(Dumbbell{lobe_r, delta, channel_len}, h);
    const PositiveSolution pos = positive_solution(mesh, spec, cfg);
    out.positive = pos.report;
    out.energy_w = pos.report.energy;
    const ScalarField& w = pos.report.field;

    const double cx = lobe_r + channel_len / 2;
    auto lobe = [&](double sx) {
        const MeshPtr sub = mesh->restrict_to([&](Point p) {
            const double dx = p.x - sx * cx;
            return dx * dx + p.y * p.y < lobe_r * lobe_r;
        });
        return embed(positive_solution(sub, spec, cfg).report.field, mesh);
    };
    const ScalarField seed = lobe(-1.0) - lobe(1.0);

    SearchConfig sc;
    sc.flow = cfg;
    out.w_limit = nodal_solve(seed, spec, sc);
    out.w_limit_nodal = out.w_limit.converged && out.w_limit.sign_class == SignClass::Nodal;
    out.dist_to_w = norm_l2(out.w_limit.field - w);
    out.dist_to_minus_w = norm_l2(out.w_limit.field + w);
    if (!out.w_limit_nodal) {
        out.note = "W flowed to a " + to_string(out.w_limit.sign_class) + " state";
        return out;
    }
    out.c_nod = out.w_limit.energy;
    out.morse_w_limit = morse_index(out.w_limit.field, spec);

    const EigenspaceBasis basis = second_eigenspace(mesh);
    out.path = string_saddle(w, basis.degenerate ? basis.psi2 : basis.psi1, spec, cfg, scfg);
    out.c_mp_est = out.path.max_energy;
    out.gap = out.c_mp_est - out.c_nod;
    if (!out.path.ok) out.note = "string: " + out.path.note;
    return out;
}

}  // namespace nodal
