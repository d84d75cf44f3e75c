#include "nodal/symmetry.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>

#include "nodal/error.hpp"
#include "nodal/linalg.hpp"

namespace nodal {

namespace {

constexpr double kPi = std::numbers::pi;

double wrap_pi(double a) {
    a = std::fmod(a, kPi);
    if (a < 0) a += kPi;
    if (a >= kPi) a -= kPi;
    return a;
}

ScalarField normalized(const ScalarField& u) { return u * (1.0 / norm_l2(u)); }

ScalarField sample_offset(const MeshPtr& mesh, double (*fn)(double, double)) {
    const Point c = mesh->center();
    return ScalarField::sample(mesh, [&](Point p) { return fn(p.x - c.x, p.y - c.y); });
}

}  // namespace

ScalarField even_part(const ScalarField& u, Reflection r) { return 0.5 * (u + reflect(u, r)); }
ScalarField odd_part(const ScalarField& u, Reflection r) { return 0.5 * (u - reflect(u, r)); }

EigenspaceBasis second_eigenspace(const MeshPtr& mesh, double eig_tol) {
    const SparseOperator a = neg_laplacian(*mesh);
    if (a.dimension() < 3) throw PreconditionError("second_eigenspace: mesh needs at least 3 interior nodes");
    const auto eig = smallest_eigs(a, 3, eig_tol);
    EigenspaceBasis b;
    b.lambda1h = eig[0].value;
    b.lambda2h = eig[1].value;
    b.lambda3h = eig[2].value;
    b.degenerate = std::abs(eig[2].value - eig[1].value) <= default_zero_band(a);
    ScalarField v1(mesh, eig[1].vector);
    ScalarField v2(mesh, eig[2].vector);

    const bool axes = mesh->symmetric_under(Reflection::XAxis) && mesh->symmetric_under(Reflection::YAxis);
    if (b.degenerate && axes) {
        auto pick = [&](bool first) {
            auto proj = [&](const ScalarField& v) {
                return first ? odd_part(even_part(v, Reflection::YAxis), Reflection::XAxis)
                             : odd_part(even_part(v, Reflection::XAxis), Reflection::YAxis);
            };
            ScalarField p1 = proj(v1);
            ScalarField p2 = proj(v2);
            return norm_l2(p1) >= norm_l2(p2) ? p1 : p2;
        };
        ScalarField p1 = pick(true);
        ScalarField p2 = pick(false);
        if (norm_l2(p1) > 0.1 * norm_l2(v1) && norm_l2(p2) > 0.1 * norm_l2(v1)) {
            v1 = p1;
            // the diagonal swap maps one parity class onto the other exactly
            v2 = mesh->symmetric_under(Reflection::Diagonal) ? reflect(p1, Reflection::Diagonal) : p2;
            b.aligned = true;
        }
    }
    v1 = normalized(v1);
    v2 = normalized(v2);
    if (!b.aligned) {
        // Gram-Schmidt in the field inner product
        v2 = normalized(v2 - inner_l2(v2, v1) * v1);
    }
    // sign convention: sin x sin 2y behaves like -dy near the square's center
    const ScalarField r1 = sample_offset(mesh, [](double, double dy) { return -dy; });
    const ScalarField r2 = sample_offset(mesh, [](double dx, double) { return -dx; });
    if (inner_l2(v1, r1) < 0) v1 = -v1;
    if (inner_l2(v2, r2) < 0) v2 = -v2;
    b.psi1 = v1;
    b.psi2 = v2;
    return b;
}

E2Projection project_E2(const ScalarField& u, const EigenspaceBasis& basis) {
    require_same_mesh(u, basis.psi1);
    E2Projection p;
    p.c1 = inner_l2(u, basis.psi1);
    p.c2 = inner_l2(u, basis.psi2);
    p.projection = p.c1 * basis.psi1 + p.c2 * basis.psi2;
    p.remainder_norm = norm_l2(u - p.projection);
    return p;
}

std::string to_string(BranchType t) {
    switch (t) {
        case BranchType::M: return "M";
        case BranchType::D: return "D";
        case BranchType::Other: return "other";
    }
    return "?";
}

BranchClass classify_square_branch(const ScalarField& u, const EigenspaceBasis& basis, double angle_tol) {
    const E2Projection p = project_E2(u, basis);
    BranchClass c;
    const double un = norm_l2(u);
    c.remainder_ratio = un > 0 ? p.remainder_norm / un : 1.0;
    c.unreliable = un == 0.0 || c.remainder_ratio > 0.5;
    c.alpha = wrap_pi(std::atan2(p.c2, p.c1));
    auto near = [&](double target) {
        double d = std::abs(c.alpha - target);
        d = std::min(d, kPi - d);
        return d <= angle_tol;
    };
    if (!c.unreliable) {
        if (near(0.0) || near(kPi / 2)) {
            c.type = BranchType::M;
        } else if (near(kPi / 4) || near(3 * kPi / 4)) {
            c.type = BranchType::D;
        }
    }
    return c;
}

ScalarField polarize(const ScalarField& u, Reflection axis) {
    if (axis == Reflection::Center) throw PreconditionError("polarize: needs a mirror line, not the center");
    const Mesh& m = u.mesh();
    const auto& map = m.reflection_map(axis);
    const Point c = m.center();
    const double eps = 1e-9 * m.h();
    Vector v = u.vec();
    for (std::size_t k = 0; k < u.size(); ++k) {
        const Point p = m.coords(k);
        const double dx = p.x - c.x;
        const double dy = p.y - c.y;
        double side = 0.0;
        switch (axis) {
            case Reflection::XAxis: side = dy; break;
            case Reflection::YAxis: side = dx; break;
            case Reflection::Diagonal: side = dx - dy; break;
            case Reflection::AntiDiagonal: side = dx + dy; break;
            case Reflection::Center: break;
        }
        if (side > eps) {
            const std::size_t j = map[k];
            v[k] = std::max(u[k], u[j]);
            v[j] = std::min(u[k], u[j]);
        }
    }
    return ScalarField(u.mesh_ptr(), std::move(v));
}

namespace {

/// Bilinear interpolation of interior values; nullopt if a corner is not
/// interior.
std::optional<double> bilinear(const ScalarField& u, double x, double y) {
    const Mesh& m = u.mesh();
    const Point o = m.lattice_coords(0, 0);
    const double gx = (x - o.x) / m.h();
    const double gy = (y - o.y) / m.h();
    const int i = static_cast<int>(std::floor(gx));
    const int j = static_cast<int>(std::floor(gy));
    const double tx = gx - i;
    const double ty = gy - j;
    double val = 0.0;
    for (int di = 0; di <= 1; ++di) {
        for (int dj = 0; dj <= 1; ++dj) {
            const int k = (i + di >= 0 && j + dj >= 0 && i + di < m.nx() && j + dj < m.ny()) ? m.index(i + di, j + dj)
                                                                                        : -1;
            if (k < 0) return std::nullopt;
            val += (di ? tx : 1 - tx) * (dj ? ty : 1 - ty) * u[static_cast<std::size_t>(k)];
        }
    }
    return val;
}

}  // namespace

SymmetryReport foliated_schwarz_check(const ScalarField& u, int n_r, int n_theta, double tol) {
    const Mesh& m = u.mesh();
    double r_in = 0.0;
    double r_out = 0.0;
    if (m.domain()) {
        if (const auto* d = std::get_if<Disk>(&*m.domain())) {
            r_out = d->radius;
        } else if (const auto* a = std::get_if<Annulus>(&*m.domain())) {
            r_in = a->inner;
            r_out = a->outer;
        }
    }
    if (r_out == 0.0) throw PreconditionError("foliated_schwarz_check: needs a disk or annulus mesh");
    if (n_r < 1 || n_theta < 4) throw PreconditionError("foliated_schwarz_check: polar grid too small");

    SymmetryReport rep;
    for (Reflection r : kAllReflections) {
        if (r != Reflection::Center && m.symmetric_under(r)) {
            const double sup = u.sup_norm();
            rep.odd_deviation.emplace_back(r, sup > 0 ? (u + reflect(u, r)).sup_norm() / sup : 0.0);
        }
    }
    const double sup = u.sup_norm();
    if (sup == 0.0) {
        rep.is_foliated_schwarz = true;
        return rep;
    }
    const Point c = m.center();
    const int n_full = 2 * n_theta;

    // rings where the whole circle stays inside the mask
    std::vector<double> radii;
    std::vector<std::vector<double>> ring_values;
    for (int jr = 0; jr < n_r; ++jr) {
        const double r = r_in + (r_out - r_in) * (jr + 0.5) / n_r;
        std::vector<double> vals(n_full);
        bool ok = true;
        for (int it = 0; it < n_full && ok; ++it) {
            const double th = 2 * kPi * it / n_full;
            auto v = bilinear(u, c.x + r * std::cos(th), c.y + r * std::sin(th));
            if (!v) ok = false;
            else vals[it] = *v;
        }
        if (ok) {
            radii.push_back(r);
            ring_values.push_back(std::move(vals));
        }
    }
    rep.rings_used = static_cast<int>(radii.size());
    if (radii.empty()) throw PreconditionError("foliated_schwarz_check: every ring leaves the mask");

    double ca = 0.0;
    double sa = 0.0;
    double var = 0.0;
    std::size_t count = 0;
    for (const auto& vals : ring_values) {
        double mean = 0.0;
        for (int it = 0; it < n_full; ++it) {
            const double th = 2 * kPi * it / n_full;
            ca += vals[it] * std::cos(th);
            sa += vals[it] * std::sin(th);
            mean += vals[it];
        }
        mean /= n_full;
        for (double v : vals) {
            var += (v - mean) * (v - mean);
            ++count;
        }
    }
    rep.radial_variance = std::sqrt(var / count) / sup;
    rep.axis_angle = std::atan2(sa, ca);

    // profiles along the angle measured from the axis
    double axial = 0.0;
    double odd = 0.0;
    double violation = 0.0;
    double min_slope = INFINITY;
    for (double r : radii) {
        std::vector<double> g(n_theta + 1);
        for (int it = 0; it <= n_theta; ++it) {
            const double t = kPi * it / n_theta;
            auto at = [&](double ang) {
                return bilinear(u, c.x + r * std::cos(ang), c.y + r * std::sin(ang)).value_or(0.0);
            };
            const double plus = at(rep.axis_angle + t);
            const double minus = at(rep.axis_angle - t);
            const double opposite = at(rep.axis_angle + kPi - t);
            axial = std::max(axial, std::abs(plus - minus));
            odd = std::max(odd, std::abs(plus + opposite));
            g[it] = 0.5 * (plus + minus);
        }
        double rise = 0.0;
        for (int it = 0; it < n_theta; ++it) {
            const double d = g[it + 1] - g[it];
            rise += std::max(0.0, d);
            min_slope = std::min(min_slope, -d / (kPi / n_theta));
        }
        violation += rise;
    }
    rep.axial_deviation = axial / sup;
    rep.diameter_odd_deviation = odd / sup;
    rep.monotonicity_violation = violation / radii.size() / sup;
    rep.min_slope = min_slope / sup;
    rep.is_foliated_schwarz = rep.axial_deviation <= tol && rep.monotonicity_violation <= tol;
    return rep;
}

int nodal_domains(const ScalarField& u, double sign_floor) {
    const Mesh& m = u.mesh();
    std::vector<int> label(u.size(), -1);
    int domains = 0;
    std::vector<std::size_t> stack;
    for (std::size_t s = 0; s < u.size(); ++s) {
        if (label[s] >= 0) continue;
        const int sign = u[s] > sign_floor ? 1 : (u[s] < -sign_floor ? -1 : 0);
        if (sign == 0) continue;
        label[s] = domains;
        stack.push_back(s);
        while (!stack.empty()) {
            const std::size_t k = stack.back();
            stack.pop_back();
            for (int nb : m.neighbors(k)) {
                if (nb < 0) continue;
                const auto j = static_cast<std::size_t>(nb);
                if (label[j] >= 0) continue;
                if ((sign > 0 && u[j] > sign_floor) || (sign < 0 && u[j] < -sign_floor)) {
                    label[j] = domains;
                    stack.push_back(j);
                }
            }
        }
        ++domains;
    }
    return domains;
}

int nodal_domains(const ScalarField& u) { return nodal_domains(u, 1e-6 * u.sup_norm()); }

std::vector<std::string> symmetry_tags(const ScalarField& u, double tol, double fss_tol) {
    std::vector<std::string> tags;
    const Mesh& m = u.mesh();
    const double sup = u.sup_norm();
    if (sup == 0.0) return {"none"};
    auto odd = [&](Reflection r) {
        return m.symmetric_under(r) && (u + reflect(u, r)).sup_norm() <= tol * sup;
    };
    if (odd(Reflection::XAxis)) tags.emplace_back("odd_x");
    if (odd(Reflection::YAxis)) tags.emplace_back("odd_y");
    if (odd(Reflection::Diagonal) || odd(Reflection::AntiDiagonal)) tags.emplace_back("odd_diag");
    const bool radial_mesh =
        m.domain() && (std::holds_alternative<Disk>(*m.domain()) || std::holds_alternative<Annulus>(*m.domain()));
    if (radial_mesh) {
        const SymmetryReport r = foliated_schwarz_check(u, 24, 90, fss_tol);
        if (r.radial_variance <= fss_tol) {
            tags.emplace_back("radial");
        } else if (r.is_foliated_schwarz) {
            char buf[48];
            double deg = r.axis_angle * 180.0 / kPi;
            if (deg < 0) deg += 360.0;
            std::snprintf(buf, sizeof buf, "fss(axis=%.1f°)", deg);
            tags.emplace_back(buf);
        }
    }
    if (tags.empty()) tags.emplace_back("none");
    return tags;
}

}  // namespace nodal
