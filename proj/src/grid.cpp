#include "nodal/grid.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>

namespace nodal {

namespace {

template <class... Ts>
struct Overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

bool positive(double v) { return std::isfinite(v) && v > 0.0; }

std::optional<int> as_integer(double v) {
    const double r = std::round(v);
    if (std::abs(v - r) <= 1e-7) return static_cast<int>(r);
    return std::nullopt;
}

}  // namespace

void validate(const DomainSpec& spec) {
    std::visit(Overloaded{
                   [](const Square& s) {
                       if (!positive(s.side)) throw MeshError("square: side must be positive");
                   },
                   [](const Rectangle& r) {
                       if (!positive(r.width) || !positive(r.height)) {
                           throw MeshError("rectangle: width and height must be positive");
                       }
                   },
                   [](const Disk& d) {
                       if (!positive(d.radius)) throw MeshError("disk: radius must be positive");
                   },
                   [](const Annulus& a) {
                       if (!positive(a.inner) || !positive(a.outer) || !(a.inner < a.outer)) {
                           throw MeshError("annulus: need 0 < inner < outer");
                       }
                   },
                   [](const Dumbbell& d) {
                       if (!positive(d.lobe_radius) || !positive(d.channel_width) ||
                           !positive(d.channel_length)) {
                           throw MeshError("dumbbell: lengths must be positive");
                       }
                       if (!(d.channel_width < 2.0 * d.lobe_radius)) {
                           throw MeshError("dumbbell: channel width must be below the lobe diameter");
                       }
                   },
               },
               spec);
}

std::string domain_name(const DomainSpec& spec) {
    return std::visit(Overloaded{
                          [](const Square&) { return std::string("square"); },
                          [](const Rectangle&) { return std::string("rectangle"); },
                          [](const Disk&) { return std::string("disk"); },
                          [](const Annulus&) { return std::string("annulus"); },
                          [](const Dumbbell&) { return std::string("dumbbell"); },
                      },
                      spec);
}

std::string reflection_name(Reflection r) {
    switch (r) {
        case Reflection::XAxis: return "x-axis";
        case Reflection::YAxis: return "y-axis";
        case Reflection::Diagonal: return "diagonal";
        case Reflection::AntiDiagonal: return "anti-diagonal";
        case Reflection::Center: return "center";
    }
    return "?";
}

MeshPtr Mesh::build(const DomainSpec& spec, double h) {
    validate(spec);
    if (!positive(h)) throw MeshError("mesh: spacing h must be positive");

    auto mesh = std::shared_ptr<Mesh>(new Mesh());
    mesh->h_ = h;
    mesh->domain_ = spec;

    // membership predicate on doubled offsets from the symmetry center, so
    // mirror nodes see bitwise-mirrored coordinates
    std::function<bool(double, double)> inside;

    std::visit(
        Overloaded{
            [&](const Square& s) {
                const int n = static_cast<int>(std::ceil(s.side / h - 1e-9));
                mesh->nx_ = mesh->ny_ = n + 1;
                mesh->origin_ = {0.0, 0.0};
                mesh->center_ = {s.side / 2, s.side / 2};
                const double eps = 1e-9 * h;
                const double side = s.side;
                inside = [=](double x, double y) {
                    x += side / 2;
                    y += side / 2;
                    return x > eps && x < side - eps && y > eps && y < side - eps;
                };
            },
            [&](const Rectangle& r) {
                const int n = static_cast<int>(std::ceil(r.width / h - 1e-9));
                const int m = static_cast<int>(std::ceil(r.height / h - 1e-9));
                mesh->nx_ = n + 1;
                mesh->ny_ = m + 1;
                mesh->origin_ = {0.0, 0.0};
                mesh->center_ = {r.width / 2, r.height / 2};
                const double eps = 1e-9 * h;
                const double w = r.width;
                const double ht = r.height;
                inside = [=](double x, double y) {
                    x += w / 2;
                    y += ht / 2;
                    return x > eps && x < w - eps && y > eps && y < ht - eps;
                };
            },
            [&](const Disk& d) {
                const int k = static_cast<int>(std::floor(d.radius / h + 1e-9)) + 1;
                mesh->nx_ = mesh->ny_ = 2 * k + 1;
                mesh->origin_ = {-k * h, -k * h};
                mesh->center_ = {0.0, 0.0};
                const double r2 = d.radius * d.radius * (1.0 - 1e-12);
                inside = [=](double x, double y) { return x * x + y * y < r2; };
            },
            [&](const Annulus& a) {
                const int k = static_cast<int>(std::floor(a.outer / h + 1e-9)) + 1;
                mesh->nx_ = mesh->ny_ = 2 * k + 1;
                mesh->origin_ = {-k * h, -k * h};
                mesh->center_ = {0.0, 0.0};
                const double lo2 = a.inner * a.inner * (1.0 + 1e-12);
                const double hi2 = a.outer * a.outer * (1.0 - 1e-12);
                inside = [=](double x, double y) {
                    const double r2 = x * x + y * y;
                    return r2 > lo2 && r2 < hi2;
                };
            },
            [&](const Dumbbell& d) {
                if (!(h < d.channel_width)) {
                    throw MeshError("dumbbell: channel width spans no interior row at this h");
                }
                const double c = d.lobe_radius + d.channel_length / 2;
                const int kx = static_cast<int>(std::floor((c + d.lobe_radius) / h + 1e-9)) + 1;
                const int ky = static_cast<int>(std::floor(d.lobe_radius / h + 0.5 + 1e-9)) + 1;
                mesh->nx_ = 2 * kx + 1;
                mesh->ny_ = 2 * ky;
                // rows sit at half-integer multiples of h so the channel of
                // width delta contains rows only when delta > h
                mesh->origin_ = {-kx * h, -(ky - 0.5) * h};
                mesh->center_ = {0.0, 0.0};
                const double r2 = d.lobe_radius * d.lobe_radius * (1.0 - 1e-12);
                const double half = d.channel_width / 2;
                inside = [=](double x, double y) {
                    const double yy = y * y;
                    if ((x - c) * (x - c) + yy < r2) return true;
                    if ((x + c) * (x + c) + yy < r2) return true;
                    return std::abs(x) < c && std::abs(y) < half;
                };
            },
        },
        spec);

    mesh->ci2_ = as_integer(2.0 * (mesh->center_.x - mesh->origin_.x) / h);
    mesh->cj2_ = as_integer(2.0 * (mesh->center_.y - mesh->origin_.y) / h);

    mesh->lattice_index_.assign(static_cast<std::size_t>(mesh->nx_) * mesh->ny_, -1);
    for (int j = 0; j < mesh->ny_; ++j) {
        for (int i = 0; i < mesh->nx_; ++i) {
            const Point p = mesh->lattice_coords(i, j);
            if (inside(p.x - mesh->center_.x, p.y - mesh->center_.y)) {
                mesh->lattice_index_[static_cast<std::size_t>(j) * mesh->nx_ + i] = 0;
            }
        }
    }
    mesh->finalize();
    if (mesh->size() == 0) throw MeshError("mesh: no interior nodes (h too coarse)");

    if (const auto* d = std::get_if<Dumbbell>(&spec)) {
        // the channel must carry interior nodes across the whole gap
        const int mid = *mesh->ci2_ / 2;
        const int kx = static_cast<int>(std::floor(0.5 * d->channel_length / h));
        for (int off = -kx; off <= kx; ++off) {
            bool any = false;
            for (int j = 0; j < mesh->ny_; ++j) any = any || mesh->index(mid + off, j) >= 0;
            if (!any) throw MeshError("dumbbell: channel has no interior column at this h");
        }
    }
    return mesh;
}

MeshPtr Mesh::restrict_to(const std::function<bool(Point)>& keep) const {
    auto mesh = std::shared_ptr<Mesh>(new Mesh(*this));
    mesh->domain_.reset();
    for (int j = 0; j < ny_; ++j) {
        for (int i = 0; i < nx_; ++i) {
            auto& slot = mesh->lattice_index_[static_cast<std::size_t>(j) * nx_ + i];
            if (slot >= 0 && !keep(lattice_coords(i, j))) slot = -1;
        }
    }
    mesh->finalize();
    if (mesh->size() == 0) throw MeshError("restrict_to: no interior nodes kept");
    return mesh;
}

void Mesh::finalize() {
    nodes_.clear();
    for (int j = 0; j < ny_; ++j) {
        for (int i = 0; i < nx_; ++i) {
            auto& slot = lattice_index_[static_cast<std::size_t>(j) * nx_ + i];
            if (slot >= 0) {
                if (i == 0 || j == 0 || i == nx_ - 1 || j == ny_ - 1) {
                    throw MeshError("mesh: interior node on the bounding frame");
                }
                slot = static_cast<int>(nodes_.size());
                nodes_.push_back({i, j});
            }
        }
    }
    neighbors_.resize(nodes_.size());
    for (std::size_t k = 0; k < nodes_.size(); ++k) {
        const auto [i, j] = nodes_[k];
        neighbors_[k] = {index(i - 1, j), index(i + 1, j), index(i, j - 1), index(i, j + 1)};
    }

    for (std::size_t r = 0; r < kAllReflections.size(); ++r) {
        reflections_[r].reset();
        if (!ci2_ || !cj2_) continue;
        const Reflection refl = kAllReflections[r];
        if ((refl == Reflection::Diagonal || refl == Reflection::AntiDiagonal) &&
            (*ci2_ - *cj2_) % 2 != 0) {
            continue;
        }
        std::vector<std::size_t> map(nodes_.size());
        bool ok = true;
        for (std::size_t k = 0; k < nodes_.size() && ok; ++k) {
            const int dx = 2 * nodes_[k][0] - *ci2_;
            const int dy = 2 * nodes_[k][1] - *cj2_;
            int rx = dx;
            int ry = dy;
            switch (refl) {
                case Reflection::XAxis: ry = -dy; break;
                case Reflection::YAxis: rx = -dx; break;
                case Reflection::Diagonal: rx = dy; ry = dx; break;
                case Reflection::AntiDiagonal: rx = -dy; ry = -dx; break;
                case Reflection::Center: rx = -dx; ry = -dy; break;
            }
            const int i2 = rx + *ci2_;
            const int j2 = ry + *cj2_;
            if (i2 % 2 != 0 || j2 % 2 != 0) {
                ok = false;
                break;
            }
            const int target = index(i2 / 2, j2 / 2);
            if (target < 0) {
                ok = false;
                break;
            }
            map[k] = static_cast<std::size_t>(target);
        }
        if (ok) reflections_[r] = std::move(map);
    }
}

bool Mesh::is_interior(int i, int j) const { return index(i, j) >= 0; }

int Mesh::index(int i, int j) const {
    if (i < 0 || j < 0 || i >= nx_ || j >= ny_) return -1;
    return lattice_index_[static_cast<std::size_t>(j) * nx_ + i];
}

Point Mesh::coords(std::size_t k) const { return lattice_coords(nodes_[k][0], nodes_[k][1]); }

Point Mesh::lattice_coords(int i, int j) const {
    if (ci2_ && cj2_) {
        return {center_.x + 0.5 * (2 * i - *ci2_) * h_, center_.y + 0.5 * (2 * j - *cj2_) * h_};
    }
    return {origin_.x + i * h_, origin_.y + j * h_};
}

bool Mesh::symmetric_under(Reflection r) const {
    return reflections_[static_cast<std::size_t>(r)].has_value();
}

const std::vector<std::size_t>& Mesh::reflection_map(Reflection r) const {
    const auto& m = reflections_[static_cast<std::size_t>(r)];
    if (!m) throw MeshMismatch("mesh is not symmetric under the " + reflection_name(r) + " reflection");
    return *m;
}

void Mesh::apply_laplacian(std::span<const double> x, std::span<double> y, double shift) const {
    const double inv_h2 = 1.0 / (h_ * h_);
    const double diag = 4.0 * inv_h2 + shift;
    const std::size_t n = nodes_.size();
    for (std::size_t k = 0; k < n; ++k) {
        const auto& nb = neighbors_[k];
        const double l = nb[kLeft] >= 0 ? x[static_cast<std::size_t>(nb[kLeft])] : 0.0;
        const double r = nb[kRight] >= 0 ? x[static_cast<std::size_t>(nb[kRight])] : 0.0;
        const double d = nb[kDown] >= 0 ? x[static_cast<std::size_t>(nb[kDown])] : 0.0;
        const double u = nb[kUp] >= 0 ? x[static_cast<std::size_t>(nb[kUp])] : 0.0;
        y[k] = diag * x[k] - inv_h2 * ((l + r) + (d + u));
    }
}

SparseOperator neg_laplacian(const Mesh& mesh) {
    const double inv_h2 = 1.0 / (mesh.h() * mesh.h());
    std::vector<Triplet> t;
    t.reserve(5 * mesh.size());
    for (std::size_t k = 0; k < mesh.size(); ++k) {
        t.push_back({k, k, 4.0 * inv_h2});
        for (int nb : mesh.neighbors(k)) {
            if (nb >= 0) t.push_back({k, static_cast<std::size_t>(nb), -inv_h2});
        }
    }
    return SparseOperator::from_triplets(mesh.size(), std::move(t));
}

ScalarField::ScalarField(MeshPtr mesh, Vector values) : mesh_(std::move(mesh)), values_(std::move(values)) {
    if (!mesh_) throw PreconditionError("ScalarField: null mesh");
    if (values_.size() != mesh_->size()) throw MeshMismatch("ScalarField: length differs from mesh size");
    for (double v : values_) {
        if (!std::isfinite(v)) throw PreconditionError("ScalarField: non-finite value");
    }
}

ScalarField ScalarField::zeros(MeshPtr mesh) {
    const std::size_t n = mesh->size();
    return ScalarField(std::move(mesh), Vector(n, 0.0));
}

ScalarField ScalarField::sample(MeshPtr mesh, const std::function<double(Point)>& fn) {
    Vector v(mesh->size());
    for (std::size_t k = 0; k < v.size(); ++k) v[k] = fn(mesh->coords(k));
    return ScalarField(std::move(mesh), std::move(v));
}

double ScalarField::max() const { return *std::max_element(values_.begin(), values_.end()); }
double ScalarField::min() const { return *std::min_element(values_.begin(), values_.end()); }

ScalarField ScalarField::operator-() const {
    Vector v(values_.size());
    for (std::size_t k = 0; k < v.size(); ++k) v[k] = -values_[k];
    return ScalarField(mesh_, std::move(v));
}

ScalarField ScalarField::operator+(const ScalarField& o) const {
    require_same_mesh(*this, o);
    Vector v(values_);
    axpy(1.0, o.values_, v);
    return ScalarField(mesh_, std::move(v));
}

ScalarField ScalarField::operator-(const ScalarField& o) const {
    require_same_mesh(*this, o);
    Vector v(values_);
    axpy(-1.0, o.values_, v);
    return ScalarField(mesh_, std::move(v));
}

ScalarField ScalarField::operator*(double a) const {
    Vector v(values_);
    for (double& x : v) x *= a;
    return ScalarField(mesh_, std::move(v));
}

void require_same_mesh(const ScalarField& a, const ScalarField& b) {
    if (a.mesh_ptr() != b.mesh_ptr()) throw MeshMismatch("fields live on different meshes");
}

double integrate(const ScalarField& u) {
    double s = 0.0;
    for (double v : u.values()) s += v;
    return s * u.mesh().h() * u.mesh().h();
}

double inner_l2(const ScalarField& u, const ScalarField& v) {
    require_same_mesh(u, v);
    return dot(u.values(), v.values()) * u.mesh().h() * u.mesh().h();
}

double norm_l2(const ScalarField& u) { return std::sqrt(inner_l2(u, u)); }

ScalarField reflect(const ScalarField& u, Reflection r) {
    const auto& map = u.mesh().reflection_map(r);
    Vector v(u.size());
    for (std::size_t k = 0; k < v.size(); ++k) v[k] = u[map[k]];
    return ScalarField(u.mesh_ptr(), std::move(v));
}

ScalarField embed(const ScalarField& u, MeshPtr target) {
    const Mesh& src = u.mesh();
    if (src.nx() != target->nx() || src.ny() != target->ny() || src.h() != target->h()) {
        throw MeshMismatch("embed: meshes do not share a lattice");
    }
    Vector v(target->size(), 0.0);
    for (std::size_t k = 0; k < u.size(); ++k) {
        const auto [i, j] = src.lattice(k);
        const int t = target->index(i, j);
        if (t < 0) throw MeshMismatch("embed: source node outside the target mask");
        v[static_cast<std::size_t>(t)] = u[k];
    }
    return ScalarField(std::move(target), std::move(v));
}

void write_field(std::ostream& os, const ScalarField& u) {
    const Mesh& m = u.mesh();
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.12g", m.h());
    std::string hs = buf;
    const Point o = m.lattice_coords(0, 0);
    std::snprintf(buf, sizeof buf, "%.12g %.12g", o.x, o.y);
    os << "# " << m.nx() << ' ' << m.ny() << ' ' << hs << ' ' << buf << '\n';
    for (int j = 0; j < m.ny(); ++j) {
        for (int i = 0; i < m.nx(); ++i) {
            if (i > 0) os << ' ';
            const int k = m.index(i, j);
            if (k < 0) {
                os << "nan";
            } else {
                std::snprintf(buf, sizeof buf, "%.12g", u[static_cast<std::size_t>(k)]);
                os << buf;
            }
        }
        os << '\n';
    }
}

ScalarField read_field(std::istream& is, MeshPtr mesh) {
    std::string line;
    if (!std::getline(is, line) || line.rfind("# ", 0) != 0) {
        throw PreconditionError("read_field: missing header");
    }
    std::istringstream header(line.substr(2));
    int nx = 0;
    int ny = 0;
    double h = 0.0;
    header >> nx >> ny >> h;
    if (nx != mesh->nx() || ny != mesh->ny() || std::abs(h - mesh->h()) > 1e-10 * mesh->h()) {
        throw MeshMismatch("read_field: header does not match mesh");
    }
    Vector v(mesh->size(), 0.0);
    for (int j = 0; j < ny; ++j) {
        for (int i = 0; i < nx; ++i) {
            std::string tok;
            if (!(is >> tok)) throw PreconditionError("read_field: truncated data");
            const int k = mesh->index(i, j);
            if (k >= 0) v[static_cast<std::size_t>(k)] = std::stod(tok);
        }
    }
    return ScalarField(std::move(mesh), std::move(v));
}

}  // namespace nodal
