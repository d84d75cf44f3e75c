#pragma once

#include <array>
#include <functional>
#include <iosfwd>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "nodal/linalg.hpp"

namespace nodal {

struct Point {
    double x = 0.0;
    double y = 0.0;
};

struct Square {
    double side;
};
struct Rectangle {
    double width;
    double height;
};
struct Disk {
    double radius;
};
struct Annulus {
    double inner;
    double outer;
};
/// Two disks of radius `lobe_radius` joined center-to-center by an
/// axis-aligned channel of width `channel_width`; `channel_length` is the
/// gap between the two disks along the x-axis.
struct Dumbbell {
    double lobe_radius;
    double channel_width;
    double channel_length;
};

using DomainSpec = std::variant<Square, Rectangle, Disk, Annulus, Dumbbell>;

/// Throws MeshError unless all lengths are positive and consistent.
void validate(const DomainSpec& spec);
std::string domain_name(const DomainSpec& spec);

/// Grid symmetries about the mesh's symmetry center.
enum class Reflection {
    XAxis,         ///< (dx, dy) -> (dx, -dy)
    YAxis,         ///< (dx, dy) -> (-dx, dy)
    Diagonal,      ///< (dx, dy) -> (dy, dx)
    AntiDiagonal,  ///< (dx, dy) -> (-dy, -dx)
    Center,        ///< (dx, dy) -> (-dx, -dy)
};

inline constexpr std::array<Reflection, 5> kAllReflections = {
    Reflection::XAxis, Reflection::YAxis, Reflection::Diagonal, Reflection::AntiDiagonal,
    Reflection::Center};

std::string reflection_name(Reflection r);

class Mesh;
using MeshPtr = std::shared_ptr<const Mesh>;

/// Masked uniform grid. Interior nodes are numbered row by row (y-major).
/// Every interior node has its four lattice neighbors inside the bounding
/// grid; neighbors outside the mask carry homogeneous Dirichlet data.
class Mesh {
public:
    enum Direction { kLeft = 0, kRight = 1, kDown = 2, kUp = 3 };
    using Neighbors = std::array<int, 4>;

    static MeshPtr build(const DomainSpec& spec, double h);

    /// Same lattice, keeping only interior nodes whose coordinates satisfy
    /// `keep`. Used for sub-domain solves that embed back by zero.
    MeshPtr restrict_to(const std::function<bool(Point)>& keep) const;

    double h() const noexcept { return h_; }
    Point origin() const noexcept { return origin_; }
    int nx() const noexcept { return nx_; }
    int ny() const noexcept { return ny_; }
    std::size_t size() const noexcept { return nodes_.size(); }
    const std::optional<DomainSpec>& domain() const noexcept { return domain_; }
    Point center() const noexcept { return center_; }

    bool is_interior(int i, int j) const;
    /// Interior index of lattice node (i, j), or -1.
    int index(int i, int j) const;
    std::array<int, 2> lattice(std::size_t k) const { return nodes_[k]; }
    Point coords(std::size_t k) const;
    Point lattice_coords(int i, int j) const;
    const Neighbors& neighbors(std::size_t k) const { return neighbors_[k]; }

    bool symmetric_under(Reflection r) const;
    /// k -> interior index of the mirror node. Throws MeshMismatch when the
    /// mask is not invariant under r.
    const std::vector<std::size_t>& reflection_map(Reflection r) const;

    /// y = (A + shift I) x for the 5-point Dirichlet stencil A of -Laplace.
    /// Neighbor values are summed in mirror-symmetric pairs, so the product
    /// commutes bitwise with every reflection the mesh admits.
    void apply_laplacian(std::span<const double> x, std::span<double> y, double shift = 0.0) const;

private:
    Mesh() = default;
    void finalize();

    double h_ = 0.0;
    Point origin_;
    int nx_ = 0;
    int ny_ = 0;
    std::optional<DomainSpec> domain_;
    Point center_;
    // doubled lattice coordinates of the symmetry center
    std::optional<int> ci2_;
    std::optional<int> cj2_;
    std::vector<int> lattice_index_;
    std::vector<std::array<int, 2>> nodes_;
    std::vector<Neighbors> neighbors_;
    std::array<std::optional<std::vector<std::size_t>>, 5> reflections_;
};

/// M x M matrix of the 5-point stencil for -Laplace with Dirichlet data.
SparseOperator neg_laplacian(const Mesh& mesh);

/// Real values on the interior nodes of a mesh.
class ScalarField {
public:
    /// Empty placeholder without a mesh.
    ScalarField() = default;
    ScalarField(MeshPtr mesh, Vector values);

    static ScalarField zeros(MeshPtr mesh);
    static ScalarField sample(MeshPtr mesh, const std::function<double(Point)>& fn);

    const Mesh& mesh() const noexcept { return *mesh_; }
    const MeshPtr& mesh_ptr() const noexcept { return mesh_; }
    std::size_t size() const noexcept { return values_.size(); }
    std::span<const double> values() const noexcept { return values_; }
    const Vector& vec() const noexcept { return values_; }
    double operator[](std::size_t k) const { return values_[k]; }

    double sup_norm() const { return norm_inf(values_); }
    double max() const;
    double min() const;

    ScalarField operator-() const;
    ScalarField operator+(const ScalarField& o) const;
    ScalarField operator-(const ScalarField& o) const;
    ScalarField operator*(double a) const;

private:
    MeshPtr mesh_;
    Vector values_;
};

inline ScalarField operator*(double a, const ScalarField& u) { return u * a; }

/// Throws MeshMismatch unless a and b share a mesh.
void require_same_mesh(const ScalarField& a, const ScalarField& b);

/// h^2 * sum of nodal values.
double integrate(const ScalarField& u);
double inner_l2(const ScalarField& u, const ScalarField& v);
double norm_l2(const ScalarField& u);

ScalarField reflect(const ScalarField& u, Reflection r);

/// Pads a field on a restricted mesh with zeros onto a mesh of the same
/// lattice.
ScalarField embed(const ScalarField& u, MeshPtr target);

/// Plain-text dump: `# nx ny h x0 y0`, then ny rows of nx values, `nan`
/// outside the mask.
void write_field(std::ostream& os, const ScalarField& u);
ScalarField read_field(std::istream& is, MeshPtr mesh);

}  // namespace nodal
