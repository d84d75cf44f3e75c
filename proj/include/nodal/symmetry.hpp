#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "nodal/grid.hpp"

namespace nodal {

/// Orthonormal (in inner_l2) basis of the second Dirichlet eigenspace.
/// When the eigenvalue is double and the mesh has both axis reflections,
/// psi1 is odd across the x-axis line and even across the y-axis line,
/// psi2 the other way round. On the square psi1 ~ sin x sin 2y and
/// psi2 ~ sin 2x sin y.
struct EigenspaceBasis {
    double lambda1h = 0.0;
    double lambda2h = 0.0;
    double lambda3h = 0.0;
    bool degenerate = false;
    bool aligned = false;
    ScalarField psi1;
    ScalarField psi2;
};

EigenspaceBasis second_eigenspace(const MeshPtr& mesh, double eig_tol = 1e-9);

struct E2Projection {
    double c1 = 0.0;
    double c2 = 0.0;
    ScalarField projection;
    double remainder_norm = 0.0;
};

E2Projection project_E2(const ScalarField& u, const EigenspaceBasis& basis);

enum class BranchType { M, D, Other };
std::string to_string(BranchType t);

struct BranchClass {
    double alpha = 0.0;  ///< radians in [0, pi)
    BranchType type = BranchType::Other;
    /// The E2 remainder exceeds half of ||u||; alpha is meaningless.
    bool unreliable = false;
    double remainder_ratio = 0.0;
};

inline constexpr double kDefaultAngleTol = 10.0 * 3.14159265358979323846 / 180.0;

BranchClass classify_square_branch(const ScalarField& u, const EigenspaceBasis& basis,
                                   double angle_tol = kDefaultAngleTol);

/// Two-point rearrangement across the mirror line of `axis`: the larger of
/// each mirror pair goes to the positive side. Positive sides: XAxis dy > 0,
/// YAxis dx > 0, Diagonal dx > dy, AntiDiagonal dx + dy > 0.
ScalarField polarize(const ScalarField& u, Reflection axis);

struct SymmetryReport {
    /// ||u + R u||_inf / ||u||_inf for every reflection the mesh admits.
    std::vector<std::pair<Reflection, double>> odd_deviation;
    double axis_angle = 0.0;  ///< radians; axis e = (cos, sin)
    double axial_deviation = 0.0;
    double monotonicity_violation = 0.0;
    double min_slope = 0.0;
    double radial_variance = 0.0;
    /// Oddness across the diameter perpendicular to e.
    double diameter_odd_deviation = 0.0;
    bool is_foliated_schwarz = false;
    int rings_used = 0;
};

/// Samples u on a polar grid by bilinear interpolation. All deviations are
/// relative to ||u||_inf; `tol` is the relative threshold for the
/// foliated-Schwarz verdict. Rings that leave the mask are skipped.
SymmetryReport foliated_schwarz_check(const ScalarField& u, int n_r = 24, int n_theta = 90, double tol = 2e-2);

/// Number of 4-connected components of {u > floor} plus those of
/// {u < -floor}.
int nodal_domains(const ScalarField& u, double sign_floor);
int nodal_domains(const ScalarField& u);

/// Report tags: "odd_x", "odd_y", "odd_diag", "fss(axis=...)", "radial",
/// "none".
std::vector<std::string> symmetry_tags(const ScalarField& u, double tol = 1e-6, double fss_tol = 2e-2);

/// (u + R u) / 2 or (u - R u) / 2, exact in floating point.
ScalarField even_part(const ScalarField& u, Reflection r);
ScalarField odd_part(const ScalarField& u, Reflection r);

}  // namespace nodal
