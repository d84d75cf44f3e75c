#pragma once

#include <optional>
#include <string>
#include <vector>

#include "nodal/solutions.hpp"
#include "nodal/symmetry.hpp"

namespace nodal {

/// sigma(alpha) = (3/64)(13 - cos 4 alpha).
double analytic_sigma(double alpha);

/// Limit of J lambda / (lambda - lambda2)^2 for the branch with coefficient
/// sigma: -pi^2 / (16 sigma).
double expected_energy_ratio(double sigma);

/// One solution of -Lap u = lambda u - u^3 on the square, stored in the
/// scaled form v = u / sqrt(lambda), which solves -Lap v = lambda (v - v^3).
struct BranchPoint {
    double lambda = 0.0;
    double s = 0.0;  ///< <u, phi_alpha> / <phi_alpha, phi_alpha>
    ScalarField field;  ///< v
    double energy_J = 0.0;  ///< energy of v for lambda (v - v^3)
    double energy_u = 0.0;  ///< energy of u for lambda u - u^3; equals lambda J
    int morse = 0;
    int zeros_flagged = 0;
    double residual = 0.0;
    double alpha = 0.0;  ///< classified angle, radians
    BranchType type = BranchType::Other;
};

struct Branch {
    double alpha_target = 0.0;
    double lambda2h = 0.0;
    std::vector<BranchPoint> points;
    double sigma_hat = 0.0;
    double sigma_stderr = 0.0;
    bool truncated = false;
    std::string note;
};

/// phi_alpha = (pi/2)(cos a psi1 + sin a psi2), so that its integral of
/// squares is pi^2/4.
ScalarField discrete_phi(const EigenspaceBasis& basis, double alpha);

/// 12 points spaced evenly on (lambda2h + lo, lambda2h + hi].
std::vector<double> default_lambda_grid(double lambda2h, double lo = 0.02, double hi = 0.4, int n = 12);

struct ContinuationConfig {
    SearchConfig search;
    double angle_tol = kDefaultAngleTol;
};

/// Natural continuation in lambda. The first point is seeded with
/// s0 phi_alpha (s0 = nullopt picks sqrt((lambda - lambda2h) / sigma(alpha))),
/// each later one with the previous solution rescaled to the predicted
/// amplitude. Stops early (truncated) on convergence failure or when the
/// classified angle leaves the target by more than angle_tol.
Branch continue_branch(const MeshPtr& mesh, const EigenspaceBasis& basis, double alpha,
                       const std::vector<double>& lambda_grid, std::optional<double> s0,
                       const ContinuationConfig& cfg);

struct SigmaFit {
    double sigma_hat = 0.0;
    double stderr_ = 0.0;
};

/// Least squares of lambda - lambda2h against s^2 through the origin.
SigmaFit fit_sigma(const Branch& branch);
SigmaFit fit_sigma(const std::vector<double>& lambdas, const std::vector<double>& s, double lambda2h);

struct EnergyRatio {
    double lambda = 0.0;
    double ratio = 0.0;
};

/// J lambda / (lambda - lambda2h)^2 per point.
std::vector<EnergyRatio> energy_ratio_check(const Branch& branch);

/// |J - (-lambda/4) int v^4| / |J|; 0 for the zero field.
double energy_identity_check(const ScalarField& v, double lambda);
double energy_identity_check(const BranchPoint& p);

/// Linearization of -Lap u = lambda u - u^3 at u: A - diag(lambda - 3 u^2).
SparseOperator u_form_linearization(const ScalarField& u, double lambda);

/// CSV with columns lambda,s,energy_J,energy_u,morse,zeros_flagged,alpha_deg,residual.
std::string branch_csv(const Branch& branch);

}  // namespace nodal
