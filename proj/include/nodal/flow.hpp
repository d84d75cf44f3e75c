#pragma once

#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "nodal/grid.hpp"
#include "nodal/linalg.hpp"
#include "nodal/nonlinearity.hpp"

namespace nodal {

/// Parameters of the discrete descent flow u+ = (1 - tau) u + tau K(u).
struct FlowConfig {
    double tau = 0.9;
    /// nullopt selects kappa_for(f, max(1, s_f)).
    std::optional<double> kappa;
    /// Stop when h ||A u - f(u)|| <= residual_tol. nullopt selects 1e-8 sqrt(M).
    std::optional<double> residual_tol;
    int max_steps = 50000;
    bool backtracking = true;
    /// Relative CG tolerance of each K-map solve.
    double cg_tol = 1e-12;
};

void validate(const FlowConfig& cfg);
double default_residual_tol(const Mesh& mesh);

enum class SignClass { Positive, Negative, Nodal, Zero };
std::string to_string(SignClass c);

/// Zero when ||u||_inf <= zero_floor; otherwise nodal iff both max u and
/// -min u exceed 1e-6 ||u||_inf.
SignClass classify_sign(std::span<const double> u, double zero_floor);

struct SolveReport {
    ScalarField field;
    double residual = 0.0;
    double energy = 0.0;
    int steps = 0;
    std::vector<double> energy_trace;
    bool converged = false;
    SignClass sign_class = SignClass::Zero;
    std::string note;
};

/// Discrete I(u) = h^2 (u^T A u / 2 - sum F(u)). Uses F~ when the spec is
/// truncated.
double energy(const ScalarField& u, const Nonlinearity& spec);

/// A u - f(u).
Vector residual_vector(const ScalarField& u, const Nonlinearity& spec);
/// h ||A u - f(u)||_2.
double residual_norm(const ScalarField& u, const Nonlinearity& spec);

/// The nonlinearity the flow runs on: truncated whenever s_f exists.
Nonlinearity flow_nonlinearity(const Nonlinearity& spec);
double resolve_kappa(const FlowConfig& cfg, const Nonlinearity& spec);

/// K(u) = (A + kappa I)^{-1} (f(u) + kappa u), solved by CG with the
/// mirror-symmetric stencil. `warm` seeds the CG iteration.
ScalarField k_map(const ScalarField& u, const Nonlinearity& spec, double kappa, double cg_tol = 1e-12,
                  const ScalarField* warm = nullptr);

ScalarField flow_step(const ScalarField& u, double tau, const Nonlinearity& spec, double kappa);

/// Called with every visited state (step 0 is the start). Returning false
/// stops the flow.
using FlowObserver =
    std::function<bool(int step, std::span<const double> u, double energy, double residual)>;

SolveReport flow_to_equilibrium(const ScalarField& u0, const Nonlinearity& spec, const FlowConfig& cfg,
                                const FlowObserver& observer = {});

/// A - diag(f'(u)). Throws NotC1Error for families that are not C^1.
SparseOperator linearization(const ScalarField& u, const Nonlinearity& spec);

/// Damped Newton iteration on A u - f(u) = 0 until h ||R|| <= tol.
/// Throws NotC1Error for non-C^1 families and SolverError on a singular
/// Jacobian or when 50 damped steps do not reach tol.
SolveReport newton_refine(const ScalarField& u, const Nonlinearity& spec, double tol, int max_steps = 50);

}  // namespace nodal
