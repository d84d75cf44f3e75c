#pragma once

#include <optional>
#include <string>
#include <vector>

#include "nodal/flow.hpp"
#include "nodal/grid.hpp"
#include "nodal/nonlinearity.hpp"
#include "nodal/symmetry.hpp"

namespace nodal {

/// Unit sup-norm, positive first Dirichlet eigenvector and its eigenvalue.
struct FirstMode {
    double lambda1h = 0.0;
    ScalarField phi;
};
FirstMode first_mode(const MeshPtr& mesh);

struct PositiveSolution {
    SolveReport report;
    /// Sup-norm distance between the limits of the two starts.
    double cross_check = 0.0;
    double cross_check_tol = 0.0;
    double lambda1h = 0.0;
    bool assumptions_hold = true;
};

/// Flow from a small multiple of the first eigenvector, then Newton when f
/// is C^1, cross-checked against a second start. When lim f(s)/s <= lambda1
/// the flow decays to zero and the report says so without throwing.
/// Throws SolverError when the flow or the cross-check fails.
PositiveSolution positive_solution(const MeshPtr& mesh, const Nonlinearity& spec, const FlowConfig& cfg,
                                   double newton_tol = 1e-10);

struct SearchConfig {
    FlowConfig flow;
    /// For C^1 families the flow stops at this residual and Newton takes over.
    double basin_tol = 1e-6;
    double newton_tol = 1e-10;
    /// Flow budget per seed; after it the closest nodal approach is refined.
    int seed_max_steps = 5000;
    /// Entries closer than dedup_rel * ||u||_inf (up to sign) are merged.
    double dedup_rel = 1e-5;
    /// Seed amplitude as a fraction of min(1, s_f).
    double seed_amplitude = 0.1;
    int n_angles = 8;
};

struct NodalEntry {
    SolveReport report;
    std::string seed;
};

struct NodalCatalog {
    std::vector<NodalEntry> entries;
    double c_nod = 0.0;
    int best = -1;
    std::string note;
    bool empty() const { return entries.empty(); }
};

/// Seeds +-a (cos t psi1 + sin t psi2), t = k pi / n_angles, normalized to
/// sup-norm a.
std::vector<std::pair<std::string, ScalarField>> default_seeds(const EigenspaceBasis& basis, double amplitude,
                                                               int n_angles = 8);

/// Projects u onto the parity class of every mesh reflection under which u
/// is already even or odd to relative accuracy `rel`.
ScalarField symmetrize_seed(const ScalarField& u, double rel = 1e-6);

NodalCatalog nodal_search(const MeshPtr& mesh, const Nonlinearity& spec,
                          const std::vector<std::pair<std::string, ScalarField>>& extra_seeds,
                          const SearchConfig& cfg, const EigenspaceBasis* basis = nullptr);

/// Single start: flow (tracking the best nodal iterate), then Newton.
/// Returns the equilibrium found, nodal or not.
SolveReport nodal_solve(const ScalarField& seed, const Nonlinearity& spec, const SearchConfig& cfg);

struct MorseResult {
    int index = 0;
    int zeros_flagged = 0;
    double zero_band = 0.0;
    std::vector<double> eigenvalues;
};

MorseResult morse_index(const ScalarField& u, const Nonlinearity& spec);

enum class PathMethod { Constructive, String };
std::string to_string(PathMethod m);

struct PathEstimate {
    PathMethod method = PathMethod::Constructive;
    std::vector<ScalarField> images;
    std::vector<double> energies;
    double max_energy = 0.0;
    int argmax = 0;
    bool ok = true;
    std::string note;
    /// Constructive path: max energy <= I(u) + path_tol.
    bool certificate = false;
    /// String method: residual of the highest image (full and projected
    /// orthogonally to the tangent).
    double saddle_residual = 0.0;
    double saddle_residual_perp = 0.0;
    int iterations = 0;
    /// Constructive path: equilibrium reached instead of +-w.
    std::optional<SolveReport> interloper;
};

/// Path u +- s phi1(u) for |s| <= eps (phi1 of unit sup norm), extended by
/// the flow trajectories of u +- eps phi1 towards +-w. `path_tol` defaults
/// to 1e-3 |I(u)|.
PathEstimate constructive_mp_path(const ScalarField& u_nodal, const ScalarField& w, const Nonlinearity& spec,
                                  const FlowConfig& cfg, double eps, int n_images,
                                  std::optional<double> path_tol = std::nullopt);

struct StringConfig {
    int n_images = 21;
    int max_iter = 20000;
    double tau = 0.9;
    /// Transverse perturbation along psi2 relative to ||w||_inf.
    double perturbation = 1e-2;
    /// Stop when the climbing image's residual h ||A z - f(z)|| is below this.
    double saddle_tol = 1e-5;
    bool climbing = true;
};

/// String method between -w and w. `direction` is the transverse
/// perturbation (typically psi2); pass an empty field for none.
PathEstimate string_saddle(const ScalarField& w, const ScalarField& direction, const Nonlinearity& spec,
                           const FlowConfig& cfg, const StringConfig& scfg);

struct DumbbellResult {
    double delta = 0.0;
    double c_nod = 0.0;  ///< I(u_W)
    double c_mp_est = 0.0;
    double gap = 0.0;
    double energy_w = 0.0;
    bool w_limit_nodal = false;
    MorseResult morse_w_limit;
    SolveReport positive;
    SolveReport w_limit;
    PathEstimate path;
    double dist_to_w = 0.0;
    double dist_to_minus_w = 0.0;
    std::string note;
};

/// Two lobes joined by a channel; seed W = w_left - w_right built from the
/// positive solutions of each lobe alone.
DumbbellResult dumbbell_experiment(double lobe_r, double delta, double channel_len, double h,
                                   const Nonlinearity& spec, const FlowConfig& cfg, const StringConfig& scfg);

/// Worker count from NODAL_LAB_THREADS (default 1).
int worker_count();

}  // namespace nodal
