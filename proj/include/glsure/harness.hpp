#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Core>

#include "glsure/purification.hpp"
#include "glsure/sensitivity.hpp"
#include "glsure/solver.hpp"

namespace glsure {

/// Replicate loops run as OpenMP parallel-for by default; Serial runs the
/// same body sequentially and is kept as the reference implementation.
/// Results are bit-identical either way: per-index RNG streams plus a
/// deterministic sequential reduction make the output independent of
/// scheduling.
enum class ExecMode { Serial, Parallel };

/// Fixed design: the quantities a Monte Carlo run never resamples.
struct Design {
  Eigen::MatrixXd X;
  BlockPartition partition;
};

struct GroundTruth {
  Eigen::VectorXd beta0;
  Eigen::VectorXd mu0;  // X * beta0
  double sigma = 1.0;
  std::uint64_t seed = 0;

  static GroundTruth make(const Design& design, Eigen::VectorXd beta0,
                          double sigma, std::uint64_t seed);
};

struct McOptions {
  SolveOptions solve;
  SensitivityOptions sensitivity;
  ExecMode mode = ExecMode::Parallel;
  bool purify_on_failure = true;  // repair dependent active images per replicate
};

/// Monte Carlo aggregates for one lambda. Standard errors are sample standard
/// deviations over the included replicates divided by sqrt(count). Degenerate
/// replicates (dependent images after repair, conditioning warnings, solver
/// failure) are excluded and counted, never imputed.
struct McReport {
  double lambda = 0.0;
  int replicates = 0;  // requested
  int included = 0;
  int degenerate_count = 0;
  int purified_count = 0;

  double dof_formula_mean = 0.0;  // divergence-formula channel
  double dof_formula_se = 0.0;
  double dof_covariance_mean = 0.0;  // empirical covariance channel
  double dof_covariance_se = 0.0;

  double sure_mean = 0.0;
  double sure_se = 0.0;
  double se_true_mean = 0.0;  // ||mu_hat - mu0||^2 channel
  double se_true_se = 0.0;

  double u_norm_sq_mean = 0.0;
  double reliability_lhs = 0.0;    // mean (SURE - SE)^2 / (n^2 sigma^4)
  double reliability_bound = 0.0;  // (18 + 4 mean||U||^2)/n + 8||mu0||^2/(n^2 sigma^2)

  int n = 0;
  double sigma = 0.0;
  double mu0_sqnorm = 0.0;
  std::uint64_t seed = 0;
};

/// Both degrees-of-freedom channels over replicates y = mu0 + sigma z:
/// the divergence formula, and the covariance definition estimated with the
/// known mean mu0 on the noise side. replicates must be >= 100.
McReport mc_dof(const Design& design, const GroundTruth& truth, double lambda,
                int replicates, const McOptions& options = {});

/// Per grid point: mean SURE against the mean realized squared error, their
/// standard errors, and the empirical reliability against its bound. The grid
/// must be nonempty and ascending.
std::vector<McReport> mc_sure_risk(const Design& design,
                                   const GroundTruth& truth,
                                   const std::vector<double>& lambda_grid,
                                   int replicates,
                                   const McOptions& options = {});

struct FdOptions {
  double tol = 1e-12;  // accuracy of the inner solves
  double eps_supp = -1.0;
  ExecMode mode = ExecMode::Parallel;
};

struct FdResult {
  double divergence = 0.0;
  std::vector<int> unstable_coordinates;  // flagged after the h/10 retry
  bool support_stable() const { return unstable_coordinates.empty(); }
};

/// Default central-difference step: 1e-5 * (1 + sup norm of y).
double default_fd_step(const Eigen::VectorXd& y);

/// Central-difference divergence of y -> X beta(y), each term from a fresh
/// high-accuracy solve. Coordinates whose perturbed solves change the support
/// are retried at h/10 and flagged if still unstable (the observation is then
/// likely near a support transition).
FdResult fd_divergence(const GroupLassoProblem& problem, double h,
                       const FdOptions& options = {});

struct SurePoint {
  double lambda = 0.0;
  double sure_value = 0.0;
  double dof = 0.0;
  bool degenerate = false;
};

struct LambdaSelection {
  double best_lambda = 0.0;
  int best_index = -1;
  std::vector<SurePoint> curve;
};

/// argmin of SURE over the grid for one observed y (the problem's own lambda
/// is ignored); ties resolve toward larger lambda. Degenerate points are
/// skipped; throws DegeneracyError if every point is.
LambdaSelection select_lambda(const GroupLassoProblem& problem,
                              const std::vector<double>& lambda_grid,
                              double sigma, const SolveOptions& solve_options = {},
                              const SensitivityOptions& sensitivity_options = {});

}  // namespace glsure
