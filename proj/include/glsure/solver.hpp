#pragma once

#include <optional>
#include <vector>

#include <Eigen/Core>

#include "glsure/block.hpp"

namespace glsure {

/// min over x of  0.5 * ||y - X x||^2 + lambda * sum_b ||x_b||
///
/// No rank assumption on X; n < p, rank-deficient and duplicated columns are
/// all valid. Immutable after construction.
struct GroupLassoProblem {
  Eigen::VectorXd y;
  Eigen::MatrixXd X;
  BlockPartition partition;
  double lambda;

  GroupLassoProblem(Eigen::VectorXd y_in, Eigen::MatrixXd X_in,
                    BlockPartition partition_in, double lambda_in);

  /// X = Id_n; the partition must cover exactly y.size() coordinates.
  static GroupLassoProblem identity_design(Eigen::VectorXd y_in,
                                           BlockPartition partition_in,
                                           double lambda_in);

  int n() const { return static_cast<int>(y.size()); }
  int p() const { return static_cast<int>(X.cols()); }
};

struct SolveOptions {
  double tol = 1e-8;       // target for the first-order certificate residual
  long max_iter = 200000;
  double eps_supp = -1.0;  // < 0: relative default (see default_eps_supp)
  int check_interval = 10; // certificate cadence, in iterations
  std::optional<Eigen::VectorXd> x0;  // warm start; zero when absent
  bool record_objective = false;
};

struct GroupLassoSolution {
  Eigen::VectorXd beta;  // exact zeros off the detected support
  BlockSupport support;
  double kkt_residual = 0.0;
  double objective = 0.0;
  long iterations = 0;
  int purification_steps = 0;
  std::vector<double> objective_trace;  // filled when record_objective
};

double objective(const GroupLassoProblem& problem, const Eigen::VectorXd& beta);

/// First-order certificate residual:
///   max( max_{b active}   || X_b^T (y - X beta) - lambda * beta_b/||beta_b|| ||,
///        max_{b inactive} max(0, || X_b^T (y - X beta) || - lambda) )
/// where the active set is detected at eps_supp and beta is truncated to it.
/// Zero exactly at minimizers.
double kkt_check(const GroupLassoProblem& problem, const Eigen::VectorXd& beta,
                 double eps_supp = -1.0);

/// Accelerated proximal gradient (monotone, restarting) with blockwise soft
/// thresholding as the proximal map. Deterministic for fixed inputs. Throws
/// NonConvergenceError past max_iter.
GroupLassoSolution solve(const GroupLassoProblem& problem,
                         const SolveOptions& options = {});

/// Largest squared singular value of X by power iteration (deterministic
/// start vector).
double squared_spectral_norm(const Eigen::MatrixXd& X, int max_iter = 50,
                             double tol = 1e-10);

/// max_b ||X_b^T y||: the smallest lambda for which 0 is a minimizer.
double lambda_max(const GroupLassoProblem& problem);

}  // namespace glsure
