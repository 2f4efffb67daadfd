#pragma once

#include <limits>
#include <optional>

#include <Eigen/Core>

#include "glsure/block.hpp"
#include "glsure/solver.hpp"

namespace glsure {

/// Result of the rank check on the active images {X_b beta_b : b active}.
/// Independence of these vectors is what makes the sensitivity system
/// invertible; it is weaker than X restricted to the support having full
/// column rank.
struct ImageRankCheck {
  bool independent = true;  // vacuously true on empty support
  double min_singular_value = 0.0;
  double max_singular_value = 0.0;
};

/// n x (#active blocks) matrix whose i-th column is X_{b_i} beta_{b_i}.
Eigen::MatrixXd active_image_matrix(const Eigen::MatrixXd& X,
                                    const BlockPartition& partition,
                                    const Eigen::VectorXd& beta,
                                    const BlockSupport& support);

/// True iff the smallest singular value of the active-image matrix exceeds
/// eps_rank times the largest.
ImageRankCheck check_image_independence(const Eigen::MatrixXd& X,
                                        const BlockPartition& partition,
                                        const Eigen::VectorXd& beta,
                                        double eps_rank = 1e-8,
                                        double eps_supp = -1.0);

/// M = X_I^T X_I + lambda * (delta ∘ P) at beta_I, assembled dense.
/// Symmetric, and positive definite whenever the active images are
/// independent.
Eigen::MatrixXd assemble_system(const Eigen::MatrixXd& X_I,
                                const SupportLayout& layout,
                                const Eigen::VectorXd& beta_restricted,
                                double lambda);

struct SensitivityOptions {
  double eps_rank = 1e-8;   // relative SVD threshold for the rank check
  double eps_supp = -1.0;
  double cond_warn = 1e10;  // condition number of M beyond which we warn
  double tie_warn = 1e-8;   // |  ||X_b^T r|| - lambda | warning threshold
};

struct DegeneracyFlags {
  bool images_independent = true;
  double min_singular_value = 0.0;  // of the active-image matrix
  double condition_number = 1.0;    // of M; 1 on empty support
  bool ill_conditioned = false;
  bool near_tie = false;  // some inactive block sits almost on the boundary,
                          // i.e. y may be close to a support transition
  bool warning() const { return !images_independent || ill_conditioned || near_tie; }
};

struct ReliabilityTerms {
  double u_norm = 0.0;  // spectral norm of U = X_I^T X_I M^{-1}; 0 if empty
  double bound = std::numeric_limits<double>::quiet_NaN();
  // bound = (18 + 4 u_norm^2)/n + 8 ||mu0||^2/(n^2 sigma^2), when sigma and
  // ||mu0|| are supplied
};

/// Local sensitivity of the solution map at a converged solution, plus the
/// quantities derived from it.
struct SensitivityReport {
  BlockSupport support;
  Eigen::MatrixXd jacobian;  // |I| x n, rows ordered per SupportLayout
  Eigen::VectorXd mu_hat;    // X beta
  double dof = 0.0;
  double sure = std::numeric_limits<double>::quiet_NaN();
  double sigma = std::numeric_limits<double>::quiet_NaN();
  ReliabilityTerms reliability;
  DegeneracyFlags flags;
  double system_residual = 0.0;  // ||M d - X_I^T||_F / ||X_I^T||_F
};

/// Full sensitivity analysis: solves M d = X_I^T by Cholesky (one refinement
/// pass), then reports the Jacobian, its trace against X_I (the divergence /
/// degrees-of-freedom estimate), the unbiased risk estimate when sigma is
/// given, reliability terms, and degeneracy flags. Throws DegeneracyError if
/// the active images are dependent at eps_rank.
SensitivityReport analyze(const GroupLassoProblem& problem,
                          const GroupLassoSolution& solution,
                          std::optional<double> sigma = std::nullopt,
                          std::optional<double> mu0_norm = std::nullopt,
                          const SensitivityOptions& options = {});

/// d(y, lambda) = M^{-1} X_I^T, the Jacobian of the restricted solution map
/// with respect to y.
Eigen::MatrixXd jacobian(const GroupLassoProblem& problem,
                         const GroupLassoSolution& solution,
                         const SensitivityOptions& options = {});

/// trace(X_I d(y, lambda)): the divergence of y -> X beta(y), an unbiased
/// estimate of the degrees of freedom under Gaussian noise.
double dof_estimate(const GroupLassoProblem& problem,
                    const GroupLassoSolution& solution,
                    const SensitivityOptions& options = {});

/// ||y - mu_hat||^2 - n sigma^2 + 2 sigma^2 * dof.
double sure(const GroupLassoProblem& problem,
            const GroupLassoSolution& solution, double sigma,
            const SensitivityOptions& options = {});

/// Spectral norm of U = X_I^T X_I M^{-1} and the reliability bound computed
/// from it for this realization (callers average over replicates to estimate
/// the expectation in the bound).
ReliabilityTerms reliability_bound(const GroupLassoProblem& problem,
                                   const GroupLassoSolution& solution,
                                   double sigma, double mu0_norm,
                                   const SensitivityOptions& options = {});

}  // namespace glsure
