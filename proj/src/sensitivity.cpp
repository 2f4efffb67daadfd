#include "glsure/sensitivity.hpp"

#include <cmath>
#include <stdexcept>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <Eigen/QR>
#include <Eigen/SVD>

#include "glsure/errors.hpp"

namespace glsure {

Eigen::MatrixXd active_image_matrix(const Eigen::MatrixXd& X,
                                    const BlockPartition& partition,
                                    const Eigen::VectorXd& beta,
                                    const BlockSupport& support) {
  Eigen::MatrixXd images(X.rows(), support.num_blocks());
  for (int k = 0; k < support.num_blocks(); ++k) {
    const int b = support.active[k];
    Eigen::VectorXd col = Eigen::VectorXd::Zero(X.rows());
    for (int i : partition.block(b)) col += X.col(i) * beta[i];
    images.col(k) = col;
  }
  return images;
}

ImageRankCheck check_image_independence(const Eigen::MatrixXd& X,
                                        const BlockPartition& partition,
                                        const Eigen::VectorXd& beta,
                                        double eps_rank, double eps_supp) {
  const BlockSupport support =
      block_support(partition, beta, resolve_eps_supp(beta, eps_supp));
  ImageRankCheck check;
  if (support.empty()) return check;  // vacuously independent
  const Eigen::MatrixXd images =
      active_image_matrix(X, partition, beta, support);
  const Eigen::JacobiSVD<Eigen::MatrixXd> svd(images);
  const auto& sv = svd.singularValues();
  check.max_singular_value = sv(0);
  check.min_singular_value =
      support.num_blocks() > static_cast<int>(X.rows())
          ? 0.0
          : sv(sv.size() - 1);
  check.independent =
      check.min_singular_value > eps_rank * check.max_singular_value;
  return check;
}

Eigen::MatrixXd assemble_system(const Eigen::MatrixXd& X_I,
                                const SupportLayout& layout,
                                const Eigen::VectorXd& beta_restricted,
                                double lambda) {
  if (X_I.cols() != layout.dim() || beta_restricted.size() != layout.dim()) {
    throw std::invalid_argument("assemble_system: size mismatch");
  }
  Eigen::MatrixXd M = X_I.transpose() * X_I;
  for (int k = 0; k < layout.num_blocks(); ++k) {
    const int off = layout.offset(k);
    const int sz = layout.block_size(k);
    const auto xb = beta_restricted.segment(off, sz);
    const double nb = xb.norm();
    if (nb == 0.0) {
      throw std::invalid_argument("assemble_system: zero block in support");
    }
    const Eigen::VectorXd u = xb / nb;
    M.block(off, off, sz, sz) +=
        (lambda / nb) *
        (Eigen::MatrixXd::Identity(sz, sz) - u * u.transpose());
  }
  return M;
}

namespace {

double spectral_norm(const Eigen::MatrixXd& A) {
  if (A.size() == 0) return 0.0;
  return Eigen::JacobiSVD<Eigen::MatrixXd>(A).singularValues()(0);
}

}  // namespace

SensitivityReport analyze(const GroupLassoProblem& problem,
                          const GroupLassoSolution& solution,
                          std::optional<double> sigma,
                          std::optional<double> mu0_norm,
                          const SensitivityOptions& options) {
  const auto& partition = problem.partition;
  const int n = problem.n();

  SensitivityReport report;
  report.support = solution.support;
  report.mu_hat = problem.X * solution.beta;

  // boundary scan: inactive blocks whose correlation sits almost exactly at
  // lambda mark observations close to a support transition
  {
    const Eigen::VectorXd g =
        problem.X.transpose() * (problem.y - report.mu_hat);
    for (int b = 0; b < partition.num_blocks(); ++b) {
      if (!report.support.contains(b) &&
          std::abs(partition.block_norm(g, b) - problem.lambda) <=
              options.tie_warn) {
        report.flags.near_tie = true;
        break;
      }
    }
  }

  if (report.support.empty()) {
    report.jacobian = Eigen::MatrixXd::Zero(0, n);
    report.dof = 0.0;
  } else {
    const ImageRankCheck rank = check_image_independence(
        problem.X, partition, solution.beta, options.eps_rank,
        options.eps_supp);
    report.flags.images_independent = rank.independent;
    report.flags.min_singular_value = rank.min_singular_value;
    if (!rank.independent) {
      throw DegeneracyError(
          "sensitivity: active images are numerically dependent (min/max "
          "singular value " +
          std::to_string(rank.min_singular_value) + " / " +
          std::to_string(rank.max_singular_value) + ")");
    }

    const SupportLayout layout(partition, report.support);
    const Eigen::MatrixXd X_I = layout.gather_columns(problem.X);
    const Eigen::VectorXd beta_I = layout.gather(solution.beta);
    const Eigen::MatrixXd M =
        assemble_system(X_I, layout, beta_I, problem.lambda);
    const Eigen::MatrixXd rhs = X_I.transpose();  // |I| x n

    const Eigen::LLT<Eigen::MatrixXd> llt(M);
    if (llt.info() == Eigen::Success) {
      report.jacobian = llt.solve(rhs);
      // one refinement pass tightens the residual when M is ill-conditioned
      const Eigen::MatrixXd res = rhs - M * report.jacobian;
      if (res.norm() > 1e-13 * rhs.norm()) {
        report.jacobian += llt.solve(res);
      }
    } else {
      // Cholesky failed although the rank check passed: borderline
      // definiteness. A rank-revealing solve still gives usable numbers.
      const Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(M);
      if (cod.rank() < layout.dim()) {
        throw DegeneracyError("sensitivity: system matrix is singular");
      }
      report.jacobian = cod.solve(rhs);
      report.flags.ill_conditioned = true;
    }
    report.system_residual =
        (M * report.jacobian - rhs).norm() / rhs.norm();

    {
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(
          M, Eigen::EigenvaluesOnly);
      const double lo = es.eigenvalues()(0);
      const double hi = es.eigenvalues()(layout.dim() - 1);
      report.flags.condition_number =
          lo > 0 ? hi / lo : std::numeric_limits<double>::infinity();
      if (!(report.flags.condition_number < options.cond_warn)) {
        report.flags.ill_conditioned = true;
      }
    }

    report.dof = (report.jacobian * X_I).trace();

    const Eigen::MatrixXd gram = X_I.transpose() * X_I;
    Eigen::MatrixXd u_matrix;  // gram * M^{-1}
    if (llt.info() == Eigen::Success) {
      u_matrix = llt.solve(gram).transpose();  // M, gram symmetric
    } else {
      u_matrix = Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd>(M)
                     .solve(gram)
                     .transpose();
    }
    report.reliability.u_norm = spectral_norm(u_matrix);
  }

  if (sigma) {
    if (!(*sigma > 0)) {
      throw std::invalid_argument("sensitivity: sigma must be > 0");
    }
    const double s2 = *sigma * *sigma;
    report.sigma = *sigma;
    report.sure = (problem.y - report.mu_hat).squaredNorm() - n * s2 +
                  2.0 * s2 * report.dof;
    if (mu0_norm) {
      const double u2 = report.reliability.u_norm * report.reliability.u_norm;
      report.reliability.bound =
          (18.0 + 4.0 * u2) / n +
          8.0 * (*mu0_norm) * (*mu0_norm) / (static_cast<double>(n) * n * s2);
    }
  }
  return report;
}

Eigen::MatrixXd jacobian(const GroupLassoProblem& problem,
                         const GroupLassoSolution& solution,
                         const SensitivityOptions& options) {
  return analyze(problem, solution, std::nullopt, std::nullopt, options)
      .jacobian;
}

double dof_estimate(const GroupLassoProblem& problem,
                    const GroupLassoSolution& solution,
                    const SensitivityOptions& options) {
  return analyze(problem, solution, std::nullopt, std::nullopt, options).dof;
}

double sure(const GroupLassoProblem& problem,
            const GroupLassoSolution& solution, double sigma,
            const SensitivityOptions& options) {
  return analyze(problem, solution, sigma, std::nullopt, options).sure;
}

ReliabilityTerms reliability_bound(const GroupLassoProblem& problem,
                                   const GroupLassoSolution& solution,
                                   double sigma, double mu0_norm,
                                   const SensitivityOptions& options) {
  return analyze(problem, solution, sigma, mu0_norm, options).reliability;
}

}  // namespace glsure
