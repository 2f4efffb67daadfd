#include "glsure/purification.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

#include <Eigen/SVD>

#include "glsure/errors.hpp"

namespace glsure {

GroupLassoSolution purify(const GroupLassoProblem& problem,
                          const GroupLassoSolution& solution,
                          const PurifyOptions& options) {
  const auto& partition = problem.partition;
  const double input_residual =
      kkt_check(problem, solution.beta, options.eps_supp);
  if (input_residual > options.kkt_tol) {
    throw std::invalid_argument(
        "purify: input fails the optimality certificate (residual " +
        std::to_string(input_residual) + ")");
  }

  Eigen::VectorXd beta = solution.beta;
  double eps = resolve_eps_supp(beta, options.eps_supp);
  BlockSupport support = block_support(partition, beta, eps);
  const int max_rounds =
      options.max_rounds >= 0 ? options.max_rounds : support.num_blocks();

  int steps = 0;
  while (true) {
    const ImageRankCheck rank = check_image_independence(
        problem.X, partition, beta, options.eps_rank, eps);
    if (rank.independent) break;
    if (steps >= max_rounds) {
      throw DegeneracyError(
          "purify: dependence persists after the maximum number of rounds");
    }

    support = block_support(partition, beta, eps);
    const Eigen::MatrixXd images =
        active_image_matrix(problem.X, partition, beta, support);
    const Eigen::JacobiSVD<Eigen::MatrixXd> svd(images, Eigen::ComputeFullV);
    const Eigen::VectorXd mu = svd.matrixV().col(svd.matrixV().cols() - 1);

    // smallest |t| with 1 + t mu_i = 0; every other factor then lies in [0, 2]
    double t0 = std::numeric_limits<double>::infinity();
    for (int i = 0; i < mu.size(); ++i) {
      if (mu[i] != 0.0 && std::abs(1.0 / mu[i]) < std::abs(t0)) {
        t0 = -1.0 / mu[i];
      }
    }
    if (!std::isfinite(t0)) {
      throw DegeneracyError("purify: degenerate kernel vector");
    }

    const int before = support.num_blocks();
    for (int k = 0; k < support.num_blocks(); ++k) {
      double factor = 1.0 + t0 * mu[k];
      if (std::abs(factor) <= 1e-12) factor = 0.0;
      for (int i : partition.block(support.active[k])) beta[i] *= factor;
    }
    eps = resolve_eps_supp(beta, options.eps_supp);
    beta = truncate_to_support(partition, beta,
                               block_support(partition, beta, eps));
    support = block_support(partition, beta, eps);
    if (support.num_blocks() >= before) {
      throw DegeneracyError("purify: support did not shrink");
    }
    ++steps;
  }

  GroupLassoSolution out;
  out.beta = truncate_to_support(partition, beta, support);
  out.support = support;
  out.kkt_residual = kkt_check(problem, out.beta, eps);
  out.objective = objective(problem, out.beta);
  out.iterations = solution.iterations;
  out.purification_steps = solution.purification_steps + steps;
  return out;
}

}  // namespace glsure
