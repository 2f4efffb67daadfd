#include "glsure/solver.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>
#include <utility>

#include "glsure/errors.hpp"
#include "glsure/orthogonal.hpp"
#include "glsure/rng.hpp"

namespace glsure {

namespace {
// Inflates the power-iteration estimate of the Lipschitz constant; a slight
// overestimate only shortens the step, an underestimate would break descent.
constexpr double kStepSafety = 1.02;
}  // namespace

GroupLassoProblem::GroupLassoProblem(Eigen::VectorXd y_in, Eigen::MatrixXd X_in,
                                     BlockPartition partition_in,
                                     double lambda_in)
    : y(std::move(y_in)),
      X(std::move(X_in)),
      partition(std::move(partition_in)),
      lambda(lambda_in) {
  if (!(lambda > 0)) {
    throw std::invalid_argument("problem: lambda must be > 0");
  }
  if (X.cols() != partition.dim()) {
    throw std::invalid_argument("problem: X columns must match partition");
  }
  if (y.size() != X.rows()) {
    throw std::invalid_argument("problem: y length must match X rows");
  }
}

GroupLassoProblem GroupLassoProblem::identity_design(Eigen::VectorXd y_in,
                                                     BlockPartition partition_in,
                                                     double lambda_in) {
  const Eigen::Index n = y_in.size();
  return GroupLassoProblem(std::move(y_in),
                           Eigen::MatrixXd::Identity(n, n),
                           std::move(partition_in), lambda_in);
}

double objective(const GroupLassoProblem& problem, const Eigen::VectorXd& beta) {
  return 0.5 * (problem.y - problem.X * beta).squaredNorm() +
         problem.lambda * group_norm(problem.partition, beta);
}

double lambda_max(const GroupLassoProblem& problem) {
  const Eigen::VectorXd g = problem.X.transpose() * problem.y;
  double m = 0.0;
  for (int b = 0; b < problem.partition.num_blocks(); ++b) {
    m = std::max(m, problem.partition.block_norm(g, b));
  }
  return m;
}

double squared_spectral_norm(const Eigen::MatrixXd& X, int max_iter,
                             double tol) {
  if (X.size() == 0) return 0.0;
  NormalSampler rng(0x5EEDF00Dull);
  Eigen::VectorXd v = rng.vector(X.cols());
  if (v.norm() == 0) v.setOnes();
  v /= v.norm();
  double rho = 0.0;
  for (int it = 0; it < max_iter; ++it) {
    Eigen::VectorXd w = X.transpose() * (X * v);
    const double rho_next = v.dot(w);
    const double wn = w.norm();
    if (wn == 0.0) {
      // start vector landed in the kernel; retry once from a fixed direction
      if (it == 0) {
        v = Eigen::VectorXd::Ones(X.cols()).normalized();
        continue;
      }
      return 0.0;
    }
    v = w / wn;
    if (std::abs(rho_next - rho) <= tol * std::max(rho_next, 1.0)) {
      return rho_next;
    }
    rho = rho_next;
  }
  return rho;
}

double kkt_check(const GroupLassoProblem& problem, const Eigen::VectorXd& beta,
                 double eps_supp) {
  const auto& partition = problem.partition;
  const double eps = resolve_eps_supp(beta, eps_supp);
  const BlockSupport support = block_support(partition, beta, eps);
  const Eigen::VectorXd trunc = truncate_to_support(partition, beta, support);
  const Eigen::VectorXd g =
      problem.X.transpose() * (problem.y - problem.X * trunc);

  std::vector<char> active(partition.num_blocks(), 0);
  for (int b : support.active) active[b] = 1;

  double residual = 0.0;
  for (int b = 0; b < partition.num_blocks(); ++b) {
    if (active[b]) {
      const double nb = partition.block_norm(trunc, b);
      double sq = 0.0;
      for (std::size_t j = 0; j < partition.block(b).size(); ++j) {
        const int i = partition.block(b)[j];
        const double d = g[i] - problem.lambda * trunc[i] / nb;
        sq += d * d;
      }
      residual = std::max(residual, std::sqrt(sq));
    } else {
      residual = std::max(
          residual, std::max(0.0, partition.block_norm(g, b) - problem.lambda));
    }
  }
  return residual;
}

GroupLassoSolution solve(const GroupLassoProblem& problem,
                         const SolveOptions& options) {
  if (!(options.tol > 0)) {
    throw std::invalid_argument("solve: tol must be > 0");
  }
  if (options.max_iter < 1) {
    throw std::invalid_argument("solve: max_iter must be >= 1");
  }
  const auto& X = problem.X;
  const auto& y = problem.y;
  const int p = problem.p();

  double step =
      1.0 / std::max(kStepSafety * squared_spectral_norm(X), 1e-12);

  Eigen::VectorXd x = options.x0 ? *options.x0 : Eigen::VectorXd::Zero(p);
  if (x.size() != p) {
    throw std::invalid_argument("solve: x0 dimension mismatch");
  }
  Eigen::VectorXd v = x;
  double t = 1.0;
  double fx = objective(problem, x);

  GroupLassoSolution out;
  if (options.record_objective) out.objective_trace.push_back(fx);

  double best_residual = std::numeric_limits<double>::infinity();
  Eigen::VectorXd best_beta = Eigen::VectorXd::Zero(p);

  const auto certify = [&](const Eigen::VectorXd& iterate, long iters) {
    const double eps = resolve_eps_supp(iterate, options.eps_supp);
    BlockSupport support = block_support(problem.partition, iterate, eps);
    Eigen::VectorXd trunc =
        truncate_to_support(problem.partition, iterate, support);
    const double residual = kkt_check(problem, trunc, eps);
    if (residual < best_residual) {
      best_residual = residual;
      best_beta = trunc;
    }
    if (residual <= options.tol) {
      out.beta = std::move(trunc);
      out.support = std::move(support);
      out.kkt_residual = residual;
      out.objective = objective(problem, out.beta);
      out.iterations = iters;
      return true;
    }
    return false;
  };

  if (certify(x, 0)) return out;

  int consecutive_rejects = 0;
  for (long k = 1; k <= options.max_iter; ++k) {
    const Eigen::VectorXd grad = X.transpose() * (X * v - y);
    const Eigen::VectorXd u = block_soft_threshold(
        problem.partition, v - step * grad, step * problem.lambda);
    const double fu = objective(problem, u);
    if (fu <= fx) {
      const double t_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
      v = u + ((t - 1.0) / t_next) * (u - x);
      x = u;
      fx = fu;
      t = t_next;
      consecutive_rejects = 0;
    } else {
      // Momentum overshoot: restart from the last accepted iterate. A second
      // rejection in a row means even the plain proximal step failed to
      // descend, i.e. the step is too long for the true curvature.
      v = x;
      t = 1.0;
      if (++consecutive_rejects >= 2) {
        step *= 0.5;
        consecutive_rejects = 0;
      }
    }
    if (options.record_objective) out.objective_trace.push_back(fx);
    if (k % options.check_interval == 0 || k == options.max_iter) {
      if (certify(x, k)) return out;
    }
  }
  throw NonConvergenceError(
      "solve: certificate residual " + std::to_string(best_residual) +
          " above tol after " + std::to_string(options.max_iter) + " iterations",
      best_beta, best_residual, options.max_iter);
}

}  // namespace glsure
