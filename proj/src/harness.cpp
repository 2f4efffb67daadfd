#include "glsure/harness.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <functional>
#include <stdexcept>

#include "glsure/errors.hpp"
#include "glsure/rng.hpp"

namespace glsure {

namespace {

void for_each_index(int count, ExecMode mode,
                    const std::function<void(int)>& body) {
  if (mode == ExecMode::Parallel) {
    std::exception_ptr first_error = nullptr;
#pragma omp parallel for schedule(dynamic)
    for (int i = 0; i < count; ++i) {
      try {
        body(i);
      } catch (...) {
#pragma omp critical(glsure_harness_error)
        if (!first_error) first_error = std::current_exception();
      }
    }
    if (first_error) std::rethrow_exception(first_error);
  } else {
    for (int i = 0; i < count; ++i) body(i);
  }
}

struct MeanSe {
  double mean = 0.0;
  double se = 0.0;
};

MeanSe mean_se(const std::vector<double>& values) {
  MeanSe out;
  const std::size_t count = values.size();
  if (count == 0) return out;
  double sum = 0.0;
  for (double v : values) sum += v;
  out.mean = sum / static_cast<double>(count);
  if (count > 1) {
    double sq = 0.0;
    for (double v : values) sq += (v - out.mean) * (v - out.mean);
    out.se = std::sqrt(sq / static_cast<double>(count - 1)) /
             std::sqrt(static_cast<double>(count));
  }
  return out;
}

struct ReplicateSlot {
  char degenerate = 0;
  char purified = 0;
  double dof = 0.0;
  double sure = 0.0;
  double se_true = 0.0;
  double u_norm = 0.0;
};

std::vector<McReport> run_grid(const Design& design, const GroundTruth& truth,
                               const std::vector<double>& grid, int replicates,
                               const McOptions& options) {
  if (grid.empty()) throw std::invalid_argument("mc: empty lambda grid");
  if (!std::is_sorted(grid.begin(), grid.end())) {
    throw std::invalid_argument("mc: lambda grid must be ascending");
  }
  if (replicates < 100) {
    throw std::invalid_argument("mc: at least 100 replicates required");
  }
  if (!(truth.sigma > 0)) throw std::invalid_argument("mc: sigma must be > 0");
  if (truth.mu0.size() != design.X.rows()) {
    throw std::invalid_argument("mc: mu0 length must match X rows");
  }

  const int n = static_cast<int>(design.X.rows());
  const int points = static_cast<int>(grid.size());
  const double mu0_sq = truth.mu0.squaredNorm();
  const double mu0_norm = std::sqrt(mu0_sq);

  Eigen::MatrixXd noise(n, replicates);
  std::vector<Eigen::MatrixXd> mu_hat(points,
                                      Eigen::MatrixXd::Zero(n, replicates));
  std::vector<std::vector<ReplicateSlot>> slots(
      points, std::vector<ReplicateSlot>(replicates));

  for_each_index(replicates, options.mode, [&](int r) {
    NormalSampler rng = NormalSampler::replicate_stream(truth.seed, r);
    const Eigen::VectorXd z = rng.vector(n);
    noise.col(r) = z;
    const Eigen::VectorXd y = truth.mu0 + truth.sigma * z;

    std::optional<Eigen::VectorXd> warm;  // walked down the grid
    for (int gi = points - 1; gi >= 0; --gi) {
      ReplicateSlot& slot = slots[gi][r];
      try {
        GroupLassoProblem problem(y, design.X, design.partition, grid[gi]);
        SolveOptions so = options.solve;
        so.x0 = warm;
        so.record_objective = false;
        GroupLassoSolution sol = solve(problem, so);
        warm = sol.beta;

        const ImageRankCheck rank = check_image_independence(
            design.X, design.partition, sol.beta,
            options.sensitivity.eps_rank, options.sensitivity.eps_supp);
        if (!rank.independent && options.purify_on_failure) {
          PurifyOptions po;
          po.eps_rank = options.sensitivity.eps_rank;
          po.eps_supp = options.sensitivity.eps_supp;
          po.kkt_tol = std::max(10.0 * options.solve.tol, 1e-6);
          sol = purify(problem, sol, po);
          slot.purified = 1;
        }

        const SensitivityReport report = analyze(
            problem, sol, truth.sigma, mu0_norm, options.sensitivity);
        if (report.flags.warning()) {
          slot.degenerate = 1;
          continue;
        }
        slot.dof = report.dof;
        slot.sure = report.sure;
        slot.se_true = (report.mu_hat - truth.mu0).squaredNorm();
        slot.u_norm = report.reliability.u_norm;
        mu_hat[gi].col(r) = report.mu_hat;
      } catch (const NonConvergenceError&) {
        slot.degenerate = 1;
        warm.reset();
      } catch (const DegeneracyError&) {
        slot.degenerate = 1;
      }
    }
  });

  // deterministic sequential reduction, ascending replicate order
  std::vector<McReport> reports;
  reports.reserve(points);
  for (int gi = 0; gi < points; ++gi) {
    McReport rep;
    rep.lambda = grid[gi];
    rep.replicates = replicates;
    rep.n = n;
    rep.sigma = truth.sigma;
    rep.seed = truth.seed;
    rep.mu0_sqnorm = mu0_sq;

    std::vector<int> kept;
    kept.reserve(replicates);
    for (int r = 0; r < replicates; ++r) {
      const ReplicateSlot& slot = slots[gi][r];
      rep.purified_count += slot.purified;
      if (slot.degenerate) {
        ++rep.degenerate_count;
      } else {
        kept.push_back(r);
      }
    }
    rep.included = static_cast<int>(kept.size());
    if (rep.included == 0) {
      throw DegeneracyError("mc: all replicates degenerate at lambda=" +
                            std::to_string(grid[gi]));
    }

    std::vector<double> dof_values, sure_values, se_values, u_sq, rel_sq;
    dof_values.reserve(kept.size());
    sure_values.reserve(kept.size());
    se_values.reserve(kept.size());
    u_sq.reserve(kept.size());
    rel_sq.reserve(kept.size());
    for (int r : kept) {
      const ReplicateSlot& slot = slots[gi][r];
      dof_values.push_back(slot.dof);
      sure_values.push_back(slot.sure);
      se_values.push_back(slot.se_true);
      u_sq.push_back(slot.u_norm * slot.u_norm);
      rel_sq.push_back((slot.sure - slot.se_true) * (slot.sure - slot.se_true));
    }

    const MeanSe dof_stats = mean_se(dof_values);
    rep.dof_formula_mean = dof_stats.mean;
    rep.dof_formula_se = dof_stats.se;
    const MeanSe sure_stats = mean_se(sure_values);
    rep.sure_mean = sure_stats.mean;
    rep.sure_se = sure_stats.se;
    const MeanSe se_stats = mean_se(se_values);
    rep.se_true_mean = se_stats.mean;
    rep.se_true_se = se_stats.se;
    rep.u_norm_sq_mean = mean_se(u_sq).mean;

    // covariance channel with the known mean on the noise side:
    //   sum_i sum_r (y_i - mu0_i)(mu_hat_i - mean mu_hat_i) / ((R-1) sigma^2)
    {
      Eigen::VectorXd mu_bar = Eigen::VectorXd::Zero(n);
      for (int r : kept) mu_bar += mu_hat[gi].col(r);
      mu_bar /= static_cast<double>(rep.included);
      std::vector<double> cov_terms;
      cov_terms.reserve(kept.size());
      for (int r : kept) {
        cov_terms.push_back(noise.col(r).dot(mu_hat[gi].col(r) - mu_bar) /
                            truth.sigma);
      }
      double total = 0.0;
      for (double v : cov_terms) total += v;
      if (rep.included > 1) {
        rep.dof_covariance_mean = total / static_cast<double>(rep.included - 1);
        const MeanSe cov_stats = mean_se(cov_terms);
        rep.dof_covariance_se = cov_stats.se *
                                static_cast<double>(rep.included) /
                                static_cast<double>(rep.included - 1);
      }
    }

    const double n2s4 = static_cast<double>(n) * n * truth.sigma * truth.sigma *
                        truth.sigma * truth.sigma;
    rep.reliability_lhs = mean_se(rel_sq).mean / n2s4;
    rep.reliability_bound =
        (18.0 + 4.0 * rep.u_norm_sq_mean) / n +
        8.0 * mu0_sq /
            (static_cast<double>(n) * n * truth.sigma * truth.sigma);

    reports.push_back(std::move(rep));
  }
  return reports;
}

}  // namespace

GroundTruth GroundTruth::make(const Design& design, Eigen::VectorXd beta0,
                              double sigma, std::uint64_t seed) {
  if (beta0.size() != design.X.cols()) {
    throw std::invalid_argument("ground truth: beta0 length must match X");
  }
  if (!(sigma > 0)) {
    throw std::invalid_argument("ground truth: sigma must be > 0");
  }
  GroundTruth truth;
  truth.mu0 = design.X * beta0;
  truth.beta0 = std::move(beta0);
  truth.sigma = sigma;
  truth.seed = seed;
  return truth;
}

McReport mc_dof(const Design& design, const GroundTruth& truth, double lambda,
                int replicates, const McOptions& options) {
  return run_grid(design, truth, {lambda}, replicates, options).front();
}

std::vector<McReport> mc_sure_risk(const Design& design,
                                   const GroundTruth& truth,
                                   const std::vector<double>& lambda_grid,
                                   int replicates, const McOptions& options) {
  return run_grid(design, truth, lambda_grid, replicates, options);
}

double default_fd_step(const Eigen::VectorXd& y) {
  return 1e-5 * (1.0 + (y.size() ? y.cwiseAbs().maxCoeff() : 0.0));
}

FdResult fd_divergence(const GroupLassoProblem& problem, double h,
                       const FdOptions& options) {
  if (!(h > 0)) throw std::invalid_argument("fd_divergence: h must be > 0");
  SolveOptions so;
  so.tol = options.tol;
  so.eps_supp = options.eps_supp;
  const GroupLassoSolution base = solve(problem, so);
  const int n = problem.n();

  std::vector<double> contribution(n, 0.0);
  std::vector<char> unstable(n, 0);

  for_each_index(n, options.mode, [&](int i) {
    double step = h;
    for (int attempt = 0; attempt < 2; ++attempt) {
      Eigen::VectorXd y_plus = problem.y;
      Eigen::VectorXd y_minus = problem.y;
      y_plus[i] += step;
      y_minus[i] -= step;
      SolveOptions inner = so;
      inner.x0 = base.beta;
      const GroupLassoSolution plus = solve(
          GroupLassoProblem(y_plus, problem.X, problem.partition,
                            problem.lambda),
          inner);
      const GroupLassoSolution minus = solve(
          GroupLassoProblem(y_minus, problem.X, problem.partition,
                            problem.lambda),
          inner);
      contribution[i] = (problem.X.row(i).dot(plus.beta) -
                         problem.X.row(i).dot(minus.beta)) /
                        (2.0 * step);
      if (plus.support == base.support && minus.support == base.support) {
        return;
      }
      step /= 10.0;
    }
    unstable[i] = 1;
  });

  FdResult result;
  for (int i = 0; i < n; ++i) {
    result.divergence += contribution[i];
    if (unstable[i]) result.unstable_coordinates.push_back(i);
  }
  return result;
}

LambdaSelection select_lambda(const GroupLassoProblem& problem,
                              const std::vector<double>& lambda_grid,
                              double sigma, const SolveOptions& solve_options,
                              const SensitivityOptions& sensitivity_options) {
  if (lambda_grid.empty()) {
    throw std::invalid_argument("select_lambda: empty grid");
  }
  if (!std::is_sorted(lambda_grid.begin(), lambda_grid.end())) {
    throw std::invalid_argument("select_lambda: grid must be ascending");
  }
  const int points = static_cast<int>(lambda_grid.size());
  LambdaSelection selection;
  selection.curve.resize(points);

  std::optional<Eigen::VectorXd> warm;
  for (int gi = points - 1; gi >= 0; --gi) {
    SurePoint& point = selection.curve[gi];
    point.lambda = lambda_grid[gi];
    try {
      GroupLassoProblem current(problem.y, problem.X, problem.partition,
                                lambda_grid[gi]);
      SolveOptions so = solve_options;
      so.x0 = warm;
      GroupLassoSolution sol = solve(current, so);
      warm = sol.beta;
      const ImageRankCheck rank = check_image_independence(
          problem.X, problem.partition, sol.beta,
          sensitivity_options.eps_rank, sensitivity_options.eps_supp);
      if (!rank.independent) {
        PurifyOptions po;
        po.eps_rank = sensitivity_options.eps_rank;
        po.eps_supp = sensitivity_options.eps_supp;
        po.kkt_tol = std::max(10.0 * so.tol, 1e-6);
        sol = purify(current, sol, po);
      }
      const SensitivityReport report =
          analyze(current, sol, sigma, std::nullopt, sensitivity_options);
      if (report.flags.warning()) {
        point.degenerate = true;
        continue;
      }
      point.sure_value = report.sure;
      point.dof = report.dof;
    } catch (const NonConvergenceError&) {
      point.degenerate = true;
      warm.reset();
    } catch (const DegeneracyError&) {
      point.degenerate = true;
    }
  }

  // ascending scan; <= resolves ties toward the larger lambda
  double best = std::numeric_limits<double>::infinity();
  for (int gi = 0; gi < points; ++gi) {
    if (selection.curve[gi].degenerate) continue;
    if (selection.curve[gi].sure_value <= best) {
      best = selection.curve[gi].sure_value;
      selection.best_index = gi;
    }
  }
  if (selection.best_index < 0) {
    throw DegeneracyError("select_lambda: every grid point degenerate");
  }
  selection.best_lambda = lambda_grid[selection.best_index];
  return selection;
}

}  // namespace glsure
