// Command-line front end: solve, sensitivity, mc-dof, sure-path, fd-check,
// select-lambda. Exit codes: 0 success, 2 non-convergence, 3 degeneracy,
// 4 I/O error.

#include <algorithm>
#include <cstdint>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <omp.h>

#include "CLI11.hpp"

#include "glsure/errors.hpp"
#include "glsure/harness.hpp"
#include "glsure/io.hpp"
#include "glsure/orthogonal.hpp"
#include "glsure/purification.hpp"
#include "glsure/sensitivity.hpp"
#include "glsure/solver.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitNonConvergence = 2;
constexpr int kExitDegeneracy = 3;
constexpr int kExitIo = 4;

struct ProblemArgs {
  std::string x_path;
  std::string y_path;
  std::string partition_path;
  std::string problem_path;
  std::string design = "file";  // "file" or "identity"
  double lambda = 0.0;
  bool lambda_set = false;
};

void add_design_options(CLI::App* cmd, ProblemArgs& args, bool with_y) {
  cmd->add_option("--x", args.x_path, "design matrix CSV");
  if (with_y) cmd->add_option("--y", args.y_path, "observation vector CSV");
  cmd->add_option("--partition", args.partition_path,
                  "partition JSON (array of index arrays)");
  cmd->add_option("--design", args.design,
                  "'file' (default) or 'identity' for X = Id")
      ->check(CLI::IsMember({"file", "identity"}));
  if (with_y) {
    cmd->add_option("--problem", args.problem_path,
                    "problem descriptor JSON {lambda, partition, x_path, "
                    "y_path}; overrides the individual flags");
  }
}

void add_lambda_option(CLI::App* cmd, ProblemArgs& args) {
  cmd->add_option_function<double>(
         "--lambda",
         [&args](const double& v) {
           args.lambda = v;
           args.lambda_set = true;
         },
         "regularization parameter (> 0)");
}

glsure::GroupLassoProblem load_problem(const ProblemArgs& args) {
  if (!args.problem_path.empty()) {
    return glsure::io::read_problem_json(args.problem_path);
  }
  if (args.y_path.empty()) throw glsure::IoError("--y is required");
  if (args.partition_path.empty()) {
    throw glsure::IoError("--partition is required");
  }
  if (!args.lambda_set) throw glsure::IoError("--lambda is required");
  const Eigen::VectorXd y = glsure::io::read_csv_vector(args.y_path);
  glsure::BlockPartition partition =
      glsure::io::read_partition_json(args.partition_path);
  try {
    if (args.design == "identity") {
      return glsure::GroupLassoProblem::identity_design(y, partition,
                                                        args.lambda);
    }
    if (args.x_path.empty()) throw glsure::IoError("--x is required");
    const Eigen::MatrixXd X = glsure::io::read_csv_matrix(args.x_path);
    return glsure::GroupLassoProblem(y, X, partition, args.lambda);
  } catch (const std::invalid_argument& e) {
    throw glsure::IoError(e.what());
  }
}

// Design + beta0 for the Monte Carlo commands (no observed y).
glsure::Design load_design(const ProblemArgs& args,
                           const Eigen::VectorXd& beta0) {
  if (args.partition_path.empty()) {
    throw glsure::IoError("--partition is required");
  }
  glsure::BlockPartition partition =
      glsure::io::read_partition_json(args.partition_path);
  try {
    if (args.design == "identity") {
      return {Eigen::MatrixXd::Identity(beta0.size(), beta0.size()),
              std::move(partition)};
    }
    if (args.x_path.empty()) throw glsure::IoError("--x is required");
    return {glsure::io::read_csv_matrix(args.x_path), std::move(partition)};
  } catch (const std::invalid_argument& e) {
    throw glsure::IoError(e.what());
  }
}

std::vector<double> parse_grid(const std::string& spec) {
  std::vector<double> grid;
  std::stringstream ss(spec);
  std::string cell;
  while (std::getline(ss, cell, ',')) {
    try {
      grid.push_back(std::stod(cell));
    } catch (const std::exception&) {
      throw glsure::IoError("cannot parse --lambda-grid entry '" + cell + "'");
    }
  }
  if (grid.empty()) throw glsure::IoError("--lambda-grid is empty");
  std::sort(grid.begin(), grid.end());
  return grid;
}

void emit(const nlohmann::json& j, const std::string& out_path) {
  if (out_path.empty()) {
    std::cout << j.dump(2) << "\n";
  } else {
    glsure::io::write_json(out_path, j);
  }
}

Eigen::MatrixXd curve_matrix(const std::vector<glsure::McReport>& reports) {
  Eigen::MatrixXd m(reports.size(), 9);
  for (std::size_t i = 0; i < reports.size(); ++i) {
    const auto& r = reports[i];
    m.row(static_cast<Eigen::Index>(i)) << r.lambda, r.sure_mean, r.sure_se,
        r.se_true_mean, r.se_true_se, r.dof_formula_mean, r.reliability_lhs,
        r.reliability_bound, static_cast<double>(r.degenerate_count);
  }
  return m;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"group Lasso estimation with unbiased risk diagnostics"};
  app.require_subcommand(1);

  int threads = 0;
  bool serial = false;
  app.add_option("--threads", threads, "OpenMP thread count (0: library default)");
  app.add_flag("--serial", serial, "run replicate loops serially");

  // ---- solve ----
  ProblemArgs solve_args;
  glsure::SolveOptions solve_opts;
  std::string solve_out;
  auto* cmd_solve = app.add_subcommand("solve", "compute a group Lasso minimizer");
  add_design_options(cmd_solve, solve_args, true);
  add_lambda_option(cmd_solve, solve_args);
  cmd_solve->add_option("--tol", solve_opts.tol, "certificate tolerance");
  cmd_solve->add_option("--max-iter", solve_opts.max_iter, "iteration budget");
  cmd_solve->add_option("--out", solve_out, "output JSON path (default: stdout)");

  // ---- sensitivity ----
  ProblemArgs sens_args;
  glsure::SolveOptions sens_solve_opts;
  glsure::SensitivityOptions sens_opts;
  std::optional<double> sens_sigma;
  std::optional<double> sens_mu0_norm;
  std::string sens_out, sens_emit_csv;
  bool sens_purify = false;
  auto* cmd_sens = app.add_subcommand(
      "sensitivity", "solve, then report Jacobian, DOF, SURE and flags");
  add_design_options(cmd_sens, sens_args, true);
  add_lambda_option(cmd_sens, sens_args);
  cmd_sens->add_option("--tol", sens_solve_opts.tol, "solver tolerance");
  cmd_sens->add_option("--max-iter", sens_solve_opts.max_iter, "iteration budget");
  cmd_sens->add_option("--sigma", sens_sigma, "noise level (enables SURE)");
  cmd_sens->add_option("--mu0-norm", sens_mu0_norm,
                       "||X beta0|| if known (enables the reliability bound)");
  cmd_sens->add_option("--eps-rank", sens_opts.eps_rank, "rank-check threshold");
  cmd_sens->add_flag("--purify", sens_purify,
                     "repair dependent active images before the analysis");
  cmd_sens->add_option("--out", sens_out, "output JSON path (default: stdout)");
  cmd_sens->add_option("--emit-csv", sens_emit_csv,
                       "prefix for CSV dumps (jacobian, mu_hat)");

  // ---- mc-dof ----
  ProblemArgs mc_args;
  std::string mc_beta0_path, mc_out;
  double mc_sigma = 1.0;
  double mc_lambda = 0.0;
  int mc_replicates = 10000;
  std::uint64_t mc_seed = 1;
  glsure::McOptions mc_opts;
  auto* cmd_mc = app.add_subcommand(
      "mc-dof", "Monte Carlo check of both degrees-of-freedom channels");
  add_design_options(cmd_mc, mc_args, false);
  cmd_mc->add_option("--beta0", mc_beta0_path, "true coefficients CSV")->required();
  cmd_mc->add_option("--sigma", mc_sigma, "noise level")->required();
  cmd_mc->add_option("--lambda", mc_lambda, "regularization parameter")->required();
  cmd_mc->add_option("--replicates", mc_replicates, "number of replicates (>= 100)");
  cmd_mc->add_option("--seed", mc_seed, "RNG seed");
  cmd_mc->add_option("--tol", mc_opts.solve.tol, "solver tolerance");
  cmd_mc->add_option("--out", mc_out, "output JSON path (default: stdout)");

  // ---- sure-path ----
  ProblemArgs path_args;
  std::string path_beta0_path, path_grid_spec, path_out, path_emit_csv;
  double path_sigma = 1.0;
  int path_replicates = 10000;
  std::uint64_t path_seed = 1;
  glsure::McOptions path_opts;
  auto* cmd_path = app.add_subcommand(
      "sure-path", "SURE vs true risk over a lambda grid, Monte Carlo");
  add_design_options(cmd_path, path_args, false);
  cmd_path->add_option("--beta0", path_beta0_path, "true coefficients CSV")->required();
  cmd_path->add_option("--lambda-grid", path_grid_spec,
                       "comma-separated lambda values")->required();
  cmd_path->add_option("--sigma", path_sigma, "noise level")->required();
  cmd_path->add_option("--replicates", path_replicates, "number of replicates");
  cmd_path->add_option("--seed", path_seed, "RNG seed");
  cmd_path->add_option("--tol", path_opts.solve.tol, "solver tolerance");
  cmd_path->add_option("--out", path_out, "output JSON path (default: stdout)");
  cmd_path->add_option("--emit-csv", path_emit_csv,
                       "write the curve as CSV (lambda, sure, se, ...)");

  // ---- fd-check ----
  ProblemArgs fd_args;
  std::string fd_out;
  double fd_h = 0.0;
  glsure::FdOptions fd_opts;
  auto* cmd_fd = app.add_subcommand(
      "fd-check", "finite-difference divergence against the trace formula");
  add_design_options(cmd_fd, fd_args, true);
  add_lambda_option(cmd_fd, fd_args);
  cmd_fd->add_option("--h", fd_h, "central-difference step (default: 1e-5*(1+max|y|))");
  cmd_fd->add_option("--tol", fd_opts.tol, "inner solve tolerance");
  cmd_fd->add_option("--out", fd_out, "output JSON path (default: stdout)");

  // ---- select-lambda ----
  ProblemArgs sel_args;
  std::string sel_grid_spec, sel_out, sel_emit_csv;
  double sel_sigma = 1.0;
  glsure::SolveOptions sel_solve_opts;
  auto* cmd_sel = app.add_subcommand(
      "select-lambda", "pick the lambda minimizing SURE over a grid");
  add_design_options(cmd_sel, sel_args, true);
  cmd_sel->add_option("--lambda-grid", sel_grid_spec,
                      "comma-separated lambda values")->required();
  cmd_sel->add_option("--sigma", sel_sigma, "noise level")->required();
  cmd_sel->add_option("--tol", sel_solve_opts.tol, "solver tolerance");
  cmd_sel->add_option("--out", sel_out, "output JSON path (default: stdout)");
  cmd_sel->add_option("--emit-csv", sel_emit_csv, "write the curve as CSV");

  CLI11_PARSE(app, argc, argv);

  if (threads > 0) omp_set_num_threads(threads);
  const glsure::ExecMode mode =
      serial ? glsure::ExecMode::Serial : glsure::ExecMode::Parallel;

  try {
    if (*cmd_solve) {
      const auto problem = load_problem(solve_args);
      const auto solution = glsure::solve(problem, solve_opts);
      emit(glsure::io::solution_to_json(solution), solve_out);
    } else if (*cmd_sens) {
      const auto problem = load_problem(sens_args);
      auto solution = glsure::solve(problem, sens_solve_opts);
      if (sens_purify) {
        glsure::PurifyOptions po;
        po.eps_rank = sens_opts.eps_rank;
        po.kkt_tol = std::max(10.0 * sens_solve_opts.tol, 1e-6);
        solution = glsure::purify(problem, solution, po);
      }
      const auto report =
          glsure::analyze(problem, solution, sens_sigma, sens_mu0_norm, sens_opts);
      nlohmann::json j = glsure::io::report_to_json(report);
      j["solution"] = glsure::io::solution_to_json(solution);
      if (sens_args.design == "identity") {
        // closed forms for the identity design, as a cross-check surface
        j["dof_closed_form"] =
            glsure::dof_orthogonal(problem.partition, problem.y, problem.lambda);
        if (sens_sigma) {
          j["sure_closed_form"] = glsure::sure_orthogonal(
              problem.partition, problem.y, problem.lambda, *sens_sigma);
        }
      }
      emit(j, sens_out);
      if (!sens_emit_csv.empty()) {
        glsure::io::write_csv(sens_emit_csv + "_jacobian.csv", report.jacobian);
        glsure::io::write_csv(sens_emit_csv + "_mu_hat.csv", report.mu_hat);
      }
    } else if (*cmd_mc) {
      const Eigen::VectorXd beta0 = glsure::io::read_csv_vector(mc_beta0_path);
      const auto design = load_design(mc_args, beta0);
      const auto truth = glsure::GroundTruth::make(design, beta0, mc_sigma, mc_seed);
      mc_opts.mode = mode;
      const auto report =
          glsure::mc_dof(design, truth, mc_lambda, mc_replicates, mc_opts);
      emit(glsure::io::mc_report_to_json(report), mc_out);
    } else if (*cmd_path) {
      const Eigen::VectorXd beta0 = glsure::io::read_csv_vector(path_beta0_path);
      const auto design = load_design(path_args, beta0);
      const auto truth =
          glsure::GroundTruth::make(design, beta0, path_sigma, path_seed);
      path_opts.mode = mode;
      const auto reports = glsure::mc_sure_risk(
          design, truth, parse_grid(path_grid_spec), path_replicates, path_opts);
      nlohmann::json j = nlohmann::json::array();
      for (const auto& r : reports) j.push_back(glsure::io::mc_report_to_json(r));
      emit(j, path_out);
      if (!path_emit_csv.empty()) {
        glsure::io::write_csv(path_emit_csv, curve_matrix(reports));
      }
    } else if (*cmd_fd) {
      const auto problem = load_problem(fd_args);
      if (fd_h <= 0) fd_h = glsure::default_fd_step(problem.y);
      fd_opts.mode = mode;
      const auto fd = glsure::fd_divergence(problem, fd_h, fd_opts);
      glsure::SolveOptions so;
      so.tol = fd_opts.tol;
      const auto solution = glsure::solve(problem, so);
      const double dof = glsure::dof_estimate(problem, solution);
      nlohmann::json j = glsure::io::fd_result_to_json(fd);
      j["h"] = fd_h;
      j["dof_estimate"] = dof;
      j["relative_error"] =
          std::abs(fd.divergence - dof) / std::max(std::abs(dof), 1e-12);
      emit(j, fd_out);
    } else if (*cmd_sel) {
      const auto problem = load_problem(sel_args);
      const auto selection = glsure::select_lambda(
          problem, parse_grid(sel_grid_spec), sel_sigma, sel_solve_opts);
      emit(glsure::io::selection_to_json(selection), sel_out);
      if (!sel_emit_csv.empty()) {
        Eigen::MatrixXd m(selection.curve.size(), 4);
        for (std::size_t i = 0; i < selection.curve.size(); ++i) {
          const auto& point = selection.curve[i];
          m.row(static_cast<Eigen::Index>(i))
              << point.lambda, point.sure_value, point.dof,
              static_cast<double>(point.degenerate);
        }
        glsure::io::write_csv(sel_emit_csv, m);
      }
    }
  } catch (const glsure::NonConvergenceError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitNonConvergence;
  } catch (const glsure::DegeneracyError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitDegeneracy;
  } catch (const glsure::IoError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitIo;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitIo;
  }
  return kExitOk;
}
