// Compares the serial reference replicate loop against the OpenMP one on the
// same Monte Carlo workload and verifies that the reports are bit-identical.

#include <chrono>
#include <cstdint>
#include <cstdio>
#include <cstring>

#include <omp.h>

#include "CLI11.hpp"

#include "glsure/harness.hpp"
#include "glsure/rng.hpp"

namespace {

double run_timed(const glsure::Design& design, const glsure::GroundTruth& truth,
                 double lambda, int replicates, glsure::ExecMode mode,
                 glsure::McReport& report) {
  glsure::McOptions options;
  options.mode = mode;
  const auto start = std::chrono::steady_clock::now();
  report = glsure::mc_dof(design, truth, lambda, replicates, options);
  const auto stop = std::chrono::steady_clock::now();
  return std::chrono::duration<double>(stop - start).count();
}

bool identical(const glsure::McReport& a, const glsure::McReport& b) {
  return a.included == b.included && a.degenerate_count == b.degenerate_count &&
         std::memcmp(&a.dof_formula_mean, &b.dof_formula_mean, sizeof(double)) == 0 &&
         a.dof_formula_se == b.dof_formula_se &&
         a.dof_covariance_mean == b.dof_covariance_mean &&
         a.dof_covariance_se == b.dof_covariance_se &&
         a.sure_mean == b.sure_mean && a.sure_se == b.sure_se &&
         a.se_true_mean == b.se_true_mean && a.se_true_se == b.se_true_se &&
         a.u_norm_sq_mean == b.u_norm_sq_mean &&
         a.reliability_lhs == b.reliability_lhs &&
         a.reliability_bound == b.reliability_bound;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"serial vs OpenMP replicate loop benchmark"};
  int replicates = 2000;
  int threads = 0;
  std::uint64_t seed = 42;
  app.add_option("--replicates", replicates, "replicate count");
  app.add_option("--threads", threads, "OpenMP thread count (0: default)");
  app.add_option("--seed", seed, "RNG seed");
  CLI11_PARSE(app, argc, argv);
  if (threads > 0) omp_set_num_threads(threads);

  // reference workload: n=10, p=15, five blocks of three, two active
  const int n = 10, p = 15;
  glsure::NormalSampler rng(seed);
  glsure::Design design{rng.matrix(n, p) / std::sqrt(static_cast<double>(n)),
                        glsure::BlockPartition::contiguous({3, 3, 3, 3, 3})};
  Eigen::VectorXd beta0 = Eigen::VectorXd::Zero(p);
  beta0.segment(0, 3) << 1.0, -0.8, 0.6;
  beta0.segment(6, 3) << -0.5, 0.9, 0.7;
  const auto truth = glsure::GroundTruth::make(design, beta0, 0.5, seed);
  const double lambda = 0.3;

  glsure::McReport serial_report, parallel_report;
  const double t_serial = run_timed(design, truth, lambda, replicates,
                                    glsure::ExecMode::Serial, serial_report);
  const double t_parallel = run_timed(design, truth, lambda, replicates,
                                      glsure::ExecMode::Parallel, parallel_report);

  std::printf("replicates            : %d\n", replicates);
  std::printf("threads               : %d\n", omp_get_max_threads());
  std::printf("serial                : %.3f s  (%.1f us/replicate)\n", t_serial,
              1e6 * t_serial / replicates);
  std::printf("openmp                : %.3f s  (%.1f us/replicate)\n", t_parallel,
              1e6 * t_parallel / replicates);
  std::printf("speedup               : %.2fx\n", t_serial / t_parallel);
  std::printf("dof formula mean      : %.10f\n", serial_report.dof_formula_mean);
  std::printf("dof covariance mean   : %.10f\n", serial_report.dof_covariance_mean);

  if (!identical(serial_report, parallel_report)) {
    std::printf("FAIL: serial and OpenMP reports differ\n");
    return 1;
  }
  std::printf("serial == openmp      : bit-identical\n");
  return 0;
}
