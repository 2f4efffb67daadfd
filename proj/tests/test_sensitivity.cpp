#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <Eigen/Dense>

#include "glsure/errors.hpp"
#include "glsure/harness.hpp"
#include "glsure/orthogonal.hpp"
#include "glsure/rng.hpp"
#include "glsure/sensitivity.hpp"
#include "glsure/solver.hpp"

#include "oracles.hpp"

using glsure::BlockPartition;
using glsure::BlockSupport;
using glsure::GroupLassoProblem;
using glsure::SupportLayout;

namespace {

// random instance with a comfortably identified support
struct Instance {
  GroupLassoProblem problem;
  glsure::GroupLassoSolution solution;
};

Instance make_instance(glsure::NormalSampler& rng, int n, int p,
                       const BlockPartition& part, double lambda_fraction,
                       double tol = 1e-12) {
  const Eigen::MatrixXd X = oracles::gaussian_design(rng, n, p);
  Eigen::VectorXd beta0 = Eigen::VectorXd::Zero(p);
  for (int b = 0; b < part.num_blocks(); b += 2) {
    for (int i : part.block(b)) beta0[i] = rng.uniform(0.5, 1.5);
  }
  const Eigen::VectorXd y = X * beta0 + 0.3 * rng.vector(n);
  GroupLassoProblem problem(y, X, part,
                            lambda_fraction *
                                glsure::lambda_max(GroupLassoProblem(
                                    y, X, part, 1.0)));
  glsure::SolveOptions opts;
  opts.tol = tol;
  auto solution = glsure::solve(problem, opts);
  return {std::move(problem), std::move(solution)};
}

}  // namespace

TEST_CASE("image independence check") {
  glsure::NormalSampler rng(301);

  // single active block with a nonzero image
  {
    const auto part = BlockPartition::contiguous({2, 2});
    const Eigen::MatrixXd X = rng.matrix(5, 4);
    Eigen::VectorXd beta = Eigen::VectorXd::Zero(4);
    beta[0] = 1.0;
    beta[1] = -2.0;
    const auto check = glsure::check_image_independence(X, part, beta);
    CHECK(check.independent);
    CHECK(check.min_singular_value > 0.0);
  }

  // constructed dependence: X_{b2} = -X_{b1} and beta_{b2} = beta_{b1}
  {
    const auto part = BlockPartition::contiguous({2, 2});
    Eigen::MatrixXd X = rng.matrix(5, 4);
    X.col(2) = -X.col(0);
    X.col(3) = -X.col(1);
    Eigen::VectorXd beta(4);
    beta << 1.0, 0.5, 1.0, 0.5;
    const auto check = glsure::check_image_independence(X, part, beta);
    CHECK(!check.independent);
  }

  // full column rank implies independence for any beta
  for (int trial = 0; trial < 10; ++trial) {
    const int p = rng.uniform_int(2, 8);
    const int n = p + rng.uniform_int(1, 6);
    const auto part = oracles::random_partition(rng, p, 3);
    const Eigen::MatrixXd X = rng.matrix(n, p);
    const Eigen::VectorXd beta = rng.vector(p);
    CHECK(glsure::check_image_independence(X, part, beta).independent);
  }

  // empty support is vacuously independent
  {
    const auto part = BlockPartition::contiguous({2});
    const auto check = glsure::check_image_independence(
        rng.matrix(3, 2), part, Eigen::VectorXd::Zero(2));
    CHECK(check.independent);
  }
}

TEST_CASE("system matrix closed form for X = Id, one block") {
  glsure::NormalSampler rng(303);
  const int sz = 4;
  const auto part = BlockPartition::contiguous({sz});
  const Eigen::VectorXd beta = 2.0 * rng.vector(sz);
  const double r = beta.norm();
  const double lambda = 0.7;
  const BlockSupport support{{0}, sz};
  const SupportLayout layout(part, support);
  const Eigen::MatrixXd X_I = Eigen::MatrixXd::Identity(sz, sz);

  const Eigen::MatrixXd M = glsure::assemble_system(X_I, layout, beta, lambda);
  const Eigen::VectorXd u = beta / r;
  const Eigen::MatrixXd expected =
      Eigen::MatrixXd::Identity(sz, sz) +
      (lambda / r) * (Eigen::MatrixXd::Identity(sz, sz) - u * u.transpose());
  CHECK((M - expected).cwiseAbs().maxCoeff() <= 1e-14);

  // eigenvalues: 1 along the block direction, 1 + lambda/r orthogonal to it
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(M);
  CHECK(es.eigenvalues()(0) == doctest::Approx(1.0).epsilon(1e-12));
  for (int i = 1; i < sz; ++i) {
    CHECK(es.eigenvalues()(i) ==
          doctest::Approx(1.0 + lambda / r).epsilon(1e-12));
  }
}

TEST_CASE("system matrix reduces to the Gram matrix for singleton blocks") {
  glsure::NormalSampler rng(305);
  const int n = 6, p = 4;
  const auto part = BlockPartition::singletons(p);
  const Eigen::MatrixXd X = rng.matrix(n, p);
  const Eigen::VectorXd beta = rng.vector(p);
  const BlockSupport support{{0, 1, 2, 3}, p};
  const SupportLayout layout(part, support);
  const Eigen::MatrixXd M =
      glsure::assemble_system(X, layout, beta, 0.9);
  CHECK((M - X.transpose() * X).cwiseAbs().maxCoeff() <= 1e-14);
}

TEST_CASE("assemble_system agrees with operator application") {
  glsure::NormalSampler rng(307);
  for (int trial = 0; trial < 30; ++trial) {
    const int n = rng.uniform_int(3, 10);
    const int p = rng.uniform_int(2, 10);
    const auto part = oracles::random_partition(rng, p, 4);
    const Eigen::MatrixXd X = rng.matrix(n, p);
    const Eigen::VectorXd beta = rng.vector(p);
    const auto support = glsure::block_support(part, beta, 0.0);
    const SupportLayout layout(part, support);
    const Eigen::MatrixXd X_I = layout.gather_columns(X);
    const Eigen::VectorXd beta_I = layout.gather(beta);
    const double lambda = rng.uniform(0.1, 2.0);
    const Eigen::MatrixXd M =
        glsure::assemble_system(X_I, layout, beta_I, lambda);
    const Eigen::VectorXd v = rng.vector(layout.dim());
    const Eigen::VectorXd direct =
        X_I.transpose() * (X_I * v) +
        lambda * glsure::apply_delta_P(layout, beta_I, v);
    CHECK((M * v - direct).norm() <= 1e-12 * (1.0 + direct.norm()));
    CHECK((M - M.transpose()).cwiseAbs().maxCoeff() <= 1e-13);
  }
}

TEST_CASE("jacobian for X = Id single active block matches the threshold derivative") {
  glsure::NormalSampler rng(309);
  const int n = 6;
  const auto part = BlockPartition::contiguous({3, 3});
  Eigen::VectorXd y = Eigen::VectorXd::Zero(n);
  y.segment(0, 3) << 2.0, -1.5, 1.0;  // block 0 active
  y.segment(3, 3) << 0.05, 0.02, -0.03;  // block 1 far below threshold
  const double lambda = 0.5;
  const auto problem = GroupLassoProblem::identity_design(y, part, lambda);
  glsure::SolveOptions opts;
  opts.tol = 1e-12;
  const auto solution = glsure::solve(problem, opts);
  REQUIRE(solution.support.active == std::vector<int>{0});

  const Eigen::MatrixXd d = glsure::jacobian(problem, solution);
  REQUIRE(d.rows() == 3);
  REQUIRE(d.cols() == n);
  // off-block observation coordinates do not move the active block
  CHECK(d.rightCols(3).cwiseAbs().maxCoeff() <= 1e-12);

  const Eigen::VectorXd yb = y.segment(0, 3);
  const Eigen::VectorXd u = yb.normalized();
  const Eigen::MatrixXd expected =
      Eigen::MatrixXd::Identity(3, 3) -
      (lambda / yb.norm()) *
          (Eigen::MatrixXd::Identity(3, 3) - u * u.transpose());
  CHECK((d.leftCols(3) - expected).cwiseAbs().maxCoeff() <= 1e-9);
}

TEST_CASE("jacobian equals X_I^T for orthonormal singleton designs") {
  glsure::NormalSampler rng(311);
  const int n = 10, p = 5;
  // orthonormal columns via QR
  const Eigen::MatrixXd G = rng.matrix(n, p);
  const Eigen::MatrixXd Q =
      Eigen::HouseholderQR<Eigen::MatrixXd>(G).householderQ() *
      Eigen::MatrixXd::Identity(n, p);
  const auto part = BlockPartition::singletons(p);
  const Eigen::VectorXd y = 2.0 * rng.vector(n);
  const GroupLassoProblem problem(y, Q, part, 0.2);
  glsure::SolveOptions opts;
  opts.tol = 1e-12;
  const auto solution = glsure::solve(problem, opts);
  if (solution.support.empty()) return;  // extreme draw; nothing to check
  const SupportLayout layout(part, solution.support);
  const Eigen::MatrixXd X_I = layout.gather_columns(Q);
  const Eigen::MatrixXd d = glsure::jacobian(problem, solution);
  CHECK((d - X_I.transpose()).cwiseAbs().maxCoeff() <= 1e-10);
}

TEST_CASE("jacobian matches central finite differences") {
  glsure::NormalSampler rng(313);
  const auto part = BlockPartition::contiguous({3, 3, 3, 3});
  auto instance = make_instance(rng, 8, 12, part, 0.35);
  REQUIRE(!instance.solution.support.empty());

  const Eigen::MatrixXd d =
      glsure::jacobian(instance.problem, instance.solution);
  const double h = 1e-5;
  const auto fd = oracles::fd_jacobian(instance.problem, instance.solution, h);
  const double dmax = d.cwiseAbs().maxCoeff();
  for (int j = 0; j < d.cols(); ++j) {
    if (!fd.column_stable[j]) continue;
    for (int i = 0; i < d.rows(); ++i) {
      const double denom = std::max(std::abs(d(i, j)), 1e-3 * dmax);
      CHECK(std::abs(fd.d(i, j) - d(i, j)) / denom <= 1e-4);
    }
  }
}

TEST_CASE("linear system residual stays tiny") {
  glsure::NormalSampler rng(315);
  for (int trial = 0; trial < 10; ++trial) {
    const auto part = oracles::random_partition(rng, 12, 4);
    auto instance = make_instance(rng, 9, 12, part, 0.3);
    const auto report = glsure::analyze(instance.problem, instance.solution);
    if (report.support.empty()) continue;
    CHECK(report.system_residual <= 1e-10);
  }
}

TEST_CASE("degrees of freedom: empty support, eigenvalue route, bounds") {
  glsure::NormalSampler rng(317);

  // lambda past the threshold: zero fit, zero divergence
  {
    const auto part = BlockPartition::contiguous({3, 3});
    const Eigen::MatrixXd X = oracles::gaussian_design(rng, 5, 6);
    const Eigen::VectorXd y = rng.vector(5);
    const double lmax = glsure::lambda_max(GroupLassoProblem(y, X, part, 1.0));
    const GroupLassoProblem problem(y, X, part, 2.0 * lmax);
    const auto solution = glsure::solve(problem);
    CHECK(glsure::dof_estimate(problem, solution) == 0.0);
  }

  for (int trial = 0; trial < 10; ++trial) {
    const auto part = oracles::random_partition(rng, 14, 4);
    auto instance = make_instance(rng, 9, 14, part, 0.3);
    const auto report = glsure::analyze(instance.problem, instance.solution);
    const int n = instance.problem.n();

    // dof within [0, n]
    CHECK(report.dof >= -1e-6);
    CHECK(report.dof <= n + 1e-6);

    // trace equals the eigenvalue sum of the fit Jacobian X_I d
    if (!report.support.empty()) {
      const SupportLayout layout(instance.problem.partition, report.support);
      const Eigen::MatrixXd X_I =
          layout.gather_columns(instance.problem.X);
      const Eigen::MatrixXd fit_jacobian = X_I * report.jacobian;  // n x n
      const Eigen::EigenSolver<Eigen::MatrixXd> es(fit_jacobian);
      CHECK(report.dof ==
            doctest::Approx(es.eigenvalues().real().sum()).epsilon(1e-8));
    }
  }
}

TEST_CASE("lasso reduction: dof equals the support size") {
  glsure::NormalSampler rng(319);
  const int n = 12, p = 6;
  const auto part = BlockPartition::singletons(p);
  const Eigen::MatrixXd X = oracles::gaussian_design(rng, n, p);
  Eigen::VectorXd beta0(p);
  beta0 << 1.5, 0, -2.0, 0, 1.0, 0;
  const Eigen::VectorXd y = X * beta0 + 0.2 * rng.vector(n);
  const GroupLassoProblem problem(
      y, X, part, 0.25 * glsure::lambda_max(GroupLassoProblem(y, X, part, 1.0)));
  glsure::SolveOptions opts;
  opts.tol = 1e-11;
  const auto solution = glsure::solve(problem, opts);
  REQUIRE(!solution.support.empty());
  CHECK(glsure::dof_estimate(problem, solution) ==
        doctest::Approx(static_cast<double>(solution.support.size))
            .epsilon(1e-8));
}

TEST_CASE("sure closed cases") {
  glsure::NormalSampler rng(321);
  const auto part = BlockPartition::contiguous({3, 3});
  const Eigen::MatrixXd X = oracles::gaussian_design(rng, 6, 6);
  const Eigen::VectorXd y = rng.vector(6);
  const double sigma = 0.8;

  const double lmax = glsure::lambda_max(GroupLassoProblem(y, X, part, 1.0));
  const GroupLassoProblem problem(y, X, part, 3.0 * lmax);
  const auto solution = glsure::solve(problem);
  CHECK(glsure::sure(problem, solution, sigma) ==
        doctest::Approx(y.squaredNorm() - 6.0 * sigma * sigma)
            .epsilon(1e-12));
  CHECK_THROWS_AS(glsure::sure(problem, solution, 0.0), std::invalid_argument);
}

TEST_CASE("reliability terms") {
  glsure::NormalSampler rng(323);

  // X = Id: the operator norm is exactly one whenever the support is nonempty
  for (int trial = 0; trial < 10; ++trial) {
    const int n = rng.uniform_int(5, 12);
    const auto part = oracles::random_partition(rng, n, 4);
    const Eigen::VectorXd y = 2.0 * rng.vector(n);
    const auto problem =
        glsure::GroupLassoProblem::identity_design(y, part, 0.6);
    glsure::SolveOptions opts;
    opts.tol = 1e-10;
    const auto solution = glsure::solve(problem, opts);
    if (solution.support.empty()) continue;
    const auto terms = glsure::reliability_bound(problem, solution, 0.5, 1.0);
    CHECK(terms.u_norm == doctest::Approx(1.0).epsilon(1e-8));
  }

  // empty support: the bound collapses to 18/n + 8 mu0^2/(n^2 sigma^2)
  {
    const auto part = BlockPartition::contiguous({2, 2});
    const Eigen::VectorXd y = 0.01 * rng.vector(4);
    const auto problem =
        glsure::GroupLassoProblem::identity_design(y, part, 5.0);
    const auto solution = glsure::solve(problem);
    REQUIRE(solution.support.empty());
    const double sigma = 0.5, mu0_norm = 2.0;
    const auto terms =
        glsure::reliability_bound(problem, solution, sigma, mu0_norm);
    CHECK(terms.u_norm == 0.0);
    CHECK(terms.bound ==
          doctest::Approx(18.0 / 4.0 +
                          8.0 * mu0_norm * mu0_norm / (16.0 * sigma * sigma))
              .epsilon(1e-12));
  }

  // spectral norm against a power-iteration oracle on the formed matrix
  glsure::NormalSampler rng2(325);
  for (int trial = 0; trial < 5; ++trial) {
    const auto part = oracles::random_partition(rng2, 10, 3);
    auto instance = make_instance(rng2, 8, 10, part, 0.35);
    if (instance.solution.support.empty()) continue;
    const SupportLayout layout(instance.problem.partition,
                               instance.solution.support);
    const Eigen::MatrixXd X_I =
        layout.gather_columns(instance.problem.X);
    const Eigen::VectorXd beta_I = layout.gather(instance.solution.beta);
    const Eigen::MatrixXd M = glsure::assemble_system(
        X_I, layout, beta_I, instance.problem.lambda);
    const Eigen::MatrixXd U =
        (X_I.transpose() * X_I) * M.inverse();
    const auto terms =
        glsure::reliability_bound(instance.problem, instance.solution, 0.5, 1.0);
    CHECK(terms.u_norm ==
          doctest::Approx(oracles::power_iteration_norm(U)).epsilon(1e-8));
  }
}

TEST_CASE("degenerate images raise") {
  glsure::NormalSampler rng(327);
  const auto part = BlockPartition::contiguous({2, 2});
  Eigen::MatrixXd X = rng.matrix(6, 4);
  X.col(2) = X.col(0);
  X.col(3) = X.col(1);  // duplicated block
  Eigen::VectorXd beta(4);
  beta << 0.8, -0.4, 0.8, -0.4;
  glsure::GroupLassoSolution fake;
  fake.beta = beta;
  fake.support = glsure::block_support(part, beta, 1e-9);
  const GroupLassoProblem problem(X * beta, X, part, 0.3);
  CHECK_THROWS_AS(glsure::analyze(problem, fake), glsure::DegeneracyError);
}

TEST_CASE("first-order prediction of the solution map") {
  glsure::NormalSampler rng(329);
  const auto part = BlockPartition::contiguous({3, 3, 3});
  auto instance = make_instance(rng, 7, 9, part, 0.35);
  REQUIRE(!instance.solution.support.empty());
  const SupportLayout layout(instance.problem.partition,
                             instance.solution.support);
  const Eigen::MatrixXd d =
      glsure::jacobian(instance.problem, instance.solution);

  glsure::SolveOptions opts;
  opts.tol = 1e-13;
  opts.x0 = instance.solution.beta;
  int checked = 0;
  for (int trial = 0; trial < 5; ++trial) {
    Eigen::VectorXd delta = rng.vector(instance.problem.n());
    delta *= 1e-5 / delta.norm();
    const auto perturbed = glsure::solve(
        GroupLassoProblem(instance.problem.y + delta, instance.problem.X,
                          instance.problem.partition, instance.problem.lambda),
        opts);
    if (!(perturbed.support == instance.solution.support)) continue;
    const Eigen::VectorXd lhs = layout.gather(perturbed.beta) -
                                layout.gather(instance.solution.beta) -
                                d * delta;
    CHECK(lhs.norm() <= 1e-3 * delta.norm());
    ++checked;
  }
  CHECK(checked >= 4);  // support should be stable for nearly all draws
}

TEST_CASE("support is locally constant") {
  glsure::NormalSampler rng(331);
  const auto part = BlockPartition::contiguous({3, 3, 3, 3});
  auto instance = make_instance(rng, 9, 12, part, 0.35, 1e-10);
  glsure::SolveOptions opts;
  opts.tol = 1e-10;
  opts.x0 = instance.solution.beta;
  int same = 0;
  const int trials = 100;
  for (int trial = 0; trial < trials; ++trial) {
    Eigen::VectorXd delta = rng.vector(instance.problem.n());
    delta *= 1e-6 / delta.norm();
    const auto perturbed = glsure::solve(
        GroupLassoProblem(instance.problem.y + delta, instance.problem.X,
                          instance.problem.partition, instance.problem.lambda),
        opts);
    if (perturbed.support == instance.solution.support) ++same;
  }
  CHECK(same >= 99);
}
