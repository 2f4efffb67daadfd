#pragma once

#include <stdexcept>
#include <string>
#include <utility>

#include <Eigen/Core>

namespace glsure {

/// Raised when the iterative solver exhausts its budget. Carries the best
/// iterate seen and its certificate residual so callers can inspect or
/// continue from it.
class NonConvergenceError : public std::runtime_error {
 public:
  NonConvergenceError(const std::string& what, Eigen::VectorXd best_beta,
                      double kkt_residual, long iterations)
      : std::runtime_error(what),
        best_beta_(std::move(best_beta)),
        kkt_residual_(kkt_residual),
        iterations_(iterations) {}

  const Eigen::VectorXd& best_beta() const { return best_beta_; }
  double kkt_residual() const { return kkt_residual_; }
  long iterations() const { return iterations_; }

 private:
  Eigen::VectorXd best_beta_;
  double kkt_residual_;
  long iterations_;
};

/// Raised when the active images are numerically dependent, i.e. the
/// sensitivity system is singular beyond repair.
class DegeneracyError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace glsure
