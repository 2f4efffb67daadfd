#pragma once

#include "glsure/sensitivity.hpp"
#include "glsure/solver.hpp"

namespace glsure {

struct PurifyOptions {
  double eps_rank = 1e-8;
  double kkt_tol = 1e-6;   // certificate gate on the input solution
  double eps_supp = -1.0;
  int max_rounds = -1;     // default: initial number of active blocks
};

/// Repair a minimizer whose active images {X_b beta_b} are linearly
/// dependent: pick a unit kernel vector mu of the active-image matrix, scale
/// every active block by (1 + t0 mu_i) with t0 the smallest |t| at which a
/// factor hits zero, and repeat. Each round removes at least one block while
/// X beta, the group norm and the optimality certificate are preserved (up
/// to the accuracy of the input solution). Returns the input unchanged when
/// the images are already independent.
GroupLassoSolution purify(const GroupLassoProblem& problem,
                          const GroupLassoSolution& solution,
                          const PurifyOptions& options = {});

}  // namespace glsure
