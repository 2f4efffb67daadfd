#pragma once

#include <Eigen/Core>

#include "glsure/block.hpp"

namespace glsure {

/// Proximal map of lambda * group_norm: each block shrinks by lambda in norm,
/// blocks with ||y_b|| <= lambda (boundary included) vanish. For X = Id this
/// is the exact group Lasso solution.
Eigen::VectorXd block_soft_threshold(const BlockPartition& partition,
                                     const Eigen::VectorXd& y, double lambda);

/// Closed-form degrees of freedom for the identity design:
///   sum over blocks with ||y_b|| > lambda of  |b| - lambda * (|b|-1)/||y_b||.
double dof_orthogonal(const BlockPartition& partition, const Eigen::VectorXd& y,
                      double lambda);

/// Closed-form unbiased risk estimate for the identity design. The residual
/// of every surviving block has norm exactly lambda, so the residual term
/// contributes lambda^2 per active block plus the energy of the dropped
/// blocks.
double sure_orthogonal(const BlockPartition& partition, const Eigen::VectorXd& y,
                       double lambda, double sigma);

}  // namespace glsure
