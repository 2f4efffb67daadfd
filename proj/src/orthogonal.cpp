#include "glsure/orthogonal.hpp"

#include <stdexcept>

namespace glsure {

Eigen::VectorXd block_soft_threshold(const BlockPartition& partition,
                                     const Eigen::VectorXd& y, double lambda) {
  if (!(lambda > 0)) {
    throw std::invalid_argument("block_soft_threshold: lambda must be > 0");
  }
  Eigen::VectorXd out = Eigen::VectorXd::Zero(y.size());
  for (int b = 0; b < partition.num_blocks(); ++b) {
    const double nb = partition.block_norm(y, b);
    if (nb > lambda) {
      const double scale = 1.0 - lambda / nb;
      for (int i : partition.block(b)) out[i] = scale * y[i];
    }
  }
  return out;
}

double dof_orthogonal(const BlockPartition& partition, const Eigen::VectorXd& y,
                      double lambda) {
  if (!(lambda > 0)) {
    throw std::invalid_argument("dof_orthogonal: lambda must be > 0");
  }
  double dof = 0.0;
  for (int b = 0; b < partition.num_blocks(); ++b) {
    const double nb = partition.block_norm(y, b);
    if (nb > lambda) {
      const int sz = partition.block_size(b);
      dof += sz - lambda * (sz - 1) / nb;
    }
  }
  return dof;
}

double sure_orthogonal(const BlockPartition& partition, const Eigen::VectorXd& y,
                       double lambda, double sigma) {
  if (!(lambda > 0)) {
    throw std::invalid_argument("sure_orthogonal: lambda must be > 0");
  }
  if (sigma < 0) {
    throw std::invalid_argument("sure_orthogonal: sigma must be >= 0");
  }
  const double s2 = sigma * sigma;
  int active_coefficients = 0;
  int active_blocks = 0;
  double inv_norm_sum = 0.0;
  double dropped_energy = 0.0;
  for (int b = 0; b < partition.num_blocks(); ++b) {
    const double nb = partition.block_norm(y, b);
    if (nb > lambda) {
      active_coefficients += partition.block_size(b);
      ++active_blocks;
      inv_norm_sum += (partition.block_size(b) - 1) / nb;
    } else {
      dropped_energy += nb * nb;
    }
  }
  return -static_cast<double>(y.size()) * s2 + 2.0 * s2 * active_coefficients +
         lambda * lambda * active_blocks + dropped_energy -
         2.0 * s2 * lambda * inv_norm_sum;
}

}  // namespace glsure
