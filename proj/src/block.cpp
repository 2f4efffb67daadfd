#include "glsure/block.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace glsure {

BlockPartition::BlockPartition(std::vector<std::vector<int>> blocks)
    : blocks_(std::move(blocks)) {
  if (blocks_.empty()) {
    throw std::invalid_argument("partition: at least one block required");
  }
  int p = 0;
  for (const auto& b : blocks_) {
    if (b.empty()) throw std::invalid_argument("partition: empty block");
    p += static_cast<int>(b.size());
  }
  std::vector<char> seen(p, 0);
  for (const auto& b : blocks_) {
    for (int i : b) {
      if (i < 0 || i >= p) {
        throw std::invalid_argument(
            "partition: blocks must cover exactly 0..p-1");
      }
      if (seen[i]++) {
        throw std::invalid_argument("partition: blocks overlap");
      }
    }
  }
  p_ = p;
}

BlockPartition BlockPartition::contiguous(const std::vector<int>& sizes) {
  std::vector<std::vector<int>> blocks;
  blocks.reserve(sizes.size());
  int next = 0;
  for (int s : sizes) {
    if (s <= 0) throw std::invalid_argument("partition: nonpositive size");
    std::vector<int> b(s);
    std::iota(b.begin(), b.end(), next);
    next += s;
    blocks.push_back(std::move(b));
  }
  return BlockPartition(std::move(blocks));
}

BlockPartition BlockPartition::singletons(int p) {
  return contiguous(std::vector<int>(p, 1));
}

Eigen::VectorXd BlockPartition::block_of(const Eigen::VectorXd& x,
                                         int b) const {
  const auto& idx = blocks_[b];
  Eigen::VectorXd out(idx.size());
  for (std::size_t k = 0; k < idx.size(); ++k) out[k] = x[idx[k]];
  return out;
}

double BlockPartition::block_norm(const Eigen::VectorXd& x, int b) const {
  double sq = 0;
  for (int i : blocks_[b]) sq += x[i] * x[i];
  return std::sqrt(sq);
}

bool BlockSupport::contains(int b) const {
  return std::binary_search(active.begin(), active.end(), b);
}

double group_norm(const BlockPartition& partition, const Eigen::VectorXd& x) {
  double s = 0;
  for (int b = 0; b < partition.num_blocks(); ++b) {
    s += partition.block_norm(x, b);
  }
  return s;
}

BlockSupport block_support(const BlockPartition& partition,
                           const Eigen::VectorXd& x, double eps_supp) {
  if (eps_supp < 0) {
    throw std::invalid_argument("block_support: eps_supp must be >= 0");
  }
  BlockSupport support;
  for (int b = 0; b < partition.num_blocks(); ++b) {
    if (partition.block_norm(x, b) > eps_supp) {
      support.active.push_back(b);
      support.size += partition.block_size(b);
    }
  }
  return support;
}

double default_eps_supp(const Eigen::VectorXd& x) {
  return x.size() == 0 ? 0.0 : 1e-9 * x.cwiseAbs().maxCoeff();
}

double resolve_eps_supp(const Eigen::VectorXd& x, double eps_supp) {
  return eps_supp >= 0 ? eps_supp : default_eps_supp(x);
}

Eigen::VectorXd truncate_to_support(const BlockPartition& partition,
                                    const Eigen::VectorXd& x,
                                    const BlockSupport& support) {
  Eigen::VectorXd out = x;
  for (int b = 0; b < partition.num_blocks(); ++b) {
    if (!support.contains(b)) {
      for (int i : partition.block(b)) out[i] = 0.0;
    }
  }
  return out;
}

SupportLayout::SupportLayout(const BlockPartition& partition,
                             const BlockSupport& support) {
  block_ids_ = support.active;
  offsets_.reserve(block_ids_.size());
  sizes_.reserve(block_ids_.size());
  indices_.reserve(block_ids_.size());
  for (int b : block_ids_) {
    offsets_.push_back(dim_);
    sizes_.push_back(partition.block_size(b));
    indices_.push_back(partition.block(b));
    dim_ += partition.block_size(b);
  }
}

Eigen::VectorXd SupportLayout::gather(const Eigen::VectorXd& x_full) const {
  Eigen::VectorXd out(dim_);
  for (int k = 0; k < num_blocks(); ++k) {
    const auto& idx = indices_[k];
    for (std::size_t j = 0; j < idx.size(); ++j) {
      out[offsets_[k] + static_cast<int>(j)] = x_full[idx[j]];
    }
  }
  return out;
}

void SupportLayout::scatter_into(const Eigen::VectorXd& x_restricted,
                                 Eigen::VectorXd& x_full) const {
  for (int k = 0; k < num_blocks(); ++k) {
    const auto& idx = indices_[k];
    for (std::size_t j = 0; j < idx.size(); ++j) {
      x_full[idx[j]] = x_restricted[offsets_[k] + static_cast<int>(j)];
    }
  }
}

Eigen::MatrixXd SupportLayout::gather_columns(const Eigen::MatrixXd& X) const {
  Eigen::MatrixXd out(X.rows(), dim_);
  for (int k = 0; k < num_blocks(); ++k) {
    const auto& idx = indices_[k];
    for (std::size_t j = 0; j < idx.size(); ++j) {
      out.col(offsets_[k] + static_cast<int>(j)) = X.col(idx[j]);
    }
  }
  return out;
}

Eigen::VectorXd normalize_blocks(const SupportLayout& layout,
                                 const Eigen::VectorXd& x_restricted) {
  if (x_restricted.size() != layout.dim()) {
    throw std::invalid_argument("normalize_blocks: size mismatch");
  }
  Eigen::VectorXd out(layout.dim());
  for (int k = 0; k < layout.num_blocks(); ++k) {
    const auto seg = x_restricted.segment(layout.offset(k), layout.block_size(k));
    const double nb = seg.norm();
    if (nb == 0.0) {
      throw std::invalid_argument("normalize_blocks: zero block in support");
    }
    out.segment(layout.offset(k), layout.block_size(k)) = seg / nb;
  }
  return out;
}

Eigen::VectorXd apply_delta_P(const SupportLayout& layout,
                              const Eigen::VectorXd& x_restricted,
                              const Eigen::VectorXd& v) {
  if (x_restricted.size() != layout.dim() || v.size() != layout.dim()) {
    throw std::invalid_argument("apply_delta_P: size mismatch");
  }
  Eigen::VectorXd out(layout.dim());
  for (int k = 0; k < layout.num_blocks(); ++k) {
    const int off = layout.offset(k);
    const int sz = layout.block_size(k);
    const auto xb = x_restricted.segment(off, sz);
    const auto vb = v.segment(off, sz);
    const double nb = xb.norm();
    if (nb == 0.0) {
      throw std::invalid_argument("apply_delta_P: zero block in support");
    }
    const Eigen::VectorXd u = xb / nb;
    out.segment(off, sz) = (vb - u * u.dot(vb)) / nb;
  }
  return out;
}

}  // namespace glsure
