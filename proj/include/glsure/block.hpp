#pragma once

#include <vector>

#include <Eigen/Core>

namespace glsure {

/// Disjoint, nonempty blocks covering coefficient indices {0..p-1}.
/// Block order is fixed at construction; every layout derived from a
/// partition is deterministic. Immutable after construction.
class BlockPartition {
 public:
  explicit BlockPartition(std::vector<std::vector<int>> blocks);

  /// Contiguous ranges of the given sizes, in order.
  static BlockPartition contiguous(const std::vector<int>& sizes);
  /// One block per coordinate (the plain Lasso structure).
  static BlockPartition singletons(int p);

  int dim() const { return p_; }
  int num_blocks() const { return static_cast<int>(blocks_.size()); }
  const std::vector<int>& block(int b) const { return blocks_[b]; }
  int block_size(int b) const { return static_cast<int>(blocks_[b].size()); }
  const std::vector<std::vector<int>>& blocks() const { return blocks_; }

  /// Copy of the subvector x_b.
  Eigen::VectorXd block_of(const Eigen::VectorXd& x, int b) const;
  /// Euclidean norm of x_b.
  double block_norm(const Eigen::VectorXd& x, int b) const;

  bool operator==(const BlockPartition& other) const {
    return blocks_ == other.blocks_;
  }

 private:
  std::vector<std::vector<int>> blocks_;
  int p_ = 0;
};

/// Active subset of a partition's blocks. `size` counts coefficients,
/// not blocks.
struct BlockSupport {
  std::vector<int> active;  // block indices, ascending
  int size = 0;

  bool contains(int b) const;
  bool empty() const { return active.empty(); }
  int num_blocks() const { return static_cast<int>(active.size()); }

  bool operator==(const BlockSupport& other) const {
    return active == other.active;
  }
};

/// Sum of blockwise Euclidean norms (the group norm inducing blockwise
/// sparsity).
double group_norm(const BlockPartition& partition, const Eigen::VectorXd& x);

/// Blocks whose norm strictly exceeds eps_supp. eps_supp must be >= 0.
BlockSupport block_support(const BlockPartition& partition,
                           const Eigen::VectorXd& x, double eps_supp);

/// Default numerical-zero threshold: 1e-9 relative to the sup norm of x
/// (one order above the default solver tolerance).
double default_eps_supp(const Eigen::VectorXd& x);

/// eps_supp when nonnegative, otherwise default_eps_supp(x).
double resolve_eps_supp(const Eigen::VectorXd& x, double eps_supp);

/// Copy of x with every block outside the support set to exact zero.
Eigen::VectorXd truncate_to_support(const BlockPartition& partition,
                                    const Eigen::VectorXd& x,
                                    const BlockSupport& support);

/// Flattened layout of the active blocks: the restricted vector of length
/// dim() stacks the active blocks in ascending block order, each block
/// keeping its partition-internal index order. Self-contained (copies the
/// index lists), so it stays valid independently of the partition object.
class SupportLayout {
 public:
  SupportLayout(const BlockPartition& partition, const BlockSupport& support);

  int dim() const { return dim_; }  // total active coefficients
  int num_blocks() const { return static_cast<int>(block_ids_.size()); }
  int block_id(int k) const { return block_ids_[k]; }
  int offset(int k) const { return offsets_[k]; }
  int block_size(int k) const { return sizes_[k]; }
  const std::vector<int>& indices(int k) const { return indices_[k]; }

  /// x restricted to the active coefficients, stacked per the layout.
  Eigen::VectorXd gather(const Eigen::VectorXd& x_full) const;
  /// Write a restricted vector back into the corresponding entries of x_full.
  void scatter_into(const Eigen::VectorXd& x_restricted,
                    Eigen::VectorXd& x_full) const;
  /// Columns of X for the active coefficients, in layout order.
  Eigen::MatrixXd gather_columns(const Eigen::MatrixXd& X) const;

 private:
  std::vector<int> block_ids_;
  std::vector<int> offsets_;
  std::vector<int> sizes_;
  std::vector<std::vector<int>> indices_;
  int dim_ = 0;
};

/// Unit-normalize each block of a restricted vector. Throws on a zero block.
Eigen::VectorXd normalize_blocks(const SupportLayout& layout,
                                 const Eigen::VectorXd& x_restricted);

/// Apply v |-> ( Proj_{x_b ⟂}(v_b) / ||x_b|| )_b blockwise, where the
/// projector uses the unit direction of x_b. Symmetric positive
/// semidefinite; kernel spanned by the block directions of x_restricted.
/// Throws on a zero block.
Eigen::VectorXd apply_delta_P(const SupportLayout& layout,
                              const Eigen::VectorXd& x_restricted,
                              const Eigen::VectorXd& v);

}  // namespace glsure
