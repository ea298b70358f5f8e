#pragma once

#include <Eigen/Core>
#include <vector>

namespace polyopt {

// Per-player slicing of one flat parameter vector. Player i owns the
// contiguous range [offsets[i], offsets[i] + dims[i]).
struct BlockPartition {
  std::vector<Eigen::Index> dims;
  std::vector<Eigen::Index> offsets;  // size dims.size() + 1, offsets.back() == total
  Eigen::Index total = 0;

  static BlockPartition from_dims(std::vector<Eigen::Index> dims);

  int players() const { return static_cast<int>(dims.size()); }

  bool operator==(const BlockPartition& other) const {
    return dims == other.dims;
  }
};

// Concatenated parameters of all players plus the partition describing the
// per-player blocks. Optimizers treat the whole vector as one unknown.
struct FlatParams {
  BlockPartition partition;
  Eigen::VectorXd values;

  FlatParams() = default;
  explicit FlatParams(BlockPartition p)
      : partition(std::move(p)), values(Eigen::VectorXd::Zero(partition.total)) {}
  FlatParams(BlockPartition p, Eigen::VectorXd v);

  Eigen::Index size() const { return values.size(); }

  // Contiguous view of player i's block; writes go through to values.
  Eigen::VectorBlock<Eigen::VectorXd> block(int i);
  Eigen::VectorBlock<const Eigen::VectorXd> block(int i) const;

  bool conforms_to(const BlockPartition& p) const {
    return partition == p && values.size() == p.total;
  }
};

}  // namespace polyopt
