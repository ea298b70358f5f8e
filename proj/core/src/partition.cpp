#include "polyopt/partition.hpp"

#include <numeric>
#include <string>

#include "polyopt/errors.hpp"

namespace polyopt {

BlockPartition BlockPartition::from_dims(std::vector<Eigen::Index> dims) {
  if (dims.empty()) {
    throw ContractViolation("BlockPartition: need at least one player block");
  }
  BlockPartition p;
  p.offsets.resize(dims.size() + 1);
  p.offsets[0] = 0;
  for (std::size_t i = 0; i < dims.size(); ++i) {
    if (dims[i] <= 0) {
      throw ContractViolation("BlockPartition: block " + std::to_string(i) +
                              " has non-positive dimension");
    }
    p.offsets[i + 1] = p.offsets[i] + dims[i];
  }
  p.total = p.offsets.back();
  p.dims = std::move(dims);
  return p;
}

FlatParams::FlatParams(BlockPartition p, Eigen::VectorXd v)
    : partition(std::move(p)), values(std::move(v)) {
  if (values.size() != partition.total) {
    throw ContractViolation("FlatParams: vector length " + std::to_string(values.size()) +
                            " does not match partition total " +
                            std::to_string(partition.total));
  }
}

Eigen::VectorBlock<Eigen::VectorXd> FlatParams::block(int i) {
  if (i < 0 || i >= partition.players()) {
    throw ContractViolation("FlatParams::block: player index " + std::to_string(i) +
                            " out of range");
  }
  return values.segment(partition.offsets[i], partition.dims[i]);
}

Eigen::VectorBlock<const Eigen::VectorXd> FlatParams::block(int i) const {
  if (i < 0 || i >= partition.players()) {
    throw ContractViolation("FlatParams::block: player index " + std::to_string(i) +
                            " out of range");
  }
  return values.segment(partition.offsets[i], partition.dims[i]);
}

}  // namespace polyopt
