#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <vector>

namespace polyopt::ad {

using NodeId = std::int32_t;

enum class Op : std::uint8_t {
  kConstant,
  kParam,
  kAdd,
  kSub,
  kMul,      // elementwise
  kScale,    // by compile-time constant c
  kMatVec,   // W (rows*cols, row-major) times x (cols)
  kTanh,
  kRelu,
  kLog,
  kExp,
  kSum,        // -> scalar
  kDot,        // -> scalar
  kLogSumExp,  // -> scalar, max-subtracted
  kSelect,     // -> scalar, component `index`
};

// Single-use, single-threaded reverse-mode tape over vector-valued nodes.
// Values are computed eagerly as nodes are appended (inputs always have
// smaller ids), so the graph is ready for one backward sweep immediately.
// Parameter leaves reference ranges of one flat parameter vector bound with
// bind(); backward() accumulates into a gradient of the same length.
class Tape {
 public:
  void bind(const Eigen::VectorXd& params);
  bool bound() const { return params_ != nullptr; }

  NodeId constant(Eigen::VectorXd v);
  NodeId scalar(double v);
  NodeId param(Eigen::Index offset, Eigen::Index len);

  NodeId add(NodeId a, NodeId b);
  NodeId sub(NodeId a, NodeId b);
  NodeId mul(NodeId a, NodeId b);
  NodeId scale(NodeId a, double c);
  NodeId matvec(NodeId w, NodeId x, Eigen::Index rows, Eigen::Index cols);
  NodeId tanh(NodeId a);
  NodeId relu(NodeId a);
  NodeId log(NodeId a);
  NodeId exp(NodeId a);
  NodeId sum(NodeId a);
  NodeId dot(NodeId a, NodeId b);
  NodeId logsumexp(NodeId a);
  NodeId select(NodeId a, Eigen::Index index);

  Eigen::VectorXd values(NodeId id) const;  // copy; prefer value() for scalars
  double value(NodeId id) const;            // scalar nodes only

  std::size_t size() const { return nodes_.size(); }

  // Accumulates seed * d(output)/d(params) into grad (same length as the
  // bound vector; entries for untouched leaves are left as-is). Output must
  // be a scalar node. Each node's adjoint is visited exactly once.
  void backward(NodeId output, Eigen::VectorXd& grad) const;
  void backward(NodeId output, double seed, Eigen::VectorXd& grad) const;

  // Forward-mode directional derivative: d(output)/d(params) . tangent,
  // computed in one sweep without adjoints. Independent of backward(), so
  // the two serve as cross-checks of one another.
  double directional(NodeId output, const Eigen::VectorXd& tangent) const;

 private:
  struct Node {
    Op op;
    NodeId a = -1, b = -1;
    Eigen::Index rows = 0, cols = 0;  // matvec shape; select index in rows
    double c = 0.0;                   // scale factor
    Eigen::Index offset = 0;          // param leaf range
    Eigen::Index len = 0;
    Eigen::VectorXd val;  // empty for param leaves, which view the bound vector
  };

  NodeId push(Node n);
  const Node& at(NodeId id) const;

  // Zero-copy value view: param leaves read straight from the bound vector,
  // other nodes from their stored value.
  Eigen::Map<const Eigen::VectorXd> vals(const Node& n) const;
  Eigen::Map<const Eigen::VectorXd> vals(NodeId id) const { return vals(at(id)); }

  std::vector<Node> nodes_;
  const Eigen::VectorXd* params_ = nullptr;
};

}  // namespace polyopt::ad
