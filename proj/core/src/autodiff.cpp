#include "polyopt/autodiff.hpp"

#include <cmath>
#include <string>

#include "polyopt/errors.hpp"

namespace polyopt::ad {

namespace {

std::string node_desc(Op op, NodeId id) {
  static const char* names[] = {"constant", "param", "add",    "sub", "mul",
                                "scale",    "matvec", "tanh",  "relu", "log",
                                "exp",      "sum",    "dot",   "logsumexp", "select"};
  return std::string(names[static_cast<int>(op)]) + " node " + std::to_string(id);
}

}  // namespace

void Tape::bind(const Eigen::VectorXd& params) { params_ = &params; }

Eigen::Map<const Eigen::VectorXd> Tape::vals(const Node& n) const {
  if (n.op == Op::kParam) {
    return Eigen::Map<const Eigen::VectorXd>(params_->data() + n.offset, n.len);
  }
  return Eigen::Map<const Eigen::VectorXd>(n.val.data(), n.val.size());
}

NodeId Tape::push(Node n) {
  // Param leaves view the bound vector; everything else is checked here so a
  // NaN is reported at the node that produced it.
  if (n.op != Op::kParam && !n.val.allFinite()) {
    throw NumericError("tape: non-finite value produced at " +
                       node_desc(n.op, static_cast<NodeId>(nodes_.size())));
  }
  nodes_.push_back(std::move(n));
  return static_cast<NodeId>(nodes_.size() - 1);
}

const Tape::Node& Tape::at(NodeId id) const {
  if (id < 0 || static_cast<std::size_t>(id) >= nodes_.size()) {
    throw ContractViolation("tape: node id out of range");
  }
  return nodes_[static_cast<std::size_t>(id)];
}

NodeId Tape::constant(Eigen::VectorXd v) {
  Node n;
  n.op = Op::kConstant;
  n.len = v.size();
  n.val = std::move(v);
  return push(std::move(n));
}

NodeId Tape::scalar(double v) {
  Eigen::VectorXd s(1);
  s[0] = v;
  return constant(std::move(s));
}

NodeId Tape::param(Eigen::Index offset, Eigen::Index len) {
  if (!bound()) throw ContractViolation("tape: param leaf created before bind()");
  if (offset < 0 || len <= 0 || offset + len > params_->size()) {
    throw ContractViolation("tape: param leaf range out of bounds");
  }
  Node n;
  n.op = Op::kParam;
  n.offset = offset;
  n.len = len;
  return push(std::move(n));
}

NodeId Tape::add(NodeId a, NodeId b) {
  const auto va = vals(a), vb = vals(b);
  if (va.size() != vb.size()) throw ContractViolation("tape add: length mismatch");
  Node n;
  n.op = Op::kAdd;
  n.a = a;
  n.b = b;
  n.len = va.size();
  n.val = va + vb;
  return push(std::move(n));
}

NodeId Tape::sub(NodeId a, NodeId b) {
  const auto va = vals(a), vb = vals(b);
  if (va.size() != vb.size()) throw ContractViolation("tape sub: length mismatch");
  Node n;
  n.op = Op::kSub;
  n.a = a;
  n.b = b;
  n.len = va.size();
  n.val = va - vb;
  return push(std::move(n));
}

NodeId Tape::mul(NodeId a, NodeId b) {
  const auto va = vals(a), vb = vals(b);
  if (va.size() != vb.size()) throw ContractViolation("tape mul: length mismatch");
  Node n;
  n.op = Op::kMul;
  n.a = a;
  n.b = b;
  n.len = va.size();
  n.val = va.cwiseProduct(vb);
  return push(std::move(n));
}

NodeId Tape::scale(NodeId a, double c) {
  const auto va = vals(a);
  Node n;
  n.op = Op::kScale;
  n.a = a;
  n.c = c;
  n.len = va.size();
  n.val = c * va;
  return push(std::move(n));
}

NodeId Tape::matvec(NodeId w, NodeId x, Eigen::Index rows, Eigen::Index cols) {
  const auto vw = vals(w), vx = vals(x);
  if (vw.size() != rows * cols || vx.size() != cols) {
    throw ContractViolation("tape matvec: shape mismatch");
  }
  using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  Node n;
  n.op = Op::kMatVec;
  n.a = w;
  n.b = x;
  n.rows = rows;
  n.cols = cols;
  n.len = rows;
  n.val = Eigen::Map<const RowMat>(vw.data(), rows, cols) * vx;
  return push(std::move(n));
}

NodeId Tape::tanh(NodeId a) {
  Node n;
  n.op = Op::kTanh;
  n.a = a;
  n.val = vals(a).array().tanh();
  n.len = n.val.size();
  return push(std::move(n));
}

NodeId Tape::relu(NodeId a) {
  Node n;
  n.op = Op::kRelu;
  n.a = a;
  n.val = vals(a).cwiseMax(0.0);
  n.len = n.val.size();
  return push(std::move(n));
}

NodeId Tape::log(NodeId a) {
  Node n;
  n.op = Op::kLog;
  n.a = a;
  n.val = vals(a).array().log();
  n.len = n.val.size();
  return push(std::move(n));
}

NodeId Tape::exp(NodeId a) {
  Node n;
  n.op = Op::kExp;
  n.a = a;
  n.val = vals(a).array().exp();
  n.len = n.val.size();
  return push(std::move(n));
}

NodeId Tape::sum(NodeId a) {
  Node n;
  n.op = Op::kSum;
  n.a = a;
  Eigen::VectorXd s(1);
  s[0] = vals(a).sum();
  n.val = std::move(s);
  n.len = 1;
  return push(std::move(n));
}

NodeId Tape::dot(NodeId a, NodeId b) {
  const auto va = vals(a), vb = vals(b);
  if (va.size() != vb.size()) throw ContractViolation("tape dot: length mismatch");
  Node n;
  n.op = Op::kDot;
  n.a = a;
  n.b = b;
  Eigen::VectorXd s(1);
  s[0] = va.dot(vb);
  n.val = std::move(s);
  n.len = 1;
  return push(std::move(n));
}

NodeId Tape::logsumexp(NodeId a) {
  const auto v = vals(a);
  if (v.size() == 0) throw ContractViolation("tape logsumexp: empty vector");
  // Max subtraction keeps exp() in range for large logits.
  const double m = v.maxCoeff();
  Node n;
  n.op = Op::kLogSumExp;
  n.a = a;
  Eigen::VectorXd s(1);
  s[0] = m + std::log((v.array() - m).exp().sum());
  n.val = std::move(s);
  n.len = 1;
  return push(std::move(n));
}

NodeId Tape::select(NodeId a, Eigen::Index index) {
  const auto v = vals(a);
  if (index < 0 || index >= v.size()) {
    throw ContractViolation("tape select: index out of range");
  }
  Node n;
  n.op = Op::kSelect;
  n.a = a;
  n.rows = index;
  Eigen::VectorXd s(1);
  s[0] = v[index];
  n.val = std::move(s);
  n.len = 1;
  return push(std::move(n));
}

Eigen::VectorXd Tape::values(NodeId id) const { return vals(id); }

double Tape::value(NodeId id) const {
  const auto v = vals(id);
  if (v.size() != 1) throw ContractViolation("tape value: node is not scalar");
  return v[0];
}

void Tape::backward(NodeId output, Eigen::VectorXd& grad) const {
  backward(output, 1.0, grad);
}

void Tape::backward(NodeId output, double seed, Eigen::VectorXd& grad) const {
  const Node& out = at(output);
  if (vals(out).size() != 1) {
    throw ContractViolation("tape backward: output must be a scalar node");
  }
  if (!bound() || grad.size() != params_->size()) {
    throw ContractViolation("tape backward: gradient length must match bound params");
  }

  std::vector<Eigen::VectorXd> adj(static_cast<std::size_t>(output) + 1);
  adj[static_cast<std::size_t>(output)] = Eigen::VectorXd::Constant(1, seed);

  auto bump = [&](NodeId id, auto&& contribution) {
    Eigen::VectorXd& slot = adj[static_cast<std::size_t>(id)];
    if (slot.size() == 0) {
      slot = contribution;
    } else {
      slot += contribution;
    }
  };

  using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

  for (NodeId id = output; id >= 0; --id) {
    const Eigen::VectorXd& g = adj[static_cast<std::size_t>(id)];
    if (g.size() == 0) continue;  // output does not depend on this node
    const Node& n = at(id);
    switch (n.op) {
      case Op::kConstant:
        break;
      case Op::kParam:
        grad.segment(n.offset, n.len) += g;
        break;
      case Op::kAdd:
        bump(n.a, g);
        bump(n.b, g);
        break;
      case Op::kSub:
        bump(n.a, g);
        bump(n.b, -g);
        break;
      case Op::kMul:
        bump(n.a, g.cwiseProduct(vals(n.b)));
        bump(n.b, g.cwiseProduct(vals(n.a)));
        break;
      case Op::kScale:
        bump(n.a, n.c * g);
        break;
      case Op::kMatVec: {
        const auto x = vals(n.b);
        Eigen::VectorXd gw(n.rows * n.cols);
        Eigen::Map<RowMat>(gw.data(), n.rows, n.cols) = g * x.transpose();
        bump(n.a, std::move(gw));
        bump(n.b, Eigen::Map<const RowMat>(vals(n.a).data(), n.rows, n.cols).transpose() * g);
        break;
      }
      case Op::kTanh:
        bump(n.a, g.cwiseProduct((1.0 - n.val.array().square()).matrix()));
        break;
      case Op::kRelu:
        bump(n.a, g.cwiseProduct((vals(n.a).array() > 0.0).cast<double>().matrix()));
        break;
      case Op::kLog:
        bump(n.a, g.cwiseQuotient(vals(n.a)));
        break;
      case Op::kExp:
        bump(n.a, g.cwiseProduct(n.val));
        break;
      case Op::kSum:
        bump(n.a, Eigen::VectorXd::Constant(vals(n.a).size(), g[0]));
        break;
      case Op::kDot:
        bump(n.a, g[0] * vals(n.b));
        bump(n.b, g[0] * vals(n.a));
        break;
      case Op::kLogSumExp: {
        const auto v = vals(n.a);
        bump(n.a, (g[0] * (v.array() - n.val[0]).exp()).matrix());
        break;
      }
      case Op::kSelect: {
        Eigen::VectorXd e = Eigen::VectorXd::Zero(vals(n.a).size());
        e[n.rows] = g[0];
        bump(n.a, std::move(e));
        break;
      }
    }
  }
}

double Tape::directional(NodeId output, const Eigen::VectorXd& tangent) const {
  const Node& out = at(output);
  if (vals(out).size() != 1) {
    throw ContractViolation("tape directional: output must be a scalar node");
  }
  if (!bound() || tangent.size() != params_->size()) {
    throw ContractViolation("tape directional: tangent length must match bound params");
  }

  using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  std::vector<Eigen::VectorXd> tan(static_cast<std::size_t>(output) + 1);

  // Param tangents view the caller's direction vector rather than copying it.
  auto tan_vals = [&](NodeId id) -> Eigen::Map<const Eigen::VectorXd> {
    const Node& n = at(id);
    if (n.op == Op::kParam) {
      return Eigen::Map<const Eigen::VectorXd>(tangent.data() + n.offset, n.len);
    }
    const Eigen::VectorXd& t = tan[static_cast<std::size_t>(id)];
    return Eigen::Map<const Eigen::VectorXd>(t.data(), t.size());
  };

  for (NodeId id = 0; id <= output; ++id) {
    const Node& n = at(id);
    if (n.op == Op::kParam) continue;
    Eigen::VectorXd& t = tan[static_cast<std::size_t>(id)];
    switch (n.op) {
      case Op::kParam:
        break;
      case Op::kConstant:
        t = Eigen::VectorXd::Zero(n.val.size());
        break;
      case Op::kAdd:
        t = tan_vals(n.a) + tan_vals(n.b);
        break;
      case Op::kSub:
        t = tan_vals(n.a) - tan_vals(n.b);
        break;
      case Op::kMul:
        t = tan_vals(n.a).cwiseProduct(vals(n.b)) + vals(n.a).cwiseProduct(tan_vals(n.b));
        break;
      case Op::kScale:
        t = n.c * tan_vals(n.a);
        break;
      case Op::kMatVec:
        t = Eigen::Map<const RowMat>(tan_vals(n.a).data(), n.rows, n.cols) * vals(n.b) +
            Eigen::Map<const RowMat>(vals(n.a).data(), n.rows, n.cols) * tan_vals(n.b);
        break;
      case Op::kTanh:
        t = tan_vals(n.a).cwiseProduct((1.0 - n.val.array().square()).matrix());
        break;
      case Op::kRelu:
        t = tan_vals(n.a).cwiseProduct((vals(n.a).array() > 0.0).cast<double>().matrix());
        break;
      case Op::kLog:
        t = tan_vals(n.a).cwiseQuotient(vals(n.a));
        break;
      case Op::kExp:
        t = tan_vals(n.a).cwiseProduct(n.val);
        break;
      case Op::kSum: {
        Eigen::VectorXd s(1);
        s[0] = tan_vals(n.a).sum();
        t = std::move(s);
        break;
      }
      case Op::kDot: {
        Eigen::VectorXd s(1);
        s[0] = tan_vals(n.a).dot(vals(n.b)) + vals(n.a).dot(tan_vals(n.b));
        t = std::move(s);
        break;
      }
      case Op::kLogSumExp: {
        const auto v = vals(n.a);
        Eigen::VectorXd s(1);
        s[0] = ((v.array() - n.val[0]).exp() * tan_vals(n.a).array()).sum();
        t = std::move(s);
        break;
      }
      case Op::kSelect: {
        Eigen::VectorXd s(1);
        s[0] = tan_vals(n.a)[n.rows];
        t = std::move(s);
        break;
      }
    }
  }
  return tan[static_cast<std::size_t>(output)][0];
}

}  // namespace polyopt::ad
