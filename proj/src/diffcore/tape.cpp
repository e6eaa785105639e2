#include "gfn/diffcore/tape.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "gfn/error.hpp"
#include "gfn/kernels/kernels.hpp"

namespace gfn {
namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

[[noreturn]] void shape_fail(const char* primitive, const std::string& detail) {
  throw ShapeError(std::string(primitive) + ": " + detail);
}

}  // namespace

Feed& Feed::set(NodeId node, Tensor value) {
  tensors_.emplace_back(node, std::move(value));
  return *this;
}

Feed& Feed::set_indices(NodeId node, std::vector<std::size_t> indices) {
  indices_.emplace_back(node, std::move(indices));
  return *this;
}

const char* activation_name(Activation kind) noexcept {
  switch (kind) {
    case Activation::Identity:
      return "identity";
    case Activation::Relu:
      return "relu";
    case Activation::LeakyRelu:
      return "leaky_relu";
    case Activation::Tanh:
      return "tanh";
  }
  return "unknown";
}

Activation parse_activation(const std::string& name) {
  if (name == "identity") return Activation::Identity;
  if (name == "relu") return Activation::Relu;
  if (name == "leaky_relu") return Activation::LeakyRelu;
  if (name == "tanh") return Activation::Tanh;
  throw ConfigError("unknown activation '" + name + "'");
}

NodeId Tape::push(Node n) {
  for (NodeId in : n.inputs) {
    if (in.index >= nodes_.size()) throw ContractViolation("tape: input node does not exist");
    n.requires_grad = n.requires_grad || nodes_[in.index].requires_grad;
  }
  nodes_.push_back(std::move(n));
  forward_done_ = false;
  return NodeId{nodes_.size() - 1};
}

const Tape::Node& Tape::node(NodeId id) const {
  if (id.index >= nodes_.size()) throw ContractViolation("tape: unknown node");
  return nodes_[id.index];
}

NodeId Tape::input(std::string name) { return push(Node{.op = Op::Input, .name = std::move(name)}); }

NodeId Tape::index_input(std::string name) {
  return push(Node{.op = Op::IndexInput, .name = std::move(name)});
}

NodeId Tape::constant(Tensor value) {
  Node n{.op = Op::Constant, .name = "constant"};
  n.value = std::move(value);
  return push(std::move(n));
}

NodeId Tape::index_constant(std::vector<std::size_t> indices) {
  Node n{.op = Op::IndexConstant, .name = "index_constant"};
  n.indices = std::move(indices);
  return push(std::move(n));
}

NodeId Tape::parameter(Parameter& p) {
  return push(Node{.op = Op::Param, .name = p.name, .param = &p, .requires_grad = true});
}

NodeId Tape::frozen(const Parameter& p) {
  return push(Node{.op = Op::Param, .name = p.name, .frozen = &p});
}

NodeId Tape::affine(NodeId x, NodeId w, NodeId b) {
  return push(Node{.op = Op::Affine, .name = "affine", .inputs = {x, w, b}});
}

NodeId Tape::activation(NodeId x, Activation kind, double leaky_slope) {
  return push(Node{.op = Op::Act,
                   .name = activation_name(kind),
                   .inputs = {x},
                   .activation = kind,
                   .slope = leaky_slope});
}

NodeId Tape::masked_log_softmax(NodeId logits, NodeId mask) {
  return push(Node{.op = Op::LogSoftmax, .name = "masked_log_softmax", .inputs = {logits, mask}});
}

NodeId Tape::gather(NodeId x, NodeId indices) {
  return push(Node{.op = Op::Gather, .name = "gather", .inputs = {x, indices}});
}

NodeId Tape::gather_rows(NodeId table, NodeId indices) {
  return push(Node{.op = Op::GatherRows, .name = "gather_rows", .inputs = {table, indices}});
}

NodeId Tape::slice_cols(NodeId x, std::size_t begin, std::size_t end) {
  if (begin >= end) throw ShapeError("slice_cols: empty column range");
  return push(Node{.op = Op::SliceCols, .name = "slice_cols", .inputs = {x}, .begin = begin, .end = end});
}

NodeId Tape::sum(NodeId x) { return push(Node{.op = Op::Sum, .name = "sum", .inputs = {x}}); }

NodeId Tape::square(NodeId x) { return push(Node{.op = Op::Square, .name = "square", .inputs = {x}}); }

NodeId Tape::weighted_sum(std::vector<std::pair<NodeId, double>> terms) {
  if (terms.empty()) throw ShapeError("weighted_sum: no terms");
  Node n{.op = Op::WeightedSum, .name = "weighted_sum"};
  for (auto& [id, w] : terms) {
    n.inputs.push_back(id);
    n.weights.push_back(w);
  }
  return push(std::move(n));
}

void Tape::forward(Feed feed) {
  for (auto& n : nodes_) {
    if (n.op == Op::Input) n.value = Tensor();
    if (n.op == Op::IndexInput) n.indices.clear();
  }
  std::vector<char> bound(nodes_.size(), 0);
  for (auto& [id, value] : feed.tensors_) {
    if (id.index >= nodes_.size() || nodes_[id.index].op != Op::Input)
      throw ContractViolation("forward: feed targets a node that is not a tensor input");
    nodes_[id.index].value = std::move(value);
    bound[id.index] = 1;
  }
  for (auto& [id, idx] : feed.indices_) {
    if (id.index >= nodes_.size() || nodes_[id.index].op != Op::IndexInput)
      throw ContractViolation("forward: feed targets a node that is not an index input");
    nodes_[id.index].indices = std::move(idx);
    bound[id.index] = 1;
  }
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    auto& n = nodes_[i];
    if ((n.op == Op::Input || n.op == Op::IndexInput) && !bound[i])
      throw ContractViolation("forward: input '" + n.name + "' was not fed");
    evaluate(n);
  }
  forward_done_ = true;
}

void Tape::evaluate(Node& n) {
  const auto in = [&](std::size_t k) -> const Node& { return nodes_[n.inputs[k].index]; };
  const auto& kt = kernels::active();
  switch (n.op) {
    case Op::Input:
    case Op::IndexInput:
    case Op::Constant:
    case Op::IndexConstant:
      return;
    case Op::Param:
      n.value = n.param ? n.param->value : n.frozen->value;
      return;
    case Op::Affine: {
      const Tensor& x = in(0).value;
      const Tensor& w = in(1).value;
      const Tensor& b = in(2).value;
      if (x.rank() != 2 || w.rank() != 2 || b.rank() != 1)
        shape_fail("affine", "expects x[N x K], w[M x K], b[M]; got " + shape_string(x.shape()) + ", " +
                                 shape_string(w.shape()) + ", " + shape_string(b.shape()));
      const std::size_t rows = x.shape()[0], k = x.shape()[1], m = w.shape()[0];
      if (w.shape()[1] != k || b.shape()[0] != m)
        shape_fail("affine", "incompatible shapes " + shape_string(x.shape()) + ", " +
                                 shape_string(w.shape()) + ", " + shape_string(b.shape()));
      n.value.reset({rows, m});
      kt.gemm_nt(x.raw(), w.raw(), n.value.raw(), rows, k, m);
      for (std::size_t r = 0; r < rows; ++r) {
        double* yr = n.value.raw() + r * m;
        for (std::size_t o = 0; o < m; ++o) yr[o] += b[o];
      }
      return;
    }
    case Op::Act: {
      const Tensor& x = in(0).value;
      n.value = x;
      auto y = n.value.data();
      switch (n.activation) {
        case Activation::Identity:
          break;
        case Activation::Relu:
          for (double& v : y) v = v > 0 ? v : 0.0;
          break;
        case Activation::LeakyRelu:
          for (double& v : y) v = v > 0 ? v : n.slope * v;
          break;
        case Activation::Tanh:
          for (double& v : y) v = std::tanh(v);
          break;
      }
      return;
    }
    case Op::LogSoftmax: {
      const Tensor& x = in(0).value;
      const Tensor& mask = in(1).value;
      if (x.rank() != 2 || x.shape() != mask.shape())
        shape_fail("masked_log_softmax",
                   "logits " + shape_string(x.shape()) + " vs mask " + shape_string(mask.shape()));
      n.value.reset(x.shape(), kNegInf);
      const std::size_t cols = x.cols();
      for (std::size_t r = 0; r < x.rows(); ++r) {
        double mx = kNegInf;
        for (std::size_t c = 0; c < cols; ++c) {
          if (mask.at(r, c) != 0.0) mx = std::max(mx, x.at(r, c));
        }
        if (mx == kNegInf) throw ContractViolation("masked_log_softmax: row " + std::to_string(r) + " has no valid entry");
        double acc = 0.0;
        for (std::size_t c = 0; c < cols; ++c) {
          if (mask.at(r, c) != 0.0) acc += std::exp(x.at(r, c) - mx);
        }
        const double lse = mx + std::log(acc);
        for (std::size_t c = 0; c < cols; ++c) {
          if (mask.at(r, c) != 0.0) n.value.at(r, c) = x.at(r, c) - lse;
        }
      }
      return;
    }
    case Op::Gather: {
      const Tensor& x = in(0).value;
      const auto& idx = in(1).indices;
      n.value.reset({idx.size()});
      for (std::size_t i = 0; i < idx.size(); ++i) {
        if (idx[i] >= x.size())
          shape_fail("gather", "index " + std::to_string(idx[i]) + " out of range for " + shape_string(x.shape()));
        n.value[i] = x[idx[i]];
      }
      return;
    }
    case Op::GatherRows: {
      const Tensor& t = in(0).value;
      const auto& idx = in(1).indices;
      const std::size_t cols = t.rank() == 1 ? 1 : t.cols();
      const std::size_t rows = t.rank() == 1 ? t.size() : t.rows();
      n.value.reset({idx.size(), cols});
      for (std::size_t i = 0; i < idx.size(); ++i) {
        if (idx[i] >= rows)
          shape_fail("gather_rows", "row " + std::to_string(idx[i]) + " out of range for " + shape_string(t.shape()));
        std::copy_n(t.raw() + idx[i] * cols, cols, n.value.raw() + i * cols);
      }
      return;
    }
    case Op::SliceCols: {
      const Tensor& x = in(0).value;
      if (x.rank() != 2 || n.end > x.cols())
        shape_fail("slice_cols", "range [" + std::to_string(n.begin) + "," + std::to_string(n.end) +
                                     ") outside " + shape_string(x.shape()));
      const std::size_t w = n.end - n.begin;
      n.value.reset({x.rows(), w});
      for (std::size_t r = 0; r < x.rows(); ++r) std::copy_n(x.raw() + r * x.cols() + n.begin, w, n.value.raw() + r * w);
      return;
    }
    case Op::Sum: {
      double acc = 0.0;
      for (double v : in(0).value.data()) acc += v;
      n.value = Tensor::scalar(acc);
      return;
    }
    case Op::Square: {
      n.value = in(0).value;
      for (double& v : n.value.data()) v *= v;
      return;
    }
    case Op::WeightedSum: {
      const Tensor& first = in(0).value;
      n.value.reset(first.shape(), 0.0);
      for (std::size_t k = 0; k < n.inputs.size(); ++k) {
        const Tensor& x = in(k).value;
        if (x.shape() != first.shape())
          shape_fail("weighted_sum", "term " + std::to_string(k) + " has shape " + shape_string(x.shape()) +
                                         ", expected " + shape_string(first.shape()));
        kt.axpy(n.weights[k], x.raw(), n.value.raw(), x.size());
      }
      return;
    }
  }
}

const Tensor& Tape::value(NodeId id) const {
  if (!forward_done_) throw ContractViolation("tape: value requested before forward");
  return node(id).value;
}

void Tape::backward(NodeId output, const Tensor& seed) {
  const Seed s{output, &seed};
  backward(std::span<const Seed>(&s, 1));
}

void Tape::backward(std::span<const Seed> seeds) {
  if (!forward_done_) throw ContractViolation("tape: backward called before forward");
  std::vector<Tensor> grads(nodes_.size());
  std::vector<char> reached(nodes_.size(), 0);
  for (const auto& s : seeds) {
    const Node& n = node(s.node);
    if (s.grad->shape() != n.value.shape())
      throw ShapeError("backward: seed " + shape_string(s.grad->shape()) + " does not match node '" + n.name +
                       "' of shape " + shape_string(n.value.shape()));
    if (!n.requires_grad) continue;
    auto& g = grads[s.node.index];
    if (!reached[s.node.index]) {
      g = *s.grad;
      reached[s.node.index] = 1;
    } else {
      kernels::active().axpy(1.0, s.grad->raw(), g.raw(), g.size());
    }
  }
  for (std::size_t i = nodes_.size(); i-- > 0;) {
    if (!reached[i]) continue;
    propagate(nodes_[i], grads[i], grads, reached);
    grads[i] = Tensor();
  }
}

void Tape::propagate(const Node& n, const Tensor& g, std::vector<Tensor>& grads, std::vector<char>& reached) {
  const auto& kt = kernels::active();
  // Returns the gradient buffer of input k, or nullptr if it needs none.
  const auto target = [&](std::size_t k) -> Tensor* {
    const std::size_t idx = n.inputs[k].index;
    if (!nodes_[idx].requires_grad) return nullptr;
    if (!reached[idx]) {
      grads[idx].reset(nodes_[idx].value.shape(), 0.0);
      reached[idx] = 1;
    }
    return &grads[idx];
  };
  const auto in = [&](std::size_t k) -> const Tensor& { return nodes_[n.inputs[k].index].value; };

  switch (n.op) {
    case Op::Input:
    case Op::IndexInput:
    case Op::Constant:
    case Op::IndexConstant:
      return;
    case Op::Param: {
      Parameter& p = *n.param;
      if (p.grad.shape() != p.value.shape()) p.zero_grad();
      kt.axpy(1.0, g.raw(), p.grad.raw(), g.size());
      return;
    }
    case Op::Affine: {
      const Tensor& x = in(0);
      const Tensor& w = in(1);
      const std::size_t rows = x.shape()[0], k = x.shape()[1], m = w.shape()[0];
      if (Tensor* dx = target(0)) kt.gemm_nn_acc(g.raw(), w.raw(), dx->raw(), rows, m, k);
      if (Tensor* dw = target(1)) kt.gemm_tn_acc(g.raw(), x.raw(), dw->raw(), rows, m, k);
      if (Tensor* db = target(2)) {
        for (std::size_t r = 0; r < rows; ++r) kt.axpy(1.0, g.raw() + r * m, db->raw(), m);
      }
      return;
    }
    case Op::Act: {
      Tensor* dx = target(0);
      if (!dx) return;
      const Tensor& x = in(0);
      const Tensor& y = n.value;
      for (std::size_t i = 0; i < g.size(); ++i) {
        double d = 1.0;
        switch (n.activation) {
          case Activation::Identity:
            break;
          case Activation::Relu:
            d = x[i] > 0 ? 1.0 : 0.0;
            break;
          case Activation::LeakyRelu:
            d = x[i] > 0 ? 1.0 : n.slope;
            break;
          case Activation::Tanh:
            d = 1.0 - y[i] * y[i];
            break;
        }
        (*dx)[i] += g[i] * d;
      }
      return;
    }
    case Op::LogSoftmax: {
      Tensor* dx = target(0);
      if (!dx) return;
      const Tensor& mask = in(1);
      const Tensor& y = n.value;
      for (std::size_t r = 0; r < y.rows(); ++r) {
        double total = 0.0;
        for (std::size_t c = 0; c < y.cols(); ++c) {
          if (mask.at(r, c) != 0.0) total += g.at(r, c);
        }
        for (std::size_t c = 0; c < y.cols(); ++c) {
          if (mask.at(r, c) != 0.0) dx->at(r, c) += g.at(r, c) - std::exp(y.at(r, c)) * total;
        }
      }
      return;
    }
    case Op::Gather: {
      Tensor* dx = target(0);
      if (!dx) return;
      const auto& idx = nodes_[n.inputs[1].index].indices;
      for (std::size_t i = 0; i < idx.size(); ++i) (*dx)[idx[i]] += g[i];
      return;
    }
    case Op::GatherRows: {
      Tensor* dt = target(0);
      if (!dt) return;
      const auto& idx = nodes_[n.inputs[1].index].indices;
      const std::size_t cols = g.cols();
      for (std::size_t i = 0; i < idx.size(); ++i) kt.axpy(1.0, g.raw() + i * cols, dt->raw() + idx[i] * cols, cols);
      return;
    }
    case Op::SliceCols: {
      Tensor* dx = target(0);
      if (!dx) return;
      const std::size_t w = n.end - n.begin;
      for (std::size_t r = 0; r < g.rows(); ++r) kt.axpy(1.0, g.raw() + r * w, dx->raw() + r * dx->cols() + n.begin, w);
      return;
    }
    case Op::Sum: {
      Tensor* dx = target(0);
      if (!dx) return;
      const double s = g.item();
      for (double& v : dx->data()) v += s;
      return;
    }
    case Op::Square: {
      Tensor* dx = target(0);
      if (!dx) return;
      const Tensor& x = in(0);
      for (std::size_t i = 0; i < g.size(); ++i) (*dx)[i] += 2.0 * x[i] * g[i];
      return;
    }
    case Op::WeightedSum: {
      for (std::size_t k = 0; k < n.inputs.size(); ++k) {
        if (Tensor* dx = target(k)) kt.axpy(n.weights[k], g.raw(), dx->raw(), g.size());
      }
      return;
    }
  }
}

}  // namespace gfn
