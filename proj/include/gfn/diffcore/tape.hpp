#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "gfn/diffcore/tensor.hpp"

namespace gfn {

// A learnable tensor. Gradients accumulate into `grad` across backward calls
// until zeroed. `group` selects the optimizer learning-rate group.
struct Parameter {
  std::string name;
  Tensor value;
  Tensor grad;
  int group = 0;

  void zero_grad() { grad.reset(value.shape(), 0.0); }
};

struct NodeId {
  std::size_t index = 0;
  friend bool operator==(NodeId, NodeId) = default;
};

enum class Activation { Identity, Relu, LeakyRelu, Tanh };

// Values bound to a tape's placeholders for one forward pass.
class Feed {
 public:
  Feed& set(NodeId node, Tensor value);
  Feed& set_indices(NodeId node, std::vector<std::size_t> indices);

 private:
  friend class Tape;
  std::vector<std::pair<NodeId, Tensor>> tensors_;
  std::vector<std::pair<NodeId, std::vector<std::size_t>>> indices_;
};

// Reverse-mode autodiff over a recorded program of primitives.
//
// Building the tape records nodes in topological order (inputs always precede
// the nodes that consume them). `forward` evaluates every node and keeps the
// intermediates; `backward` then walks the nodes once in reverse order and
// accumulates into the gradients of the referenced Parameters. A tape is not
// thread-safe; concurrent evaluations each use their own tape.
class Tape {
 public:
  NodeId input(std::string name);
  NodeId index_input(std::string name);
  NodeId constant(Tensor value);
  NodeId index_constant(std::vector<std::size_t> indices);
  // The parameter must outlive the tape. Gradients flow into `p.grad`.
  NodeId parameter(Parameter& p);
  // Reads the parameter's value; no gradient is recorded for it.
  NodeId frozen(const Parameter& p);

  // y[N x M] = x[N x K] w[M x K]^T + b[M]
  NodeId affine(NodeId x, NodeId w, NodeId b);
  NodeId activation(NodeId x, Activation kind, double leaky_slope = 0.01);
  // Row-wise log-softmax over entries where mask[r][c] != 0; masked entries are -inf.
  NodeId masked_log_softmax(NodeId logits, NodeId mask);
  // Flat gather: y[i] = x.data()[indices[i]]
  NodeId gather(NodeId x, NodeId indices);
  // y[i, :] = table[indices[i], :]
  NodeId gather_rows(NodeId table, NodeId indices);
  NodeId slice_cols(NodeId x, std::size_t begin, std::size_t end);
  NodeId sum(NodeId x);
  NodeId square(NodeId x);
  // y = sum_i w_i * x_i over same-shaped inputs.
  NodeId weighted_sum(std::vector<std::pair<NodeId, double>> terms);

  void forward(Feed feed);
  bool has_forward() const noexcept { return forward_done_; }
  const Tensor& value(NodeId node) const;
  std::size_t node_count() const noexcept { return nodes_.size(); }

  struct Seed {
    NodeId node;
    const Tensor* grad;
  };
  void backward(NodeId output, const Tensor& seed);
  void backward(std::span<const Seed> seeds);

 private:
  enum class Op {
    Input,
    IndexInput,
    Constant,
    IndexConstant,
    Param,
    Affine,
    Act,
    LogSoftmax,
    Gather,
    GatherRows,
    SliceCols,
    Sum,
    Square,
    WeightedSum,
  };

  struct Node {
    Op op;
    std::string name;
    std::vector<NodeId> inputs;
    std::vector<double> weights;
    Parameter* param = nullptr;
    const Parameter* frozen = nullptr;
    Activation activation = Activation::Identity;
    double slope = 0.0;
    std::size_t begin = 0;
    std::size_t end = 0;
    bool requires_grad = false;
    Tensor value;
    std::vector<std::size_t> indices;
  };

  NodeId push(Node node);
  const Node& node(NodeId id) const;
  void evaluate(Node& node);
  void propagate(const Node& node, const Tensor& grad, std::vector<Tensor>& grads,
                 std::vector<char>& reached);

  std::vector<Node> nodes_;
  bool forward_done_ = false;
};

const char* activation_name(Activation kind) noexcept;
Activation parse_activation(const std::string& name);

}  // namespace gfn
