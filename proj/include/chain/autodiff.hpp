#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <vector>

#include "chain/tensor.hpp"

namespace chain {

class Graph;

enum class OpKind {
  leaf,
  constant,
  matmul,
  reduce_mean,
  sum,
  add,
  sub,
  mul,
  div,
  square,
  sqrt,
  abs,
  sign,
  leaky_relu,
  min_all,
  detach,
  scale,
  add_scalar,
  reshape,
  custom,
};

/// Handle to a node of a Graph. Cheap to copy; valid while the graph lives.
struct Var {
  Graph* graph = nullptr;
  std::size_t id = 0;

  const Tensor& value() const;
  const Shape& shape() const { return value().shape(); }
};

/// Define-by-run tape. Nodes are appended in creation order, so every node's
/// inputs precede it and the node list is already topologically sorted.
///
/// A graph supports exactly one backward pass; a second call throws.
class Graph {
 public:
  /// Maps the gradient of a node's output to one gradient per input (same
  /// order as the inputs; entries for inputs without requires_grad are
  /// ignored).
  using BackwardFn = std::function<std::vector<Tensor>(const Tensor& grad_out)>;

  Graph() = default;
  Graph(const Graph&) = delete;
  Graph& operator=(const Graph&) = delete;

  Var leaf(Tensor value, bool requires_grad = true);
  Var constant(Tensor value);

  // Appends an operation node. requires_grad is inherited from the inputs.
  Var record(OpKind kind, std::vector<Var> inputs, Tensor value,
             BackwardFn backward);

  const Tensor& value(Var v) const;
  OpKind kind(Var v) const;
  bool requires_grad(Var v) const;
  std::size_t size() const noexcept { return nodes_.size(); }

  // Reverse-mode accumulation from a scalar root.
  void backward(Var root);
  bool backward_done() const noexcept { return backward_done_; }

  bool has_grad(Var v) const;
  const Tensor& grad(Var v) const;

 private:
  struct Node {
    OpKind kind;
    std::vector<std::size_t> inputs;
    Tensor value;
    bool requires_grad;
    BackwardFn backward;
  };

  const Node& node(Var v) const;

  std::vector<Node> nodes_;
  std::vector<std::optional<Tensor>> grads_;
  bool backward_done_ = false;
};

// Broadcasting helpers shared by the primitives. Operands broadcast when
// either is rank 0, or when ranks agree and every extent pair is equal or
// contains a 1.
Shape broadcast_shape(const Shape& a, const Shape& b);
Tensor sum_to_shape(const Tensor& grad, const Shape& target);

// Primitive set.
Var matmul(Var a, Var w);
Var reduce_mean(Var x, const std::vector<std::size_t>& axes, bool keepdims);
Var sum(Var x);
Var add(Var a, Var b);
Var sub(Var a, Var b);
Var mul(Var a, Var b);
Var div(Var a, Var b);
Var square(Var x);
Var sqrt(Var x);
Var abs(Var x);
Var sign(Var x);
Var leaky_relu(Var x, double slope);
Var relu(Var x);
// Minimum over all entries as a rank-0 tensor (broadcasts against anything).
// The gradient flows to the lowest-index minimiser.
Var min_all(Var x);
Var detach(Var x);
Var scale(Var x, double factor);
Var add_scalar(Var x, double offset);
Var reshape(Var x, Shape shape);
Var mean(Var x);

inline Var operator+(Var a, Var b) { return add(a, b); }
inline Var operator-(Var a, Var b) { return sub(a, b); }
inline Var operator*(Var a, Var b) { return mul(a, b); }
inline Var operator/(Var a, Var b) { return div(a, b); }
inline Var operator*(Var a, double s) { return scale(a, s); }
inline Var operator*(double s, Var a) { return scale(a, s); }
inline Var operator+(Var a, double s) { return add_scalar(a, s); }
inline Var operator-(Var a) { return scale(a, -1.0); }

// Plain tensor versions of the matrix product, used outside the tape.
Tensor matmul(const Tensor& a, const Tensor& b);
Tensor transpose(const Tensor& a);

}  // namespace chain
