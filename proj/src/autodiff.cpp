#include "chain/autodiff.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "chain/errors.hpp"

namespace chain {

const Tensor& Var::value() const {
  if (!graph) throw GraphError("Var is not attached to a graph");
  return graph->value(*this);
}

// ---------------------------------------------------------------------------
// Graph

Var Graph::leaf(Tensor value, bool requires_grad) {
  nodes_.push_back({OpKind::leaf, {}, std::move(value), requires_grad, nullptr});
  return Var{this, nodes_.size() - 1};
}

Var Graph::constant(Tensor value) { return leaf(std::move(value), false); }

Var Graph::record(OpKind kind, std::vector<Var> inputs, Tensor value,
                  BackwardFn backward) {
  if (backward_done_) throw GraphError("graph is closed after backward()");
  Node n{kind, {}, std::move(value), false, nullptr};
  n.inputs.reserve(inputs.size());
  for (const Var& v : inputs) {
    if (v.graph != this) throw GraphError("operand belongs to another graph");
    n.inputs.push_back(v.id);
    n.requires_grad = n.requires_grad || nodes_[v.id].requires_grad;
  }
  if (n.requires_grad) n.backward = std::move(backward);
  nodes_.push_back(std::move(n));
  return Var{this, nodes_.size() - 1};
}

const Graph::Node& Graph::node(Var v) const {
  if (v.graph != this || v.id >= nodes_.size())
    throw GraphError("Var does not belong to this graph");
  return nodes_[v.id];
}

const Tensor& Graph::value(Var v) const { return node(v).value; }
OpKind Graph::kind(Var v) const { return node(v).kind; }
bool Graph::requires_grad(Var v) const { return node(v).requires_grad; }

void Graph::backward(Var root) {
  const Node& r = node(root);
  if (backward_done_) throw GraphError("backward() already called on this graph");
  if (r.value.size() != 1)
    throw GraphError("backward root must be scalar, got shape " +
                     shape_string(r.value.shape()));
  if (!r.requires_grad)
    throw GraphError("backward root does not depend on any leaf requiring grad");
  backward_done_ = true;

  grads_.assign(nodes_.size(), std::nullopt);
  grads_[root.id] = Tensor(r.value.shape(), 1.0);

  for (std::size_t i = root.id + 1; i-- > 0;) {
    if (!grads_[i]) continue;
    const Node& n = nodes_[i];
    if (!n.backward) continue;
    std::vector<Tensor> input_grads = n.backward(*grads_[i]);
    if (input_grads.size() != n.inputs.size())
      throw GraphError("backward rule returned wrong number of gradients");
    for (std::size_t k = 0; k < n.inputs.size(); ++k) {
      const std::size_t in = n.inputs[k];
      if (in >= i) throw GraphError("graph is not topologically ordered");
      if (!nodes_[in].requires_grad) continue;
      Tensor& g = input_grads[k];
      if (g.shape() != nodes_[in].value.shape())
        throw GraphError("gradient shape " + shape_string(g.shape()) +
                         " does not match input shape " +
                         shape_string(nodes_[in].value.shape()));
      if (!grads_[in]) {
        grads_[in] = std::move(g);
      } else {
        auto acc = grads_[in]->data();
        auto add = g.data();
        for (std::size_t j = 0; j < acc.size(); ++j) acc[j] += add[j];
      }
    }
  }
}

bool Graph::has_grad(Var v) const {
  node(v);
  return v.id < grads_.size() && grads_[v.id].has_value();
}

const Tensor& Graph::grad(Var v) const {
  if (!has_grad(v)) throw GraphError("no gradient recorded for node");
  return *grads_[v.id];
}

// ---------------------------------------------------------------------------
// Broadcasting

namespace {

std::vector<std::size_t> row_major_strides(const Shape& shape) {
  std::vector<std::size_t> strides(shape.size(), 1);
  for (std::size_t i = shape.size(); i-- > 1;)
    strides[i - 1] = strides[i] * shape[i];
  return strides;
}

// Strides into `operand` while iterating over `out`; zero along broadcast axes.
std::vector<std::size_t> broadcast_strides(const Shape& operand, const Shape& out) {
  if (operand.empty()) return std::vector<std::size_t>(out.size(), 0);
  auto strides = row_major_strides(operand);
  for (std::size_t i = 0; i < out.size(); ++i)
    if (operand[i] == 1 && out[i] != 1) strides[i] = 0;
  return strides;
}

// Calls f(out_index, a_index, b_index) for every element of `out`.
template <class F>
void for_each_broadcast(const Shape& out, const std::vector<std::size_t>& sa,
                        const std::vector<std::size_t>& sb, F&& f) {
  const std::size_t n = shape_size(out);
  const std::size_t rank = out.size();
  std::vector<std::size_t> idx(rank, 0);
  std::size_t ia = 0, ib = 0;
  for (std::size_t o = 0; o < n; ++o) {
    f(o, ia, ib);
    for (std::size_t ax = rank; ax-- > 0;) {
      ++idx[ax];
      ia += sa[ax];
      ib += sb[ax];
      if (idx[ax] < out[ax]) break;
      ia -= sa[ax] * out[ax];
      ib -= sb[ax] * out[ax];
      idx[ax] = 0;
    }
  }
}

}  // namespace

Shape broadcast_shape(const Shape& a, const Shape& b) {
  if (a.empty()) return b;
  if (b.empty()) return a;
  if (a.size() != b.size())
    throw DimensionError("cannot broadcast " + shape_string(a) + " with " +
                         shape_string(b));
  Shape out(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i] == b[i] || b[i] == 1) {
      out[i] = a[i];
    } else if (a[i] == 1) {
      out[i] = b[i];
    } else {
      throw DimensionError("cannot broadcast " + shape_string(a) + " with " +
                           shape_string(b));
    }
  }
  return out;
}

Tensor sum_to_shape(const Tensor& grad, const Shape& target) {
  if (grad.shape() == target) return grad;
  Tensor out(target, 0.0);
  if (target.empty()) {
    double s = 0.0;
    for (double v : grad.data()) s += v;
    out[0] = s;
    return out;
  }
  broadcast_shape(target, grad.shape());
  const auto st = broadcast_strides(target, grad.shape());
  auto g = grad.data();
  auto o = out.data();
  for_each_broadcast(grad.shape(), st, st,
                     [&](std::size_t i, std::size_t t, std::size_t) { o[t] += g[i]; });
  return out;
}

namespace {

// Elementwise binary op with broadcasting. `fwd(a, b)` gives the value;
// `bwd(g, a, b, &ga, &gb)` gives the local contributions at one element.
template <class Fwd, class Bwd>
Var binary(OpKind kind, Var a, Var b, Fwd fwd, Bwd bwd) {
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  const Shape out_shape = broadcast_shape(av.shape(), bv.shape());
  const auto sa = broadcast_strides(av.shape(), out_shape);
  const auto sb = broadcast_strides(bv.shape(), out_shape);
  Tensor out(out_shape);
  {
    auto o = out.data();
    auto x = av.data();
    auto y = bv.data();
    for_each_broadcast(out_shape, sa, sb, [&](std::size_t i, std::size_t ia, std::size_t ib) {
      o[i] = fwd(x[ia], y[ib]);
    });
  }
  Graph& g = *a.graph;
  return g.record(kind, {a, b}, std::move(out),
                  [av, bv, out_shape, sa, sb, bwd](const Tensor& gout) {
                    Tensor ga(out_shape), gb(out_shape);
                    auto x = av.data();
                    auto y = bv.data();
                    auto go = gout.data();
                    auto pa = ga.data();
                    auto pb = gb.data();
                    for_each_broadcast(out_shape, sa, sb,
                                       [&](std::size_t i, std::size_t ia, std::size_t ib) {
                                         bwd(go[i], x[ia], y[ib], pa[i], pb[i]);
                                       });
                    return std::vector<Tensor>{sum_to_shape(ga, av.shape()),
                                               sum_to_shape(gb, bv.shape())};
                  });
}

template <class Fwd, class Bwd>
Var unary(OpKind kind, Var x, Fwd fwd, Bwd bwd) {
  const Tensor& xv = x.value();
  Tensor out(xv.shape());
  for (std::size_t i = 0; i < xv.size(); ++i) out[i] = fwd(xv[i]);
  return x.graph->record(kind, {x}, std::move(out), [xv, bwd](const Tensor& gout) {
    Tensor gx(xv.shape());
    for (std::size_t i = 0; i < xv.size(); ++i) gx[i] = bwd(gout[i], xv[i]);
    return std::vector<Tensor>{std::move(gx)};
  });
}

double sign_of(double v) { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); }

}  // namespace

// ---------------------------------------------------------------------------
// Primitives

Tensor matmul(const Tensor& a, const Tensor& b) {
  if (a.rank() != 2 || b.rank() != 2 || a.dim(1) != b.dim(0))
    throw DimensionError("matmul shape mismatch: " + shape_string(a.shape()) +
                         " x " + shape_string(b.shape()));
  const std::size_t n = a.dim(0), k = a.dim(1), m = b.dim(1);
  Tensor out(Shape{n, m}, 0.0);
  const double* pa = a.data().data();
  const double* pb = b.data().data();
  double* po = out.data().data();
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t p = 0; p < k; ++p) {
      const double aip = pa[i * k + p];
      const double* brow = pb + p * m;
      double* orow = po + i * m;
      for (std::size_t j = 0; j < m; ++j) orow[j] += aip * brow[j];
    }
  return out;
}

Tensor transpose(const Tensor& a) {
  if (a.rank() != 2) throw DimensionError("transpose expects a matrix");
  Tensor out(Shape{a.dim(1), a.dim(0)});
  for (std::size_t i = 0; i < a.dim(0); ++i)
    for (std::size_t j = 0; j < a.dim(1); ++j) out.at(j, i) = a.at(i, j);
  return out;
}

Var matmul(Var a, Var w) {
  Tensor av = a.value();
  Tensor wv = w.value();
  Tensor out = matmul(av, wv);
  return a.graph->record(OpKind::matmul, {a, w}, std::move(out),
                         [av, wv](const Tensor& g) {
                           return std::vector<Tensor>{matmul(g, transpose(wv)),
                                                      matmul(transpose(av), g)};
                         });
}

Var reduce_mean(Var x, const std::vector<std::size_t>& axes, bool keepdims) {
  const Tensor& xv = x.value();
  const Shape& in = xv.shape();
  if (axes.empty()) throw DomainError("reduce_mean over an empty axis set");
  std::vector<bool> reduced(in.size(), false);
  for (auto ax : axes) {
    if (ax >= in.size())
      throw DimensionError("reduce_mean axis " + std::to_string(ax) +
                           " invalid for shape " + shape_string(in));
    if (reduced[ax]) throw DimensionError("reduce_mean axis repeated");
    reduced[ax] = true;
  }
  Shape keep = in;
  Shape dropped;
  std::size_t count = 1;
  for (std::size_t i = 0; i < in.size(); ++i) {
    if (reduced[i]) {
      count *= in[i];
      keep[i] = 1;
    } else {
      dropped.push_back(in[i]);
    }
  }
  const auto so = broadcast_strides(keep, in);
  Tensor out(keepdims ? keep : dropped, 0.0);
  auto o = out.data();
  auto xd = xv.data();
  for_each_broadcast(in, so, so,
                     [&](std::size_t i, std::size_t t, std::size_t) { o[t] += xd[i]; });
  const double inv = 1.0 / static_cast<double>(count);
  for (double& v : o) v *= inv;

  return x.graph->record(OpKind::reduce_mean, {x}, std::move(out),
                         [in, so, inv](const Tensor& g) {
                           Tensor gx(in);
                           auto gi = gx.data();
                           auto go = g.data();
                           for_each_broadcast(in, so, so,
                                              [&](std::size_t i, std::size_t t, std::size_t) {
                                                gi[i] = go[t] * inv;
                                              });
                           return std::vector<Tensor>{std::move(gx)};
                         });
}

Var sum(Var x) {
  const Tensor& xv = x.value();
  double s = 0.0;
  for (double v : xv.data()) s += v;
  Shape in = xv.shape();
  return x.graph->record(OpKind::sum, {x}, Tensor::scalar(s), [in](const Tensor& g) {
    return std::vector<Tensor>{Tensor(in, g.item())};
  });
}

Var mean(Var x) {
  std::vector<std::size_t> axes(x.shape().size());
  for (std::size_t i = 0; i < axes.size(); ++i) axes[i] = i;
  if (axes.empty()) return x;
  return reduce_mean(x, axes, false);
}

Var add(Var a, Var b) {
  return binary(
      OpKind::add, a, b, [](double x, double y) { return x + y; },
      [](double g, double, double, double& ga, double& gb) {
        ga = g;
        gb = g;
      });
}

Var sub(Var a, Var b) {
  return binary(
      OpKind::sub, a, b, [](double x, double y) { return x - y; },
      [](double g, double, double, double& ga, double& gb) {
        ga = g;
        gb = -g;
      });
}

Var mul(Var a, Var b) {
  return binary(
      OpKind::mul, a, b, [](double x, double y) { return x * y; },
      [](double g, double x, double y, double& ga, double& gb) {
        ga = g * y;
        gb = g * x;
      });
}

Var div(Var a, Var b) {
  for (double v : b.value().data())
    if (v == 0.0) throw DomainError("division by zero");
  return binary(
      OpKind::div, a, b, [](double x, double y) { return x / y; },
      [](double g, double x, double y, double& ga, double& gb) {
        ga = g / y;
        gb = -g * x / (y * y);
      });
}

Var square(Var x) {
  return unary(
      OpKind::square, x, [](double v) { return v * v; },
      [](double g, double v) { return 2.0 * v * g; });
}

Var sqrt(Var x) {
  for (double v : x.value().data())
    if (v < 0.0) throw DomainError("sqrt of negative value");
  return unary(
      OpKind::sqrt, x, [](double v) { return std::sqrt(v); },
      [](double g, double v) { return g / (2.0 * std::sqrt(v)); });
}

Var abs(Var x) {
  return unary(
      OpKind::abs, x, [](double v) { return std::fabs(v); },
      [](double g, double v) { return g * sign_of(v); });
}

Var sign(Var x) {
  return unary(
      OpKind::sign, x, [](double v) { return sign_of(v); },
      [](double, double) { return 0.0; });
}

Var leaky_relu(Var x, double slope) {
  return unary(
      OpKind::leaky_relu, x,
      [slope](double v) { return v > 0.0 ? v : slope * v; },
      [slope](double g, double v) { return v > 0.0 ? g : slope * g; });
}

Var relu(Var x) { return leaky_relu(x, 0.0); }

Var min_all(Var x) {
  const Tensor& xv = x.value();
  const auto it = std::min_element(xv.data().begin(), xv.data().end());
  const std::size_t arg = static_cast<std::size_t>(it - xv.data().begin());
  Shape in = xv.shape();
  return x.graph->record(OpKind::min_all, {x}, Tensor::scalar(*it),
                         [in, arg](const Tensor& g) {
                           Tensor gx(in, 0.0);
                           gx[arg] = g.item();
                           return std::vector<Tensor>{std::move(gx)};
                         });
}

Var detach(Var x) { return x.graph->constant(x.value()); }

Var scale(Var x, double factor) {
  return unary(
      OpKind::scale, x, [factor](double v) { return v * factor; },
      [factor](double g, double) { return g * factor; });
}

Var add_scalar(Var x, double offset) {
  return unary(
      OpKind::add_scalar, x, [offset](double v) { return v + offset; },
      [](double g, double) { return g; });
}

Var reshape(Var x, Shape shape) {
  Shape in = x.shape();
  return x.graph->record(OpKind::reshape, {x}, x.value().reshaped(std::move(shape)),
                         [in](const Tensor& g) {
                           return std::vector<Tensor>{g.reshaped(in)};
                         });
}

}  // namespace chain
