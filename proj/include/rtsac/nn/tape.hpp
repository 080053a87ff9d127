#pragma once

#include <functional>
#include <initializer_list>
#include <memory>
#include <vector>

#include "rtsac/nn/param_set.hpp"

namespace rtsac::nn {

// Valid (unpadded) 2-D convolution over images stored one per row in HWC order.
struct ConvGeometry {
  int in_h = 0;
  int in_w = 0;
  int in_c = 0;
  int kernel = 3;
  int stride = 1;
  int out_c = 0;

  int out_h() const noexcept { return (in_h - kernel) / stride + 1; }
  int out_w() const noexcept { return (in_w - kernel) / stride + 1; }
  int patch_size() const noexcept { return kernel * kernel * in_c; }
};

// Records a computation over matrices and replays it backwards. A Tape is
// single-use: build the graph, call backward() once on a 1x1 node, read grads.
class Tape {
 public:
  struct Var {
    int id = -1;
  };

  Var constant(Matrix value);
  // Constant leaf that refers to `value` without copying; `value` must
  // outlive the tape.
  Var borrow(const Matrix& value);
  // Leaf whose gradient is collected into `gradients(params)`. The tensor is
  // referenced, not copied.
  Var parameter(const ParamSet& params, std::size_t index);

  const Matrix& value(Var v) const {
    const Node& n = nodes_[v.id];
    return n.ref ? *n.ref : n.value;
  }
  // Zero matrix of matching shape when nothing flowed into `v`.
  Matrix grad(Var v) const;
  bool requires_grad(Var v) const { return nodes_[v.id].requires_grad; }

  Var matmul(Var a, Var b);
  Var add_bias(Var x, Var bias);
  Var add(Var a, Var b);
  Var sub(Var a, Var b);
  Var mul(Var a, Var b);
  Var scale(Var x, double factor);
  Var add_scalar(Var x, double c);
  // x (any shape) times a 1x1 node.
  Var mul_scalar(Var x, Var s);
  Var relu(Var x);
  Var tanh(Var x);
  Var exp(Var x);
  Var square(Var x);
  Var softplus(Var x);
  // Gradient passes only where lo < x < hi.
  Var clamp(Var x, double lo, double hi);
  // Element-wise minimum; ties route the gradient to `a`.
  Var min(Var a, Var b);
  Var concat_cols(std::initializer_list<Var> parts);
  Var slice_cols(Var x, int start, int count);
  Var row_sum(Var x);
  Var mean(Var x);
  Var conv2d(Var x, Var weight, Var bias, const ConvGeometry& geometry);
  Var stop_gradient(Var x) { return constant(value(x)); }

  // Throws ErrorKind::Usage unless `loss` is 1x1.
  void backward(Var loss);

  // One tensor per entry of `params`, zero where no gradient arrived.
  ParamSet gradients(const ParamSet& params) const;

  std::size_t node_count() const noexcept { return nodes_.size(); }

  // When enabled, relu, clamp and min append one bit per element naming the
  // piece each input fell on. Two passes with equal patterns evaluated the
  // same smooth branch everywhere.
  void record_pieces(bool on) noexcept { record_pieces_ = on; }
  const std::vector<bool>& pieces() const noexcept { return pieces_; }

 private:
  struct Node {
    Matrix value;
    Matrix grad;
    bool has_grad = false;
    bool requires_grad = false;
    std::function<void(Tape&, const Matrix&)> backward;
    const Matrix* ref = nullptr;
    const ParamSet* owner = nullptr;
    std::size_t param_index = 0;
  };

  Var push(Matrix value, bool requires_grad, std::function<void(Tape&, const Matrix&)> backward);
  void accumulate(int id, const Matrix& g);
  template <typename Expr>
  void accumulate_expr(int id, const Expr& g);

  template <typename Mask>
  void note_pieces(const Mask& mask);

  std::vector<Node> nodes_;
  bool record_pieces_ = false;
  std::vector<bool> pieces_;
};

}  // namespace rtsac::nn
