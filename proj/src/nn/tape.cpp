#include "rtsac/nn/tape.hpp"

#include <cmath>
#include <string>

#include "rtsac/core/error.hpp"

namespace rtsac::nn {

namespace {

void require_same_shape(const Matrix& a, const Matrix& b, const char* op) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw Error(ErrorKind::Configuration,
                std::string(op) + ": shape mismatch " + std::to_string(a.rows()) + "x" +
                    std::to_string(a.cols()) + " vs " + std::to_string(b.rows()) + "x" +
                    std::to_string(b.cols()));
  }
}

double sigmoid(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

}  // namespace

Tape::Var Tape::push(Matrix value, bool requires_grad,
                     std::function<void(Tape&, const Matrix&)> backward) {
  Node node;
  node.value = std::move(value);
  node.requires_grad = requires_grad;
  if (requires_grad) node.backward = std::move(backward);
  nodes_.push_back(std::move(node));
  return Var{static_cast<int>(nodes_.size() - 1)};
}

template <typename Expr>
void Tape::accumulate_expr(int id, const Expr& g) {
  Node& node = nodes_[id];
  if (!node.requires_grad) return;
  if (!node.has_grad) {
    node.grad = g;
    node.has_grad = true;
  } else {
    node.grad += g;
  }
}

void Tape::accumulate(int id, const Matrix& g) { accumulate_expr(id, g); }

Tape::Var Tape::constant(Matrix value) { return push(std::move(value), false, nullptr); }

Tape::Var Tape::borrow(const Matrix& value) {
  Var v = push(Matrix(), false, nullptr);
  nodes_[v.id].ref = &value;
  return v;
}

Tape::Var Tape::parameter(const ParamSet& params, std::size_t index) {
  Var v = push(Matrix(), true, nullptr);
  nodes_[v.id].ref = &params[index].value;
  nodes_[v.id].owner = &params;
  nodes_[v.id].param_index = index;
  return v;
}

Matrix Tape::grad(Var v) const {
  const Node& node = nodes_[v.id];
  if (node.has_grad) return node.grad;
  return Matrix::Zero(value(v).rows(), value(v).cols());
}

Tape::Var Tape::matmul(Var a, Var b) {
  const Matrix& A = value(a);
  const Matrix& B = value(b);
  if (A.cols() != B.rows()) throw Error(ErrorKind::Configuration, "matmul: inner dimensions differ");
  Matrix out = A * B;
  const bool rg = requires_grad(a) || requires_grad(b);
  return push(std::move(out), rg, [a, b](Tape& t, const Matrix& g) {
    if (t.requires_grad(a)) t.accumulate_expr(a.id, g * t.value(b).transpose());
    if (t.requires_grad(b)) t.accumulate_expr(b.id, t.value(a).transpose() * g);
  });
}

Tape::Var Tape::add_bias(Var x, Var bias) {
  const Matrix& X = value(x);
  const Matrix& b = value(bias);
  if (b.rows() != 1 || b.cols() != X.cols()) throw Error(ErrorKind::Configuration, "add_bias: bias shape mismatch");
  Matrix out = X.rowwise() + b.row(0);
  const bool rg = requires_grad(x) || requires_grad(bias);
  return push(std::move(out), rg, [x, bias](Tape& t, const Matrix& g) {
    if (t.requires_grad(x)) t.accumulate(x.id, g);
    if (t.requires_grad(bias)) t.accumulate_expr(bias.id, g.colwise().sum());
  });
}

Tape::Var Tape::add(Var a, Var b) {
  require_same_shape(value(a), value(b), "add");
  Matrix out = value(a) + value(b);
  return push(std::move(out), requires_grad(a) || requires_grad(b), [a, b](Tape& t, const Matrix& g) {
    t.accumulate(a.id, g);
    t.accumulate(b.id, g);
  });
}

Tape::Var Tape::sub(Var a, Var b) {
  require_same_shape(value(a), value(b), "sub");
  Matrix out = value(a) - value(b);
  return push(std::move(out), requires_grad(a) || requires_grad(b), [a, b](Tape& t, const Matrix& g) {
    t.accumulate(a.id, g);
    t.accumulate_expr(b.id, -g);
  });
}

Tape::Var Tape::mul(Var a, Var b) {
  require_same_shape(value(a), value(b), "mul");
  Matrix out = value(a).cwiseProduct(value(b));
  return push(std::move(out), requires_grad(a) || requires_grad(b), [a, b](Tape& t, const Matrix& g) {
    if (t.requires_grad(a)) t.accumulate_expr(a.id, g.cwiseProduct(t.value(b)));
    if (t.requires_grad(b)) t.accumulate_expr(b.id, g.cwiseProduct(t.value(a)));
  });
}

Tape::Var Tape::scale(Var x, double factor) {
  Matrix out = value(x) * factor;
  return push(std::move(out), requires_grad(x),
              [x, factor](Tape& t, const Matrix& g) { t.accumulate_expr(x.id, g * factor); });
}

Tape::Var Tape::add_scalar(Var x, double c) {
  Matrix out = value(x).array() + c;
  return push(std::move(out), requires_grad(x), [x](Tape& t, const Matrix& g) { t.accumulate(x.id, g); });
}

Tape::Var Tape::mul_scalar(Var x, Var s) {
  if (value(s).rows() != 1 || value(s).cols() != 1) {
    throw Error(ErrorKind::Configuration, "mul_scalar: scalar operand must be 1x1");
  }
  Matrix out = value(x) * value(s)(0, 0);
  return push(std::move(out), requires_grad(x) || requires_grad(s), [x, s](Tape& t, const Matrix& g) {
    if (t.requires_grad(x)) t.accumulate_expr(x.id, g * t.value(s)(0, 0));
    if (t.requires_grad(s)) {
      Matrix gs(1, 1);
      gs(0, 0) = g.cwiseProduct(t.value(x)).sum();
      t.accumulate(s.id, gs);
    }
  });
}

template <typename Mask>
void Tape::note_pieces(const Mask& mask) {
  if (!record_pieces_) return;
  for (Eigen::Index c = 0; c < mask.cols(); ++c) {
    for (Eigen::Index r = 0; r < mask.rows(); ++r) pieces_.push_back(mask(r, c));
  }
}

Tape::Var Tape::relu(Var x) {
  note_pieces(value(x).array() > 0.0);
  Matrix out = value(x).cwiseMax(0.0);
  return push(std::move(out), requires_grad(x), [x](Tape& t, const Matrix& g) {
    t.accumulate_expr(x.id, (t.value(x).array() > 0.0).select(g.array(), 0.0).matrix());
  });
}

Tape::Var Tape::tanh(Var x) {
  Matrix out = value(x).array().tanh();
  const int out_id = static_cast<int>(nodes_.size());
  return push(std::move(out), requires_grad(x), [x, out_id](Tape& t, const Matrix& g) {
    const Matrix& y = t.nodes_[out_id].value;
    t.accumulate_expr(x.id, g.cwiseProduct((1.0 - y.array().square()).matrix()));
  });
}

Tape::Var Tape::exp(Var x) {
  Matrix out = value(x).array().exp();
  const int out_id = static_cast<int>(nodes_.size());
  return push(std::move(out), requires_grad(x), [x, out_id](Tape& t, const Matrix& g) {
    t.accumulate_expr(x.id, g.cwiseProduct(t.nodes_[out_id].value));
  });
}

Tape::Var Tape::square(Var x) {
  Matrix out = value(x).array().square();
  return push(std::move(out), requires_grad(x), [x](Tape& t, const Matrix& g) {
    t.accumulate_expr(x.id, 2.0 * g.cwiseProduct(t.value(x)));
  });
}

Tape::Var Tape::softplus(Var x) {
  const Matrix& X = value(x);
  Matrix out = X.unaryExpr([](double v) { return std::max(v, 0.0) + std::log1p(std::exp(-std::abs(v))); });
  return push(std::move(out), requires_grad(x), [x](Tape& t, const Matrix& g) {
    t.accumulate_expr(x.id, g.cwiseProduct(t.value(x).unaryExpr([](double v) { return sigmoid(v); })));
  });
}

Tape::Var Tape::clamp(Var x, double lo, double hi) {
  note_pieces(value(x).array() > lo);
  note_pieces(value(x).array() < hi);
  Matrix out = value(x).cwiseMax(lo).cwiseMin(hi);
  return push(std::move(out), requires_grad(x), [x, lo, hi](Tape& t, const Matrix& g) {
    const auto& v = t.value(x).array();
    t.accumulate_expr(x.id, ((v > lo) && (v < hi)).select(g.array(), 0.0).matrix());
  });
}

Tape::Var Tape::min(Var a, Var b) {
  require_same_shape(value(a), value(b), "min");
  note_pieces(value(a).array() <= value(b).array());
  Matrix out = value(a).cwiseMin(value(b));
  return push(std::move(out), requires_grad(a) || requires_grad(b), [a, b](Tape& t, const Matrix& g) {
    const auto pick_a = (t.value(a).array() <= t.value(b).array());
    if (t.requires_grad(a)) t.accumulate_expr(a.id, pick_a.select(g.array(), 0.0).matrix());
    if (t.requires_grad(b)) t.accumulate_expr(b.id, pick_a.select(0.0, g.array()).matrix());
  });
}

Tape::Var Tape::concat_cols(std::initializer_list<Var> parts) {
  if (parts.size() == 0) throw Error(ErrorKind::Usage, "concat_cols needs at least one input");
  const Eigen::Index rows = value(*parts.begin()).rows();
  Eigen::Index cols = 0;
  bool rg = false;
  for (Var p : parts) {
    if (value(p).rows() != rows) throw Error(ErrorKind::Configuration, "concat_cols: row count mismatch");
    cols += value(p).cols();
    rg = rg || requires_grad(p);
  }
  Matrix out(rows, cols);
  Eigen::Index offset = 0;
  std::vector<Var> inputs(parts);
  for (Var p : inputs) {
    out.middleCols(offset, value(p).cols()) = value(p);
    offset += value(p).cols();
  }
  return push(std::move(out), rg, [inputs](Tape& t, const Matrix& g) {
    Eigen::Index off = 0;
    for (Var p : inputs) {
      const Eigen::Index c = t.value(p).cols();
      if (t.requires_grad(p)) t.accumulate_expr(p.id, g.middleCols(off, c));
      off += c;
    }
  });
}

Tape::Var Tape::slice_cols(Var x, int start, int count) {
  const Matrix& X = value(x);
  if (start < 0 || count <= 0 || start + count > X.cols()) {
    throw Error(ErrorKind::Configuration, "slice_cols: range outside the matrix");
  }
  Matrix out = X.middleCols(start, count);
  return push(std::move(out), requires_grad(x), [x, start, count](Tape& t, const Matrix& g) {
    Matrix full = Matrix::Zero(t.value(x).rows(), t.value(x).cols());
    full.middleCols(start, count) = g;
    t.accumulate(x.id, full);
  });
}

Tape::Var Tape::row_sum(Var x) {
  Matrix out = value(x).rowwise().sum();
  return push(std::move(out), requires_grad(x), [x](Tape& t, const Matrix& g) {
    t.accumulate_expr(x.id, g.col(0).replicate(1, t.value(x).cols()));
  });
}

Tape::Var Tape::mean(Var x) {
  const double n = static_cast<double>(value(x).size());
  if (n == 0) throw Error(ErrorKind::Usage, "mean of an empty matrix");
  Matrix out(1, 1);
  out(0, 0) = value(x).sum() / n;
  return push(std::move(out), requires_grad(x), [x, n](Tape& t, const Matrix& g) {
    t.accumulate_expr(x.id, Matrix::Constant(t.value(x).rows(), t.value(x).cols(), g(0, 0) / n));
  });
}

namespace {

Matrix im2col(const Matrix& x, const ConvGeometry& geo) {
  const int ho = geo.out_h();
  const int wo = geo.out_w();
  const int c = geo.in_c;
  Matrix cols(x.rows() * ho * wo, geo.patch_size());
  for (Eigen::Index b = 0; b < x.rows(); ++b) {
    const double* img = x.row(b).data();
    for (int oy = 0; oy < ho; ++oy) {
      for (int ox = 0; ox < wo; ++ox) {
        double* dst = cols.row((b * ho + oy) * wo + ox).data();
        for (int ky = 0; ky < geo.kernel; ++ky) {
          const double* src = img + ((oy * geo.stride + ky) * geo.in_w + ox * geo.stride) * c;
          std::copy(src, src + geo.kernel * c, dst);
          dst += geo.kernel * c;
        }
      }
    }
  }
  return cols;
}

void col2im_add(const Matrix& dcols, const ConvGeometry& geo, Matrix& dx) {
  const int ho = geo.out_h();
  const int wo = geo.out_w();
  const int c = geo.in_c;
  for (Eigen::Index b = 0; b < dx.rows(); ++b) {
    double* img = dx.row(b).data();
    for (int oy = 0; oy < ho; ++oy) {
      for (int ox = 0; ox < wo; ++ox) {
        const double* src = dcols.row((b * ho + oy) * wo + ox).data();
        for (int ky = 0; ky < geo.kernel; ++ky) {
          double* dst = img + ((oy * geo.stride + ky) * geo.in_w + ox * geo.stride) * c;
          for (int k = 0; k < geo.kernel * c; ++k) dst[k] += src[k];
          src += geo.kernel * c;
        }
      }
    }
  }
}

}  // namespace

Tape::Var Tape::conv2d(Var x, Var weight, Var bias, const ConvGeometry& geo) {
  const Matrix& X = value(x);
  const Matrix& W = value(weight);
  const Matrix& b = value(bias);
  if (geo.out_h() <= 0 || geo.out_w() <= 0 || geo.stride <= 0) {
    throw Error(ErrorKind::Configuration, "conv2d: kernel larger than input");
  }
  if (X.cols() != static_cast<Eigen::Index>(geo.in_h) * geo.in_w * geo.in_c) {
    throw Error(ErrorKind::Configuration, "conv2d: input width does not match geometry");
  }
  if (W.rows() != geo.patch_size() || W.cols() != geo.out_c || b.rows() != 1 || b.cols() != geo.out_c) {
    throw Error(ErrorKind::Configuration, "conv2d: weight or bias shape mismatch");
  }
  auto cols = std::make_shared<Matrix>(im2col(X, geo));
  Matrix y = (*cols) * W;
  y.rowwise() += b.row(0);
  const Eigen::Index per_image = static_cast<Eigen::Index>(geo.out_h()) * geo.out_w() * geo.out_c;
  Matrix out = Eigen::Map<const Matrix>(y.data(), X.rows(), per_image);
  const bool rg = requires_grad(x) || requires_grad(weight) || requires_grad(bias);
  return push(std::move(out), rg, [x, weight, bias, geo, cols](Tape& t, const Matrix& g) {
    const Eigen::Map<const Matrix> gy(g.data(), cols->rows(), geo.out_c);
    if (t.requires_grad(weight)) t.accumulate_expr(weight.id, cols->transpose() * gy);
    if (t.requires_grad(bias)) t.accumulate_expr(bias.id, gy.colwise().sum());
    if (t.requires_grad(x)) {
      const Matrix dcols = gy * t.value(weight).transpose();
      Matrix dx = Matrix::Zero(t.value(x).rows(), t.value(x).cols());
      col2im_add(dcols, geo, dx);
      t.accumulate(x.id, dx);
    }
  });
}

void Tape::backward(Var loss) {
  const Node& root = nodes_.at(static_cast<std::size_t>(loss.id));
  if (value(loss).rows() != 1 || value(loss).cols() != 1) {
    throw Error(ErrorKind::Usage, "backward requires a scalar (1x1) loss");
  }
  if (!root.requires_grad) return;
  accumulate(loss.id, Matrix::Ones(1, 1));
  for (int i = loss.id; i >= 0; --i) {
    Node& node = nodes_[static_cast<std::size_t>(i)];
    if (node.has_grad && node.backward) node.backward(*this, node.grad);
  }
}

ParamSet Tape::gradients(const ParamSet& params) const {
  ParamSet out = params.zeros_like();
  for (const Node& node : nodes_) {
    if (node.owner == &params && node.has_grad) out[node.param_index].value += node.grad;
  }
  return out;
}

}  // namespace rtsac::nn
