#include "rtsac/nn/param_set.hpp"

#include <string>

#include "rtsac/core/error.hpp"

namespace rtsac::nn {

std::int64_t element_count(const Shape& shape) {
  std::int64_t n = 1;
  for (auto d : shape) n *= d;
  return n;
}

namespace {

std::pair<Eigen::Index, Eigen::Index> matrix_dims(const Shape& shape) {
  if (shape.empty()) throw Error(ErrorKind::Configuration, "tensor shape must have rank >= 1");
  for (auto d : shape) {
    if (d <= 0) throw Error(ErrorKind::Configuration, "tensor dimensions must be positive");
  }
  const auto cols = shape.back();
  return {static_cast<Eigen::Index>(element_count(shape) / cols), static_cast<Eigen::Index>(cols)};
}

}  // namespace

Matrix zeros_for(const Shape& shape) {
  const auto [rows, cols] = matrix_dims(shape);
  return Matrix::Zero(rows, cols);
}

std::size_t ParamSet::add(std::string name, Shape shape, Matrix value) {
  if (find(name)) throw Error(ErrorKind::Configuration, "duplicate tensor name '" + name + "'");
  const auto [rows, cols] = matrix_dims(shape);
  if (value.rows() != rows || value.cols() != cols) {
    throw Error(ErrorKind::Configuration, "tensor '" + name + "' value does not match its shape");
  }
  tensors_.push_back(Tensor{std::move(name), std::move(shape), std::move(value)});
  return tensors_.size() - 1;
}

std::size_t ParamSet::add_zeros(std::string name, Shape shape) {
  Matrix value = zeros_for(shape);
  return add(std::move(name), std::move(shape), std::move(value));
}

std::optional<std::size_t> ParamSet::find(std::string_view name) const noexcept {
  for (std::size_t i = 0; i < tensors_.size(); ++i) {
    if (tensors_[i].name == name) return i;
  }
  return std::nullopt;
}

const Tensor& ParamSet::at(std::string_view name) const {
  if (auto i = find(name)) return tensors_[*i];
  throw Error(ErrorKind::Configuration, "no tensor named '" + std::string(name) + "'");
}

Tensor& ParamSet::at(std::string_view name) {
  if (auto i = find(name)) return tensors_[*i];
  throw Error(ErrorKind::Configuration, "no tensor named '" + std::string(name) + "'");
}

ParamSet ParamSet::zeros_like() const {
  ParamSet out;
  for (const auto& t : tensors_) {
    out.tensors_.push_back(Tensor{t.name, t.shape, Matrix::Zero(t.value.rows(), t.value.cols())});
  }
  return out;
}

bool ParamSet::same_layout(const ParamSet& other) const noexcept {
  if (tensors_.size() != other.tensors_.size()) return false;
  for (std::size_t i = 0; i < tensors_.size(); ++i) {
    if (tensors_[i].name != other.tensors_[i].name || tensors_[i].shape != other.tensors_[i].shape) {
      return false;
    }
  }
  return true;
}

bool ParamSet::all_finite() const noexcept {
  for (const auto& t : tensors_) {
    if (!t.value.allFinite()) return false;
  }
  return true;
}

std::int64_t ParamSet::scalar_count() const noexcept {
  std::int64_t n = 0;
  for (const auto& t : tensors_) n += t.value.size();
  return n;
}

ParamSet ParamSet::with_prefix_removed(std::string_view prefix) const {
  ParamSet out;
  for (const auto& t : tensors_) {
    if (t.name.size() > prefix.size() && t.name.compare(0, prefix.size(), prefix) == 0) {
      out.tensors_.push_back(Tensor{t.name.substr(prefix.size()), t.shape, t.value});
    }
  }
  return out;
}

bool operator==(const ParamSet& a, const ParamSet& b) {
  if (!a.same_layout(b)) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i].value != b[i].value) return false;
  }
  return true;
}

}  // namespace rtsac::nn
