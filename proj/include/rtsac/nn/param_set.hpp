#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

namespace rtsac::nn {

using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Shape = std::vector<std::int64_t>;

// A tensor is stored as a row-major matrix whose column count is the last
// dimension of its shape; all leading dimensions are folded into rows.
struct Tensor {
  std::string name;
  Shape shape;
  Matrix value;
};

std::int64_t element_count(const Shape& shape);
Matrix zeros_for(const Shape& shape);

class ParamSet {
 public:
  // Throws ErrorKind::Configuration on duplicate names or when `value` does
  // not match `shape`.
  std::size_t add(std::string name, Shape shape, Matrix value);
  std::size_t add_zeros(std::string name, Shape shape);

  std::size_t size() const noexcept { return tensors_.size(); }
  bool empty() const noexcept { return tensors_.empty(); }
  Tensor& operator[](std::size_t i) { return tensors_[i]; }
  const Tensor& operator[](std::size_t i) const { return tensors_[i]; }

  std::optional<std::size_t> find(std::string_view name) const noexcept;
  const Tensor& at(std::string_view name) const;
  Tensor& at(std::string_view name);

  auto begin() noexcept { return tensors_.begin(); }
  auto end() noexcept { return tensors_.end(); }
  auto begin() const noexcept { return tensors_.begin(); }
  auto end() const noexcept { return tensors_.end(); }

  ParamSet zeros_like() const;
  bool same_layout(const ParamSet& other) const noexcept;
  bool all_finite() const noexcept;
  std::int64_t scalar_count() const noexcept;

  // Subset of tensors whose names start with `prefix`, with the prefix removed.
  ParamSet with_prefix_removed(std::string_view prefix) const;

  friend bool operator==(const ParamSet& a, const ParamSet& b);

 private:
  std::vector<Tensor> tensors_;
};

}  // namespace rtsac::nn
