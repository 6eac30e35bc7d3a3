#pragma once

#include <cstddef>
#include <string>
#include <vector>

namespace prooflens {

// Dense row-major binary64 tensor, rank 1 or 2 in practice.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(std::vector<int> shape);
  Tensor(std::vector<int> shape, std::vector<double> data);

  static Tensor scalar(double v) { return Tensor({1}, {v}); }
  static Tensor zeros_like(const Tensor& other) { return Tensor(other.shape_); }

  const std::vector<int>& shape() const { return shape_; }
  std::size_t size() const { return data_.size(); }
  bool is_scalar() const { return data_.size() == 1; }
  bool same_shape(const Tensor& other) const { return shape_ == other.shape_; }

  // Rank-2 accessors; rank-1 tensors behave as a single row.
  int rows() const { return shape_.size() == 2 ? shape_[0] : 1; }
  int cols() const { return shape_.size() == 2 ? shape_[1] : (shape_.empty() ? 0 : shape_[0]); }

  double& at(int i) { return data_[static_cast<std::size_t>(i)]; }
  double at(int i) const { return data_[static_cast<std::size_t>(i)]; }
  double& at(int r, int c) { return data_[static_cast<std::size_t>(r) * cols() + c]; }
  double at(int r, int c) const { return data_[static_cast<std::size_t>(r) * cols() + c]; }

  double* data() { return data_.data(); }
  const double* data() const { return data_.data(); }
  std::vector<double>& vec() { return data_; }
  const std::vector<double>& vec() const { return data_; }

  bool all_finite() const;
  bool bit_equal(const Tensor& other) const;

  std::string shape_str() const;

 private:
  std::vector<int> shape_;
  std::vector<double> data_;
};

// Shortest decimal form that round-trips binary64.
std::string format_double(double v);

}  // namespace prooflens
