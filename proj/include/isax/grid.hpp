// Copyright 2026 isax authors. Apache 2.0 License.
#pragma once

#include <cstdint>
#include <initializer_list>
#include <string>
#include <vector>

namespace isax {

// Dense row-major array of doubles. Rank is usually 1 (vectors) or 2
// (matrices); the shape is kept general for serialization.
class ValueGrid {
 public:
  ValueGrid() = default;
  explicit ValueGrid(std::vector<long> shape);  // zero-filled
  ValueGrid(std::vector<long> shape, std::vector<double> data);

  static ValueGrid scalar(double v);
  static ValueGrid vec(std::vector<double> data);               // shape {n}
  static ValueGrid matrix(long rows, long cols);                // zeros
  static ValueGrid matrix(long rows, long cols, std::vector<double> data);

  const std::vector<long>& shape() const { return shape_; }
  long rank() const { return static_cast<long>(shape_.size()); }
  long size() const { return static_cast<long>(data_.size()); }

  // 2-D accessors; a rank-1 grid of length n is treated as a 1 x n row.
  long rows() const;
  long cols() const;

  double& at(long i) { return data_[static_cast<std::size_t>(i)]; }
  double at(long i) const { return data_[static_cast<std::size_t>(i)]; }
  double& at(long r, long c) { return data_[static_cast<std::size_t>(r * cols() + c)]; }
  double at(long r, long c) const { return data_[static_cast<std::size_t>(r * cols() + c)]; }

  std::vector<double>& data() { return data_; }
  const std::vector<double>& data() const { return data_; }

  bool same_shape(const ValueGrid& other) const { return shape_ == other.shape_; }
  std::string shape_str() const;

  bool all_finite() const;
  // Throws NumericError mentioning `context` if any entry is NaN/Inf.
  void require_finite(const std::string& context) const;

  void fill(double v);

 private:
  std::vector<long> shape_;
  std::vector<double> data_;
};

long shape_product(const std::vector<long>& shape);

}  // namespace isax
