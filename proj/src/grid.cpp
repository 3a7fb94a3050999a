// Copyright 2026 isax authors. Apache 2.0 License.
#include "isax/grid.hpp"

#include <cmath>
#include <sstream>

#include "isax/error.hpp"

namespace isax {

long shape_product(const std::vector<long>& shape) {
  long p = 1;
  for (long s : shape) {
    if (s <= 0) throw DimError("shape dimensions must be positive");
    p *= s;
  }
  return p;
}

ValueGrid::ValueGrid(std::vector<long> shape)
    : shape_(std::move(shape)), data_(static_cast<std::size_t>(shape_product(shape_)), 0.0) {}

ValueGrid::ValueGrid(std::vector<long> shape, std::vector<double> data)
    : shape_(std::move(shape)), data_(std::move(data)) {
  if (shape_product(shape_) != static_cast<long>(data_.size()))
    throw DimError("data length does not match shape " + shape_str());
}

ValueGrid ValueGrid::scalar(double v) { return ValueGrid({1, 1}, {v}); }

ValueGrid ValueGrid::vec(std::vector<double> data) {
  long n = static_cast<long>(data.size());
  return ValueGrid({n}, std::move(data));
}

ValueGrid ValueGrid::matrix(long rows, long cols) { return ValueGrid({rows, cols}); }

ValueGrid ValueGrid::matrix(long rows, long cols, std::vector<double> data) {
  return ValueGrid({rows, cols}, std::move(data));
}

long ValueGrid::rows() const {
  if (shape_.size() == 2) return shape_[0];
  if (shape_.size() == 1) return 1;
  throw DimError("rows() on grid of rank " + std::to_string(rank()));
}

long ValueGrid::cols() const {
  if (shape_.size() == 2) return shape_[1];
  if (shape_.size() == 1) return shape_[0];
  throw DimError("cols() on grid of rank " + std::to_string(rank()));
}

std::string ValueGrid::shape_str() const {
  std::ostringstream os;
  os << "[";
  for (std::size_t i = 0; i < shape_.size(); ++i) os << (i ? "x" : "") << shape_[i];
  os << "]";
  return os.str();
}

bool ValueGrid::all_finite() const {
  for (double v : data_)
    if (!std::isfinite(v)) return false;
  return true;
}

void ValueGrid::require_finite(const std::string& context) const {
  if (!all_finite()) throw NumericError("non-finite value produced by " + context);
}

void ValueGrid::fill(double v) {
  for (double& x : data_) x = v;
}

}  // namespace isax
