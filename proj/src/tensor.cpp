#include "madapter/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "madapter/errors.hpp"

namespace madapter {
inline namespace MADAPTER_NS {

std::string shape_string(const Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) os << 'x';
    os << shape[i];
  }
  os << ']';
  return os.str();
}

std::size_t shape_product(const Shape& shape) {
  std::size_t n = 1;
  for (auto d : shape) n *= d;
  return n;
}

namespace {
void check_shape(const Shape& shape) {
  if (shape.empty() || shape.size() > 3) {
    throw DimensionError("tensor rank must be 1..3, got shape " + shape_string(shape));
  }
  for (auto d : shape) {
    if (d == 0) throw DimensionError("zero-sized dimension in shape " + shape_string(shape));
  }
}
}  // namespace

SeqTensor::SeqTensor() : shape_{1}, data_(1, 0.0f) {}

SeqTensor::SeqTensor(Shape shape, Real fill) : shape_(std::move(shape)) {
  check_shape(shape_);
  data_.assign(shape_product(shape_), fill);
}

SeqTensor::SeqTensor(Shape shape, std::vector<Real> data)
    : shape_(std::move(shape)), data_(data.begin(), data.end()) {
  check_shape(shape_);
  if (data_.size() != shape_product(shape_)) {
    throw DimensionError("data length " + std::to_string(data_.size()) +
                         " does not match shape " + shape_string(shape_));
  }
}

SeqTensor SeqTensor::scalar(Real value) { return SeqTensor({1}, {value}); }

SeqTensor SeqTensor::vector(std::vector<Real> values) {
  const auto n = values.size();
  return SeqTensor({n}, std::move(values));
}

SeqTensor SeqTensor::matrix(std::size_t rows, std::size_t cols,
                            std::vector<Real> values) {
  return SeqTensor({rows, cols}, std::move(values));
}

void SeqTensor::fill(Real value) noexcept {
  std::fill(data_.begin(), data_.end(), value);
}

bool SeqTensor::all_finite() const noexcept {
  return std::all_of(data_.begin(), data_.end(),
                     [](Real v) { return std::isfinite(v); });
}

}  // namespace MADAPTER_NS
}  // namespace madapter
