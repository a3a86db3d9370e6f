#pragma once

#include "madapter/real.hpp"

#include <cstddef>
#include <initializer_list>
#include <new>
#include <span>
#include <string>
#include <vector>

namespace madapter {
inline namespace MADAPTER_NS {

using Shape = std::vector<std::size_t>;

// Fixed 64-byte alignment keeps vectorized reductions on the same code path
// no matter where the allocator places a buffer, so repeated runs round
// identically.
template <class T>
struct AlignedAllocator {
  using value_type = T;
  static constexpr std::align_val_t kAlign{64};
  AlignedAllocator() noexcept = default;
  template <class U>
  AlignedAllocator(const AlignedAllocator<U>&) noexcept {}
  T* allocate(std::size_t n) {
    return static_cast<T*>(::operator new(n * sizeof(T), kAlign));
  }
  void deallocate(T* p, std::size_t) noexcept { ::operator delete(p, kAlign); }
  friend bool operator==(const AlignedAllocator&, const AlignedAllocator&) { return true; }
};

using RealBuffer = std::vector<Real, AlignedAllocator<Real>>;

std::string shape_string(const Shape& shape);

/// Dense row-major array of rank 1 to 3. A sequence is stored as
/// (length, embedding).
class SeqTensor {
 public:
  SeqTensor();
  explicit SeqTensor(Shape shape, Real fill = Real(0));
  SeqTensor(Shape shape, std::vector<Real> data);

  static SeqTensor scalar(Real value);
  static SeqTensor vector(std::vector<Real> values);
  static SeqTensor matrix(std::size_t rows, std::size_t cols,
                          std::vector<Real> values);

  const Shape& shape() const noexcept { return shape_; }
  std::size_t rank() const noexcept { return shape_.size(); }
  std::size_t dim(std::size_t axis) const { return shape_.at(axis); }
  std::size_t size() const noexcept { return data_.size(); }

  // Rank-2 views. A rank-1 tensor counts as a single row.
  std::size_t rows() const noexcept { return shape_.size() == 1 ? 1 : shape_[0]; }
  std::size_t cols() const noexcept {
    return shape_.size() == 1 ? shape_[0] : data_.size() / shape_[0];
  }

  std::span<Real> data() noexcept { return data_; }
  std::span<const Real> data() const noexcept { return data_; }
  Real* raw() noexcept { return data_.data(); }
  const Real* raw() const noexcept { return data_.data(); }

  Real& operator[](std::size_t i) noexcept { return data_[i]; }
  Real operator[](std::size_t i) const noexcept { return data_[i]; }
  Real& at(std::size_t r, std::size_t c) noexcept { return data_[r * cols() + c]; }
  Real at(std::size_t r, std::size_t c) const noexcept {
    return data_[r * cols() + c];
  }

  std::span<Real> row(std::size_t r) noexcept {
    return std::span<Real>(data_).subspan(r * cols(), cols());
  }
  std::span<const Real> row(std::size_t r) const noexcept {
    return std::span<const Real>(data_).subspan(r * cols(), cols());
  }

  void fill(Real value) noexcept;
  bool all_finite() const noexcept;

  // Exact element and shape equality (bitwise for non-NaN values).
  friend bool operator==(const SeqTensor& a, const SeqTensor& b) = default;

 private:
  Shape shape_;
  RealBuffer data_;
};

std::size_t shape_product(const Shape& shape);

}  // namespace MADAPTER_NS
}  // namespace madapter
