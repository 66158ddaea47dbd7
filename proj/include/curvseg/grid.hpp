#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <span>
#include <vector>

#include "curvseg/error.hpp"

namespace curvseg {

using Index = std::int64_t;
using Coord = std::array<Index, 3>;

/// Extent and physical spacing of a 2D or 3D row-major grid. Axis 0 is the
/// slowest-varying axis (rows in 2D, slices in 3D); the last axis is
/// contiguous in memory.
class Shape {
 public:
  Shape() = default;
  Shape(std::initializer_list<Index> dims);
  Shape(std::span<const Index> dims, std::span<const double> spacing);

  int ndim() const noexcept { return ndim_; }
  Index dim(int axis) const noexcept { return dims_[axis]; }
  double spacing(int axis) const noexcept { return spacing_[axis]; }
  Index stride(int axis) const noexcept { return strides_[axis]; }
  std::size_t size() const noexcept { return size_; }

  std::span<const Index> dims() const noexcept { return {dims_.data(), std::size_t(ndim_)}; }
  std::span<const double> spacings() const noexcept { return {spacing_.data(), std::size_t(ndim_)}; }

  Shape with_spacing(std::span<const double> spacing) const;
  Shape unit_spacing() const;

  double min_spacing() const noexcept;

  Index linear(const Coord& c) const noexcept {
    Index i = 0;
    for (int k = 0; k < ndim_; ++k) i += c[k] * strides_[k];
    return i;
  }
  Coord coord(Index linear) const noexcept {
    Coord c{0, 0, 0};
    for (int k = 0; k < ndim_; ++k) {
      c[k] = linear / strides_[k];
      linear -= c[k] * strides_[k];
    }
    return c;
  }
  bool contains(const Coord& c) const noexcept {
    for (int k = 0; k < ndim_; ++k)
      if (c[k] < 0 || c[k] >= dims_[k]) return false;
    return true;
  }

  /// Same extents; spacing is ignored.
  bool same_dims(const Shape& other) const noexcept;
  bool operator==(const Shape& other) const noexcept;

 private:
  void finalize();

  int ndim_ = 0;
  std::array<Index, 3> dims_{1, 1, 1};
  std::array<double, 3> spacing_{1.0, 1.0, 1.0};
  std::array<Index, 3> strides_{0, 0, 0};
  std::size_t size_ = 0;
};

/// Dense per-cell field over a Shape.
template <class T>
class Field {
 public:
  using value_type = T;

  Field() = default;
  explicit Field(Shape shape, T fill = T{}) : shape_(std::move(shape)), values_(shape_.size(), fill) {}
  Field(Shape shape, std::vector<T> values) : shape_(std::move(shape)), values_(std::move(values)) {
    if (values_.size() != shape_.size())
      throw Error(ErrorCode::InvalidArgument, "field value count does not match grid size");
  }

  const Shape& shape() const noexcept { return shape_; }
  std::size_t size() const noexcept { return values_.size(); }
  bool empty() const noexcept { return values_.empty(); }

  std::span<T> values() noexcept { return values_; }
  std::span<const T> values() const noexcept { return values_; }
  std::vector<T>& storage() noexcept { return values_; }
  const std::vector<T>& storage() const noexcept { return values_; }

  T& operator[](std::size_t i) noexcept { return values_[i]; }
  const T& operator[](std::size_t i) const noexcept { return values_[i]; }
  T& at(const Coord& c) noexcept { return values_[shape_.linear(c)]; }
  const T& at(const Coord& c) const noexcept { return values_[shape_.linear(c)]; }

  bool operator==(const Field& other) const {
    return shape_.same_dims(other.shape_) && values_ == other.values_;
  }

 private:
  Shape shape_;
  std::vector<T> values_;
};

using ScalarField = Field<double>;
using BinaryMask = Field<std::uint8_t>;
using LabelField = Field<std::int32_t>;

/// One n-vector per cell, stored component-major: component k of cell i lives
/// at data()[k * size + i].
class VectorField {
 public:
  VectorField() = default;
  explicit VectorField(Shape shape, double fill = 0.0)
      : shape_(std::move(shape)), data_(shape_.size() * std::size_t(shape_.ndim()), fill) {}

  const Shape& shape() const noexcept { return shape_; }
  int arity() const noexcept { return shape_.ndim(); }
  std::size_t size() const noexcept { return shape_.size(); }

  std::span<double> component(int k) noexcept { return {data_.data() + std::size_t(k) * size(), size()}; }
  std::span<const double> component(int k) const noexcept {
    return {data_.data() + std::size_t(k) * size(), size()};
  }
  std::span<double> data() noexcept { return data_; }
  std::span<const double> data() const noexcept { return data_; }

 private:
  Shape shape_;
  std::vector<double> data_;
};

enum class Connectivity {
  Face,  // 4 in 2D, 6 in 3D
  Full,  // 8 in 2D, 26 in 3D
};

/// Neighbor offsets (excluding the center) for the given connectivity.
std::vector<Coord> neighbor_offsets(int ndim, Connectivity connectivity);

void require_same_dims(const Shape& a, const Shape& b, const char* what);

BinaryMask complement(const BinaryMask& m);
std::size_t count(const BinaryMask& m);
BinaryMask mask_or(const BinaryMask& a, const BinaryMask& b);
BinaryMask mask_and(const BinaryMask& a, const BinaryMask& b);
/// a \ b
BinaryMask mask_minus(const BinaryMask& a, const BinaryMask& b);
bool is_subset(const BinaryMask& a, const BinaryMask& b);

ScalarField to_scalar(const BinaryMask& m);
BinaryMask threshold(const ScalarField& f, double level);

}  // namespace curvseg
