#include "curvseg/grid.hpp"

#include <algorithm>
#include <string>

namespace curvseg {

const char* to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::InvalidArgument: return "invalid argument";
    case ErrorCode::DimsMismatch: return "dims mismatch";
    case ErrorCode::NoCenterline: return "no centerline";
    case ErrorCode::NoEligibleCells: return "no eligible cells";
    case ErrorCode::StepSize: return "step sizes violate convergence condition";
    case ErrorCode::ReconnectorContract: return "reconnector contract";
    case ErrorCode::Divergence: return "divergence";
    case ErrorCode::DegenerateImage: return "degenerate image";
    case ErrorCode::EmptySurface: return "empty surface";
    case ErrorCode::ModelLoad: return "model load";
    case ErrorCode::ModelSignature: return "model signature";
    case ErrorCode::ModelOutput: return "model output";
    case ErrorCode::Io: return "io";
    case ErrorCode::Config: return "config";
  }
  return "error";
}

Shape::Shape(std::initializer_list<Index> dims) {
  if (dims.size() < 2 || dims.size() > 3)
    throw Error(ErrorCode::InvalidArgument, "grids have 2 or 3 axes");
  ndim_ = int(dims.size());
  std::copy(dims.begin(), dims.end(), dims_.begin());
  finalize();
}

Shape::Shape(std::span<const Index> dims, std::span<const double> spacing) {
  if (dims.size() < 2 || dims.size() > 3)
    throw Error(ErrorCode::InvalidArgument, "grids have 2 or 3 axes");
  if (!spacing.empty() && spacing.size() != dims.size())
    throw Error(ErrorCode::InvalidArgument, "spacing arity differs from dims");
  ndim_ = int(dims.size());
  std::copy(dims.begin(), dims.end(), dims_.begin());
  if (!spacing.empty()) std::copy(spacing.begin(), spacing.end(), spacing_.begin());
  finalize();
}

void Shape::finalize() {
  for (int k = 0; k < ndim_; ++k) {
    if (dims_[k] < 1) throw Error(ErrorCode::InvalidArgument, "grid extents must be positive");
    if (!(spacing_[k] > 0.0)) throw Error(ErrorCode::InvalidArgument, "spacing must be strictly positive");
  }
  Index s = 1;
  for (int k = ndim_ - 1; k >= 0; --k) {
    strides_[k] = s;
    s *= dims_[k];
  }
  size_ = std::size_t(s);
}

Shape Shape::with_spacing(std::span<const double> spacing) const {
  return Shape(dims(), spacing);
}

Shape Shape::unit_spacing() const {
  Shape s = *this;
  s.spacing_ = {1.0, 1.0, 1.0};
  return s;
}

double Shape::min_spacing() const noexcept {
  return *std::min_element(spacing_.begin(), spacing_.begin() + ndim_);
}

bool Shape::same_dims(const Shape& other) const noexcept {
  if (ndim_ != other.ndim_) return false;
  for (int k = 0; k < ndim_; ++k)
    if (dims_[k] != other.dims_[k]) return false;
  return true;
}

bool Shape::operator==(const Shape& other) const noexcept {
  if (!same_dims(other)) return false;
  for (int k = 0; k < ndim_; ++k)
    if (spacing_[k] != other.spacing_[k]) return false;
  return true;
}

std::vector<Coord> neighbor_offsets(int ndim, Connectivity connectivity) {
  std::vector<Coord> out;
  const Index zlo = ndim == 3 ? -1 : 0, zhi = ndim == 3 ? 1 : 0;
  for (Index a = -1; a <= 1; ++a)
    for (Index b = -1; b <= 1; ++b)
      for (Index c = zlo; c <= zhi; ++c) {
        const int nz = int(a != 0) + int(b != 0) + int(c != 0);
        if (nz == 0) continue;
        if (connectivity == Connectivity::Face && nz != 1) continue;
        out.push_back(ndim == 3 ? Coord{a, b, c} : Coord{a, b, 0});
      }
  return out;
}

void require_same_dims(const Shape& a, const Shape& b, const char* what) {
  if (!a.same_dims(b)) throw Error(ErrorCode::DimsMismatch, what);
}

BinaryMask complement(const BinaryMask& m) {
  BinaryMask out(m.shape());
  for (std::size_t i = 0; i < m.size(); ++i) out[i] = m[i] ? 0 : 1;
  return out;
}

std::size_t count(const BinaryMask& m) {
  return std::size_t(std::count_if(m.values().begin(), m.values().end(), [](auto v) { return v != 0; }));
}

namespace {
template <class Op>
BinaryMask combine(const BinaryMask& a, const BinaryMask& b, Op op) {
  require_same_dims(a.shape(), b.shape(), "mask operands differ in dims");
  BinaryMask out(a.shape());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = op(a[i] != 0, b[i] != 0) ? 1 : 0;
  return out;
}
}  // namespace

BinaryMask mask_or(const BinaryMask& a, const BinaryMask& b) {
  return combine(a, b, [](bool x, bool y) { return x || y; });
}
BinaryMask mask_and(const BinaryMask& a, const BinaryMask& b) {
  return combine(a, b, [](bool x, bool y) { return x && y; });
}
BinaryMask mask_minus(const BinaryMask& a, const BinaryMask& b) {
  return combine(a, b, [](bool x, bool y) { return x && !y; });
}

bool is_subset(const BinaryMask& a, const BinaryMask& b) {
  require_same_dims(a.shape(), b.shape(), "mask operands differ in dims");
  for (std::size_t i = 0; i < a.size(); ++i)
    if (a[i] && !b[i]) return false;
  return true;
}

ScalarField to_scalar(const BinaryMask& m) {
  ScalarField out(m.shape());
  for (std::size_t i = 0; i < m.size(); ++i) out[i] = m[i] ? 1.0 : 0.0;
  return out;
}

BinaryMask threshold(const ScalarField& f, double level) {
  BinaryMask out(f.shape());
  for (std::size_t i = 0; i < f.size(); ++i) out[i] = f[i] >= level ? 1 : 0;
  return out;
}

}  // namespace curvseg
