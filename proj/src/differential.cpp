#include "curvseg/differential.hpp"

#include <cmath>

#include "curvseg/kernels.hpp"

namespace curvseg {

VectorField gradient(const ScalarField& u) {
  VectorField g(u.shape());
  kernels::parallel::gradient(u.shape(), u.values(), g.data());
  return g;
}

ScalarField divergence(const VectorField& v) {
  ScalarField d(v.shape());
  kernels::parallel::divergence(v.shape(), v.data(), d.values());
  return d;
}

double operator_norm_sq(const Shape& shape) {
  double bound = 0.0;
  for (int k = 0; k < shape.ndim(); ++k) bound += 4.0 / (shape.spacing(k) * shape.spacing(k));
  return bound;
}

double inner(const ScalarField& a, const ScalarField& b) {
  require_same_dims(a.shape(), b.shape(), "inner product operands differ in dims");
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
  return acc;
}

double inner(const VectorField& a, const VectorField& b) {
  require_same_dims(a.shape(), b.shape(), "inner product operands differ in dims");
  double acc = 0.0;
  const auto x = a.data();
  const auto y = b.data();
  for (std::size_t i = 0; i < x.size(); ++i) acc += x[i] * y[i];
  return acc;
}

double total_variation(const ScalarField& u) {
  const VectorField g = gradient(u);
  const std::size_t n = u.size();
  double tv = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double s = 0.0;
    for (int k = 0; k < g.arity(); ++k) s += g.component(k)[i] * g.component(k)[i];
    tv += std::sqrt(s);
  }
  return tv;
}

}  // namespace curvseg
