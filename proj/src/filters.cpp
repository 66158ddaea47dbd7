#include "curvseg/filters.hpp"

#include <algorithm>

#include "curvseg/kernels.hpp"

namespace curvseg {

ScalarField median_subtract(const ScalarField& f, int radius) {
  if (radius < 1) throw Error(ErrorCode::InvalidArgument, "median radius must be >= 1");
  ScalarField med(f.shape());
  kernels::parallel::median_filter(f.shape(), f.values(), radius, med.values());
  for (std::size_t i = 0; i < f.size(); ++i) med[i] = f[i] - med[i];
  return med;
}

ScalarField normalize_unit(const ScalarField& f) {
  ScalarField out(f.shape());
  if (f.empty()) return out;
  const auto [lo, hi] = std::minmax_element(f.values().begin(), f.values().end());
  const double range = *hi - *lo;
  if (range <= 0.0) return out;
  for (std::size_t i = 0; i < f.size(); ++i) out[i] = (f[i] - *lo) / range;
  return out;
}

}  // namespace curvseg
