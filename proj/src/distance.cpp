#include "curvseg/distance.hpp"

#include <cmath>
#include <limits>

#include "curvseg/kernels.hpp"

namespace curvseg {

ScalarField squared_distance_to(const BinaryMask& sites) {
  constexpr double inf = std::numeric_limits<double>::infinity();
  ScalarField d(sites.shape());
  for (std::size_t i = 0; i < sites.size(); ++i) d[i] = sites[i] ? 0.0 : inf;
  kernels::parallel::squared_edt(sites.shape(), d.values());
  return d;
}

ScalarField distance_map(const BinaryMask& m) {
  ScalarField d = squared_distance_to(complement(m));
  for (auto& x : d.values()) x = std::sqrt(x);
  return d;
}

}  // namespace curvseg
