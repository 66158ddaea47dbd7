#include <algorithm>
#include <limits>

#include "curvseg/kernels.hpp"

#ifdef CURVSEG_HAVE_OPENMP
#include <omp.h>
#endif

namespace curvseg::kernels {

void edt_line(const double* f, double* out, Index n, Index stride, double h, Index* v, double* z) {
  constexpr double inf = std::numeric_limits<double>::infinity();
  const double h2 = h * h;
  Index k = -1;
  for (Index q = 0; q < n; ++q) {
    const double fq = f[q * stride];
    if (fq == inf) continue;
    if (k < 0) {
      k = 0;
      v[0] = q;
      z[0] = -inf;
      z[1] = inf;
      continue;
    }
    auto intersect = [&](Index p) {
      const double fp = f[p * stride];
      return ((fq + h2 * double(q) * double(q)) - (fp + h2 * double(p) * double(p))) / (2.0 * h2 * double(q - p));
    };
    double s = intersect(v[k]);
    // z[0] is -inf, so k never drops below 0.
    while (s <= z[k]) {
      --k;
      s = intersect(v[k]);
    }
    ++k;
    v[k] = q;
    z[k] = s;
    z[k + 1] = inf;
  }
  if (k < 0) {
    for (Index x = 0; x < n; ++x) out[x] = inf;
    return;
  }
  Index j = 0;
  for (Index x = 0; x < n; ++x) {
    while (z[j + 1] < double(x)) ++j;
    const double d = double(x - v[j]);
    out[x] = h2 * d * d + f[v[j] * stride];
  }
}

double box_median(const Shape& shape, std::span<const double> f, Index cell, int radius, double* window) {
  const Coord c = shape.coord(cell);
  const int nd = shape.ndim();
  Coord lo{0, 0, 0}, hi{0, 0, 0};
  for (int k = 0; k < nd; ++k) {
    lo[k] = c[k] - radius;
    hi[k] = c[k] + radius;
  }
  auto clamp = [&](Index x, int axis) { return std::clamp<Index>(x, 0, shape.dim(axis) - 1); };
  std::size_t n = 0;
  if (nd == 2) {
    for (Index a = lo[0]; a <= hi[0]; ++a)
      for (Index b = lo[1]; b <= hi[1]; ++b)
        window[n++] = f[std::size_t(clamp(a, 0) * shape.stride(0) + clamp(b, 1))];
  } else {
    for (Index a = lo[0]; a <= hi[0]; ++a)
      for (Index b = lo[1]; b <= hi[1]; ++b)
        for (Index d = lo[2]; d <= hi[2]; ++d)
          window[n++] =
              f[std::size_t(clamp(a, 0) * shape.stride(0) + clamp(b, 1) * shape.stride(1) + clamp(d, 2))];
  }
  // Window size is always odd.
  std::nth_element(window, window + n / 2, window + n);
  return window[n / 2];
}

int max_threads() {
#ifdef CURVSEG_HAVE_OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

}  // namespace curvseg::kernels
