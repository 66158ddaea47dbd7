#include <algorithm>
#include <cmath>
#include <vector>

#include "curvseg/kernels.hpp"

namespace curvseg::kernels::parallel {

namespace {

// Iterates axis k as (outer, along, inner) blocks so the inner loop is
// contiguous: cell = (o * d + j) * s + t.
struct AxisBlocks {
  Index outer, d, s;
  AxisBlocks(const Shape& shape, int k)
      : outer(Index(shape.size()) / (shape.dim(k) * shape.stride(k))), d(shape.dim(k)), s(shape.stride(k)) {}
};

}  // namespace

void gradient(const Shape& shape, std::span<const double> u, std::span<double> out) {
  const std::size_t n = shape.size();
  for (int k = 0; k < shape.ndim(); ++k) {
    const AxisBlocks b(shape, k);
    const double h = shape.spacing(k);
    double* g = out.data() + std::size_t(k) * n;
    const double* src = u.data();
#pragma omp parallel for schedule(static)
    for (Index row = 0; row < b.outer * b.d; ++row) {
      const Index j = row % b.d;
      const Index base = row * b.s;
      if (j + 1 < b.d) {
        for (Index t = 0; t < b.s; ++t) g[base + t] = (src[base + b.s + t] - src[base + t]) / h;
      } else {
        for (Index t = 0; t < b.s; ++t) g[base + t] = 0.0;
      }
    }
  }
}

void divergence(const Shape& shape, std::span<const double> v, std::span<double> out) {
  const std::size_t n = shape.size();
  const int nd = shape.ndim();
  // Accumulate axis by axis in increasing order, matching the reference sum.
  std::fill(out.begin(), out.end(), 0.0);
  for (int k = 0; k < nd; ++k) {
    const AxisBlocks b(shape, k);
    const double h = shape.spacing(k);
    const double* vk = v.data() + std::size_t(k) * n;
    double* dst = out.data();
#pragma omp parallel for schedule(static)
    for (Index row = 0; row < b.outer * b.d; ++row) {
      const Index j = row % b.d;
      const Index base = row * b.s;
      const bool has_here = j + 1 < b.d;
      const bool has_prev = j > 0;
      for (Index t = 0; t < b.s; ++t) {
        const double here = has_here ? vk[base + t] : 0.0;
        const double prev = has_prev ? vk[base + t - b.s] : 0.0;
        dst[base + t] += (here - prev) / h;
      }
    }
  }
}

void project_unit_interval(std::span<const double> in, std::span<double> out) {
  const Index n = Index(in.size());
#pragma omp parallel for schedule(static)
  for (Index i = 0; i < n; ++i) out[i] = std::clamp(in[i], 0.0, 1.0);
}

void prox_dual_tv(int ndim, std::span<const double> w, double lambda, std::span<double> out) {
  const Index n = Index(w.size()) / ndim;
#pragma omp parallel for schedule(static)
  for (Index i = 0; i < n; ++i) {
    double norm2 = 0.0;
    for (int k = 0; k < ndim; ++k) norm2 += w[k * n + i] * w[k * n + i];
    const double norm = std::sqrt(norm2);
    const double scale = norm > lambda ? lambda / norm : 1.0;
    for (int k = 0; k < ndim; ++k) out[k * n + i] = w[k * n + i] * scale;
  }
}

void chan_weight(std::span<const double> f, double c1, double c2, std::span<double> out) {
  const Index n = Index(f.size());
#pragma omp parallel for schedule(static)
  for (Index i = 0; i < n; ++i) {
    const double a = c1 - f[i];
    const double b = c2 - f[i];
    out[i] = a * a - b * b;
  }
}

void primal_forward(std::span<const double> u, std::span<const double> cf, std::span<const double> div_v,
                    double tau, std::span<double> p) {
  const Index n = Index(u.size());
#pragma omp parallel for schedule(static)
  for (Index i = 0; i < n; ++i) p[i] = u[i] - tau * (cf[i] - div_v[i]);
}

void axpy(std::span<const double> a, double sigma, std::span<const double> g, std::span<double> out) {
  const Index n = Index(a.size());
#pragma omp parallel for schedule(static)
  for (Index i = 0; i < n; ++i) out[i] = a[i] + sigma * g[i];
}

void extrapolate(std::span<const double> a, std::span<const double> b, std::span<double> out) {
  const Index n = Index(a.size());
#pragma omp parallel for schedule(static)
  for (Index i = 0; i < n; ++i) out[i] = 2.0 * a[i] - b[i];
}

double max_abs_diff(std::span<const double> a, std::span<const double> b) {
  const Index n = Index(a.size());
  double m = 0.0;
  // max is exact and order-independent, so the reduction stays deterministic.
#pragma omp parallel for schedule(static) reduction(max : m)
  for (Index i = 0; i < n; ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

void median_filter(const Shape& shape, std::span<const double> f, int radius, std::span<double> out) {
  std::size_t window = 1;
  for (int k = 0; k < shape.ndim(); ++k) window *= std::size_t(2 * radius + 1);
  const Index n = Index(shape.size());
#pragma omp parallel
  {
    std::vector<double> scratch(window);
#pragma omp for schedule(static)
    for (Index i = 0; i < n; ++i) out[i] = box_median(shape, f, i, radius, scratch.data());
  }
}

void squared_edt(const Shape& shape, std::span<double> values) {
  for (int k = 0; k < shape.ndim(); ++k) {
    const AxisBlocks b(shape, k);
    const double h = shape.spacing(k);
    const Index lines = b.outer * b.s;
    double* data = values.data();
#pragma omp parallel
    {
      std::vector<Index> v(std::size_t(b.d));
      std::vector<double> z(std::size_t(b.d) + 1), line_out(std::size_t(b.d));
#pragma omp for schedule(static)
      for (Index line = 0; line < lines; ++line) {
        const Index o = line / b.s;
        const Index t = line % b.s;
        double* start = data + o * b.d * b.s + t;
        edt_line(start, line_out.data(), b.d, b.s, h, v.data(), z.data());
        for (Index x = 0; x < b.d; ++x) start[x * b.s] = line_out[std::size_t(x)];
      }
    }
  }
}

}  // namespace curvseg::kernels::parallel
