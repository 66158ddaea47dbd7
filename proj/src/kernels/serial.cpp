// Reference kernels: plain loops, one cell at a time. Kept for testing the
// parallel versions and as the baseline in bench/.

#include <algorithm>
#include <cmath>
#include <vector>

#include "curvseg/kernels.hpp"

namespace curvseg::kernels::serial {

void gradient(const Shape& shape, std::span<const double> u, std::span<double> out) {
  const std::size_t n = shape.size();
  for (std::size_t i = 0; i < n; ++i) {
    const Coord c = shape.coord(Index(i));
    for (int k = 0; k < shape.ndim(); ++k) {
      const Index s = shape.stride(k);
      out[std::size_t(k) * n + i] = c[k] + 1 < shape.dim(k) ? (u[i + s] - u[i]) / shape.spacing(k) : 0.0;
    }
  }
}

void divergence(const Shape& shape, std::span<const double> v, std::span<double> out) {
  const std::size_t n = shape.size();
  for (std::size_t i = 0; i < n; ++i) {
    const Coord c = shape.coord(Index(i));
    double acc = 0.0;
    for (int k = 0; k < shape.ndim(); ++k) {
      const std::size_t base = std::size_t(k) * n;
      const Index s = shape.stride(k);
      const double here = c[k] + 1 < shape.dim(k) ? v[base + i] : 0.0;
      const double prev = c[k] > 0 ? v[base + i - s] : 0.0;
      acc += (here - prev) / shape.spacing(k);
    }
    out[i] = acc;
  }
}

void project_unit_interval(std::span<const double> in, std::span<double> out) {
  for (std::size_t i = 0; i < in.size(); ++i) out[i] = std::clamp(in[i], 0.0, 1.0);
}

void prox_dual_tv(int ndim, std::span<const double> w, double lambda, std::span<double> out) {
  const std::size_t n = w.size() / std::size_t(ndim);
  for (std::size_t i = 0; i < n; ++i) {
    double norm2 = 0.0;
    for (int k = 0; k < ndim; ++k) norm2 += w[std::size_t(k) * n + i] * w[std::size_t(k) * n + i];
    const double norm = std::sqrt(norm2);
    const double scale = norm > lambda ? lambda / norm : 1.0;
    for (int k = 0; k < ndim; ++k) out[std::size_t(k) * n + i] = w[std::size_t(k) * n + i] * scale;
  }
}

void chan_weight(std::span<const double> f, double c1, double c2, std::span<double> out) {
  for (std::size_t i = 0; i < f.size(); ++i) {
    const double a = c1 - f[i];
    const double b = c2 - f[i];
    out[i] = a * a - b * b;
  }
}

void primal_forward(std::span<const double> u, std::span<const double> cf, std::span<const double> div_v,
                    double tau, std::span<double> p) {
  for (std::size_t i = 0; i < u.size(); ++i) p[i] = u[i] - tau * (cf[i] - div_v[i]);
}

void axpy(std::span<const double> a, double sigma, std::span<const double> g, std::span<double> out) {
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] + sigma * g[i];
}

void extrapolate(std::span<const double> a, std::span<const double> b, std::span<double> out) {
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = 2.0 * a[i] - b[i];
}

double max_abs_diff(std::span<const double> a, std::span<const double> b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

void median_filter(const Shape& shape, std::span<const double> f, int radius, std::span<double> out) {
  std::size_t window = 1;
  for (int k = 0; k < shape.ndim(); ++k) window *= std::size_t(2 * radius + 1);
  std::vector<double> scratch(window);
  for (std::size_t i = 0; i < shape.size(); ++i) out[i] = box_median(shape, f, Index(i), radius, scratch.data());
}

void squared_edt(const Shape& shape, std::span<double> values) {
  std::vector<Index> v;
  std::vector<double> z, line_out;
  for (int k = 0; k < shape.ndim(); ++k) {
    const Index d = shape.dim(k);
    const Index s = shape.stride(k);
    v.resize(std::size_t(d));
    z.resize(std::size_t(d) + 1);
    line_out.resize(std::size_t(d));
    for (std::size_t i = 0; i < shape.size(); ++i) {
      // Start of a line along axis k: coordinate k is zero.
      if (shape.coord(Index(i))[k] != 0) continue;
      edt_line(values.data() + i, line_out.data(), d, s, shape.spacing(k), v.data(), z.data());
      for (Index x = 0; x < d; ++x) values[i + std::size_t(x * s)] = line_out[std::size_t(x)];
    }
  }
}

}  // namespace curvseg::kernels::serial
