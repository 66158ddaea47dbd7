#pragma once

// Shape factories and brute-force oracles shared by the test binaries. The
// oracles deliberately avoid the library's algorithms.

#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <set>
#include <vector>

#include "curvseg/grid.hpp"

namespace curvseg::testing {

inline Shape shape2(Index h, Index w) { return Shape{h, w}; }
inline Shape shape3(Index d, Index h, Index w) { return Shape{d, h, w}; }

inline BinaryMask random_mask(const Shape& s, double density, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::bernoulli_distribution on(density);
  BinaryMask m(s);
  for (auto& v : m.values()) v = on(rng) ? 1 : 0;
  return m;
}

inline ScalarField random_field(const Shape& s, std::uint64_t seed, double lo = -1.0, double hi = 1.0) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(lo, hi);
  ScalarField f(s);
  for (auto& v : f.values()) v = u(rng);
  return f;
}

inline VectorField random_vector_field(const Shape& s, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  VectorField v(s);
  for (auto& x : v.data()) x = u(rng);
  return v;
}

/// Cells whose center lies within `radius` of `center` (2D).
inline BinaryMask disc(const Shape& s, double cy, double cx, double radius) {
  BinaryMask m(s);
  for (Index y = 0; y < s.dim(0); ++y)
    for (Index x = 0; x < s.dim(1); ++x)
      if ((y - cy) * (y - cy) + (x - cx) * (x - cx) <= radius * radius) m.at({y, x, 0}) = 1;
  return m;
}

inline BinaryMask annulus(const Shape& s, double cy, double cx, double r_in, double r_out) {
  BinaryMask m(s);
  for (Index y = 0; y < s.dim(0); ++y)
    for (Index x = 0; x < s.dim(1); ++x) {
      const double d2 = (y - cy) * (y - cy) + (x - cx) * (x - cx);
      if (d2 <= r_out * r_out && d2 > r_in * r_in) m.at({y, x, 0}) = 1;
    }
  return m;
}

/// Axis-aligned box [y0, y1) x [x0, x1).
inline BinaryMask box(const Shape& s, Index y0, Index y1, Index x0, Index x1) {
  BinaryMask m(s);
  for (Index y = y0; y < y1; ++y)
    for (Index x = x0; x < x1; ++x) m.at({y, x, 0}) = 1;
  return m;
}

inline BinaryMask box3(const Shape& s, Coord lo, Coord hi) {
  BinaryMask m(s);
  for (Index z = lo[0]; z < hi[0]; ++z)
    for (Index y = lo[1]; y < hi[1]; ++y)
      for (Index x = lo[2]; x < hi[2]; ++x) m.at({z, y, x}) = 1;
  return m;
}

/// Solid torus around the z axis through the grid center.
inline BinaryMask solid_torus(const Shape& s, double major, double minor) {
  BinaryMask m(s);
  const double cz = (s.dim(0) - 1) / 2.0, cy = (s.dim(1) - 1) / 2.0, cx = (s.dim(2) - 1) / 2.0;
  for (Index z = 0; z < s.dim(0); ++z)
    for (Index y = 0; y < s.dim(1); ++y)
      for (Index x = 0; x < s.dim(2); ++x) {
        const double rho = std::hypot(y - cy, x - cx) - major;
        if (rho * rho + (z - cz) * (z - cz) <= minor * minor) m.at({z, y, x}) = 1;
      }
  return m;
}

/// Brute-force nearest-background distance (physical units); +inf if no background.
inline ScalarField brute_distance(const BinaryMask& m) {
  const Shape& s = m.shape();
  ScalarField d(s, 0.0);
  std::vector<Coord> bg;
  for (std::size_t i = 0; i < m.size(); ++i)
    if (!m[i]) bg.push_back(s.coord(Index(i)));
  for (std::size_t i = 0; i < m.size(); ++i) {
    if (!m[i]) continue;
    const Coord c = s.coord(Index(i));
    double best = std::numeric_limits<double>::infinity();
    for (const auto& b : bg) {
      double acc = 0.0;
      for (int k = 0; k < s.ndim(); ++k) {
        const double t = double(c[k] - b[k]) * s.spacing(k);
        acc += t * t;
      }
      best = std::min(best, acc);
    }
    d[i] = std::sqrt(best);
  }
  return d;
}

/// Label propagation until fixpoint: every foreground cell takes the minimum
/// linear index over its neighborhood. Returns per-cell representative (-1 on
/// background).
inline std::vector<Index> propagate_labels(const BinaryMask& m, bool full) {
  const Shape& s = m.shape();
  std::vector<Index> rep(m.size(), -1);
  for (std::size_t i = 0; i < m.size(); ++i)
    if (m[i]) rep[i] = Index(i);
  bool changed = true;
  while (changed) {
    changed = false;
    for (std::size_t i = 0; i < m.size(); ++i) {
      if (!m[i]) continue;
      const Coord c = s.coord(Index(i));
      for (Index a = -1; a <= 1; ++a)
        for (Index b = -1; b <= 1; ++b)
          for (Index e = (s.ndim() == 3 ? -1 : 0); e <= (s.ndim() == 3 ? 1 : 0); ++e) {
            const int nz = int(a != 0) + int(b != 0) + int(e != 0);
            if (nz == 0 || (!full && nz > 1)) continue;
            const Coord n{c[0] + a, c[1] + b, c[2] + e};
            if (!s.contains(n)) continue;
            const auto j = std::size_t(s.linear(n));
            if (m[j] && rep[j] < rep[i]) {
              rep[i] = rep[j];
              changed = true;
            }
          }
    }
  }
  return rep;
}

/// Euler characteristic by enumerating the closure of every foreground voxel
/// on the doubled lattice and summing (-1)^dim over the distinct cells.
inline long long closure_euler(const BinaryMask& m) {
  const Shape& s = m.shape();
  const int nd = s.ndim();
  std::set<Coord> cells;
  for (std::size_t i = 0; i < m.size(); ++i) {
    if (!m[i]) continue;
    const Coord c = s.coord(Index(i));
    for (Index a = 0; a < 3; ++a)
      for (Index b = 0; b < 3; ++b)
        for (Index e = 0; e < (nd == 3 ? 3 : 1); ++e)
          cells.insert(Coord{2 * c[0] + a, 2 * c[1] + b, nd == 3 ? 2 * c[2] + e : 0});
  }
  long long chi = 0;
  for (const auto& c : cells) {
    int dim = 0;
    for (int k = 0; k < nd; ++k) dim += int(c[std::size_t(k)] % 2);
    chi += dim % 2 ? -1 : 1;
  }
  return chi;
}

/// Number of distinct representatives in a propagate_labels result.
inline long long distinct_labels(const std::vector<Index>& rep) {
  std::set<Index> s;
  for (Index r : rep)
    if (r >= 0) s.insert(r);
  return (long long)s.size();
}

/// Background components (face adjacency) that never reach the grid border.
inline long long enclosed_background(const BinaryMask& m) {
  const Shape& s = m.shape();
  BinaryMask bg(s);
  for (std::size_t i = 0; i < m.size(); ++i) bg[i] = m[i] ? 0 : 1;
  const auto rep = propagate_labels(bg, false);
  std::set<Index> all, open;
  for (std::size_t i = 0; i < m.size(); ++i) {
    if (rep[i] < 0) continue;
    all.insert(rep[i]);
    const Coord c = s.coord(Index(i));
    for (int k = 0; k < s.ndim(); ++k)
      if (c[std::size_t(k)] == 0 || c[std::size_t(k)] == s.dim(k) - 1) open.insert(rep[i]);
  }
  return (long long)(all.size() - open.size());
}

/// Hollow box: the 1-voxel-thick surface of [lo, hi).
inline BinaryMask hollow_box3(const Shape& s, Coord lo, Coord hi) {
  BinaryMask m = box3(s, lo, hi);
  for (Index z = lo[0] + 1; z < hi[0] - 1; ++z)
    for (Index y = lo[1] + 1; y < hi[1] - 1; ++y)
      for (Index x = lo[2] + 1; x < hi[2] - 1; ++x) m.at({z, y, x}) = 0;
  return m;
}

/// True if some 2x2 block in a 2D mask is entirely foreground.
inline bool has_full_2x2(const BinaryMask& m) {
  const Shape& s = m.shape();
  for (Index y = 0; y + 1 < s.dim(0); ++y)
    for (Index x = 0; x + 1 < s.dim(1); ++x)
      if (m.at({y, x, 0}) && m.at({y + 1, x, 0}) && m.at({y, x + 1, 0}) && m.at({y + 1, x + 1, 0})) return true;
  return false;
}

}  // namespace curvseg::testing
