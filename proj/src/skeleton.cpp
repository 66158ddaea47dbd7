#include "curvseg/skeleton.hpp"

#include <array>
#include <cstdlib>
#include <vector>

namespace curvseg {

namespace {

// Positions in the 3x3x3 neighborhood: (a+1)*9 + (b+1)*3 + (c+1), center 13.
// 2D grids only use the c == 0 plane.
constexpr int kCenter = 13;

struct Offsets {
  int a, b, c;
};

constexpr Offsets offsets_of(int pos) { return {pos / 9 - 1, (pos / 3) % 3 - 1, pos % 3 - 1}; }

int nonzero_axes(int pos) {
  const auto o = offsets_of(pos);
  return int(o.a != 0) + int(o.b != 0) + int(o.c != 0);
}

struct Topology {
  // Which positions exist for the dimension, and adjacency between them.
  std::vector<int> positions;
  std::array<std::vector<int>, 27> full_adj;  // 8 or 26 adjacency
  std::array<std::vector<int>, 27> face_adj;  // 4 or 6 adjacency
  std::vector<int> background_positions;      // N8 in 2D, N18 in 3D, center excluded
  std::vector<int> face_neighbors;            // of the center
};

Topology build_topology(int ndim) {
  Topology t;
  for (int p = 0; p < 27; ++p) {
    if (p == kCenter) continue;
    if (ndim == 2 && offsets_of(p).c != 0) continue;
    t.positions.push_back(p);
    if (ndim == 2 || nonzero_axes(p) <= 2) t.background_positions.push_back(p);
    if (nonzero_axes(p) == 1) t.face_neighbors.push_back(p);
  }
  for (int p : t.positions)
    for (int q : t.positions) {
      if (p == q) continue;
      const auto a = offsets_of(p), b = offsets_of(q);
      const int da = std::abs(a.a - b.a), db = std::abs(a.b - b.b), dc = std::abs(a.c - b.c);
      if (da > 1 || db > 1 || dc > 1) continue;
      t.full_adj[p].push_back(q);
      if (da + db + dc == 1) t.face_adj[p].push_back(q);
    }
  return t;
}

const Topology& topology(int ndim) {
  static const Topology t2 = build_topology(2);
  static const Topology t3 = build_topology(3);
  return ndim == 2 ? t2 : t3;
}

using Hood = std::array<bool, 27>;

Hood gather(const BinaryMask& m, Index cell) {
  const Shape& s = m.shape();
  Hood h{};
  const Coord c = s.coord(cell);
  const int zr = s.ndim() == 3 ? 1 : 0;
  for (int a = -1; a <= 1; ++a)
    for (int b = -1; b <= 1; ++b)
      for (int d = -zr; d <= zr; ++d) {
        const Coord n = s.ndim() == 3 ? Coord{c[0] + a, c[1] + b, c[2] + d} : Coord{c[0] + a, c[1] + b, 0};
        h[std::size_t((a + 1) * 9 + (b + 1) * 3 + (d + 1))] = s.contains(n) && m[std::size_t(s.linear(n))];
      }
  return h;
}

// Components of `member` using `adj`; with `must_touch`, only components that
// contain one of those positions are counted.
int count_components(const std::array<bool, 27>& member, const std::array<std::vector<int>, 27>& adj,
                     const std::vector<int>& candidates, const std::vector<int>* must_touch) {
  std::array<int, 27> comp{};
  comp.fill(0);
  int n = 0;
  std::array<int, 27> stack{};
  for (int seed : candidates) {
    if (!member[seed] || comp[seed]) continue;
    ++n;
    int top = 0;
    stack[top++] = seed;
    comp[seed] = n;
    while (top) {
      const int p = stack[--top];
      for (int q : adj[p])
        if (member[q] && !comp[q]) {
          comp[q] = n;
          stack[top++] = q;
        }
    }
  }
  if (!must_touch) return n;
  std::array<bool, 28> touched{};
  int counted = 0;
  for (int p : *must_touch)
    if (member[p] && !touched[comp[p]]) {
      touched[comp[p]] = true;
      ++counted;
    }
  return counted;
}

bool simple_in_hood(const Hood& h, int ndim) {
  const Topology& t = topology(ndim);
  std::array<bool, 27> fg{}, bg{};
  for (int p : t.positions) fg[p] = h[p];
  if (count_components(fg, t.full_adj, t.positions, nullptr) != 1) return false;
  for (int p : t.background_positions) bg[p] = !h[p];
  return count_components(bg, t.face_adj, t.background_positions, &t.face_neighbors) == 1;
}

int foreground_neighbors(const Hood& h, int ndim) {
  int n = 0;
  for (int p : topology(ndim).positions) n += h[p] ? 1 : 0;
  return n;
}

bool deletable(const BinaryMask& m, Index cell) {
  const Hood h = gather(m, cell);
  const int nd = m.shape().ndim();
  if (foreground_neighbors(h, nd) <= 1) return false;  // end point or isolated
  return simple_in_hood(h, nd);
}

}  // namespace

bool is_simple_point(const BinaryMask& m, Index cell) {
  return simple_in_hood(gather(m, cell), m.shape().ndim());
}

BinaryMask skeletonize(const BinaryMask& m) {
  BinaryMask out = m;
  const Shape& s = out.shape();
  const int nd = s.ndim();
  std::vector<Coord> directions;
  for (int k = 0; k < nd; ++k) {
    Coord lo{0, 0, 0}, hi{0, 0, 0};
    lo[k] = -1;
    hi[k] = 1;
    directions.push_back(lo);
    directions.push_back(hi);
  }
  std::vector<Index> candidates;
  int unchanged = 0;
  std::size_t dir = 0;
  while (unchanged < int(directions.size())) {
    const Coord d = directions[dir];
    dir = (dir + 1) % directions.size();
    candidates.clear();
    for (std::size_t i = 0; i < out.size(); ++i) {
      if (!out[i]) continue;
      const Coord c = s.coord(Index(i));
      const Coord n{c[0] + d[0], c[1] + d[1], c[2] + d[2]};
      if (s.contains(n) && out[std::size_t(s.linear(n))]) continue;  // not a border cell for d
      if (deletable(out, Index(i))) candidates.push_back(Index(i));
    }
    bool changed = false;
    for (Index cell : candidates) {
      if (deletable(out, cell)) {
        out[std::size_t(cell)] = 0;
        changed = true;
      }
    }
    unchanged = changed ? 0 : unchanged + 1;
  }
  return out;
}

}  // namespace curvseg
