#include "curvseg/morphology.hpp"

#include <algorithm>

#include "curvseg/distance.hpp"

namespace curvseg {

namespace {

BinaryMask dilate_ball(const BinaryMask& m, double radius) {
  // The squared distance transform of the foreground, in cell units, gives
  // the exact ball dilation for any radius in one linear pass.
  const ScalarField d2 = squared_distance_to(BinaryMask(m.shape().unit_spacing(), m.storage()));
  const double r2 = radius * radius;
  BinaryMask out(m.shape());
  for (std::size_t i = 0; i < m.size(); ++i) out[i] = d2[i] <= r2 ? 1 : 0;
  return out;
}

}  // namespace

BinaryMask morph(const BinaryMask& m, MorphOp op, double radius) {
  if (radius < 0.0) throw Error(ErrorCode::InvalidArgument, "structuring element radius must be >= 0");
  if (radius < 1.0) return m;
  switch (op) {
    case MorphOp::Dilate: return dilate_ball(m, radius);
    case MorphOp::Erode: return complement(dilate_ball(complement(m), radius));
    case MorphOp::Close: return complement(dilate_ball(complement(dilate_ball(m, radius)), radius));
  }
  return m;
}

LabelField connected_components(const BinaryMask& m, Connectivity connectivity) {
  const Shape& shape = m.shape();
  LabelField labels(shape, 0);
  const auto offsets = neighbor_offsets(shape.ndim(), connectivity);
  std::vector<Index> stack;
  std::int32_t next = 0;
  for (std::size_t seed = 0; seed < m.size(); ++seed) {
    if (!m[seed] || labels[seed] != 0) continue;
    ++next;
    labels[seed] = next;
    stack.push_back(Index(seed));
    while (!stack.empty()) {
      const Index cur = stack.back();
      stack.pop_back();
      const Coord c = shape.coord(cur);
      for (const auto& o : offsets) {
        const Coord nb{c[0] + o[0], c[1] + o[1], c[2] + o[2]};
        if (!shape.contains(nb)) continue;
        const Index j = shape.linear(nb);
        if (m[std::size_t(j)] && labels[std::size_t(j)] == 0) {
          labels[std::size_t(j)] = next;
          stack.push_back(j);
        }
      }
    }
  }
  return labels;
}

int label_count(const LabelField& labels) {
  std::int32_t k = 0;
  for (auto v : labels.values()) k = std::max(k, v);
  return k;
}

std::vector<std::size_t> label_sizes(const LabelField& labels) {
  std::vector<std::size_t> sizes(std::size_t(label_count(labels)) + 1, 0);
  for (auto v : labels.values()) ++sizes[std::size_t(v)];
  return sizes;
}

BinaryMask remove_small_components(const BinaryMask& m, std::size_t min_size, Connectivity connectivity) {
  if (min_size == 0) return m;
  const LabelField labels = connected_components(m, connectivity);
  const auto sizes = label_sizes(labels);
  BinaryMask out(m.shape());
  for (std::size_t i = 0; i < m.size(); ++i) {
    const auto l = std::size_t(labels[i]);
    out[i] = (l != 0 && sizes[l] >= min_size) ? 1 : 0;
  }
  return out;
}

BinaryMask fill_small_holes(const BinaryMask& m, std::size_t max_size, Connectivity connectivity) {
  if (max_size == 0) return m;
  const Shape& shape = m.shape();
  const LabelField holes = connected_components(complement(m), connectivity);
  auto sizes = label_sizes(holes);
  std::vector<char> touches_border(sizes.size(), 0);
  for (std::size_t i = 0; i < m.size(); ++i) {
    if (holes[i] == 0) continue;
    const Coord c = shape.coord(Index(i));
    for (int k = 0; k < shape.ndim(); ++k)
      if (c[k] == 0 || c[k] == shape.dim(k) - 1) touches_border[std::size_t(holes[i])] = 1;
  }
  BinaryMask out = m;
  for (std::size_t i = 0; i < m.size(); ++i) {
    const auto l = std::size_t(holes[i]);
    if (l != 0 && !touches_border[l] && sizes[l] < max_size) out[i] = 1;
  }
  return out;
}

}  // namespace curvseg
