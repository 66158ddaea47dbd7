#include "curvseg/synthgen.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "curvseg/distance.hpp"
#include "curvseg/morphology.hpp"
#include "curvseg/skeleton.hpp"

namespace curvseg {

namespace {

void require(bool ok, const char* what) {
  if (!ok) throw Error(ErrorCode::InvalidArgument, what);
}

bool probability(double x) { return x > 0.0 && x <= 1.0; }

}  // namespace

void GenParams::validate() const {
  require(m >= 1, "m must be >= 1");
  require(p >= 1 && p <= m, "p must satisfy 1 <= p <= m");
  require(C > 0.0, "C must be positive");
  require(resolved_size_std() >= 0.0, "size_std must be >= 0");
  require(probability(removal_prob), "removal_prob must be in (0, 1]");
  require(n_disconnections >= 0, "n_disconnections must be >= 0");
  require(n_fragments >= 0, "n_fragments must be >= 0");
  require(fragment_radius_range[0] > 0.0 && fragment_radius_range[0] <= fragment_radius_range[1],
          "fragment_radius_range must satisfy 0 < min <= max");
  require(probability(fragment_fill_prob), "fragment_fill_prob must be in (0, 1]");
}

LabelField classify_radii(const BinaryMask& centerline, const ScalarField& dist, int m) {
  require_same_dims(centerline.shape(), dist.shape(), "classify_radii");
  require(m >= 1, "m must be >= 1");
  double lo = INFINITY, hi = -INFINITY;
  for (std::size_t i = 0; i < centerline.size(); ++i) {
    if (!centerline[i]) continue;
    require(dist[i] > 0.0 && std::isfinite(dist[i]), "centerline cells need a finite positive distance");
    lo = std::min(lo, dist[i]);
    hi = std::max(hi, dist[i]);
  }
  if (lo > hi) throw Error(ErrorCode::NoCenterline, "classify_radii");
  LabelField classes(centerline.shape());
  const double width = (hi - lo) / m;
  for (std::size_t i = 0; i < centerline.size(); ++i) {
    if (!centerline[i]) continue;
    int c = 1;
    if (width > 0.0) c = std::min(m, int(std::floor((dist[i] - lo) / width)) + 1);
    classes[i] = c;
  }
  return classes;
}

double class_probability(int p, int i) {
  if (i < 1 || i > p) return 0.0;
  return std::ldexp(1.0, p - i) / (std::ldexp(1.0, p) - 1.0);
}

int sample_class(int p, Rng& rng) {
  require(p >= 1, "p must be >= 1");
  std::vector<double> w(static_cast<std::size_t>(p));
  for (int i = 1; i <= p; ++i) w[std::size_t(i - 1)] = std::ldexp(1.0, p - i);
  std::discrete_distribution<int> law(w.begin(), w.end());
  return law(rng) + 1;
}

namespace {

// Offsets (in cells) of the ellipsoid sum (o_k / r_k)^2 <= 1, row-major.
std::vector<Coord> ellipsoid_offsets(int ndim, const std::array<double, 3>& r) {
  std::array<Index, 3> ext{0, 0, 0};
  for (int k = 0; k < ndim; ++k) ext[std::size_t(k)] = Index(std::floor(r[std::size_t(k)]));
  std::vector<Coord> out;
  for (Index a = -ext[0]; a <= ext[0]; ++a)
    for (Index b = -ext[1]; b <= ext[1]; ++b)
      for (Index c = -ext[2]; c <= ext[2]; ++c) {
        const std::array<Index, 3> o{a, b, c};
        double acc = 0.0;
        for (int k = 0; k < ndim; ++k) {
          const double t = double(o[std::size_t(k)]) / r[std::size_t(k)];
          acc += t * t;
        }
        if (acc <= 1.0 + 1e-12) out.push_back({a, b, c});
      }
  return out;
}

Coord shifted(const Coord& c, const Coord& o) { return {c[0] + o[0], c[1] + o[1], c[2] + o[2]}; }

}  // namespace

Cut make_disconnection(const BinaryMask& mask, const Coord& center, double size, double removal_prob, Rng& rng) {
  const Shape& s = mask.shape();
  require(s.contains(center), "disconnection center outside the grid");
  require(size > 0.0, "disconnection size must be positive");
  require(probability(removal_prob), "removal_prob must be in (0, 1]");
  Cut cut{mask, BinaryMask(s)};
  std::bernoulli_distribution drop(removal_prob);
  for (const Coord& o : ellipsoid_offsets(s.ndim(), {size, size, size})) {
    const Coord c = shifted(center, o);
    if (!s.contains(c)) continue;
    const auto i = std::size_t(s.linear(c));
    if (mask[i] && drop(rng)) {
      cut.mask[i] = 0;
      cut.removed[i] = 1;
    }
  }
  return cut;
}

Augmented add_fragments(const BinaryMask& mask, const GenParams& params, Rng& rng, const BinaryMask* keep_out) {
  const Shape& s = mask.shape();
  if (keep_out) require_same_dims(s, keep_out->shape(), "add_fragments");
  const int nd = s.ndim();
  Augmented out{mask, BinaryMask(s)};
  std::uniform_real_distribution<double> radius(params.fragment_radius_range[0], params.fragment_radius_range[1]);
  std::bernoulli_distribution fill(params.fragment_fill_prob);
  for (int f = 0; f < params.n_fragments; ++f) {
    std::array<double, 3> r{1.0, 1.0, 1.0};
    if (nd == 2) {
      r[0] = r[1] = radius(rng);
    } else {
      for (auto& x : r) x = radius(rng);
    }
    std::array<std::uniform_int_distribution<Index>, 3> pos;
    for (int k = 0; k < nd; ++k) {
      const auto margin = Index(std::ceil(r[std::size_t(k)]));
      const Index lo = margin, hi = s.dim(k) - 1 - margin;
      pos[std::size_t(k)] = lo <= hi ? std::uniform_int_distribution<Index>(lo, hi)
                                     : std::uniform_int_distribution<Index>(0, s.dim(k) - 1);
    }
    Coord center{0, 0, 0};
    for (int attempt = 0; attempt < 32; ++attempt) {
      for (int k = 0; k < nd; ++k) center[std::size_t(k)] = pos[std::size_t(k)](rng);
      if (!mask.at(center)) break;
    }
    for (const Coord& o : ellipsoid_offsets(nd, r)) {
      const Coord c = shifted(center, o);
      if (!s.contains(c)) continue;
      const auto i = std::size_t(s.linear(c));
      if (mask[i] || out.fragments[i] || (keep_out && (*keep_out)[i])) continue;
      if (fill(rng)) {
        out.fragments[i] = 1;
        out.mask[i] = 1;
      }
    }
  }
  return out;
}

namespace {

// True if `removed` would delete every cell of some component of `mask`.
bool removes_whole_component(const BinaryMask& mask, const BinaryMask& removed) {
  const LabelField labels = connected_components(mask, Connectivity::Full);
  std::vector<std::size_t> total = label_sizes(labels), gone(total.size(), 0);
  for (std::size_t i = 0; i < mask.size(); ++i)
    if (removed[i]) ++gone[std::size_t(labels[i])];
  for (std::size_t l = 1; l < total.size(); ++l)
    if (gone[l] && gone[l] == total[l]) return true;
  return false;
}

}  // namespace

DatasetPair generate_pair(const BinaryMask& clean, const GenParams& params) {
  params.validate();
  DatasetPair pair;
  pair.clean = clean;
  pair.seed = params.seed;
  pair.missing = BinaryMask(clean.shape());
  Rng rng(params.seed);

  const BinaryMask centerline = skeletonize(clean);
  const LabelField classes = classify_radii(centerline, distance_map(clean), params.m);
  std::vector<std::vector<Index>> by_class(std::size_t(params.p) + 1);
  for (std::size_t i = 0; i < classes.size(); ++i)
    if (classes[i] >= 1 && classes[i] <= params.p) by_class[std::size_t(classes[i])].push_back(Index(i));

  const double sd = params.resolved_size_std();
  BinaryMask broken = clean;
  for (int d = 0; d < params.n_disconnections; ++d) {
    int cls = 0;
    bool found = false;
    for (int attempt = 0; attempt < 32 && !found; ++attempt) {
      cls = sample_class(params.p, rng);
      found = !by_class[std::size_t(cls)].empty();
    }
    if (!found) {
      pair.skipped.push_back({d, cls, "no eligible cells"});
      continue;
    }
    const auto& cells = by_class[std::size_t(cls)];
    std::uniform_int_distribution<std::size_t> pick(0, cells.size() - 1);
    const Coord center = clean.shape().coord(cells[pick(rng)]);
    const double mean = params.C / (cls + 1);
    double size = mean;
    if (sd > 0.0) size = std::normal_distribution<double>(mean, sd)(rng);
    size = std::max(1.0, size);

    Cut cut = make_disconnection(broken, center, size, params.removal_prob, rng);
    if (removes_whole_component(broken, cut.removed)) {
      pair.skipped.push_back({d, cls, "would remove a whole component"});
      continue;
    }
    broken = std::move(cut.mask);
    pair.missing = mask_or(pair.missing, cut.removed);
    pair.records.push_back({center, cls, size});
  }

  Augmented aug = add_fragments(broken, params, rng, &clean);
  pair.broken = std::move(aug.mask);
  pair.fragments = std::move(aug.fragments);
  return pair;
}

namespace {

using Vec = std::array<double, 3>;

double dot(const Vec& a, const Vec& b) { return a[0] * b[0] + a[1] * b[1] + a[2] * b[2]; }

Vec normalized(Vec v) {
  const double n = std::sqrt(dot(v, v));
  if (n == 0.0) return {1.0, 0.0, 0.0};
  for (auto& x : v) x /= n;
  return v;
}

Vec random_direction(int nd, Rng& rng) {
  std::normal_distribution<double> g(0.0, 1.0);
  Vec v{0, 0, 0};
  for (int k = 0; k < nd; ++k) v[std::size_t(k)] = g(rng);
  return normalized(v);
}

// Unit vector orthogonal to `h` (within the grid's dimensions).
Vec random_perpendicular(const Vec& h, int nd, Rng& rng) {
  if (nd == 2) {
    const double sign = std::bernoulli_distribution(0.5)(rng) ? 1.0 : -1.0;
    return {-h[1] * sign, h[0] * sign, 0.0};
  }
  for (;;) {
    Vec v = random_direction(nd, rng);
    const double t = dot(v, h);
    for (int k = 0; k < 3; ++k) v[std::size_t(k)] -= t * h[std::size_t(k)];
    if (dot(v, v) > 1e-6) return normalized(v);
  }
}

struct Branch {
  std::vector<Vec> path;
  std::vector<double> radius;
  Vec heading{};
  double length = 0.0;
  int depth = 0;
};

constexpr double kStep = 0.5;
constexpr double kMaxDeviation = std::numbers::pi / 3.0;  // from the branch's initial heading

Branch grow(const Vec& start, const Vec& heading, double r0, double length, int depth, std::span<const Index> dims,
            Rng& rng) {
  const int nd = int(dims.size());
  length = std::max(length, 1.0);
  Branch b;
  b.heading = heading;
  b.length = length;
  b.depth = depth;
  std::normal_distribution<double> wobble(0.0, 0.08);
  Vec pos = start, dir = heading;
  for (double t = 0.0; t <= length; t += kStep) {
    b.path.push_back(pos);
    b.radius.push_back(r0 * (1.0 - 0.25 * t / length));
    Vec next = dir;
    for (int k = 0; k < nd; ++k) next[std::size_t(k)] += wobble(rng);
    next = normalized(next);
    if (dot(next, heading) >= std::cos(kMaxDeviation)) dir = next;
    for (int k = 0; k < nd; ++k) pos[std::size_t(k)] += kStep * dir[std::size_t(k)];
    bool inside = true;
    for (int k = 0; k < nd; ++k)
      inside = inside && pos[std::size_t(k)] >= 1.0 && pos[std::size_t(k)] <= double(dims[std::size_t(k)] - 2);
    if (!inside) break;
  }
  return b;
}

void paint(BinaryMask& m, const Vec& p, double r) {
  const Shape& s = m.shape();
  const int nd = s.ndim();
  // 0.9 covers the nearest cell of any point, so consecutive path points
  // always paint touching cells.
  const double re = std::max(r, 0.9);
  std::array<Index, 3> lo{0, 0, 0}, hi{0, 0, 0};
  for (int k = 0; k < nd; ++k) {
    lo[std::size_t(k)] = std::max<Index>(0, Index(std::ceil(p[std::size_t(k)] - re)));
    hi[std::size_t(k)] = std::min<Index>(s.dim(k) - 1, Index(std::floor(p[std::size_t(k)] + re)));
  }
  for (Index a = lo[0]; a <= hi[0]; ++a)
    for (Index b = lo[1]; b <= hi[1]; ++b)
      for (Index c = lo[2]; c <= hi[2]; ++c) {
        const Vec d{double(a) - p[0], double(b) - p[1], nd == 3 ? double(c) - p[2] : 0.0};
        if (dot(d, d) <= re * re) m.at({a, b, c}) = 1;
      }
}

}  // namespace

BinaryMask random_tree(std::span<const Index> dims, int n_branches, std::array<double, 2> radius_range,
                       std::uint64_t seed) {
  require(n_branches >= 1, "n_branches must be >= 1");
  require(radius_range[0] > 0.0 && radius_range[0] <= radius_range[1], "radius_range must satisfy 0 < min <= max");
  const std::array<double, 3> unit{1.0, 1.0, 1.0};
  const Shape shape(dims, std::span<const double>(unit.data(), dims.size()));
  const int nd = shape.ndim();
  Rng rng(seed);

  Index smallest = shape.dim(0);
  for (int k = 1; k < nd; ++k) smallest = std::min(smallest, shape.dim(k));
  Vec start{0, 0, 0};
  for (int k = 0; k < nd; ++k)
    start[std::size_t(k)] =
        std::uniform_real_distribution<double>(0.25 * double(shape.dim(k)), 0.75 * double(shape.dim(k)))(rng);
  const double root_length = std::uniform_real_distribution<double>(0.4, 0.8)(rng) * double(smallest);

  std::vector<Branch> branches;
  branches.push_back(grow(start, random_direction(nd, rng), radius_range[1], root_length, 0, dims, rng));
  std::uniform_real_distribution<double> angle(std::numbers::pi / 6.0, 7.0 * std::numbers::pi / 18.0);
  std::uniform_real_distribution<double> shrink(0.5, 0.8);
  while (int(branches.size()) < n_branches) {
    const auto parent_index = std::uniform_int_distribution<std::size_t>(0, branches.size() - 1)(rng);
    const Branch& parent = branches[parent_index];
    const std::size_t n = parent.path.size();
    const std::size_t at = std::uniform_int_distribution<std::size_t>(n / 5, n - 1)(rng);
    Vec h = parent.heading;
    if (at > 0) {
      for (int k = 0; k < 3; ++k) h[std::size_t(k)] = parent.path[at][std::size_t(k)] - parent.path[at - 1][std::size_t(k)];
      h = normalized(h);
    }
    const Vec perp = random_perpendicular(h, nd, rng);
    const double theta = angle(rng);
    Vec heading{0, 0, 0};
    for (int k = 0; k < 3; ++k)
      heading[std::size_t(k)] = std::cos(theta) * h[std::size_t(k)] + std::sin(theta) * perp[std::size_t(k)];
    const double r = std::max(radius_range[0], 0.7 * parent.radius[at]);
    const double length = std::max(2.0, parent.length * shrink(rng));
    const Vec origin = parent.path[at];
    const int depth = parent.depth + 1;
    branches.push_back(grow(origin, normalized(heading), r, length, depth, dims, rng));
  }

  BinaryMask m(shape);
  for (const Branch& b : branches)
    for (std::size_t i = 0; i < b.path.size(); ++i) paint(m, b.path[i], b.radius[i]);

  // Keep the component holding the root.
  const LabelField labels = connected_components(m, Connectivity::Full);
  Coord root{0, 0, 0};
  for (int k = 0; k < nd; ++k) root[std::size_t(k)] = Index(std::lround(start[std::size_t(k)]));
  const std::int32_t keep = labels.at(root);
  for (std::size_t i = 0; i < m.size(); ++i) m[i] = (keep != 0 && labels[i] == keep) ? 1 : 0;
  return m;
}

ScalarField render_intensity(const BinaryMask& mask, double fg, double bg, double noise_std, std::uint64_t seed) {
  require(noise_std >= 0.0, "noise_std must be >= 0");
  ScalarField f(mask.shape());
  Rng rng(seed);
  std::normal_distribution<double> noise(0.0, noise_std > 0.0 ? noise_std : 1.0);
  for (std::size_t i = 0; i < f.size(); ++i) {
    f[i] = mask[i] ? fg : bg;
    if (noise_std > 0.0) f[i] += noise(rng);
  }
  return f;
}

TreeCase make_tree_case(const TreeCaseParams& params, std::uint64_t seed) {
  std::seed_seq seq{std::uint32_t(seed), std::uint32_t(seed >> 32)};
  std::array<std::uint64_t, 3> streams{};
  std::array<std::uint32_t, 6> words{};
  seq.generate(words.begin(), words.end());
  for (std::size_t k = 0; k < 3; ++k) streams[k] = std::uint64_t(words[2 * k]) << 32 | words[2 * k + 1];
  TreeCase c;
  const BinaryMask clean = random_tree(params.dims, params.n_branches, params.radius_range, streams[0]);
  GenParams gen = params.gen;
  gen.seed = streams[1];
  c.pair = generate_pair(clean, gen);
  c.image = render_intensity(c.pair.broken, params.fg, params.bg, params.noise_std, streams[2]);
  return c;
}

nlohmann::json to_json(const GenParams& p) {
  return {{"m", p.m},
          {"p", p.p},
          {"C", p.C},
          {"size_std", p.resolved_size_std()},
          {"removal_prob", p.removal_prob},
          {"n_disconnections", p.n_disconnections},
          {"n_fragments", p.n_fragments},
          {"fragment_radius_range", p.fragment_radius_range},
          {"fragment_fill_prob", p.fragment_fill_prob},
          {"seed", p.seed}};
}

GenParams gen_params_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw Error(ErrorCode::Config, "generator params must be an object");
  GenParams p;
  for (const auto& [key, value] : j.items()) {
    try {
      if (key == "m") p.m = value.get<int>();
      else if (key == "p") p.p = value.get<int>();
      else if (key == "C") p.C = value.get<double>();
      else if (key == "size_std") p.size_std = value.get<double>();
      else if (key == "removal_prob") p.removal_prob = value.get<double>();
      else if (key == "n_disconnections") p.n_disconnections = value.get<int>();
      else if (key == "n_fragments") p.n_fragments = value.get<int>();
      else if (key == "fragment_radius_range") p.fragment_radius_range = value.get<std::array<double, 2>>();
      else if (key == "fragment_fill_prob") p.fragment_fill_prob = value.get<double>();
      else if (key == "seed") p.seed = value.get<std::uint64_t>();
      else throw Error(ErrorCode::Config, "unknown generator key '" + key + "'");
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorCode::Config, "bad value for '" + key + "': " + e.what());
    }
  }
  p.validate();
  return p;
}

nlohmann::json to_json(const DisconnectionRecord& r) {
  return {{"center", r.center}, {"class_index", r.class_index}, {"size", r.size}};
}

nlohmann::json to_json(const SkippedDisconnection& s) {
  return {{"attempt", s.attempt}, {"class_index", s.class_index}, {"reason", s.reason}};
}

}  // namespace curvseg
