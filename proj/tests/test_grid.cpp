#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <random>

#include "curvseg/differential.hpp"
#include "curvseg/distance.hpp"
#include "curvseg/filters.hpp"
#include "curvseg/morphology.hpp"
#include "support.hpp"

namespace curvseg {
namespace {

using testing::random_field;
using testing::random_mask;
using testing::random_vector_field;

TEST(Shape, RejectsBadGrids) {
  EXPECT_THROW((Shape{4}), Error);
  EXPECT_THROW((Shape{2, 2, 2, 2}), Error);
  EXPECT_THROW((Shape{0, 3}), Error);
  const std::array<Index, 2> dims{3, 3};
  const std::array<double, 2> bad{1.0, 0.0};
  EXPECT_THROW(Shape(dims, bad), Error);
  EXPECT_THROW(ScalarField(Shape{2, 2}, std::vector<double>(3)), Error);
}

TEST(Shape, CoordRoundTrip) {
  const Shape s{3, 4, 5};
  for (Index i = 0; i < Index(s.size()); ++i) EXPECT_EQ(s.linear(s.coord(i)), i);
  EXPECT_EQ(s.stride(0), 20);
  EXPECT_EQ(s.stride(2), 1);
}

TEST(Gradient, ConstantFieldHasZeroGradient) {
  const ScalarField u(Shape{6, 7}, 5.0);
  const VectorField g = gradient(u);
  for (double x : g.data()) EXPECT_EQ(x, 0.0);
}

TEST(Gradient, ForwardDifferencesWithNeumannEnd) {
  // Three cells along axis 0.
  const ScalarField u(Shape{3, 1}, {0.0, 1.0, 3.0});
  const VectorField g = gradient(u);
  EXPECT_EQ(std::vector<double>(g.component(0).begin(), g.component(0).end()), (std::vector<double>{1, 2, 0}));
  EXPECT_EQ(std::vector<double>(g.component(1).begin(), g.component(1).end()), (std::vector<double>{0, 0, 0}));

  // Same data along axis 1.
  const ScalarField w(Shape{1, 3}, {0.0, 1.0, 3.0});
  const VectorField gw = gradient(w);
  EXPECT_EQ(std::vector<double>(gw.component(1).begin(), gw.component(1).end()), (std::vector<double>{1, 2, 0}));
}

TEST(Gradient, DividesBySpacing) {
  const std::array<Index, 2> dims{1, 3};
  const std::array<double, 2> spacing{1.0, 0.5};
  const ScalarField u(Shape(dims, spacing), {0.0, 1.0, 3.0});
  const VectorField g = gradient(u);
  EXPECT_DOUBLE_EQ(g.component(1)[0], 2.0);
  EXPECT_DOUBLE_EQ(g.component(1)[1], 4.0);
}

TEST(Divergence, ZeroFieldMapsToZero) {
  const ScalarField d = divergence(VectorField(Shape{5, 5, 5}));
  for (double x : d.values()) EXPECT_EQ(x, 0.0);
}

TEST(Divergence, AdjointIdentity16x16) {
  const Shape s{16, 16};
  const ScalarField u = random_field(s, 11);
  const VectorField v = random_vector_field(s, 12);
  const double lhs = inner(gradient(u), v);
  const double rhs = inner(u, divergence(v));
  EXPECT_LT(std::abs(lhs + rhs), 1e-10);
}

TEST(Divergence, AdjointIdentityRandomGrids) {
  std::mt19937_64 rng(2024);
  std::uniform_int_distribution<Index> ext(1, 32);
  std::uniform_real_distribution<double> sp(0.5, 2.0);
  for (int trial = 0; trial < 60; ++trial) {
    const bool three = trial % 2 == 1;
    std::vector<Index> dims{ext(rng), ext(rng)};
    if (three) dims.push_back(ext(rng) / 2 + 1);
    std::vector<double> spacing;
    for (std::size_t k = 0; k < dims.size(); ++k) spacing.push_back(trial % 3 == 0 ? 1.0 : sp(rng));
    const Shape s(dims, spacing);
    const ScalarField u = random_field(s, 100 + trial);
    const VectorField v = random_vector_field(s, 200 + trial);
    EXPECT_LT(std::abs(inner(gradient(u), v) + inner(u, divergence(v))), 1e-10) << "trial " << trial;
  }
}

TEST(Divergence, OfGradientMatchesNeumannLaplacianStencil) {
  const Shape s{8, 8};
  for (const Coord spot : {Coord{3, 4, 0}, Coord{0, 0, 0}, Coord{7, 2, 0}}) {
    ScalarField u(s, 0.0);
    u.at(spot) = 1.0;
    const ScalarField lap = divergence(gradient(u));
    // Direct stencil: sum over in-grid face neighbors of (u(n) - u(x)).
    for (Index y = 0; y < 8; ++y)
      for (Index x = 0; x < 8; ++x) {
        double expect = 0.0;
        const Coord here{y, x, 0};
        for (const Coord d : {Coord{1, 0, 0}, Coord{-1, 0, 0}, Coord{0, 1, 0}, Coord{0, -1, 0}}) {
          const Coord n{y + d[0], x + d[1], 0};
          if (s.contains(n)) expect += u.at(n) - u.at(here);
        }
        EXPECT_DOUBLE_EQ(lap.at(here), expect);
      }
  }
}

double power_iteration_norm_sq(const Shape& s, int iters) {
  ScalarField x = random_field(s, 77);
  double estimate = 0.0;
  for (int i = 0; i < iters; ++i) {
    ScalarField y = divergence(gradient(x));
    for (auto& t : y.values()) t = -t;  // grad^T grad = -div grad
    const double norm = std::sqrt(inner(y, y));
    estimate = inner(x, y) / inner(x, x);
    for (std::size_t k = 0; k < y.size(); ++k) x[k] = y[k] / norm;
  }
  return estimate;
}

TEST(OperatorNorm, Bounds) {
  EXPECT_EQ(operator_norm_sq(Shape{4, 4}), 8.0);
  EXPECT_EQ(operator_norm_sq(Shape{4, 4, 4}), 12.0);
  const double est2 = power_iteration_norm_sq(Shape{32, 32}, 500);
  const double est3 = power_iteration_norm_sq(Shape{16, 16, 16}, 300);
  EXPECT_LE(est2, 8.0);
  EXPECT_LE(est3, 12.0);
  // The bound is nearly tight on grids this size.
  EXPECT_GT(est2, 7.5);
  EXPECT_GT(est3, 10.5);
}

TEST(OperatorNorm, AnisotropicBoundHolds) {
  const std::array<Index, 2> dims{20, 24};
  const std::array<double, 2> spacing{0.5, 2.0};
  const Shape s(dims, spacing);
  EXPECT_DOUBLE_EQ(operator_norm_sq(s), 4.0 / 0.25 + 4.0 / 4.0);
  EXPECT_LE(power_iteration_norm_sq(s, 300), operator_norm_sq(s));
}

ScalarField brute_median_subtract(const ScalarField& f, int r) {
  const Shape& s = f.shape();
  ScalarField out(s);
  for (std::size_t i = 0; i < f.size(); ++i) {
    const Coord c = s.coord(Index(i));
    std::vector<double> w;
    const int rz = s.ndim() == 3 ? r : 0;
    for (int a = -r; a <= r; ++a)
      for (int b = -r; b <= r; ++b)
        for (int e = -rz; e <= rz; ++e) {
          Coord n{c[0] + a, c[1] + b, c[2] + e};
          for (int k = 0; k < s.ndim(); ++k) n[k] = std::clamp<Index>(n[k], 0, s.dim(k) - 1);
          if (s.ndim() == 2) n[2] = 0;
          w.push_back(f.at(n));
        }
    std::sort(w.begin(), w.end());
    out[i] = f[i] - w[w.size() / 2];
  }
  return out;
}

TEST(MedianSubtract, ConstantFieldBecomesZero) {
  const ScalarField f(Shape{9, 9}, 3.25);
  const ScalarField g = median_subtract(f, 2);
  for (double x : g.values()) EXPECT_EQ(x, 0.0);
}

TEST(MedianSubtract, SingleBrightCellSurvives) {
  ScalarField f(Shape{7, 7}, 0.0);
  f.at({3, 3, 0}) = 1.0;
  const ScalarField g = median_subtract(f, 1);
  EXPECT_EQ(g, brute_median_subtract(f, 1));
  EXPECT_EQ(g.at({3, 3, 0}), 1.0);
  EXPECT_EQ(g.at({3, 4, 0}), 0.0);
  EXPECT_EQ(g.at({2, 2, 0}), 0.0);
}

TEST(MedianSubtract, MatchesBruteForce) {
  ScalarField ramp(Shape{12, 15});
  for (std::size_t i = 0; i < ramp.size(); ++i) ramp[i] = 0.1 * double(i % 15) + 0.03 * double(i / 15);
  EXPECT_EQ(median_subtract(ramp, 2), brute_median_subtract(ramp, 2));
  const ScalarField noisy = random_field(Shape{10, 11}, 5);
  EXPECT_EQ(median_subtract(noisy, 1), brute_median_subtract(noisy, 1));
  const ScalarField vol = random_field(Shape{6, 7, 5}, 6);
  EXPECT_EQ(median_subtract(vol, 1), brute_median_subtract(vol, 1));
  EXPECT_THROW(median_subtract(noisy, 0), Error);
}

TEST(DistanceMap, AllBackgroundIsZero) {
  const ScalarField d = distance_map(BinaryMask(Shape{5, 6}));
  for (double x : d.values()) EXPECT_EQ(x, 0.0);
}

TEST(DistanceMap, SingleCellUsesMinSpacing) {
  const std::array<Index, 2> dims{5, 5};
  const std::array<double, 2> spacing{2.0, 0.75};
  BinaryMask m(Shape(dims, spacing));
  m.at({2, 2, 0}) = 1;
  EXPECT_DOUBLE_EQ(distance_map(m).at({2, 2, 0}), 0.75);
}

TEST(DistanceMap, DiscCenterAndBruteForce) {
  const Shape s{32, 32};
  const BinaryMask d = testing::disc(s, 15, 15, 5);
  const ScalarField dm = distance_map(d);
  EXPECT_NEAR(dm.at({15, 15, 0}), 5.0, 0.5);
  const ScalarField oracle = testing::brute_distance(d);
  for (std::size_t i = 0; i < d.size(); ++i) EXPECT_EQ(dm[i] * dm[i], oracle[i] * oracle[i]);
}

TEST(DistanceMap, ExactOnRandomMasks) {
  // Unit spacing: squared distances are integers, so comparison is exact.
  for (int trial = 0; trial < 12; ++trial) {
    const Shape s = trial % 3 == 2 ? Shape{12, 14, 10} : Shape{32, 29};
    const BinaryMask m = random_mask(s, trial % 2 ? 0.93 : 0.7, 300 + trial);
    const ScalarField dm = distance_map(m);
    const ScalarField oracle = testing::brute_distance(m);
    for (std::size_t i = 0; i < m.size(); ++i) {
      ASSERT_EQ(std::llround(dm[i] * dm[i]), std::llround(oracle[i] * oracle[i])) << "trial " << trial;
      ASSERT_DOUBLE_EQ(dm[i], oracle[i]);
    }
  }
}

TEST(DistanceMap, AnisotropicMatchesBruteForce) {
  const std::array<Index, 3> dims{8, 12, 10};
  const std::array<double, 3> spacing{2.5, 1.0, 0.8};
  const BinaryMask m(Shape(dims, spacing), random_mask(Shape{8, 12, 10}, 0.85, 9).storage());
  const ScalarField dm = distance_map(m);
  const ScalarField oracle = testing::brute_distance(m);
  for (std::size_t i = 0; i < m.size(); ++i) ASSERT_NEAR(dm[i], oracle[i], 1e-12);
}

TEST(DistanceMap, NoBackgroundIsInfinite) {
  const ScalarField dm = distance_map(BinaryMask(Shape{3, 3}, 1));
  for (double x : dm.values()) EXPECT_TRUE(std::isinf(x));
}

TEST(ConnectedComponents, DiagonalTouch) {
  BinaryMask m(Shape{3, 3});
  m.at({0, 0, 0}) = 1;
  m.at({1, 1, 0}) = 1;
  EXPECT_EQ(label_count(connected_components(m, Connectivity::Full)), 1);
  EXPECT_EQ(label_count(connected_components(m, Connectivity::Face)), 2);
}

TEST(ConnectedComponents, LabelsFollowRowMajorFirstCell) {
  BinaryMask m(Shape{4, 6});
  m.at({3, 0, 0}) = 1;  // appears last in scan order
  m.at({0, 5, 0}) = 1;
  m.at({1, 2, 0}) = 1;
  const LabelField l = connected_components(m, Connectivity::Face);
  EXPECT_EQ(l.at({0, 5, 0}), 1);
  EXPECT_EQ(l.at({1, 2, 0}), 2);
  EXPECT_EQ(l.at({3, 0, 0}), 3);
}

TEST(ConnectedComponents, MatchesLabelPropagationOracle) {
  for (int trial = 0; trial < 100; ++trial) {
    const Shape s = trial % 5 == 4 ? Shape{6, 7, 8} : Shape{16, 16};
    const BinaryMask m = random_mask(s, 0.2 + 0.005 * trial, 1000 + trial);
    for (auto conn : {Connectivity::Face, Connectivity::Full}) {
      const LabelField l = connected_components(m, conn);
      const auto rep = testing::propagate_labels(m, conn == Connectivity::Full);
      // Same partition: two cells share a label iff they share a representative.
      std::map<std::int32_t, Index> label_to_rep;
      std::map<Index, std::int32_t> rep_to_label;
      for (std::size_t i = 0; i < m.size(); ++i) {
        ASSERT_EQ(l[i] == 0, rep[i] < 0);
        if (l[i] == 0) continue;
        auto [a, fresh_a] = label_to_rep.emplace(l[i], rep[i]);
        auto [b, fresh_b] = rep_to_label.emplace(rep[i], l[i]);
        ASSERT_EQ(a->second, rep[i]);
        ASSERT_EQ(b->second, l[i]);
      }
      ASSERT_EQ(int(label_to_rep.size()), label_count(l));
    }
  }
}

TEST(Morph, RadiusZeroIsIdentity) {
  const BinaryMask m = random_mask(Shape{10, 10}, 0.4, 3);
  for (auto op : {MorphOp::Dilate, MorphOp::Erode, MorphOp::Close}) EXPECT_EQ(morph(m, op, 0.0), m);
  EXPECT_THROW(morph(m, MorphOp::Dilate, -1.0), Error);
}

TEST(Morph, DilatedCellIsEnumeratedBall) {
  BinaryMask m(Shape{9, 9});
  m.at({4, 4, 0}) = 1;
  const BinaryMask d = morph(m, MorphOp::Dilate, 2.0);
  std::size_t expected = 0;
  for (Index y = 0; y < 9; ++y)
    for (Index x = 0; x < 9; ++x) {
      const bool inside = (y - 4) * (y - 4) + (x - 4) * (x - 4) <= 4;
      expected += inside;
      EXPECT_EQ(d.at({y, x, 0}) != 0, inside);
    }
  EXPECT_EQ(expected, 13u);
  EXPECT_EQ(count(d), 13u);

  BinaryMask v(Shape{7, 7, 7});
  v.at({3, 3, 3}) = 1;
  // Offsets with squared length <= 4 in 3D: 1 + 6 + 12 + 8 + 6 = 33.
  EXPECT_EQ(count(morph(v, MorphOp::Dilate, 2.0)), 33u);
}

TEST(Morph, ClosingIsExtensiveAndComposes) {
  for (int trial = 0; trial < 20; ++trial) {
    const BinaryMask m = random_mask(Shape{20, 23}, 0.15, 50 + trial);
    const double r = 1.0 + trial % 3;
    const BinaryMask c = morph(m, MorphOp::Close, r);
    EXPECT_TRUE(is_subset(m, c));
    EXPECT_EQ(c, morph(morph(m, MorphOp::Dilate, r), MorphOp::Erode, r));
  }
}

TEST(Morph, ErosionIsDualOfDilation) {
  for (int trial = 0; trial < 20; ++trial) {
    const Shape s = trial % 2 ? Shape{9, 10, 11} : Shape{24, 24};
    const BinaryMask m = random_mask(s, 0.6, 90 + trial);
    const double r = 1.0 + trial % 3;
    EXPECT_EQ(morph(m, MorphOp::Erode, r), complement(morph(complement(m), MorphOp::Dilate, r)));
  }
}

TEST(Morph, ErosionMatchesDirectDefinitionAwayFromBorder) {
  const Shape s{20, 20};
  const BinaryMask m = random_mask(s, 0.8, 4);
  const BinaryMask e = morph(m, MorphOp::Erode, 2.0);
  for (Index y = 2; y < 18; ++y)
    for (Index x = 2; x < 18; ++x) {
      bool keep = true;
      for (Index a = -2; a <= 2; ++a)
        for (Index b = -2; b <= 2; ++b)
          if (a * a + b * b <= 4 && !m.at({y + a, x + b, 0})) keep = false;
      EXPECT_EQ(e.at({y, x, 0}) != 0, keep);
    }
}

TEST(SmallComponents, RemovalAndHoleFilling) {
  BinaryMask m = testing::box(Shape{20, 20}, 2, 10, 2, 10);
  m.at({15, 15, 0}) = 1;
  const BinaryMask cleaned = remove_small_components(m, 5);
  EXPECT_EQ(cleaned.at({15, 15, 0}), 0);
  EXPECT_EQ(count(cleaned), 64u);

  BinaryMask holed = testing::box(Shape{20, 20}, 2, 12, 2, 12);
  holed.at({5, 5, 0}) = 0;
  for (Index y = 8; y < 11; ++y)
    for (Index x = 8; x < 11; ++x) holed.at({y, x, 0}) = 0;
  const BinaryMask filled = fill_small_holes(holed, 5);
  EXPECT_EQ(filled.at({5, 5, 0}), 1);  // 1-cell hole filled
  EXPECT_EQ(filled.at({9, 9, 0}), 0);  // 9-cell hole kept
  EXPECT_EQ(count(fill_small_holes(holed, 10)), 100u);
}

}  // namespace
}  // namespace curvseg
