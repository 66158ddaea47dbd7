#include <gtest/gtest.h>

#include <cmath>
#include <functional>

#include "curvseg/error.hpp"
#include "curvseg/reconnect_ops.hpp"
#include "onnx_builder.hpp"
#include "support.hpp"

namespace curvseg {
namespace {

using namespace curvseg::testing;

long long components(const BinaryMask& m) { return distinct_labels(propagate_labels(m, true)); }

std::shared_ptr<const nn::Model> box_model(int spatial, int depth, int k, std::vector<std::int64_t> fixed = {}) {
  return std::make_shared<const nn::Model>(nn::Model::parse(box_stack_model(spatial, depth, k, std::move(fixed))));
}

double max_diff(const ScalarField& a, const ScalarField& b) {
  double d = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) d = std::max(d, std::abs(a[i] - b[i]));
  return d;
}

ScalarField unit_field(const Shape& s, std::uint64_t seed) { return random_field(s, seed, 0.0, 1.0); }

ErrorCode code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no curvseg::Error thrown";
  return ErrorCode::InvalidArgument;
}

TEST(Morph, ClosesThreeCellGap) {
  // Five cells thick: the radius-2 ball centred in the gap must fit inside
  // the dilated bar, which a thinner bar does not allow.
  const Shape s{11, 30};
  BinaryMask bar = mask_minus(box(s, 3, 8, 3, 27), box(s, 0, 11, 13, 16));
  ASSERT_EQ(components(bar), 2);
  MorphReconnector r(2.0, 0);
  EXPECT_EQ(components(threshold(r.apply(to_scalar(bar)), 0.5)), 1);
}

TEST(Morph, ThinBarNeedsLargerRadius) {
  const Shape s{11, 30};
  const BinaryMask bar = mask_minus(box(s, 4, 7, 3, 27), box(s, 0, 11, 13, 16));
  EXPECT_EQ(components(threshold(MorphReconnector(2.0, 0).apply(to_scalar(bar)), 0.5)), 2);
  EXPECT_EQ(components(threshold(MorphReconnector(3.0, 0).apply(to_scalar(bar)), 0.5)), 1);
}

TEST(Morph, RemovesSmallBlob) {
  const Shape s{20, 20};
  const BinaryMask keep = box(s, 2, 5, 2, 18);
  const BinaryMask blob = box(s, 12, 14, 9, 11);
  MorphReconnector r(0.0, 20);
  const ScalarField out = r.apply(to_scalar(mask_or(keep, blob)));
  EXPECT_EQ(threshold(out, 0.5), keep);
}

TEST(Morph, ZeroParametersOnlyThreshold) {
  const ScalarField u = unit_field(Shape{13, 17}, 4);
  MorphReconnector r(0.0, 0);
  EXPECT_EQ(r.apply(u).storage(), to_scalar(threshold(u, 0.5)).storage());
}

TEST(Morph, NeverIncreasesComponentsWithoutRemoval) {
  for (std::uint64_t seed = 0; seed < 40; ++seed) {
    const Shape s = seed % 2 ? Shape{24, 21} : Shape{9, 10, 11};
    const BinaryMask m = random_mask(s, 0.15 + 0.02 * double(seed % 10), seed);
    const double radius = double(seed % 4);
    MorphReconnector r(radius, 0);
    EXPECT_LE(components(threshold(r.apply(to_scalar(m)), 0.5)), components(m)) << "seed " << seed;
  }
}

TEST(Morph, RejectsNegativeRadius) { EXPECT_THROW(MorphReconnector(-1.0, 0), Error); }

TEST(Contract, AllReconnectorsKeepDimsAndRange) {
  const Shape s{20, 23};
  std::vector<std::unique_ptr<Reconnector>> all;
  all.push_back(std::make_unique<IdentityReconnector>());
  all.push_back(std::make_unique<MorphReconnector>(1.5, 3));
  all.push_back(std::make_unique<NeuralReconnector>(box_model(2, 2, 3), TileSpec{16, 4, Blend::Average}));
  for (auto& r : all) {
    const ScalarField u = unit_field(s, 9);
    const ScalarField a = r->apply(u);
    const ScalarField b = r->apply(u);
    ASSERT_TRUE(a.shape().same_dims(s)) << r->name();
    for (double v : a.values()) ASSERT_TRUE(v >= 0.0 && v <= 1.0) << r->name();
    EXPECT_EQ(a.storage(), b.storage()) << r->name();
  }
}

TEST(Tiling, PlanCoversEachCellOnceOrTwiceOnOddOverlap) {
  for (Index len : {1, 15, 16, 17, 40, 97, 250})
    for (int overlap : {0, 3, 6, 7, 15}) {
      const auto plan = plan_tiles(len, 16, overlap);
      std::vector<int> hits(std::size_t(len), 0);
      for (std::size_t i = 0; i < plan.size(); ++i) {
        const auto& w = plan[i];
        ASSERT_GE(w.start, 0);
        ASSERT_LE(w.start + w.extent, len);
        ASSERT_LE(w.start, w.keep_lo);
        ASSERT_LE(w.keep_hi, w.start + w.extent);
        // Interior cut edges keep at least floor(overlap / 2) cells of margin.
        if (i > 0) EXPECT_GE(w.keep_lo - w.start, overlap / 2);
        if (i + 1 < plan.size()) EXPECT_GE(w.start + w.extent - w.keep_hi, overlap / 2);
        for (Index c = w.keep_lo; c < w.keep_hi; ++c) ++hits[std::size_t(c)];
      }
      for (Index c = 0; c < len; ++c) {
        EXPECT_GE(hits[std::size_t(c)], 1);
        EXPECT_LE(hits[std::size_t(c)], 2);
      }
    }
}

TEST(Tiling, PlanExample) {
  const auto plan = plan_tiles(100, 40, 10);
  ASSERT_EQ(plan.size(), 3u);
  EXPECT_EQ(plan[1].start, 30);
  EXPECT_EQ(plan[2].start, 60);
  EXPECT_EQ(plan[0].keep_hi, 35);
  EXPECT_EQ(plan[1].keep_lo, 35);
  EXPECT_EQ(plan[1].keep_hi, 65);
  EXPECT_EQ(plan[2].keep_lo, 65);
  EXPECT_EQ(plan[2].keep_hi, 100);
}

// Three 3x3 convolutions: receptive field radius 3.
TEST(Tiling, MatchesUntiledWhenOverlapCoversTwiceTheRadius) {
  const auto model = box_model(2, 3, 3);
  const Shape s{45, 37};
  for (int overlap : {6, 7, 9})
    for (Blend blend : {Blend::Average, Blend::Max}) {
      const ScalarField u = unit_field(s, std::uint64_t(overlap));
      NeuralReconnector r(model, TileSpec{16, overlap, blend});
      EXPECT_LT(max_diff(r.apply(u), run_untiled(*model, u)), 1e-5) << "overlap " << overlap;
    }
}

TEST(Tiling, MatchesUntiledIn3d) {
  const auto model = box_model(3, 2, 3);
  const Shape s{20, 23, 18};
  const ScalarField u = unit_field(s, 5);
  NeuralReconnector r(model, TileSpec{16, 4, Blend::Average});
  EXPECT_LT(max_diff(r.apply(u), run_untiled(*model, u)), 1e-5);
}

// Overlap equal to the radius leaves each tile only floor(r / 2) cells of
// margin, so cells next to the cut see padding instead of image.
TEST(Tiling, OverlapOfOneRadiusIsNotExact) {
  const auto model = box_model(2, 3, 3);
  const ScalarField u = unit_field(Shape{45, 37}, 1);
  NeuralReconnector r(model, TileSpec{16, 3, Blend::Average});
  EXPECT_GT(max_diff(r.apply(u), run_untiled(*model, u)), 1e-5);
}

TEST(Tiling, SingleFullTileEqualsSingleShot) {
  const auto model = box_model(2, 2, 3);
  const ScalarField u = unit_field(Shape{16, 16}, 2);
  NeuralReconnector r(model, TileSpec{16, 0, Blend::Average});
  EXPECT_EQ(r.apply(u).storage(), run_untiled(*model, u).storage());
}

TEST(Neural, FixedExtentModel) {
  EXPECT_EQ(code_of([] { NeuralReconnector(box_model(2, 1, 3, {16, 16}), TileSpec{24, 4, Blend::Average}); }),
            ErrorCode::ModelSignature);
  NeuralReconnector r(box_model(2, 1, 3, {16, 16}), TileSpec{16, 4, Blend::Average});
  // Shorter than a tile on one axis: reflect-padded up to 16.
  const ScalarField out = r.apply(unit_field(Shape{9, 30}, 3));
  EXPECT_TRUE(out.shape().same_dims(Shape{9, 30}));
}

TEST(Neural, RankMismatch) {
  NeuralReconnector r(box_model(3, 1, 3), TileSpec{});
  EXPECT_EQ(code_of([&] { r.apply(ScalarField(Shape{20, 20})); }), ErrorCode::ModelSignature);
}

TEST(Neural, NonFiniteOutput) {
  GraphBuilder g;
  g.input("x", {1, 1, 0, 0}).output("y", {1, 1, 0, 0}).init("z", {1}, {0.0f});
  g.node("Div", {"x", "z"}, {"y"});
  NeuralReconnector r(std::make_shared<const nn::Model>(nn::Model::parse(g.bytes())), TileSpec{16, 4, Blend::Average});
  EXPECT_EQ(code_of([&] { r.apply(ScalarField(Shape{20, 20}, 0.5)); }), ErrorCode::ModelOutput);
}

TEST(Neural, ZeroInputThroughUnetFixture) {
  auto model = std::make_shared<const nn::Model>(nn::Model::load(CURVSEG_TEST_DATA "/onnx/unet2d/model.onnx"));
  NeuralReconnector r(model, TileSpec{32, 8, Blend::Average});
  const ScalarField out = r.apply(ScalarField(Shape{40, 50}));
  ASSERT_TRUE(out.shape().same_dims(Shape{40, 50}));
  for (double v : out.values()) EXPECT_TRUE(v >= 0.0 && v <= 1.0);
}

TEST(Factory, ParsesSpecs) {
  EXPECT_EQ(make_reconnector("identity")->name(), "identity");
  EXPECT_EQ(make_reconnector("morph", {1.0, 5})->name(), "morph(close_radius=1, min_component=5)");
  EXPECT_EQ(make_reconnector("model:" CURVSEG_TEST_DATA "/onnx/unet2d/model.onnx", {}, TileSpec{32, 8})->name().rfind(
                "model:", 0),
            0u);
  EXPECT_EQ(code_of([] { make_reconnector("model:/nonexistent.onnx"); }), ErrorCode::ModelLoad);
  EXPECT_EQ(code_of([] { make_reconnector("median"); }), ErrorCode::InvalidArgument);
}

TEST(Config, TileSpecValidationAndJson) {
  EXPECT_THROW((TileSpec{8, 2, Blend::Average}.validate()), Error);
  EXPECT_THROW((TileSpec{32, 32, Blend::Average}.validate()), Error);
  const TileSpec t{48, 12, Blend::Max};
  const TileSpec back = tile_spec_from_json(to_json(t));
  EXPECT_EQ(back.tile, 48);
  EXPECT_EQ(back.overlap, 12);
  EXPECT_EQ(back.blend, Blend::Max);
  EXPECT_EQ(code_of([] { tile_spec_from_json({{"tiles", 3}}); }), ErrorCode::Config);
  const MorphParams m = morph_params_from_json(to_json(MorphParams{3.5, 7}));
  EXPECT_EQ(m.close_radius, 3.5);
  EXPECT_EQ(m.min_component, 7u);
}

}  // namespace
}  // namespace curvseg
