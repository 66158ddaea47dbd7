#include <gtest/gtest.h>

#include <cmath>
#include <cstring>
#include <functional>
#include <fstream>
#include <iterator>

#include <nlohmann/json.hpp>

#include "curvseg/error.hpp"
#include "curvseg/onnx_model.hpp"
#include "onnx_builder.hpp"

namespace curvseg::nn {
namespace {

using curvseg::testing::GraphBuilder;
using Dims = std::vector<std::int64_t>;

const std::string kData = CURVSEG_TEST_DATA "/onnx/";

std::vector<float> read_floats(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::vector<char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  std::vector<float> out(bytes.size() / sizeof(float));
  std::memcpy(out.data(), bytes.data(), out.size() * sizeof(float));
  return out;
}

ErrorCode code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no curvseg::Error thrown";
  return ErrorCode::InvalidArgument;
}

class Reference : public ::testing::TestWithParam<std::string> {};

TEST_P(Reference, MatchesOnnxRuntime) {
  const std::string dir = kData + GetParam() + "/";
  std::ifstream meta_in(dir + "meta.json");
  const auto meta = nlohmann::json::parse(meta_in);
  const Model model = Model::load(dir + "model.onnx");
  const Tensor x(meta["input_dims"].get<Dims>(), read_floats(dir + "input.bin"));
  const Tensor expected(meta["output_dims"].get<Dims>(), read_floats(dir + "expected.bin"));
  const Tensor y = model.run(x);
  ASSERT_EQ(y.dims, expected.dims);
  double worst = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) worst = std::max(worst, double(std::abs(y.data[i] - expected.data[i])));
  EXPECT_LT(worst, 1e-5);
}

INSTANTIATE_TEST_SUITE_P(Fixtures, Reference, ::testing::Values("unet2d", "unet3d", "mixed2d"));

TEST(Load, ReportsSignature) {
  const Model m2 = Model::load(kData + "unet2d/model.onnx");
  EXPECT_EQ(m2.spatial_rank(), 2);
  EXPECT_EQ(m2.input_spatial_dims(), (Dims{0, 0}));
  const Model m3 = Model::load(kData + "unet3d/model.onnx");
  EXPECT_EQ(m3.spatial_rank(), 3);
  const Model fixed = Model::parse(curvseg::testing::box_stack_model(2, 1, 3, {8, 6}));
  EXPECT_EQ(fixed.input_spatial_dims(), (Dims{8, 6}));
}

TEST(Ops, ConvSamePaddingOnOnes) {
  GraphBuilder g;
  g.input("x", {1, 1, 4, 4}).output("y", {1, 1, 4, 4}).init("w", {1, 1, 3, 3}, std::vector<float>(9, 1.0f));
  GraphBuilder::set(g.node("Conv", {"x", "w"}, {"y"}), "pads", Dims{1, 1, 1, 1});
  const Tensor y = Model::parse(g.bytes()).run(Tensor({1, 1, 4, 4}, 1.0f));
  // Neighbour counts of a 4x4 grid.
  const std::vector<float> want{4, 6, 6, 4, 6, 9, 9, 6, 6, 9, 9, 6, 4, 6, 6, 4};
  EXPECT_EQ(y.data, want);
}

TEST(Ops, ConvAutoPadSameUpperKeepsSize) {
  GraphBuilder g;
  g.input("x", {1, 1, 0, 0}).output("y", {1, 1, 0, 0}).init("w", {1, 1, 2, 2}, {1, 0, 0, 0});
  GraphBuilder::set(g.node("Conv", {"x", "w"}, {"y"}), "auto_pad", std::string("SAME_UPPER"));
  const Tensor x({1, 1, 3, 3}, {1, 2, 3, 4, 5, 6, 7, 8, 9});
  const Tensor y = Model::parse(g.bytes()).run(x);
  ASSERT_EQ(y.dims, x.dims);
  // Total pad 1 goes to the end, so the top-left tap reads the cell itself.
  EXPECT_EQ(y.data, x.data);
}

TEST(Ops, BatchNormalizationFormula) {
  GraphBuilder g;
  g.input("x", {1, 1, 1, 2}).output("y", {1, 1, 1, 2});
  g.init("s", {1}, {2.0f}).init("b", {1}, {0.5f}).init("m", {1}, {1.0f}).init("v", {1}, {4.0f});
  GraphBuilder::set(g.node("BatchNormalization", {"x", "s", "b", "m", "v"}, {"y"}), "epsilon", 0.0f);
  const Tensor y = Model::parse(g.bytes()).run(Tensor({1, 1, 1, 2}, {3.0f, -1.0f}));
  EXPECT_FLOAT_EQ(y.data[0], (3.0f - 1.0f) / 2.0f * 2.0f + 0.5f);
  EXPECT_FLOAT_EQ(y.data[1], (-1.0f - 1.0f) / 2.0f * 2.0f + 0.5f);
}

TEST(Ops, BroadcastChannelBias) {
  GraphBuilder g;
  g.input("x", {1, 1, 2, 3}).output("y", {1, 1, 2, 3}).init("b", {1, 1, 2, 1}, {10.0f, 20.0f});
  g.node("Add", {"x", "b"}, {"y"});
  const Tensor y = Model::parse(g.bytes()).run(Tensor({1, 1, 2, 3}, {0, 1, 2, 3, 4, 5}));
  EXPECT_EQ(y.data, (std::vector<float>{10, 11, 12, 23, 24, 25}));
}

TEST(Ops, ResizeNearestAndLinear) {
  for (const std::string mode : {"nearest", "linear"}) {
    GraphBuilder g;
    g.input("x", {1, 1, 1, 0}).output("y", {1, 1, 1, 0}).init("sc", {4}, {1, 1, 1, 2});
    auto& n = g.node("Resize", {"x", "", "sc"}, {"y"});
    GraphBuilder::set(n, "mode", mode);
    GraphBuilder::set(n, "coordinate_transformation_mode", std::string("align_corners"));
    const Tensor y = Model::parse(g.bytes()).run(Tensor({1, 1, 1, 2}, {0.0f, 3.0f}));
    ASSERT_EQ(y.dims, (Dims{1, 1, 1, 4}));
    if (mode == "linear") EXPECT_EQ(y.data, (std::vector<float>{0, 1, 2, 3}));
    // Sources 0, 1/3, 2/3, 1 rounded half down.
    else EXPECT_EQ(y.data, (std::vector<float>{0, 0, 3, 3}));
  }
}

TEST(Ops, MaxPoolCeilMode) {
  GraphBuilder g;
  g.input("x", {1, 1, 1, 5}).output("y", {1, 1, 1, 0});
  auto& n = g.node("MaxPool", {"x"}, {"y"});
  GraphBuilder::set(n, "kernel_shape", Dims{1, 2});
  GraphBuilder::set(n, "strides", Dims{1, 2});
  GraphBuilder::set(n, "ceil_mode", std::int64_t(1));
  const Tensor y = Model::parse(g.bytes()).run(Tensor({1, 1, 1, 5}, {1, 5, 2, 4, 3}));
  EXPECT_EQ(y.data, (std::vector<float>{5, 4, 3}));
}

TEST(Errors, LoadFailures) {
  EXPECT_EQ(code_of([] { Model::load(kData + "missing.onnx"); }), ErrorCode::ModelLoad);
  EXPECT_EQ(code_of([] { Model::parse("not a model"); }), ErrorCode::ModelLoad);

  GraphBuilder unsupported;
  unsupported.input("x", {1, 1, 0, 0}).output("y", {1, 1, 0, 0}).node("Softmax", {"x"}, {"y"});
  EXPECT_EQ(code_of([&] { Model::parse(unsupported.bytes()); }), ErrorCode::ModelLoad);

  GraphBuilder dangling;
  dangling.input("x", {1, 1, 0, 0}).output("y", {1, 1, 0, 0}).node("Add", {"x", "ghost"}, {"y"});
  EXPECT_EQ(code_of([&] { Model::parse(dangling.bytes()); }), ErrorCode::ModelLoad);
}

TEST(Errors, SignatureFailures) {
  GraphBuilder two_inputs;
  two_inputs.input("a", {1, 1, 0, 0}).input("b", {1, 1, 0, 0}).output("y", {1, 1, 0, 0});
  two_inputs.node("Add", {"a", "b"}, {"y"});
  EXPECT_EQ(code_of([&] { Model::parse(two_inputs.bytes()); }), ErrorCode::ModelSignature);

  GraphBuilder rank3;
  rank3.input("x", {1, 1, 0}).output("y", {1, 1, 0}).node("Relu", {"x"}, {"y"});
  EXPECT_EQ(code_of([&] { Model::parse(rank3.bytes()); }), ErrorCode::ModelSignature);

  GraphBuilder two_channels;
  two_channels.input("x", {1, 2, 0, 0}).output("y", {1, 2, 0, 0}).node("Relu", {"x"}, {"y"});
  EXPECT_EQ(code_of([&] { Model::parse(two_channels.bytes()); }), ErrorCode::ModelSignature);

  const Model fixed = Model::parse(curvseg::testing::box_stack_model(2, 1, 3, {8, 6}));
  EXPECT_EQ(code_of([&] { fixed.run(Tensor({1, 1, 8, 7})); }), ErrorCode::ModelSignature);
  EXPECT_NO_THROW(fixed.run(Tensor({1, 1, 8, 6})));
}

TEST(Errors, RuntimeShapeMismatch) {
  GraphBuilder g;
  g.input("x", {1, 1, 0, 0}).output("y", {1, 1, 0, 0}).init("w", {1, 2, 3, 3}, std::vector<float>(18, 1.0f));
  g.node("Conv", {"x", "w"}, {"y"});
  const Model m = Model::parse(g.bytes());
  EXPECT_EQ(code_of([&] { m.run(Tensor({1, 1, 5, 5})); }), ErrorCode::ModelOutput);
}

}  // namespace
}  // namespace curvseg::nn
