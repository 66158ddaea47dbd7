#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

namespace curvseg::nn {

/// Dense float32 tensor, row-major.
struct Tensor {
  std::vector<std::int64_t> dims;
  std::vector<float> data;

  Tensor() = default;
  Tensor(std::vector<std::int64_t> d, float fill = 0.0f);
  Tensor(std::vector<std::int64_t> d, std::vector<float> values);

  std::size_t size() const noexcept { return data.size(); }
  int rank() const noexcept { return int(dims.size()); }
};

std::size_t element_count(const std::vector<std::int64_t>& dims);

/// Inference for the subset of ONNX that fully-convolutional segmentation
/// networks export to: Conv, ConvTranspose, BatchNormalization,
/// InstanceNormalization, Relu, LeakyRelu, PRelu, Sigmoid, Tanh, Clip,
/// Add, Sub, Mul, Div, Concat, MaxPool, Resize, Upsample, Identity, Dropout
/// and Constant. Computation is float32 on the CPU.
///
/// The graph must have exactly one input of shape (batch, 1, spatial...) and
/// one output of the same layout, with 2 or 3 spatial axes.
class Model {
 public:
  /// Throws ErrorCode::ModelLoad if the file is unreadable, not a model, or
  /// uses an unsupported operator; ErrorCode::ModelSignature if the
  /// input/output layout does not match the contract above.
  static Model load(const std::string& path);
  static Model parse(const std::string& bytes, const std::string& origin = "<memory>");

  Model(Model&&) noexcept;
  Model& operator=(Model&&) noexcept;
  ~Model();

  int spatial_rank() const;
  /// Fixed spatial extents of the input, 0 for symbolic axes.
  const std::vector<std::int64_t>& input_spatial_dims() const;
  const std::string& origin() const;

  /// Runs the graph on `input` (dims (1, 1, spatial...)). Shape errors and
  /// unsupported attribute values surface as ErrorCode::ModelOutput.
  Tensor run(const Tensor& input) const;

 private:
  struct Impl;
  explicit Model(std::unique_ptr<Impl> impl);
  std::unique_ptr<Impl> impl_;
};

}  // namespace curvseg::nn
