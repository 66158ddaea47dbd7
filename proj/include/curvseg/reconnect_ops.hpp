#pragma once

#include <memory>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "curvseg/grid.hpp"
#include "curvseg/onnx_model.hpp"
#include "curvseg/reconnector.hpp"

namespace curvseg {

/// Threshold at 0.5, close with a ball of `close_radius`, then drop
/// components (full connectivity) smaller than `min_component` cells.
/// Output is {0, 1}-valued.
class MorphReconnector final : public Reconnector {
 public:
  MorphReconnector(double close_radius, std::size_t min_component);

  ScalarField apply(const ScalarField& u) override;
  std::string name() const override;

  double close_radius() const noexcept { return close_radius_; }
  std::size_t min_component() const noexcept { return min_component_; }

 private:
  double close_radius_;
  std::size_t min_component_;
};

enum class Blend { Average, Max };

struct TileSpec {
  int tile = 96;     // cells per axis
  int overlap = 16;  // cells shared by neighbouring tiles, per axis
  Blend blend = Blend::Average;

  /// overlap in [0, tile), tile >= 16; InvalidArgument otherwise.
  void validate() const;
};

/// One tile along one axis: the network sees [start, start + extent) and
/// the result is kept on [keep_lo, keep_hi).
struct TileWindow {
  Index start = 0;
  Index extent = 0;
  Index keep_lo = 0;
  Index keep_hi = 0;
};

/// Covers [0, length) with tiles of `tile` cells whose starts advance by
/// tile - overlap; the last tile is shifted back to end at `length`. Where
/// two tiles overlap by w cells each keeps its half, floor(w / 2) cells away
/// from its cut edge; odd w leaves one cell kept by both. A network whose
/// receptive field radius is r therefore reproduces untiled inference when
/// overlap >= 2r. For length <= tile a single window of `length` cells.
std::vector<TileWindow> plan_tiles(Index length, int tile, int overlap);

/// Runs an exchange-format network over the field tile by tile.
///
/// Along axes where the image is shorter than the tile, a model with fixed
/// input extents gets a reflect-padded tile; a model with symbolic extents
/// gets the image as is. Overlap cells kept by two tiles are blended per
/// TileSpec. The result is clamped to [0, 1].
class NeuralReconnector final : public Reconnector {
 public:
  /// Throws ModelSignature if the model's fixed spatial extents differ from
  /// tiles.tile.
  NeuralReconnector(std::shared_ptr<const nn::Model> model, TileSpec tiles);

  /// Raises ModelSignature on a spatial-rank mismatch and ModelOutput on a
  /// wrongly shaped or non-finite network output.
  ScalarField apply(const ScalarField& u) override;
  std::string name() const override;

  const TileSpec& tiles() const noexcept { return tiles_; }

 private:
  std::shared_ptr<const nn::Model> model_;
  TileSpec tiles_;
};

/// Single network pass over the whole field, no tiling or clamping.
ScalarField run_untiled(const nn::Model& model, const ScalarField& u);

struct MorphParams {
  double close_radius = 2.0;
  std::size_t min_component = 20;
};

/// "identity", "morph" or "model:PATH".
std::unique_ptr<Reconnector> make_reconnector(const std::string& spec, const MorphParams& morph = {},
                                              const TileSpec& tiles = {});

std::string to_string(Blend b);
nlohmann::json to_json(const TileSpec& t);
TileSpec tile_spec_from_json(const nlohmann::json& j);
nlohmann::json to_json(const MorphParams& m);
MorphParams morph_params_from_json(const nlohmann::json& j);

}  // namespace curvseg
