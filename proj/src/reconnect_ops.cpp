#include "curvseg/reconnect_ops.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "curvseg/morphology.hpp"

namespace curvseg {

MorphReconnector::MorphReconnector(double close_radius, std::size_t min_component)
    : close_radius_(close_radius), min_component_(min_component) {
  if (!(close_radius >= 0.0) || !std::isfinite(close_radius))
    throw Error(ErrorCode::InvalidArgument, "close_radius must be >= 0");
}

ScalarField MorphReconnector::apply(const ScalarField& u) {
  BinaryMask m = threshold(u, 0.5);
  if (close_radius_ > 0.0) m = morph(m, MorphOp::Close, close_radius_);
  if (min_component_ > 0) m = remove_small_components(m, min_component_, Connectivity::Full);
  return to_scalar(m);
}

std::string MorphReconnector::name() const {
  std::ostringstream os;
  os << "morph(close_radius=" << close_radius_ << ", min_component=" << min_component_ << ")";
  return os.str();
}

void TileSpec::validate() const {
  if (tile < 16) throw Error(ErrorCode::InvalidArgument, "tile must be >= 16");
  if (overlap < 0 || overlap >= tile) throw Error(ErrorCode::InvalidArgument, "overlap must be in [0, tile)");
}

std::vector<TileWindow> plan_tiles(Index length, int tile, int overlap) {
  if (length < 1) throw Error(ErrorCode::InvalidArgument, "cannot tile an empty axis");
  if (tile < 1 || overlap < 0 || overlap >= tile) throw Error(ErrorCode::InvalidArgument, "bad tile geometry");
  if (length <= tile) return {{0, length, 0, length}};
  const Index step = tile - overlap;
  std::vector<Index> starts;
  for (Index s = 0;; s += step) {
    if (s + tile >= length) {
      starts.push_back(length - tile);
      break;
    }
    starts.push_back(s);
  }
  std::vector<TileWindow> out(starts.size());
  for (std::size_t i = 0; i < starts.size(); ++i) {
    TileWindow& w = out[i];
    w.start = starts[i];
    w.extent = tile;
    w.keep_lo = i == 0 ? 0 : w.start + (starts[i - 1] + tile - w.start) / 2;
    w.keep_hi = i + 1 == starts.size() ? length : w.start + tile - (w.start + tile - starts[i + 1]) / 2;
  }
  return out;
}

namespace {

Index reflect(Index i, Index n) {
  if (n == 1) return 0;
  const Index period = 2 * (n - 1);
  i %= period;
  if (i < 0) i += period;
  return i < n ? i : period - i;
}

nn::Tensor to_tensor(const ScalarField& u) {
  std::vector<std::int64_t> dims{1, 1};
  for (auto d : u.shape().dims()) dims.push_back(d);
  nn::Tensor t(dims);
  for (std::size_t i = 0; i < u.size(); ++i) t.data[i] = float(u[i]);
  return t;
}

void require_rank(const nn::Model& model, const Shape& shape) {
  if (model.spatial_rank() != shape.ndim())
    throw Error(ErrorCode::ModelSignature, model.origin() + " takes " + std::to_string(model.spatial_rank()) +
                                               "D input, image is " + std::to_string(shape.ndim()) + "D");
}

}  // namespace

NeuralReconnector::NeuralReconnector(std::shared_ptr<const nn::Model> model, TileSpec tiles)
    : model_(std::move(model)), tiles_(tiles) {
  if (!model_) throw Error(ErrorCode::InvalidArgument, "null model");
  tiles_.validate();
  for (auto d : model_->input_spatial_dims())
    if (d > 0 && d != tiles_.tile)
      throw Error(ErrorCode::ModelSignature, model_->origin() + " has fixed input extent " + std::to_string(d) +
                                                 ", tile is " + std::to_string(tiles_.tile));
}

std::string NeuralReconnector::name() const { return "model:" + model_->origin(); }

ScalarField NeuralReconnector::apply(const ScalarField& u) {
  const Shape& shape = u.shape();
  require_rank(*model_, shape);
  const int nd = shape.ndim();
  const auto& fixed = model_->input_spatial_dims();

  // Per-axis plans, padded to three axes.
  std::array<std::vector<TileWindow>, 3> plans;
  std::array<Index, 3> len{1, 1, 1}, in_ext{1, 1, 1};
  for (int a = 0; a < 3; ++a) {
    if (a < nd) {
      len[std::size_t(a)] = shape.dim(a);
      plans[std::size_t(a)] = plan_tiles(shape.dim(a), tiles_.tile, tiles_.overlap);
      // A fixed-extent model needs the full tile even on a short axis.
      in_ext[std::size_t(a)] = fixed[std::size_t(a)] > 0 ? tiles_.tile : std::min<Index>(tiles_.tile, shape.dim(a));
    } else {
      plans[std::size_t(a)] = {{0, 1, 0, 1}};
    }
  }

  std::vector<double> acc(u.size(), tiles_.blend == Blend::Max ? -INFINITY : 0.0);
  std::vector<std::uint8_t> hits(u.size(), 0);
  std::vector<std::int64_t> dims{1, 1};
  for (int a = 0; a < nd; ++a) dims.push_back(in_ext[std::size_t(a)]);

  for (const auto& w0 : plans[0])
    for (const auto& w1 : plans[1])
      for (const auto& w2 : plans[2]) {
        const std::array<const TileWindow*, 3> w{&w0, &w1, &w2};
        nn::Tensor x(dims);
        std::size_t k = 0;
        for (Index i = 0; i < in_ext[0]; ++i)
          for (Index j = 0; j < in_ext[1]; ++j)
            for (Index l = 0; l < in_ext[2]; ++l) {
              const Coord c{reflect(w0.start + i, len[0]), reflect(w1.start + j, len[1]), reflect(w2.start + l, len[2])};
              x.data[k++] = float(u.at(c));
            }
        const nn::Tensor y = model_->run(x);
        if (y.dims != dims)
          throw Error(ErrorCode::ModelOutput, model_->origin() + " changed the tile shape");
        for (Index i = w[0]->keep_lo; i < w[0]->keep_hi; ++i)
          for (Index j = w[1]->keep_lo; j < w[1]->keep_hi; ++j)
            for (Index l = w[2]->keep_lo; l < w[2]->keep_hi; ++l) {
              const Index t = ((i - w0.start) * in_ext[1] + (j - w1.start)) * in_ext[2] + (l - w2.start);
              const double v = y.data[std::size_t(t)];
              if (!std::isfinite(v)) throw Error(ErrorCode::ModelOutput, model_->origin() + " produced " + std::to_string(v));
              const auto cell = std::size_t(shape.linear({i, j, l}));
              if (tiles_.blend == Blend::Max) acc[cell] = std::max(acc[cell], v);
              else acc[cell] += v;
              ++hits[cell];
            }
      }

  ScalarField out(shape);
  for (std::size_t i = 0; i < out.size(); ++i) {
    const double v = tiles_.blend == Blend::Max ? acc[i] : acc[i] / double(hits[i]);
    out[i] = std::clamp(v, 0.0, 1.0);
  }
  return out;
}

ScalarField run_untiled(const nn::Model& model, const ScalarField& u) {
  require_rank(model, u.shape());
  const nn::Tensor x = to_tensor(u);
  const nn::Tensor y = model.run(x);
  if (y.dims != x.dims) throw Error(ErrorCode::ModelOutput, model.origin() + " changed the field shape");
  ScalarField out(u.shape());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = y.data[i];
  return out;
}

std::unique_ptr<Reconnector> make_reconnector(const std::string& spec, const MorphParams& morph,
                                              const TileSpec& tiles) {
  if (spec == "identity") return std::make_unique<IdentityReconnector>();
  if (spec == "morph") return std::make_unique<MorphReconnector>(morph.close_radius, morph.min_component);
  if (spec.rfind("model:", 0) == 0 && spec.size() > 6) {
    auto model = std::make_shared<const nn::Model>(nn::Model::load(spec.substr(6)));
    return std::make_unique<NeuralReconnector>(std::move(model), tiles);
  }
  throw Error(ErrorCode::InvalidArgument, "reconnector must be identity, morph or model:PATH, got '" + spec + "'");
}

std::string to_string(Blend b) { return b == Blend::Max ? "max" : "average"; }

nlohmann::json to_json(const TileSpec& t) {
  return {{"tile", t.tile}, {"overlap", t.overlap}, {"blend", to_string(t.blend)}};
}

TileSpec tile_spec_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw Error(ErrorCode::Config, "tile spec must be an object");
  TileSpec t;
  for (const auto& [key, value] : j.items()) {
    try {
      if (key == "tile") t.tile = value.get<int>();
      else if (key == "overlap") t.overlap = value.get<int>();
      else if (key == "blend") {
        const auto s = value.get<std::string>();
        if (s != "average" && s != "max") throw Error(ErrorCode::Config, "blend must be average or max");
        t.blend = s == "max" ? Blend::Max : Blend::Average;
      } else {
        throw Error(ErrorCode::Config, "unknown tile key '" + key + "'");
      }
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorCode::Config, "bad value for '" + key + "': " + e.what());
    }
  }
  return t;
}

nlohmann::json to_json(const MorphParams& m) {
  return {{"close_radius", m.close_radius}, {"min_component", m.min_component}};
}

MorphParams morph_params_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw Error(ErrorCode::Config, "morph params must be an object");
  MorphParams m;
  for (const auto& [key, value] : j.items()) {
    try {
      if (key == "close_radius") m.close_radius = value.get<double>();
      else if (key == "min_component") m.min_component = value.get<std::size_t>();
      else throw Error(ErrorCode::Config, "unknown morph key '" + key + "'");
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorCode::Config, "bad value for '" + key + "': " + e.what());
    }
  }
  return m;
}

}  // namespace curvseg
