#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "curvseg/grid.hpp"

namespace curvseg {

using Rng = std::mt19937_64;

/// Parameters of the disconnection generator. Defaults are ours; the method
/// leaves all of them to the dataset.
struct GenParams {
  int m = 4;                   // radius classes
  int p = 2;                   // thinnest classes eligible for disconnection
  double C = 8.0;              // disconnection size constant (cells)
  std::optional<double> size_std;  // defaults to C / 4
  double removal_prob = 0.9;
  int n_disconnections = 5;
  int n_fragments = 4;
  std::array<double, 2> fragment_radius_range{1.0, 3.0};
  double fragment_fill_prob = 0.6;
  std::uint64_t seed = 0;

  double resolved_size_std() const { return size_std ? *size_std : C / 4.0; }

  /// Throws InvalidArgument naming the offending field.
  void validate() const;
};

struct DisconnectionRecord {
  Coord center{0, 0, 0};
  int class_index = 0;
  double size = 0.0;

  bool operator==(const DisconnectionRecord&) const = default;
};

/// A disconnection that could not be placed.
struct SkippedDisconnection {
  int attempt = 0;  // 0-based position in the disconnection sequence
  int class_index = 0;
  std::string reason;

  bool operator==(const SkippedDisconnection&) const = default;
};

struct DatasetPair {
  BinaryMask clean;
  BinaryMask broken;     // includes fragments
  BinaryMask missing;    // cells removed by the disconnections
  BinaryMask fragments;  // cells added by add_fragments
  std::vector<DisconnectionRecord> records;
  std::vector<SkippedDisconnection> skipped;
  std::uint64_t seed = 0;
};

/// Equal-width binning of centerline distance values into classes 1..m
/// (1 = thinnest); 0 off the centerline. Throws NoCenterline when empty and
/// InvalidArgument when a centerline cell has non-positive distance.
LabelField classify_radii(const BinaryMask& centerline, const ScalarField& dist, int m);

/// Draws i in {1..p} with P(i) = 2^(p-i) / (2^p - 1).
int sample_class(int p, Rng& rng);

/// Probability of class i under sample_class.
double class_probability(int p, int i);

struct Cut {
  BinaryMask mask;
  BinaryMask removed;
};

/// Deletes each foreground cell of the ball of radius `size` (cells) around
/// `center` independently with probability `removal_prob`.
Cut make_disconnection(const BinaryMask& mask, const Coord& center, double size, double removal_prob, Rng& rng);

struct Augmented {
  BinaryMask mask;
  BinaryMask fragments;
};

/// Adds params.n_fragments blobs (discs in 2D, axis-aligned ellipsoids in 3D)
/// centered on background cells. Only background cells of `mask` are filled,
/// each with probability fragment_fill_prob, so fragments never overlap mask.
/// Cells set in `keep_out` are never filled either.
Augmented add_fragments(const BinaryMask& mask, const GenParams& params, Rng& rng,
                        const BinaryMask* keep_out = nullptr);

/// Full pair recipe: skeleton, distance map, radius classes, sampled
/// disconnections on the p thinnest classes, then fragments. A pure function
/// of (clean, params). Fragments avoid the clean mask, so they never refill a
/// disconnection.
DatasetPair generate_pair(const BinaryMask& clean, const GenParams& params);

/// Connected tree of tapered tubes grown by a recursive branching walk; radius
/// shrinks with branch depth. `dims` has 2 or 3 entries.
BinaryMask random_tree(std::span<const Index> dims, int n_branches, std::array<double, 2> radius_range,
                       std::uint64_t seed);

/// Gray-level rendering: bg + (fg - bg) * mask plus Gaussian noise.
ScalarField render_intensity(const BinaryMask& mask, double fg, double bg, double noise_std, std::uint64_t seed);

/// Recipe for one synthetic test case: a random tree, its broken version and
/// a noisy gray-level rendering of the broken mask.
struct TreeCaseParams {
  std::vector<Index> dims{128, 128};
  int n_branches = 6;
  std::array<double, 2> radius_range{1.0, 3.0};
  GenParams gen;  // gen.seed is replaced per case
  double fg = 1.0;
  double bg = 0.0;
  double noise_std = 0.1;
};

struct TreeCase {
  DatasetPair pair;
  ScalarField image;
};

/// Deterministic in (params, seed); tree, disconnection and noise streams
/// get independent seeds derived from `seed`.
TreeCase make_tree_case(const TreeCaseParams& params, std::uint64_t seed);

nlohmann::json to_json(const GenParams& p);
GenParams gen_params_from_json(const nlohmann::json& j);
nlohmann::json to_json(const DisconnectionRecord& r);
nlohmann::json to_json(const SkippedDisconnection& s);

}  // namespace curvseg
