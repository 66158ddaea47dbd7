#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "curvseg/grid.hpp"

namespace curvseg {

struct ConfusionCounts {
  std::uint64_t tp = 0, fp = 0, tn = 0, fn = 0;

  std::uint64_t total() const noexcept { return tp + fp + tn + fn; }
};

/// Counts restricted to `roi` cells. Throws DimsMismatch on differing dims and
/// InvalidArgument on an empty roi.
ConfusionCounts confusion(const BinaryMask& pred, const BinaryMask& gt, const BinaryMask& roi);
ConfusionCounts confusion(const BinaryMask& pred, const BinaryMask& gt);

/// TPR, PPV, Dice and MCC. A 0/0 ratio is reported as 0 and flagged.
struct Volumetric {
  double tpr = 0, ppv = 0, dice = 0, mcc = 0;
  std::vector<std::string> flags;
};

Volumetric volumetric(const ConfusionCounts& c);

struct ClDice {
  double value = 0.0;
  double topology_precision = 0.0;
  double topology_sensitivity = 0.0;
  bool empty_skeleton = false;  // value forced to 0
};

/// Centerline Dice using skeletonize() on both masks.
ClDice cl_dice(const BinaryMask& pred, const BinaryMask& gt);

struct SurfaceDistances {
  double hd95 = 0.0;
  double assd = 0.0;
};

/// Foreground cells with at least one face neighbor in the background or
/// outside the grid.
BinaryMask boundary(const BinaryMask& m);

/// 95th percentile (linear interpolation) and mean of the pooled directed
/// boundary-to-boundary distances in both directions, in physical units taken
/// from `pred`'s spacing. Throws EmptySurface if either mask is empty.
SurfaceDistances surface_distances(const BinaryMask& pred, const BinaryMask& gt);

/// Betti numbers with the (full, face) foreground/background convention.
struct Betti {
  std::int64_t b0 = 0, b1 = 0, b2 = 0;
  std::int64_t chi = 0;

  bool operator==(const Betti&) const = default;
};

/// Euler characteristic of the union of closed voxels (alternating count of
/// vertices, edges, faces and cubes).
std::int64_t euler_characteristic(const BinaryMask& m);

/// b0 = full-connectivity foreground components; b2 = bounded face-connected
/// background components (3D only); chi from euler_characteristic;
/// b1 = b0 + b2 - chi.
Betti betti(const BinaryMask& m);

/// Component / hole size limits of the topological post-processing.
struct PostprocessRule {
  std::size_t min_component_2d = 20;
  std::size_t min_component_3d = 90;
  std::size_t max_hole_2d = 10;
};

/// Removes small components and (2D only) fills small holes.
BinaryMask topo_postprocess(const BinaryMask& pred, const PostprocessRule& rule = {});

struct TopoErrors {
  std::optional<double> eps_b0, eps_b1, eps_chi;  // nullopt when the gt value is 0
  Betti pred, gt;
};

/// |(M - M_gt) / M_gt| for M in {b0, b1, chi}.
std::optional<double> error_ratio(double value, double reference);

TopoErrors topo_errors(const BinaryMask& pred, const BinaryMask& gt, bool postprocess);

struct MetricsReport {
  std::string name;
  Volumetric volumetric;
  ClDice cl_dice;
  std::optional<SurfaceDistances> surface;  // nullopt when a mask is empty
  TopoErrors topo;
  bool postprocess = false;
  bool roi_default = true;
  std::vector<std::string> flags;
};

/// Full metric suite. Volumetric metrics use `roi` (whole grid when null);
/// geometric metrics use the raw masks; topological errors optionally use the
/// post-processed prediction.
MetricsReport evaluate(const BinaryMask& pred, const BinaryMask& gt, const BinaryMask* roi, bool postprocess,
                       std::string name = {});

/// Fixed CSV schema for MetricsReport rows.
const std::vector<std::string>& csv_columns();
std::string csv_header();
std::string csv_row(const MetricsReport& r);
nlohmann::json to_json(const MetricsReport& r);

}  // namespace curvseg
