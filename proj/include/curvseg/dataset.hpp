#pragma once

#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "curvseg/synthgen.hpp"

namespace curvseg {

/// On-disk layout of a generated dataset, shared with the training scripts.
///
///   <dir>/dataset.json        {"format": "curvseg-dataset", "version": 1,
///                              "ndim": n, "pairs": ["pair_0000.json", ...]}
///   <dir>/<stem>.json         one manifest per pair (below)
///   <dir>/<stem>_clean.<ext>  masks; <ext> is .png in 2D, .nii.gz in 3D
///   <dir>/<stem>_broken.<ext>
///   <dir>/<stem>_missing.<ext>
///   <dir>/<stem>_fragments.<ext>
///   <dir>/<stem>_image.<ext>  optional gray-level rendering of broken
///
/// Pair manifest keys: format ("curvseg-pair"), version, dims, spacing,
/// files {clean, broken, missing, fragments[, image]} relative to the
/// manifest, params (GenParams), seed, records [{center, class_index,
/// size}], skipped [{attempt, class_index, reason}]. Centers have one entry
/// per axis, slowest axis first.
struct PairOnDisk {
  DatasetPair pair;
  GenParams params;
  std::optional<ScalarField> image;
  std::string manifest_path;
};

constexpr int kDatasetVersion = 1;

/// Writes the masks, the optional image and the manifest; returns the
/// manifest path.
std::string save_pair(const std::string& dir, const std::string& stem, const DatasetPair& pair,
                      const GenParams& params, const ScalarField* image = nullptr);

PairOnDisk load_pair(const std::string& manifest_path);

nlohmann::json pair_manifest(const DatasetPair& pair, const GenParams& params, const std::string& stem,
                             bool with_image);

void write_dataset_index(const std::string& dir, const std::vector<std::string>& manifests, int ndim);

/// Manifest paths listed in <dir>/dataset.json, resolved against dir.
std::vector<std::string> read_dataset_index(const std::string& dir);

}  // namespace curvseg
