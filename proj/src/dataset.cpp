#include "curvseg/dataset.hpp"

#include <filesystem>

#include "curvseg/io.hpp"

namespace curvseg {

namespace fs = std::filesystem;

namespace {

const char* const kParts[] = {"clean", "broken", "missing", "fragments"};

nlohmann::json center_json(const Coord& c, int ndim) {
  return std::vector<Index>(c.begin(), c.begin() + ndim);
}

nlohmann::json parse_json_file(const std::string& path) {
  try {
    return nlohmann::json::parse(io::read_text(path));
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::Config, path + ": " + e.what());
  }
}

}  // namespace

nlohmann::json pair_manifest(const DatasetPair& pair, const GenParams& params, const std::string& stem,
                             bool with_image) {
  const Shape& s = pair.clean.shape();
  const std::string ext = io::image_extension(s.ndim());
  nlohmann::json files;
  for (const char* part : kParts) files[part] = stem + "_" + part + ext;
  if (with_image) files["image"] = stem + "_image" + ext;
  nlohmann::json records = nlohmann::json::array();
  for (const auto& r : pair.records)
    records.push_back({{"center", center_json(r.center, s.ndim())}, {"class_index", r.class_index}, {"size", r.size}});
  nlohmann::json skipped = nlohmann::json::array();
  for (const auto& k : pair.skipped) skipped.push_back(to_json(k));
  return {{"format", "curvseg-pair"},
          {"version", kDatasetVersion},
          {"dims", std::vector<Index>(s.dims().begin(), s.dims().end())},
          {"spacing", std::vector<double>(s.spacings().begin(), s.spacings().end())},
          {"files", files},
          {"params", to_json(params)},
          {"seed", pair.seed},
          {"records", records},
          {"skipped", skipped}};
}

std::string save_pair(const std::string& dir, const std::string& stem, const DatasetPair& pair,
                      const GenParams& params, const ScalarField* image) {
  fs::create_directories(dir);
  const nlohmann::json m = pair_manifest(pair, params, stem, image != nullptr);
  const fs::path root(dir);
  io::write_mask((root / m["files"]["clean"].get<std::string>()).string(), pair.clean);
  io::write_mask((root / m["files"]["broken"].get<std::string>()).string(), pair.broken);
  io::write_mask((root / m["files"]["missing"].get<std::string>()).string(), pair.missing);
  io::write_mask((root / m["files"]["fragments"].get<std::string>()).string(), pair.fragments);
  if (image) io::write_image((root / m["files"]["image"].get<std::string>()).string(), *image);
  const std::string path = (root / (stem + ".json")).string();
  io::write_text(path, m.dump(2) + "\n");
  return path;
}

PairOnDisk load_pair(const std::string& manifest_path) {
  const nlohmann::json m = parse_json_file(manifest_path);
  const fs::path root = fs::path(manifest_path).parent_path();
  PairOnDisk out;
  out.manifest_path = manifest_path;
  try {
    if (m.at("format") != "curvseg-pair") throw Error(ErrorCode::Config, manifest_path + ": not a pair manifest");
    if (m.at("version").get<int>() != kDatasetVersion)
      throw Error(ErrorCode::Config, manifest_path + ": unsupported version");
    const auto& files = m.at("files");
    auto mask = [&](const char* part) { return io::read_mask((root / files.at(part).get<std::string>()).string()); };
    out.pair.clean = mask("clean");
    out.pair.broken = mask("broken");
    out.pair.missing = mask("missing");
    out.pair.fragments = mask("fragments");
    if (files.contains("image")) out.image = io::read_image((root / files.at("image").get<std::string>()).string());
    out.params = gen_params_from_json(m.at("params"));
    out.pair.seed = m.at("seed").get<std::uint64_t>();
    for (const auto& r : m.at("records")) {
      DisconnectionRecord rec;
      const auto c = r.at("center").get<std::vector<Index>>();
      for (std::size_t k = 0; k < c.size() && k < 3; ++k) rec.center[k] = c[k];
      rec.class_index = r.at("class_index").get<int>();
      rec.size = r.at("size").get<double>();
      out.pair.records.push_back(rec);
    }
    for (const auto& k : m.at("skipped"))
      out.pair.skipped.push_back(
          {k.at("attempt").get<int>(), k.at("class_index").get<int>(), k.at("reason").get<std::string>()});
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::Config, manifest_path + ": " + e.what());
  }
  for (const BinaryMask* b : {&out.pair.broken, &out.pair.missing, &out.pair.fragments})
    require_same_dims(out.pair.clean.shape(), b->shape(), "load_pair");
  return out;
}

void write_dataset_index(const std::string& dir, const std::vector<std::string>& manifests, int ndim) {
  nlohmann::json pairs = nlohmann::json::array();
  for (const auto& p : manifests) pairs.push_back(fs::path(p).filename().string());
  const nlohmann::json idx{{"format", "curvseg-dataset"}, {"version", kDatasetVersion}, {"ndim", ndim}, {"pairs", pairs}};
  io::write_text((fs::path(dir) / "dataset.json").string(), idx.dump(2) + "\n");
}

std::vector<std::string> read_dataset_index(const std::string& dir) {
  const std::string path = (fs::path(dir) / "dataset.json").string();
  const nlohmann::json idx = parse_json_file(path);
  std::vector<std::string> out;
  try {
    if (idx.at("format") != "curvseg-dataset") throw Error(ErrorCode::Config, path + ": not a dataset index");
    for (const auto& p : idx.at("pairs")) out.push_back((fs::path(dir) / p.get<std::string>()).string());
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::Config, path + ": " + e.what());
  }
  return out;
}

}  // namespace curvseg
