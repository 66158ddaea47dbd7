#include "cli.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <ctime>
#include <exception>
#include <filesystem>
#include <iomanip>
#include <memory>
#include <ostream>
#include <random>
#include <sstream>

#include <CLI11.hpp>

#include "curvseg/dataset.hpp"
#include "curvseg/filters.hpp"
#include "curvseg/io.hpp"
#include "curvseg/metrics.hpp"
#include "curvseg/pnp_solver.hpp"
#include "curvseg/reconnect_ops.hpp"
#include "curvseg/synthgen.hpp"

namespace curvseg::cli {

namespace fs = std::filesystem;
using nlohmann::json;

const char* version() { return CURVSEG_VERSION; }

json to_json(const RunManifest& m) {
  return {{"format", "curvseg-run"},
          {"command", m.command},
          {"argv", m.argv},
          {"cwd", m.cwd},
          {"config", m.config},
          {"inputs", m.inputs},
          {"outputs", m.outputs},
          {"seed", m.seed ? json(*m.seed) : json()},
          {"started_utc", m.started_utc},
          {"wall_seconds", m.wall_seconds},
          {"version", m.version}};
}

RunManifest run_manifest_from_json(const json& j) {
  RunManifest m;
  try {
    if (j.at("format") != "curvseg-run") throw Error(ErrorCode::Config, "not a run manifest");
    m.command = j.at("command").get<std::string>();
    m.argv = j.at("argv").get<std::vector<std::string>>();
    m.cwd = j.at("cwd").get<std::string>();
    m.config = j.at("config");
    m.inputs = j.at("inputs").get<std::vector<std::string>>();
    m.outputs = j.at("outputs").get<std::vector<std::string>>();
    if (!j.at("seed").is_null()) m.seed = j.at("seed").get<std::uint64_t>();
    m.started_utc = j.at("started_utc").get<std::string>();
    m.wall_seconds = j.at("wall_seconds").get<double>();
    m.version = j.at("version").get<std::string>();
  } catch (const json::exception& e) {
    throw Error(ErrorCode::Config, std::string("run manifest: ") + e.what());
  }
  return m;
}

std::size_t sweep_count(double a, double b, double step) {
  if (!(step > 0.0) || !(b >= a)) throw Error(ErrorCode::InvalidArgument, "sweep needs step > 0 and b >= a");
  return static_cast<std::size_t>(std::floor((b - a) / step + 1e-9)) + 1;
}

std::pair<double, double> default_lambda_range(int ndim) {
  return ndim == 3 ? std::pair{0.001, 0.050} : std::pair{0.001, 0.080};
}

namespace {

using Clock = std::chrono::steady_clock;

std::string utc_now() {
  const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  std::ostringstream os;
  os << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return os.str();
}

std::string num(double x) {
  std::ostringstream os;
  os.precision(10);
  os << x;
  return os.str();
}

/// Path without its image extension (.png, .nii, .nii.gz) or last suffix.
std::string base_of(const std::string& path) {
  for (const char* ext : {".nii.gz", ".png", ".nii", ".csv", ".json"})
    if (path.ends_with(ext)) return path.substr(0, path.size() - std::string(ext).size());
  return path;
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index, std::uint32_t stream) {
  std::seed_seq seq{std::uint32_t(seed), std::uint32_t(seed >> 32), std::uint32_t(index), std::uint32_t(index >> 32),
                    stream};
  std::uint32_t w[2];
  seq.generate(w, w + 2);
  return (std::uint64_t(w[0]) << 32) | w[1];
}

std::vector<std::string> image_files(const std::string& dir) {
  if (!fs::is_directory(dir)) throw Error(ErrorCode::Io, "'" + dir + "' is not a directory");
  std::vector<std::string> out;
  for (const auto& e : fs::directory_iterator(dir))
    if (e.is_regular_file() && io::is_image_path(e.path().string())) out.push_back(e.path().string());
  std::sort(out.begin(), out.end());
  return out;
}

class Run {
 public:
  Run(std::string command, const std::vector<std::string>& argv) : start_(Clock::now()) {
    m_.command = std::move(command);
    m_.argv = argv;
    m_.cwd = fs::current_path().string();
    m_.started_utc = utc_now();
    m_.version = version();
  }

  RunManifest& manifest() { return m_; }

  void write(const std::string& path, std::ostream& err) {
    m_.wall_seconds = std::chrono::duration<double>(Clock::now() - start_).count();
    io::write_text(path, to_json(m_).dump(2) + "\n");
    err << m_.command << ": manifest " << path << " (" << std::fixed << std::setprecision(2) << m_.wall_seconds
        << " s)\n";
    err.unsetf(std::ios::floatfield);
  }

 private:
  RunManifest m_;
  Clock::time_point start_;
};

// ---- segmentation setup shared by segment, sweep-lambda and ablate --------

struct SegmentSetup {
  SolverConfig solver;
  bool means_from_config = false;
  MorphParams morph;
  TileSpec tiles;
};

/// Config file keys: SolverConfig fields, morph_close_radius,
/// morph_min_component, tile, tile_overlap, tile_blend.
SegmentSetup load_segment_setup(const std::string& path) {
  SegmentSetup s;
  if (path.empty()) return s;
  const json all = io::read_key_value(path);
  json solver = json::object(), morph = json::object(), tiles = json::object();
  for (const auto& [key, value] : all.items()) {
    if (key.starts_with("morph_")) morph[key.substr(6)] = value;
    else if (key == "tile") tiles["tile"] = value;
    else if (key.starts_with("tile_")) tiles[key.substr(5)] = value;
    else solver[key] = value;
  }
  const bool has_c1 = solver.contains("c1"), has_c2 = solver.contains("c2");
  if (has_c1 != has_c2) throw Error(ErrorCode::Config, path + ": set both c1 and c2 or neither");
  s.means_from_config = has_c1;
  s.solver = solver_config_from_json(solver);
  s.morph = morph_params_from_json(morph);
  s.tiles = tile_spec_from_json(tiles);
  s.tiles.validate();
  return s;
}

/// Optional median subtraction, then min-max normalization to [0, 1].
ScalarField preprocess(const ScalarField& raw, int median_radius) {
  if (median_radius < 0) throw Error(ErrorCode::InvalidArgument, "median radius must be >= 0");
  return normalize_unit(median_radius > 0 ? median_subtract(raw, median_radius) : raw);
}

/// c1 is the structure mean: the upper two-means centroid for bright
/// structures, the lower one for dark structures.
void resolve_means(SegmentSetup& s, const ScalarField& f, bool dark) {
  if (s.means_from_config) return;
  const auto [lo, hi] = estimate_means(f);
  s.solver.c1 = dark ? lo : hi;
  s.solver.c2 = dark ? hi : lo;
}

json setup_json(const SegmentSetup& s, const std::string& reconnector, int median_radius, bool dark) {
  return {{"solver", to_json(s.solver)},
          {"means", s.means_from_config ? "config" : "auto"},
          {"morph", to_json(s.morph)},
          {"tiles", to_json(s.tiles)},
          {"reconnector", reconnector},
          {"median_radius", median_radius},
          {"dark_structures", dark}};
}

struct SegmentArgs {
  std::string config;
  std::string reconnector = "identity";
  int median_radius = 0;
  bool dark = false;
};

void add_segment_flags(CLI::App* c, SegmentArgs& a) {
  c->add_option("--config", a.config, "Key = value file with solver, morph_* and tile* keys");
  c->add_option("--reconnector", a.reconnector, "identity, morph or model:PATH")->capture_default_str();
  c->add_option("--median-radius", a.median_radius, "Subtract the median over this box radius (0 = off)")
      ->capture_default_str();
  c->add_flag("--dark-structures", a.dark, "Structures darker than the background (auto means only)");
}

// ---- generate -----------------------------------------------------------

struct GenerateArgs {
  std::string in_dir;
  int random_trees = 0;
  std::string params;
  std::string out;
  std::optional<std::uint64_t> seed;
  std::vector<Index> dims{128, 128};
  int branches = 6;
  std::vector<double> radius_range{1.0, 3.0};
  bool render = false;
  double fg = 0.75, bg = 0.25, noise = 0.05;
  std::string manifest;
};

int cmd_generate(const GenerateArgs& a, const std::vector<std::string>& argv, std::ostream& err) {
  Run run("generate", argv);
  if (a.in_dir.empty() == (a.random_trees == 0))
    throw Error(ErrorCode::InvalidArgument, "give exactly one of --in-dir and --random-trees");
  if (a.random_trees < 0) throw Error(ErrorCode::InvalidArgument, "--random-trees must be positive");
  GenParams gen = a.params.empty() ? GenParams{} : gen_params_from_json(io::read_key_value(a.params));
  if (a.seed) gen.seed = *a.seed;
  gen.validate();
  auto& m = run.manifest();
  m.seed = gen.seed;
  if (!a.params.empty()) m.inputs.push_back(a.params);

  std::vector<std::string> manifests;
  int ndim = 0;
  json sources = json::array();
  auto save = [&](std::size_t i, const DatasetPair& pair, const GenParams& p, const ScalarField* image) {
    const int nd = pair.clean.shape().ndim();
    if (ndim != 0 && nd != ndim) throw Error(ErrorCode::InvalidArgument, "inputs mix 2D and 3D masks");
    ndim = nd;
    std::ostringstream stem;
    stem << "pair_" << std::setw(4) << std::setfill('0') << i;
    manifests.push_back(save_pair(a.out, stem.str(), pair, p, image));
    m.outputs.push_back(manifests.back());
    err << "generate: " << stem.str() << " " << pair.records.size() << " disconnections, " << pair.skipped.size()
        << " skipped\n";
  };

  if (a.random_trees > 0) {
    if (a.dims.size() != 2 && a.dims.size() != 3) throw Error(ErrorCode::InvalidArgument, "--dims needs 2 or 3 values");
    if (a.radius_range.size() != 2) throw Error(ErrorCode::InvalidArgument, "--radius-range needs 2 values");
    TreeCaseParams tp;
    tp.dims = a.dims;
    tp.n_branches = a.branches;
    tp.radius_range = {a.radius_range[0], a.radius_range[1]};
    tp.gen = gen;
    tp.fg = a.fg;
    tp.bg = a.bg;
    tp.noise_std = a.noise;
    for (int i = 0; i < a.random_trees; ++i) {
      const TreeCase c = make_tree_case(tp, derive_seed(gen.seed, std::uint64_t(i), 0));
      GenParams p = gen;
      p.seed = c.pair.seed;
      save(std::size_t(i), c.pair, p, a.render ? &c.image : nullptr);
    }
    m.config["tree"] = {{"dims", a.dims}, {"n_branches", a.branches}, {"radius_range", a.radius_range}};
  } else {
    const auto files = image_files(a.in_dir);
    if (files.empty()) throw Error(ErrorCode::Io, "no images in '" + a.in_dir + "'");
    for (std::size_t i = 0; i < files.size(); ++i) {
      GenParams p = gen;
      p.seed = derive_seed(gen.seed, i, 0);
      const DatasetPair pair = generate_pair(io::read_mask(files[i]), p);
      std::optional<ScalarField> image;
      if (a.render) image = render_intensity(pair.broken, a.fg, a.bg, a.noise, derive_seed(gen.seed, i, 1));
      save(i, pair, p, image ? &*image : nullptr);
      m.inputs.push_back(files[i]);
      sources.push_back(fs::path(files[i]).filename().string());
    }
    m.config["sources"] = sources;
  }
  write_dataset_index(a.out, manifests, ndim);
  m.outputs.push_back((fs::path(a.out) / "dataset.json").string());
  m.config["params"] = to_json(gen);
  m.config["render"] = a.render ? json{{"fg", a.fg}, {"bg", a.bg}, {"noise_std", a.noise}} : json();
  run.write(a.manifest.empty() ? (fs::path(a.out) / "run_manifest.json").string() : a.manifest, err);
  return 0;
}

// ---- segment ------------------------------------------------------------

struct SegmentCmdArgs {
  std::string image;
  std::string out;
  std::string summary;
  std::string manifest;
  SegmentArgs seg;
};

int cmd_segment(const SegmentCmdArgs& a, const std::vector<std::string>& argv, std::ostream& err) {
  Run run("segment", argv);
  SegmentSetup setup = load_segment_setup(a.seg.config);
  const ScalarField f = preprocess(io::read_image(a.image), a.seg.median_radius);
  resolve_means(setup, f, a.seg.dark);
  setup.solver.validate(f.shape());
  auto reco = make_reconnector(a.seg.reconnector, setup.morph, setup.tiles);

  const auto t0 = Clock::now();
  const SegmentResult r = segment(f, setup.solver, *reco);
  const double seconds = std::chrono::duration<double>(Clock::now() - t0).count();
  io::write_mask(a.out, r.mask);

  const ScalarField cf = chan_weight(f, setup.solver.c1, setup.solver.c2);
  std::size_t fg = 0;
  for (std::size_t i = 0; i < r.mask.size(); ++i) fg += r.mask[i] ? 1 : 0;
  const json summary{{"image", a.image},
                     {"mask", a.out},
                     {"reconnector", reco->name()},
                     {"config", to_json(setup.solver)},
                     {"iterations", r.state.iter},
                     {"converged", r.converged},
                     {"last_delta", r.state.last_delta},
                     {"energy", primal_energy(r.state.u, cf, setup.solver.lambda)},
                     {"foreground_cells", fg},
                     {"seconds", seconds}};
  const std::string summary_path = a.summary.empty() ? base_of(a.out) + ".summary.json" : a.summary;
  io::write_text(summary_path, summary.dump(2) + "\n");
  err << "segment: " << r.state.iter << " iterations" << (r.converged ? ", converged" : "") << ", " << fg
      << " foreground cells\n";

  auto& m = run.manifest();
  m.config = setup_json(setup, a.seg.reconnector, a.seg.median_radius, a.seg.dark);
  m.inputs = {a.image};
  if (!a.seg.config.empty()) m.inputs.push_back(a.seg.config);
  m.outputs = {a.out, summary_path};
  run.write(a.manifest.empty() ? base_of(a.out) + ".manifest.json" : a.manifest, err);
  return 0;
}

// ---- sweep-lambda ---------------------------------------------------------

struct SweepArgs {
  std::string image;
  std::string gt;
  std::vector<double> range;
  double step = 1e-3;
  std::string report;
  std::string table;
  std::string manifest;
  SegmentArgs seg;
};

int cmd_sweep(const SweepArgs& a, const std::vector<std::string>& argv, std::ostream& out, std::ostream& err) {
  Run run("sweep-lambda", argv);
  SegmentSetup setup = load_segment_setup(a.seg.config);
  const ScalarField f = preprocess(io::read_image(a.image), a.seg.median_radius);
  const BinaryMask gt = io::read_mask(a.gt);
  require_same_dims(f.shape(), gt.shape(), "sweep-lambda");
  resolve_means(setup, f, a.seg.dark);
  auto reco = make_reconnector(a.seg.reconnector, setup.morph, setup.tiles);

  auto [lo, hi] = default_lambda_range(f.shape().ndim());
  if (!a.range.empty()) {
    if (a.range.size() != 2) throw Error(ErrorCode::InvalidArgument, "--range needs two values");
    lo = a.range[0];
    hi = a.range[1];
  }
  if (!(lo > 0.0)) throw Error(ErrorCode::InvalidArgument, "lambda range must be positive");
  const std::size_t n = sweep_count(lo, hi, a.step);

  std::ostringstream table;
  table << "lambda,mcc,dice,iterations,converged\n";
  json rows = json::array();
  std::size_t best = 0;
  double best_mcc = -2.0;
  for (std::size_t k = 0; k < n; ++k) {
    SolverConfig c = setup.solver;
    c.lambda = lo + double(k) * a.step;
    const SegmentResult r = segment(f, c, *reco);
    const Volumetric v = volumetric(confusion(r.mask, gt));
    table << num(c.lambda) << "," << num(v.mcc) << "," << num(v.dice) << "," << r.state.iter << ","
          << (r.converged ? 1 : 0) << "\n";
    rows.push_back({{"lambda", c.lambda}, {"mcc", v.mcc}, {"dice", v.dice}, {"iterations", r.state.iter}});
    if (v.mcc > best_mcc) {
      best_mcc = v.mcc;
      best = k;
    }
  }
  const double best_lambda = rows[best]["lambda"].get<double>();
  err << "sweep-lambda: " << n << " values, best lambda " << num(best_lambda) << " (mcc " << num(best_mcc) << ")\n";

  auto& m = run.manifest();
  if (a.table.empty()) out << table.str();
  else {
    io::write_text(a.table, table.str());
    m.outputs.push_back(a.table);
  }
  const json report{{"image", a.image},
                    {"gt", a.gt},
                    {"range", {lo, hi}},
                    {"step", a.step},
                    {"reconnector", reco->name()},
                    {"best_lambda", best_lambda},
                    {"best_mcc", best_mcc},
                    {"table", rows}};
  io::write_text(a.report, report.dump(2) + "\n");
  m.outputs.push_back(a.report);
  m.config = setup_json(setup, a.seg.reconnector, a.seg.median_radius, a.seg.dark);
  m.config["range"] = {lo, hi};
  m.config["step"] = a.step;
  m.inputs = {a.image, a.gt};
  if (!a.seg.config.empty()) m.inputs.push_back(a.seg.config);
  run.write(a.manifest.empty() ? base_of(a.report) + ".manifest.json" : a.manifest, err);
  return 0;
}

// ---- evaluate -------------------------------------------------------------

struct EvaluateArgs {
  std::string pred;
  std::string gt;
  std::string roi;
  bool postprocess = false;
  std::string csv;
  std::string json_out;
  std::string manifest;
};

int cmd_evaluate(const EvaluateArgs& a, const std::vector<std::string>& argv, std::ostream& out,
                 std::ostream& err) {
  Run run("evaluate", argv);
  struct Job {
    std::string name, pred, gt, roi;
  };
  std::vector<Job> jobs;
  if (fs::is_directory(a.pred)) {
    if (!fs::is_directory(a.gt)) throw Error(ErrorCode::InvalidArgument, "--pred is a directory, --gt is not");
    for (const auto& p : image_files(a.pred)) {
      const std::string name = fs::path(p).filename().string();
      const fs::path g = fs::path(a.gt) / name;
      if (!fs::exists(g)) throw Error(ErrorCode::Io, "no ground truth '" + g.string() + "' for '" + p + "'");
      std::string roi = a.roi;
      if (!roi.empty() && fs::is_directory(roi)) roi = (fs::path(roi) / name).string();
      jobs.push_back({name, p, g.string(), roi});
    }
    if (jobs.empty()) throw Error(ErrorCode::Io, "no images in '" + a.pred + "'");
  } else {
    if (!a.roi.empty() && fs::is_directory(a.roi)) throw Error(ErrorCode::InvalidArgument, "--roi must be a file");
    jobs.push_back({fs::path(a.pred).filename().string(), a.pred, a.gt, a.roi});
  }

  std::vector<MetricsReport> reports(jobs.size());
  std::exception_ptr failure;
#ifdef _OPENMP
#pragma omp parallel for schedule(dynamic)
#endif
  for (std::size_t i = 0; i < jobs.size(); ++i) {
    try {
      const BinaryMask pred = io::read_mask(jobs[i].pred);
      const BinaryMask gt = io::read_mask(jobs[i].gt);
      std::optional<BinaryMask> roi;
      if (!jobs[i].roi.empty()) roi = io::read_mask(jobs[i].roi);
      reports[i] = evaluate(pred, gt, roi ? &*roi : nullptr, a.postprocess, jobs[i].name);
    } catch (...) {
#ifdef _OPENMP
#pragma omp critical
#endif
      if (!failure) failure = std::current_exception();
    }
  }
  if (failure) std::rethrow_exception(failure);

  auto& m = run.manifest();
  std::string csv = csv_header() + "\n";
  json arr = json::array();
  for (const auto& r : reports) {
    csv += csv_row(r) + "\n";
    arr.push_back(to_json(r));
  }
  if (a.csv.empty() && a.json_out.empty()) out << csv;
  if (!a.csv.empty()) {
    io::write_text(a.csv, csv);
    m.outputs.push_back(a.csv);
  }
  if (!a.json_out.empty()) {
    io::write_text(a.json_out, arr.dump(2) + "\n");
    m.outputs.push_back(a.json_out);
  }
  for (const auto& j : jobs) {
    m.inputs.push_back(j.pred);
    m.inputs.push_back(j.gt);
    if (!j.roi.empty()) m.inputs.push_back(j.roi);
  }
  m.config = {{"postprocess", a.postprocess}, {"roi", a.roi.empty() ? json() : json(a.roi)}};
  err << "evaluate: " << reports.size() << (reports.size() == 1 ? " pair\n" : " pairs\n");
  std::string path = a.manifest;
  if (path.empty())
    path = !a.csv.empty() ? base_of(a.csv) + ".manifest.json"
                          : !a.json_out.empty() ? base_of(a.json_out) + ".manifest.json" : "evaluate.manifest.json";
  run.write(path, err);
  return 0;
}

// ---- ablate ---------------------------------------------------------------

struct AblateArgs {
  std::string image;
  std::string gt;
  std::vector<std::string> models;
  std::vector<int> alphas;
  bool no_morph = false;
  bool postprocess = false;
  std::string out;
  std::string manifest;
  SegmentArgs seg;
};

int cmd_ablate(const AblateArgs& a, const std::vector<std::string>& argv, std::ostream& err) {
  Run run("ablate", argv);
  SegmentSetup setup = load_segment_setup(a.seg.config);
  const ScalarField f = preprocess(io::read_image(a.image), a.seg.median_radius);
  const BinaryMask gt = io::read_mask(a.gt);
  require_same_dims(f.shape(), gt.shape(), "ablate");
  resolve_means(setup, f, a.seg.dark);

  struct Variant {
    std::string name, spec;
  };
  std::vector<Variant> variants{{"tv", "identity"}};
  if (!a.no_morph) variants.push_back({"morph", "morph"});
  for (const auto& s : a.models) {
    const auto eq = s.find('=');
    if (eq == std::string::npos || eq == 0 || eq + 1 == s.size())
      throw Error(ErrorCode::InvalidArgument, "--model expects NAME=PATH, got '" + s + "'");
    variants.push_back({s.substr(0, eq), "model:" + s.substr(eq + 1)});
  }
  std::vector<int> alphas = a.alphas;
  if (alphas.empty()) alphas.push_back(setup.solver.resolved_alpha());

  std::string csv = "variant,alpha," + csv_header() + "\n";
  for (const auto& v : variants) {
    auto reco = make_reconnector(v.spec, setup.morph, setup.tiles);
    // The identity reconnector makes alpha irrelevant.
    const std::vector<int> list = v.spec == "identity" ? std::vector<int>{setup.solver.resolved_alpha()} : alphas;
    for (int alpha : list) {
      SolverConfig c = setup.solver;
      c.alpha = alpha;
      const SegmentResult r = segment(f, c, *reco);
      const MetricsReport rep = evaluate(r.mask, gt, nullptr, a.postprocess, v.name);
      csv += v.name + "," + std::to_string(alpha) + "," + csv_row(rep) + "\n";
      err << "ablate: " << v.name << " alpha " << alpha << " dice " << num(rep.volumetric.dice) << "\n";
    }
  }
  io::write_text(a.out, csv);

  auto& m = run.manifest();
  m.config = setup_json(setup, "", a.seg.median_radius, a.seg.dark);
  m.config.erase("reconnector");
  json vs = json::array();
  for (const auto& v : variants) vs.push_back({{"name", v.name}, {"reconnector", v.spec}});
  m.config["variants"] = vs;
  m.config["alphas"] = alphas;
  m.config["postprocess"] = a.postprocess;
  m.inputs = {a.image, a.gt};
  if (!a.seg.config.empty()) m.inputs.push_back(a.seg.config);
  m.outputs = {a.out};
  run.write(a.manifest.empty() ? base_of(a.out) + ".manifest.json" : a.manifest, err);
  return 0;
}

// ---- replay ---------------------------------------------------------------

class WorkingDir {
 public:
  explicit WorkingDir(const std::string& dir) : saved_(fs::current_path()) { fs::current_path(dir); }
  ~WorkingDir() {
    std::error_code ec;
    fs::current_path(saved_, ec);
  }

 private:
  fs::path saved_;
};

int cmd_replay(const std::string& path, std::ostream& out, std::ostream& err) {
  json j;
  try {
    j = json::parse(io::read_text(path));
  } catch (const json::exception& e) {
    throw Error(ErrorCode::Config, path + ": " + e.what());
  }
  const RunManifest m = run_manifest_from_json(j);
  if (m.argv.empty() || m.argv.front() == "replay") throw Error(ErrorCode::Config, path + ": nothing to replay");
  if (m.version != version())
    err << "replay: manifest written by version " << m.version << ", running " << version() << "\n";
  std::error_code ec;
  if (!fs::is_directory(m.cwd, ec)) throw Error(ErrorCode::Io, "working directory '" + m.cwd + "' is gone");
  WorkingDir wd(m.cwd);
  return run(m.argv, out, err);
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Curvilinear structure segmentation with a plug-in reconnecting operator", "curvseg"};
  app.require_subcommand(1);
  app.set_version_flag("--version", version());

  GenerateArgs ga;
  auto* gen = app.add_subcommand("generate", "Generate broken/clean dataset pairs");
  gen->add_option("--in-dir", ga.in_dir, "Directory of clean masks");
  gen->add_option("--random-trees", ga.random_trees, "Number of random trees to generate instead");
  gen->add_option("--params", ga.params, "Key = value file with generator parameters");
  gen->add_option("--out", ga.out, "Output dataset directory")->required();
  gen->add_option("--seed", ga.seed, "Overrides the seed of the params file");
  gen->add_option("--dims", ga.dims, "Random tree grid, slowest axis first")->delimiter(',')->capture_default_str();
  gen->add_option("--branches", ga.branches, "Branches per random tree")->capture_default_str();
  gen->add_option("--radius-range", ga.radius_range, "Random tree tube radii")->delimiter(',')->capture_default_str();
  gen->add_flag("--render", ga.render, "Also write a noisy gray-level rendering of each broken mask");
  gen->add_option("--fg", ga.fg, "Rendering foreground level")->capture_default_str();
  gen->add_option("--bg", ga.bg, "Rendering background level")->capture_default_str();
  gen->add_option("--noise", ga.noise, "Rendering noise standard deviation")->capture_default_str();
  gen->add_option("--manifest", ga.manifest, "Run manifest path (default OUT/run_manifest.json)");

  SegmentCmdArgs sa;
  auto* seg = app.add_subcommand("segment", "Segment one image");
  seg->add_option("image", sa.image, "Input image")->required();
  seg->add_option("--out", sa.out, "Output mask")->required();
  seg->add_option("--summary", sa.summary, "Solver summary JSON (default OUT.summary.json)");
  seg->add_option("--manifest", sa.manifest, "Run manifest path (default OUT.manifest.json)");
  add_segment_flags(seg, sa.seg);

  SweepArgs wa;
  auto* sweep = app.add_subcommand("sweep-lambda", "Pick lambda by maximum MCC against a ground truth");
  sweep->add_option("image", wa.image, "Input image")->required();
  sweep->add_option("--gt", wa.gt, "Ground-truth mask")->required();
  sweep->add_option("--range", wa.range, "First and last lambda (default by dimension)")->delimiter(',');
  sweep->add_option("--step", wa.step, "Lambda step")->capture_default_str();
  sweep->add_option("--report", wa.report, "Report JSON with the table and the best lambda")->required();
  sweep->add_option("--table", wa.table, "CSV table path (default standard output)");
  sweep->add_option("--manifest", wa.manifest, "Run manifest path (default REPORT.manifest.json)");
  add_segment_flags(sweep, wa.seg);

  EvaluateArgs ea;
  auto* ev = app.add_subcommand("evaluate", "Score predictions against ground truth");
  ev->add_option("--pred", ea.pred, "Predicted mask or directory of masks")->required();
  ev->add_option("--gt", ea.gt, "Ground-truth mask or directory with the same file names")->required();
  ev->add_option("--roi", ea.roi, "Region-of-interest mask or directory (default whole grid)");
  ev->add_flag("--postprocess", ea.postprocess, "Topological post-processing before Betti errors");
  ev->add_option("--csv", ea.csv, "CSV output (default standard output when no --json)");
  ev->add_option("--json", ea.json_out, "JSON output");
  ev->add_option("--manifest", ea.manifest, "Run manifest path");

  AblateArgs aa;
  auto* abl = app.add_subcommand("ablate", "Compare reconnectors and injection iterations on one image");
  abl->add_option("image", aa.image, "Input image")->required();
  abl->add_option("--gt", aa.gt, "Ground-truth mask")->required();
  abl->add_option("--model", aa.models, "Extra variant NAME=PATH (repeatable)");
  abl->add_option("--alphas", aa.alphas, "Injection iterations to sweep")->delimiter(',');
  abl->add_flag("--no-morph", aa.no_morph, "Skip the morphological variant");
  abl->add_flag("--postprocess", aa.postprocess, "Topological post-processing before Betti errors");
  abl->add_option("--out", aa.out, "CSV output")->required();
  abl->add_option("--manifest", aa.manifest, "Run manifest path (default OUT.manifest.json)");
  add_segment_flags(abl, aa.seg);

  std::string replay_path;
  auto* rep = app.add_subcommand("replay", "Re-run the command recorded in a run manifest");
  rep->add_option("manifest", replay_path, "Run manifest")->required();

  try {
    app.parse(std::vector<std::string>(args.rbegin(), args.rend()));
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err);
  }

  try {
    if (gen->parsed()) return cmd_generate(ga, args, err);
    if (seg->parsed()) return cmd_segment(sa, args, err);
    if (sweep->parsed()) return cmd_sweep(wa, args, out, err);
    if (ev->parsed()) return cmd_evaluate(ea, args, out, err);
    if (abl->parsed()) return cmd_ablate(aa, args, err);
    if (rep->parsed()) return cmd_replay(replay_path, out, err);
  } catch (const Error& e) {
    err << "curvseg: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    err << "curvseg: " << e.what() << "\n";
    return 1;
  }
  return 1;
}

}  // namespace curvseg::cli
