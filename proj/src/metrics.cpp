#include "curvseg/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "curvseg/distance.hpp"
#include "curvseg/error.hpp"
#include "curvseg/morphology.hpp"
#include "curvseg/skeleton.hpp"

namespace curvseg {

ConfusionCounts confusion(const BinaryMask& pred, const BinaryMask& gt, const BinaryMask& roi) {
  require_same_dims(pred.shape(), gt.shape(), "confusion");
  require_same_dims(pred.shape(), roi.shape(), "confusion roi");
  ConfusionCounts c;
  std::size_t inside = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    if (!roi[i]) continue;
    ++inside;
    const bool p = pred[i] != 0, g = gt[i] != 0;
    if (p && g) ++c.tp;
    else if (p) ++c.fp;
    else if (g) ++c.fn;
    else ++c.tn;
  }
  if (inside == 0) throw Error(ErrorCode::InvalidArgument, "confusion: empty region of interest");
  return c;
}

ConfusionCounts confusion(const BinaryMask& pred, const BinaryMask& gt) {
  return confusion(pred, gt, BinaryMask(pred.shape(), 1));
}

namespace {

double ratio(double num, double den, const char* flag, std::vector<std::string>& flags) {
  if (den == 0.0) {
    flags.emplace_back(flag);
    return 0.0;
  }
  return num / den;
}

}  // namespace

Volumetric volumetric(const ConfusionCounts& c) {
  Volumetric v;
  const double tp = double(c.tp), fp = double(c.fp), tn = double(c.tn), fn = double(c.fn);
  v.tpr = ratio(tp, tp + fn, "tpr_undefined", v.flags);
  v.ppv = ratio(tp, tp + fp, "ppv_undefined", v.flags);
  v.dice = ratio(2.0 * tp, 2.0 * tp + fp + fn, "dice_undefined", v.flags);
  const long double den = (static_cast<long double>(tp) + fp) * (static_cast<long double>(tp) + fn) *
                          (static_cast<long double>(tn) + fp) * (static_cast<long double>(tn) + fn);
  const long double num = static_cast<long double>(tp) * tn - static_cast<long double>(fp) * fn;
  v.mcc = ratio(double(num), double(std::sqrt(den)), "mcc_undefined", v.flags);
  return v;
}

ClDice cl_dice(const BinaryMask& pred, const BinaryMask& gt) {
  require_same_dims(pred.shape(), gt.shape(), "cl_dice");
  const BinaryMask sp = skeletonize(pred);
  const BinaryMask sg = skeletonize(gt);
  ClDice r;
  const std::size_t np = count(sp), ng = count(sg);
  if (np == 0 || ng == 0) {
    r.empty_skeleton = true;
    return r;
  }
  r.topology_precision = double(count(mask_and(sp, gt))) / double(np);
  r.topology_sensitivity = double(count(mask_and(sg, pred))) / double(ng);
  const double s = r.topology_precision + r.topology_sensitivity;
  r.value = s > 0.0 ? 2.0 * r.topology_precision * r.topology_sensitivity / s : 0.0;
  return r;
}

BinaryMask boundary(const BinaryMask& m) {
  const Shape& s = m.shape();
  const auto offs = neighbor_offsets(s.ndim(), Connectivity::Face);
  BinaryMask out(s);
  for (std::size_t i = 0; i < m.size(); ++i) {
    if (!m[i]) continue;
    const Coord c = s.coord(Index(i));
    for (const auto& o : offs) {
      const Coord n{c[0] + o[0], c[1] + o[1], c[2] + o[2]};
      if (!s.contains(n) || !m[std::size_t(s.linear(n))]) {
        out[i] = 1;
        break;
      }
    }
  }
  return out;
}

namespace {

double percentile(std::vector<double> x, double q) {
  std::sort(x.begin(), x.end());
  const double pos = q * double(x.size() - 1);
  const auto lo = std::size_t(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, x.size() - 1);
  return x[lo] + (pos - double(lo)) * (x[hi] - x[lo]);
}

}  // namespace

SurfaceDistances surface_distances(const BinaryMask& pred, const BinaryMask& gt) {
  require_same_dims(pred.shape(), gt.shape(), "surface_distances");
  if (count(pred) == 0 || count(gt) == 0) throw Error(ErrorCode::EmptySurface, "surface_distances");
  const BinaryMask bp = boundary(pred);
  const BinaryMask bg(pred.shape(), boundary(gt).storage());
  const ScalarField to_g = squared_distance_to(bg);
  const ScalarField to_p = squared_distance_to(bp);
  std::vector<double> pooled;
  for (std::size_t i = 0; i < bp.size(); ++i) {
    if (bp[i]) pooled.push_back(std::sqrt(to_g[i]));
    if (bg[i]) pooled.push_back(std::sqrt(to_p[i]));
  }
  SurfaceDistances d;
  d.hd95 = percentile(pooled, 0.95);
  double sum = 0.0;
  for (double x : pooled) sum += x;
  d.assd = sum / double(pooled.size());
  return d;
}

std::int64_t euler_characteristic(const BinaryMask& m) {
  const Shape& s = m.shape();
  const int nd = s.ndim();
  // Cells of the cubical complex live on the doubled lattice: an odd
  // coordinate spans a voxel along that axis, an even one is a lattice plane.
  // A cell is present iff one of the voxels whose closure contains it is set.
  std::array<Index, 3> doubled{1, 1, 1};
  for (int k = 0; k < nd; ++k) doubled[std::size_t(k)] = 2 * s.dim(k) + 1;
  auto voxel_range = [&](int k, Index c, Index& lo, Index& hi) {
    if (c % 2) {
      lo = hi = (c - 1) / 2;
    } else {
      lo = std::max<Index>(0, c / 2 - 1);
      hi = std::min<Index>(s.dim(k) - 1, c / 2);
    }
  };
  std::int64_t chi = 0;
  std::array<Index, 3> lo{0, 0, 0}, hi{0, 0, 0};
  Coord c{0, 0, 0};
  for (c[0] = 0; c[0] < doubled[0]; ++c[0]) {
    voxel_range(0, c[0], lo[0], hi[0]);
    for (c[1] = 0; c[1] < doubled[1]; ++c[1]) {
      voxel_range(1, c[1], lo[1], hi[1]);
      for (c[2] = 0; c[2] < doubled[2]; ++c[2]) {
        if (nd == 3) voxel_range(2, c[2], lo[2], hi[2]);
        bool present = false;
        for (Index a = lo[0]; a <= hi[0] && !present; ++a)
          for (Index b = lo[1]; b <= hi[1] && !present; ++b)
            for (Index e = lo[2]; e <= hi[2] && !present; ++e) present = m.at({a, b, e}) != 0;
        if (!present) continue;
        int dim = 0;
        for (int k = 0; k < nd; ++k) dim += int(c[std::size_t(k)] % 2);
        chi += (dim % 2) ? -1 : 1;
      }
    }
  }
  return chi;
}

namespace {

std::int64_t bounded_cavities(const BinaryMask& m) {
  const Shape& s = m.shape();
  const LabelField labels = connected_components(complement(m), Connectivity::Face);
  const int n = label_count(labels);
  std::vector<bool> touches(std::size_t(n) + 1, false);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (!labels[i]) continue;
    const Coord c = s.coord(Index(i));
    for (int k = 0; k < s.ndim(); ++k)
      if (c[std::size_t(k)] == 0 || c[std::size_t(k)] == s.dim(k) - 1) touches[std::size_t(labels[i])] = true;
  }
  return std::count(touches.begin() + 1, touches.end(), false);
}

}  // namespace

Betti betti(const BinaryMask& m) {
  Betti b;
  b.b0 = label_count(connected_components(m, Connectivity::Full));
  b.b2 = m.shape().ndim() == 3 ? bounded_cavities(m) : 0;
  b.chi = euler_characteristic(m);
  b.b1 = b.b0 + b.b2 - b.chi;
  return b;
}

BinaryMask topo_postprocess(const BinaryMask& pred, const PostprocessRule& rule) {
  if (pred.shape().ndim() == 3) return remove_small_components(pred, rule.min_component_3d);
  return fill_small_holes(remove_small_components(pred, rule.min_component_2d), rule.max_hole_2d);
}

std::optional<double> error_ratio(double value, double reference) {
  if (reference == 0.0) return std::nullopt;
  return std::abs((value - reference) / reference);
}

TopoErrors topo_errors(const BinaryMask& pred, const BinaryMask& gt, bool postprocess) {
  require_same_dims(pred.shape(), gt.shape(), "topo_errors");
  TopoErrors t;
  t.pred = betti(postprocess ? topo_postprocess(pred) : pred);
  t.gt = betti(gt);
  t.eps_b0 = error_ratio(double(t.pred.b0), double(t.gt.b0));
  t.eps_b1 = error_ratio(double(t.pred.b1), double(t.gt.b1));
  t.eps_chi = error_ratio(double(t.pred.chi), double(t.gt.chi));
  return t;
}

MetricsReport evaluate(const BinaryMask& pred, const BinaryMask& gt, const BinaryMask* roi, bool postprocess,
                       std::string name) {
  require_same_dims(pred.shape(), gt.shape(), "evaluate");
  MetricsReport r;
  r.name = std::move(name);
  r.postprocess = postprocess;
  r.roi_default = roi == nullptr;
  r.volumetric = volumetric(roi ? confusion(pred, gt, *roi) : confusion(pred, gt));
  r.flags = r.volumetric.flags;
  if (r.roi_default) r.flags.emplace_back("roi_full_grid");
  r.cl_dice = cl_dice(pred, gt);
  if (r.cl_dice.empty_skeleton) r.flags.emplace_back("cl_dice_empty_skeleton");
  if (count(pred) && count(gt)) {
    r.surface = surface_distances(pred, gt);
  } else {
    r.flags.emplace_back("surface_empty");
  }
  r.topo = topo_errors(pred, gt, postprocess);
  if (!r.topo.eps_b0) r.flags.emplace_back("eps_b0_undefined");
  if (!r.topo.eps_b1) r.flags.emplace_back("eps_b1_undefined");
  if (!r.topo.eps_chi) r.flags.emplace_back("eps_chi_undefined");
  return r;
}

const std::vector<std::string>& csv_columns() {
  static const std::vector<std::string> cols{
      "name",    "tpr",    "ppv",    "dice",    "mcc",    "cl_dice", "hd95",    "assd",
      "pred_b0", "pred_b1", "pred_b2", "pred_chi", "gt_b0", "gt_b1",  "gt_b2",   "gt_chi",
      "eps_b0",  "eps_b1", "eps_chi", "postprocess", "flags"};
  return cols;
}

std::string csv_header() {
  std::string out;
  for (const auto& c : csv_columns()) out += (out.empty() ? "" : ",") + c;
  return out;
}

namespace {

std::string num(double x) {
  std::ostringstream os;
  os.precision(10);
  os << x;
  return os.str();
}

std::string opt(const std::optional<double>& x) { return x ? num(*x) : std::string(); }

std::string joined(const std::vector<std::string>& v, char sep) {
  std::string out;
  for (const auto& s : v) out += (out.empty() ? "" : std::string(1, sep)) + s;
  return out;
}

nlohmann::json opt_json(const std::optional<double>& x) { return x ? nlohmann::json(*x) : nlohmann::json(); }

nlohmann::json betti_json(const Betti& b) {
  return {{"b0", b.b0}, {"b1", b.b1}, {"b2", b.b2}, {"chi", b.chi}};
}

}  // namespace

std::string csv_row(const MetricsReport& r) {
  const auto& v = r.volumetric;
  const auto& p = r.topo.pred;
  const auto& g = r.topo.gt;
  std::string name = r.name;
  std::replace(name.begin(), name.end(), ',', '_');
  const std::vector<std::string> cells{
      name,
      num(v.tpr),
      num(v.ppv),
      num(v.dice),
      num(v.mcc),
      num(r.cl_dice.value),
      r.surface ? num(r.surface->hd95) : "",
      r.surface ? num(r.surface->assd) : "",
      std::to_string(p.b0),
      std::to_string(p.b1),
      std::to_string(p.b2),
      std::to_string(p.chi),
      std::to_string(g.b0),
      std::to_string(g.b1),
      std::to_string(g.b2),
      std::to_string(g.chi),
      opt(r.topo.eps_b0),
      opt(r.topo.eps_b1),
      opt(r.topo.eps_chi),
      r.postprocess ? "1" : "0",
      joined(r.flags, ';')};
  return joined(cells, ',');
}

nlohmann::json to_json(const MetricsReport& r) {
  const auto& v = r.volumetric;
  nlohmann::json j;
  j["name"] = r.name;
  j["tpr"] = v.tpr;
  j["ppv"] = v.ppv;
  j["dice"] = v.dice;
  j["mcc"] = v.mcc;
  j["cl_dice"] = r.cl_dice.value;
  j["hd95"] = r.surface ? nlohmann::json(r.surface->hd95) : nlohmann::json();
  j["assd"] = r.surface ? nlohmann::json(r.surface->assd) : nlohmann::json();
  j["betti_pred"] = betti_json(r.topo.pred);
  j["betti_gt"] = betti_json(r.topo.gt);
  j["eps_b0"] = opt_json(r.topo.eps_b0);
  j["eps_b1"] = opt_json(r.topo.eps_b1);
  j["eps_chi"] = opt_json(r.topo.eps_chi);
  j["postprocess"] = r.postprocess;
  j["roi_default"] = r.roi_default;
  j["flags"] = r.flags;
  return j;
}

}  // namespace curvseg
