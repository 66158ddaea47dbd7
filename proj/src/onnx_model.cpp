#include "curvseg/onnx_model.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <functional>
#include <limits>
#include <map>
#include <set>
#include <sstream>
#include <unordered_map>

#include "curvseg/error.hpp"
#include "onnx.pb.h"

namespace curvseg::nn {

using Dims = std::vector<std::int64_t>;

std::size_t element_count(const Dims& dims) {
  std::size_t n = 1;
  for (auto d : dims) n *= std::size_t(d);
  return n;
}

Tensor::Tensor(Dims d, float fill) : dims(std::move(d)), data(element_count(dims), fill) {}

Tensor::Tensor(Dims d, std::vector<float> values) : dims(std::move(d)), data(std::move(values)) {
  if (data.size() != element_count(dims)) throw Error(ErrorCode::InvalidArgument, "tensor value count mismatch");
}

namespace {

[[noreturn]] void fail_load(const std::string& what) { throw Error(ErrorCode::ModelLoad, what); }
[[noreturn]] void fail_run(const std::string& what) { throw Error(ErrorCode::ModelOutput, what); }

std::string dims_str(const Dims& d) {
  std::ostringstream os;
  os << "(";
  for (std::size_t i = 0; i < d.size(); ++i) os << (i ? ", " : "") << d[i];
  os << ")";
  return os.str();
}

template <class T>
void read_raw(const std::string& raw, std::size_t n, std::vector<float>& out) {
  if (raw.size() != n * sizeof(T)) fail_load("raw tensor data has the wrong size");
  out.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    T v;
    std::memcpy(&v, raw.data() + i * sizeof(T), sizeof(T));
    out[i] = static_cast<float>(v);
  }
}

Tensor from_proto(const onnx::TensorProto& t) {
  if (t.data_location() == onnx::TensorProto::EXTERNAL) fail_load("external tensor data is not supported");
  Tensor out;
  out.dims.assign(t.dims().begin(), t.dims().end());
  const std::size_t n = element_count(out.dims);
  const bool raw = t.has_raw_data();
  switch (t.data_type()) {
    case onnx::TensorProto::FLOAT:
      if (raw) read_raw<float>(t.raw_data(), n, out.data);
      else out.data.assign(t.float_data().begin(), t.float_data().end());
      break;
    case onnx::TensorProto::DOUBLE:
      if (raw) read_raw<double>(t.raw_data(), n, out.data);
      else for (double v : t.double_data()) out.data.push_back(float(v));
      break;
    case onnx::TensorProto::INT64:
      if (raw) read_raw<std::int64_t>(t.raw_data(), n, out.data);
      else for (auto v : t.int64_data()) out.data.push_back(float(v));
      break;
    case onnx::TensorProto::INT32:
      if (raw) read_raw<std::int32_t>(t.raw_data(), n, out.data);
      else for (auto v : t.int32_data()) out.data.push_back(float(v));
      break;
    default:
      fail_load("tensor '" + t.name() + "' has unsupported element type " + std::to_string(t.data_type()));
  }
  if (out.data.size() != n) fail_load("tensor '" + t.name() + "' has " + std::to_string(out.data.size()) +
                                      " values for dims " + dims_str(out.dims));
  return out;
}

// Attribute lookup over one node.
class Attrs {
 public:
  explicit Attrs(const onnx::NodeProto& n) {
    for (const auto& a : n.attribute()) map_[a.name()] = &a;
  }
  bool has(const std::string& k) const { return map_.count(k) != 0; }
  std::int64_t i(const std::string& k, std::int64_t def) const {
    auto it = map_.find(k);
    return it == map_.end() ? def : it->second->i();
  }
  float f(const std::string& k, float def) const {
    auto it = map_.find(k);
    return it == map_.end() ? def : it->second->f();
  }
  std::string s(const std::string& k, const std::string& def) const {
    auto it = map_.find(k);
    return it == map_.end() ? def : it->second->s();
  }
  Dims ints(const std::string& k) const {
    auto it = map_.find(k);
    if (it == map_.end()) return {};
    return Dims(it->second->ints().begin(), it->second->ints().end());
  }
  std::vector<float> floats(const std::string& k) const {
    auto it = map_.find(k);
    if (it == map_.end()) return {};
    return std::vector<float>(it->second->floats().begin(), it->second->floats().end());
  }
  const onnx::TensorProto* t(const std::string& k) const {
    auto it = map_.find(k);
    return it == map_.end() ? nullptr : &it->second->t();
  }

 private:
  std::map<std::string, const onnx::AttributeProto*> map_;
};

// ---- geometry -------------------------------------------------------------

// (N, C, D, H, W) view of a rank 3..5 tensor; missing spatial axes are 1.
struct Geom {
  std::int64_t n = 1, c = 1;
  std::array<std::int64_t, 3> s{1, 1, 1};
  int spatial = 0;

  std::int64_t volume() const { return s[0] * s[1] * s[2]; }
};

Geom geom_of(const Dims& d) {
  if (d.size() < 3 || d.size() > 5) fail_run("expected a tensor of rank 3 to 5, got " + dims_str(d));
  Geom g;
  g.n = d[0];
  g.c = d[1];
  g.spatial = int(d.size()) - 2;
  for (int k = 0; k < g.spatial; ++k) g.s[std::size_t(3 - g.spatial + k)] = d[std::size_t(2 + k)];
  return g;
}

Dims dims_of(std::int64_t n, std::int64_t c, const std::array<std::int64_t, 3>& s, int spatial) {
  Dims d{n, c};
  for (int k = 0; k < spatial; ++k) d.push_back(s[std::size_t(3 - spatial + k)]);
  return d;
}

// Per-axis window parameters padded to 3 axes.
struct Window {
  std::array<std::int64_t, 3> k{1, 1, 1}, stride{1, 1, 1}, dil{1, 1, 1}, pad_begin{0, 0, 0}, pad_end{0, 0, 0};
};

std::array<std::int64_t, 3> padded3(const Dims& v, int spatial, std::int64_t fill) {
  std::array<std::int64_t, 3> out{fill, fill, fill};
  if (v.empty()) return out;
  if (int(v.size()) != spatial) fail_run("attribute length does not match spatial rank");
  for (int k = 0; k < spatial; ++k) out[std::size_t(3 - spatial + k)] = v[std::size_t(k)];
  return out;
}

Window window_of(const Attrs& a, int spatial, const Dims& kernel_from_weights) {
  Window w;
  const Dims ks = a.has("kernel_shape") ? a.ints("kernel_shape") : kernel_from_weights;
  w.k = padded3(ks, spatial, 1);
  w.stride = padded3(a.ints("strides"), spatial, 1);
  w.dil = padded3(a.ints("dilations"), spatial, 1);
  const Dims pads = a.ints("pads");
  if (!pads.empty()) {
    if (int(pads.size()) != 2 * spatial) fail_run("pads must have 2 entries per spatial axis");
    w.pad_begin = padded3(Dims(pads.begin(), pads.begin() + spatial), spatial, 0);
    w.pad_end = padded3(Dims(pads.begin() + spatial, pads.end()), spatial, 0);
  }
  return w;
}

// Resolves auto_pad for conv / pool given input extents.
void apply_auto_pad(const Attrs& a, const Geom& in, Window& w) {
  const std::string mode = a.s("auto_pad", "NOTSET");
  if (mode == "NOTSET") return;
  for (int k = 0; k < 3; ++k) {
    auto kk = std::size_t(k);
    if (mode == "VALID") {
      w.pad_begin[kk] = w.pad_end[kk] = 0;
      continue;
    }
    const std::int64_t out = (in.s[kk] + w.stride[kk] - 1) / w.stride[kk];
    const std::int64_t extent = (w.k[kk] - 1) * w.dil[kk] + 1;
    const std::int64_t total = std::max<std::int64_t>(0, (out - 1) * w.stride[kk] + extent - in.s[kk]);
    if (mode == "SAME_UPPER") {
      w.pad_begin[kk] = total / 2;
      w.pad_end[kk] = total - total / 2;
    } else if (mode == "SAME_LOWER") {
      w.pad_begin[kk] = total - total / 2;
      w.pad_end[kk] = total / 2;
    } else {
      fail_run("unsupported auto_pad " + mode);
    }
  }
}

// Range of output positions o for which o * stride + offset lies in [0, n).
void valid_range(std::int64_t offset, std::int64_t stride, std::int64_t n, std::int64_t out, std::int64_t& lo,
                 std::int64_t& hi) {
  lo = offset >= 0 ? 0 : (-offset + stride - 1) / stride;
  const std::int64_t last = n - 1 - offset;
  hi = last < 0 ? 0 : std::min(out, last / stride + 1);
  lo = std::min(lo, hi);
}

// ---- operators --------------------------------------------------------------

using Inputs = std::vector<const Tensor*>;

const Tensor& need(const Inputs& in, std::size_t i, const char* op) {
  if (i >= in.size() || !in[i]) fail_run(std::string(op) + ": missing input " + std::to_string(i));
  return *in[i];
}

const Tensor* optional_input(const Inputs& in, std::size_t i) { return i < in.size() ? in[i] : nullptr; }

Tensor conv(const Attrs& a, const Inputs& in) {
  const Tensor& x = need(in, 0, "Conv");
  const Tensor& w = need(in, 1, "Conv");
  const Tensor* b = optional_input(in, 2);
  const Geom gx = geom_of(x.dims);
  if (w.rank() != x.rank()) fail_run("Conv: weight rank differs from input rank");
  const std::int64_t group = a.i("group", 1);
  const std::int64_t m = w.dims[0], cg = w.dims[1];
  if (cg * group != gx.c || m % group) fail_run("Conv: channel/group mismatch");
  Window win = window_of(a, gx.spatial, Dims(w.dims.begin() + 2, w.dims.end()));
  apply_auto_pad(a, gx, win);
  const Geom gw = geom_of(w.dims);
  for (int k = 0; k < 3; ++k)
    if (gw.s[std::size_t(k)] != win.k[std::size_t(k)]) fail_run("Conv: kernel_shape disagrees with weights");
  std::array<std::int64_t, 3> os{};
  for (std::size_t k = 0; k < 3; ++k) {
    const std::int64_t extent = (win.k[k] - 1) * win.dil[k] + 1;
    os[k] = (gx.s[k] + win.pad_begin[k] + win.pad_end[k] - extent) / win.stride[k] + 1;
    if (os[k] < 1) fail_run("Conv: output would be empty");
  }
  Tensor out(dims_of(gx.n, m, os, gx.spatial));
  const std::int64_t mg = m / group;
  const std::int64_t ovol = os[0] * os[1] * os[2];
  const std::int64_t ivol = gx.volume();
  const std::int64_t kvol = win.k[0] * win.k[1] * win.k[2];

#pragma omp parallel for collapse(2) schedule(static)
  for (std::int64_t n = 0; n < gx.n; ++n)
    for (std::int64_t oc = 0; oc < m; ++oc) {
      float* o = out.data.data() + (n * m + oc) * ovol;
      std::fill(o, o + ovol, b ? b->data[std::size_t(oc)] : 0.0f);
      const std::int64_t g = oc / mg;
      for (std::int64_t ic = 0; ic < cg; ++ic) {
        const float* xi = x.data.data() + (n * gx.c + g * cg + ic) * ivol;
        const float* wk = w.data.data() + (oc * cg + ic) * kvol;
        for (std::int64_t kd = 0; kd < win.k[0]; ++kd)
          for (std::int64_t kh = 0; kh < win.k[1]; ++kh)
            for (std::int64_t kw = 0; kw < win.k[2]; ++kw) {
              const float wv = wk[(kd * win.k[1] + kh) * win.k[2] + kw];
              const std::int64_t offd = kd * win.dil[0] - win.pad_begin[0];
              const std::int64_t offh = kh * win.dil[1] - win.pad_begin[1];
              const std::int64_t offw = kw * win.dil[2] - win.pad_begin[2];
              std::int64_t d0, d1, h0, h1, w0, w1;
              valid_range(offd, win.stride[0], gx.s[0], os[0], d0, d1);
              valid_range(offh, win.stride[1], gx.s[1], os[1], h0, h1);
              valid_range(offw, win.stride[2], gx.s[2], os[2], w0, w1);
              for (std::int64_t od = d0; od < d1; ++od) {
                const std::int64_t id = od * win.stride[0] + offd;
                for (std::int64_t oh = h0; oh < h1; ++oh) {
                  const std::int64_t ih = oh * win.stride[1] + offh;
                  const float* row = xi + (id * gx.s[1] + ih) * gx.s[2];
                  float* orow = o + (od * os[1] + oh) * os[2];
                  const std::int64_t sw = win.stride[2];
                  for (std::int64_t ow = w0; ow < w1; ++ow) orow[ow] += wv * row[ow * sw + offw];
                }
              }
            }
      }
    }
  return out;
}

Tensor conv_transpose(const Attrs& a, const Inputs& in) {
  const Tensor& x = need(in, 0, "ConvTranspose");
  const Tensor& w = need(in, 1, "ConvTranspose");
  const Tensor* b = optional_input(in, 2);
  const Geom gx = geom_of(x.dims);
  if (w.rank() != x.rank()) fail_run("ConvTranspose: weight rank differs from input rank");
  const std::int64_t group = a.i("group", 1);
  if (w.dims[0] != gx.c || gx.c % group) fail_run("ConvTranspose: channel/group mismatch");
  const std::int64_t mg = w.dims[1], m = mg * group, cg = gx.c / group;
  Window win = window_of(a, gx.spatial, Dims(w.dims.begin() + 2, w.dims.end()));
  const auto out_pad = padded3(a.ints("output_padding"), gx.spatial, 0);
  std::array<std::int64_t, 3> os{};
  const Dims output_shape = a.ints("output_shape");
  const std::string auto_pad = a.s("auto_pad", "NOTSET");
  for (std::size_t k = 0; k < 3; ++k) {
    const std::int64_t extent = (win.k[k] - 1) * win.dil[k] + 1;
    const std::int64_t full = win.stride[k] * (gx.s[k] - 1) + out_pad[k] + extent;
    if (!output_shape.empty() || (auto_pad != "NOTSET" && auto_pad != "VALID")) {
      std::int64_t target = 0;
      if (!output_shape.empty()) {
        target = padded3(Dims(output_shape.end() - gx.spatial, output_shape.end()), gx.spatial, 1)[k];
      } else {
        target = gx.s[k] * win.stride[k];
      }
      const std::int64_t total = std::max<std::int64_t>(0, full - target);
      if (auto_pad == "SAME_UPPER") {
        win.pad_begin[k] = total / 2;
        win.pad_end[k] = total - total / 2;
      } else {
        win.pad_begin[k] = total - total / 2;
        win.pad_end[k] = total / 2;
      }
    } else if (auto_pad == "VALID") {
      win.pad_begin[k] = win.pad_end[k] = 0;
    }
    os[k] = full - win.pad_begin[k] - win.pad_end[k];
    if (os[k] < 1) fail_run("ConvTranspose: output would be empty");
  }
  Tensor out(dims_of(gx.n, m, os, gx.spatial));
  const std::int64_t ovol = os[0] * os[1] * os[2];
  const std::int64_t ivol = gx.volume();
  const std::int64_t kvol = win.k[0] * win.k[1] * win.k[2];

#pragma omp parallel for collapse(2) schedule(static)
  for (std::int64_t n = 0; n < gx.n; ++n)
    for (std::int64_t oc = 0; oc < m; ++oc) {
      float* o = out.data.data() + (n * m + oc) * ovol;
      std::fill(o, o + ovol, b ? b->data[std::size_t(oc)] : 0.0f);
      const std::int64_t g = oc / mg, ocg = oc % mg;
      for (std::int64_t ic = 0; ic < cg; ++ic) {
        const std::int64_t c = g * cg + ic;
        const float* xi = x.data.data() + (n * gx.c + c) * ivol;
        const float* wk = w.data.data() + (c * mg + ocg) * kvol;
        for (std::int64_t id = 0; id < gx.s[0]; ++id)
          for (std::int64_t ih = 0; ih < gx.s[1]; ++ih)
            for (std::int64_t iw = 0; iw < gx.s[2]; ++iw) {
              const float xv = xi[(id * gx.s[1] + ih) * gx.s[2] + iw];
              for (std::int64_t kd = 0; kd < win.k[0]; ++kd) {
                const std::int64_t od = id * win.stride[0] + kd * win.dil[0] - win.pad_begin[0];
                if (od < 0 || od >= os[0]) continue;
                for (std::int64_t kh = 0; kh < win.k[1]; ++kh) {
                  const std::int64_t oh = ih * win.stride[1] + kh * win.dil[1] - win.pad_begin[1];
                  if (oh < 0 || oh >= os[1]) continue;
                  for (std::int64_t kw = 0; kw < win.k[2]; ++kw) {
                    const std::int64_t ow = iw * win.stride[2] + kw * win.dil[2] - win.pad_begin[2];
                    if (ow < 0 || ow >= os[2]) continue;
                    o[(od * os[1] + oh) * os[2] + ow] += xv * wk[(kd * win.k[1] + kh) * win.k[2] + kw];
                  }
                }
              }
            }
      }
    }
  return out;
}

Tensor max_pool(const Attrs& a, const Inputs& in) {
  const Tensor& x = need(in, 0, "MaxPool");
  const Geom gx = geom_of(x.dims);
  if (!a.has("kernel_shape")) fail_run("MaxPool: kernel_shape is required");
  Window win = window_of(a, gx.spatial, {});
  apply_auto_pad(a, gx, win);
  const bool ceil_mode = a.i("ceil_mode", 0) != 0;
  std::array<std::int64_t, 3> os{};
  for (std::size_t k = 0; k < 3; ++k) {
    const std::int64_t extent = (win.k[k] - 1) * win.dil[k] + 1;
    const std::int64_t span = gx.s[k] + win.pad_begin[k] + win.pad_end[k] - extent;
    os[k] = (ceil_mode ? (span + win.stride[k] - 1) / win.stride[k] : span / win.stride[k]) + 1;
    // A window must start inside the input or its leading padding.
    if (ceil_mode && (os[k] - 1) * win.stride[k] >= gx.s[k] + win.pad_begin[k]) --os[k];
    if (os[k] < 1) fail_run("MaxPool: output would be empty");
  }
  Tensor out(dims_of(gx.n, gx.c, os, gx.spatial));
  const std::int64_t ovol = os[0] * os[1] * os[2];
  const std::int64_t ivol = gx.volume();
#pragma omp parallel for schedule(static)
  for (std::int64_t nc = 0; nc < gx.n * gx.c; ++nc) {
    const float* xi = x.data.data() + nc * ivol;
    float* o = out.data.data() + nc * ovol;
    for (std::int64_t od = 0; od < os[0]; ++od)
      for (std::int64_t oh = 0; oh < os[1]; ++oh)
        for (std::int64_t ow = 0; ow < os[2]; ++ow) {
          float best = -std::numeric_limits<float>::infinity();
          for (std::int64_t kd = 0; kd < win.k[0]; ++kd) {
            const std::int64_t id = od * win.stride[0] + kd * win.dil[0] - win.pad_begin[0];
            if (id < 0 || id >= gx.s[0]) continue;
            for (std::int64_t kh = 0; kh < win.k[1]; ++kh) {
              const std::int64_t ih = oh * win.stride[1] + kh * win.dil[1] - win.pad_begin[1];
              if (ih < 0 || ih >= gx.s[1]) continue;
              for (std::int64_t kw = 0; kw < win.k[2]; ++kw) {
                const std::int64_t iw = ow * win.stride[2] + kw * win.dil[2] - win.pad_begin[2];
                if (iw < 0 || iw >= gx.s[2]) continue;
                best = std::max(best, xi[(id * gx.s[1] + ih) * gx.s[2] + iw]);
              }
            }
          }
          o[(od * os[1] + oh) * os[2] + ow] = best;
        }
  }
  return out;
}

Tensor batch_norm(const Attrs& a, const Inputs& in) {
  const Tensor& x = need(in, 0, "BatchNormalization");
  const Tensor& scale = need(in, 1, "BatchNormalization");
  const Tensor& bias = need(in, 2, "BatchNormalization");
  const Tensor& mean = need(in, 3, "BatchNormalization");
  const Tensor& var = need(in, 4, "BatchNormalization");
  const float eps = a.f("epsilon", 1e-5f);
  const Geom g = geom_of(x.dims);
  for (const Tensor* t : {&scale, &bias, &mean, &var})
    if (t->size() != std::size_t(g.c)) fail_run("BatchNormalization: parameter size differs from channels");
  Tensor out(x.dims);
  const std::int64_t vol = g.volume();
  for (std::int64_t n = 0; n < g.n; ++n)
    for (std::int64_t c = 0; c < g.c; ++c) {
      const auto cc = std::size_t(c);
      const float k = scale.data[cc] / std::sqrt(var.data[cc] + eps);
      const float s = bias.data[cc] - mean.data[cc] * k;
      const std::size_t base = std::size_t((n * g.c + c) * vol);
      for (std::int64_t i = 0; i < vol; ++i) out.data[base + std::size_t(i)] = x.data[base + std::size_t(i)] * k + s;
    }
  return out;
}

Tensor instance_norm(const Attrs& a, const Inputs& in) {
  const Tensor& x = need(in, 0, "InstanceNormalization");
  const Tensor& scale = need(in, 1, "InstanceNormalization");
  const Tensor& bias = need(in, 2, "InstanceNormalization");
  const float eps = a.f("epsilon", 1e-5f);
  const Geom g = geom_of(x.dims);
  if (scale.size() != std::size_t(g.c) || bias.size() != std::size_t(g.c))
    fail_run("InstanceNormalization: parameter size differs from channels");
  Tensor out(x.dims);
  const std::int64_t vol = g.volume();
  for (std::int64_t n = 0; n < g.n; ++n)
    for (std::int64_t c = 0; c < g.c; ++c) {
      const std::size_t base = std::size_t((n * g.c + c) * vol);
      double mean = 0.0, sq = 0.0;
      for (std::int64_t i = 0; i < vol; ++i) mean += x.data[base + std::size_t(i)];
      mean /= double(vol);
      for (std::int64_t i = 0; i < vol; ++i) {
        const double d = x.data[base + std::size_t(i)] - mean;
        sq += d * d;
      }
      const double inv = 1.0 / std::sqrt(sq / double(vol) + eps);
      for (std::int64_t i = 0; i < vol; ++i)
        out.data[base + std::size_t(i)] = float((x.data[base + std::size_t(i)] - mean) * inv *
                                                    scale.data[std::size_t(c)] +
                                                bias.data[std::size_t(c)]);
    }
  return out;
}

Tensor unary(const Tensor& x, const std::function<float(float)>& f) {
  Tensor out(x.dims);
  for (std::size_t i = 0; i < x.size(); ++i) out.data[i] = f(x.data[i]);
  return out;
}

// Numpy-style multidirectional broadcasting.
Tensor broadcast(const Tensor& a, const Tensor& b, const std::function<float(float, float)>& f) {
  const std::size_t r = std::max(a.dims.size(), b.dims.size());
  Dims da(r, 1), db(r, 1), dout(r, 1);
  std::copy(a.dims.begin(), a.dims.end(), da.begin() + std::ptrdiff_t(r - a.dims.size()));
  std::copy(b.dims.begin(), b.dims.end(), db.begin() + std::ptrdiff_t(r - b.dims.size()));
  for (std::size_t k = 0; k < r; ++k) {
    if (da[k] != db[k] && da[k] != 1 && db[k] != 1)
      fail_run("cannot broadcast " + dims_str(a.dims) + " with " + dims_str(b.dims));
    dout[k] = std::max(da[k], db[k]);
  }
  Tensor out(dout);
  if (a.dims == b.dims) {
    for (std::size_t i = 0; i < out.size(); ++i) out.data[i] = f(a.data[i], b.data[i]);
    return out;
  }
  Dims sa(r, 0), sb(r, 0);
  std::int64_t ra = 1, rb = 1;
  for (std::size_t k = r; k-- > 0;) {
    sa[k] = da[k] == 1 ? 0 : ra;
    sb[k] = db[k] == 1 ? 0 : rb;
    ra *= da[k];
    rb *= db[k];
  }
  Dims idx(r, 0);
  std::int64_t ia = 0, ib = 0;
  for (std::size_t i = 0; i < out.size(); ++i) {
    out.data[i] = f(a.data[std::size_t(ia)], b.data[std::size_t(ib)]);
    for (std::size_t k = r; k-- > 0;) {
      ++idx[k];
      ia += sa[k];
      ib += sb[k];
      if (idx[k] < dout[k]) break;
      ia -= sa[k] * idx[k];
      ib -= sb[k] * idx[k];
      idx[k] = 0;
    }
  }
  return out;
}

Tensor concat(const Attrs& a, const Inputs& in) {
  if (in.empty()) fail_run("Concat: no inputs");
  const Tensor& first = need(in, 0, "Concat");
  const auto r = std::int64_t(first.rank());
  std::int64_t axis = a.i("axis", 1);
  if (axis < 0) axis += r;
  if (axis < 0 || axis >= r) fail_run("Concat: axis out of range");
  Dims out_dims = first.dims;
  out_dims[std::size_t(axis)] = 0;
  for (std::size_t i = 0; i < in.size(); ++i) {
    const Tensor& t = need(in, i, "Concat");
    if (t.rank() != first.rank()) fail_run("Concat: rank mismatch");
    for (std::int64_t k = 0; k < r; ++k)
      if (k != axis && t.dims[std::size_t(k)] != first.dims[std::size_t(k)])
        fail_run("Concat: " + dims_str(t.dims) + " vs " + dims_str(first.dims));
    out_dims[std::size_t(axis)] += t.dims[std::size_t(axis)];
  }
  Tensor out(out_dims);
  std::int64_t outer = 1;
  for (std::int64_t k = 0; k < axis; ++k) outer *= first.dims[std::size_t(k)];
  std::size_t pos = 0;
  for (std::int64_t o = 0; o < outer; ++o)
    for (const Tensor* t : in) {
      const std::size_t block = t->size() / std::size_t(outer);
      std::copy_n(t->data.begin() + std::ptrdiff_t(std::size_t(o) * block), block, out.data.begin() + std::ptrdiff_t(pos));
      pos += block;
    }
  return out;
}

// Maps an output coordinate to the input axis for Resize.
double source_coord(const std::string& mode, std::int64_t x, double scale, std::int64_t in, std::int64_t out) {
  if (mode == "half_pixel") return (double(x) + 0.5) / scale - 0.5;
  if (mode == "pytorch_half_pixel") return out > 1 ? (double(x) + 0.5) / scale - 0.5 : 0.0;
  if (mode == "align_corners") return out == 1 ? 0.0 : double(x) * double(in - 1) / double(out - 1);
  if (mode == "asymmetric") return double(x) / scale;
  if (mode == "tf_half_pixel_for_nn") return (double(x) + 0.5) / scale;
  fail_run("Resize: unsupported coordinate_transformation_mode " + mode);
}

std::int64_t nearest_index(const std::string& mode, double src, std::int64_t in) {
  double r;
  if (mode == "round_prefer_floor") r = std::ceil(src - 0.5);
  else if (mode == "round_prefer_ceil") r = std::floor(src + 0.5);
  else if (mode == "floor") r = std::floor(src);
  else if (mode == "ceil") r = std::ceil(src);
  else fail_run("Resize: unsupported nearest_mode " + mode);
  return std::clamp<std::int64_t>(std::int64_t(r), 0, in - 1);
}

// Resamples one axis of a (N, C, D, H, W) tensor.
Tensor resize_axis(const Tensor& x, int axis, std::int64_t out_len, double scale, const std::string& mode,
                   const std::string& coord_mode, const std::string& nearest_mode) {
  const Geom g = geom_of(x.dims);
  const std::int64_t in_len = g.s[std::size_t(axis)];
  std::array<std::int64_t, 3> os = g.s;
  os[std::size_t(axis)] = out_len;
  Tensor out(dims_of(g.n, g.c, os, g.spatial));
  std::int64_t inner = 1;
  for (int k = axis + 1; k < 3; ++k) inner *= g.s[std::size_t(k)];
  std::int64_t outer = g.n * g.c;
  for (int k = 0; k < axis; ++k) outer *= g.s[std::size_t(k)];

  std::vector<std::int64_t> i0(static_cast<std::size_t>(out_len)), i1(static_cast<std::size_t>(out_len));
  std::vector<float> t(std::size_t(out_len), 0.0f);
  for (std::int64_t o = 0; o < out_len; ++o) {
    const double src = source_coord(coord_mode, o, scale, in_len, out_len);
    const auto oo = std::size_t(o);
    if (mode == "nearest") {
      i0[oo] = i1[oo] = nearest_index(nearest_mode, src, in_len);
    } else {
      const double c = std::clamp(src, 0.0, double(in_len - 1));
      i0[oo] = std::int64_t(std::floor(c));
      i1[oo] = std::min(i0[oo] + 1, in_len - 1);
      t[oo] = float(c - double(i0[oo]));
    }
  }
  for (std::int64_t a = 0; a < outer; ++a)
    for (std::int64_t o = 0; o < out_len; ++o) {
      const auto oo = std::size_t(o);
      const float* r0 = x.data.data() + (a * in_len + i0[oo]) * inner;
      const float* r1 = x.data.data() + (a * in_len + i1[oo]) * inner;
      float* w = out.data.data() + (a * out_len + o) * inner;
      for (std::int64_t i = 0; i < inner; ++i) w[i] = r0[i] + t[oo] * (r1[i] - r0[i]);
    }
  return out;
}

Tensor resize(const Tensor& x, const std::vector<double>& scales, const Dims& sizes, const std::string& mode,
              const std::string& coord_mode, const std::string& nearest_mode) {
  const Geom g = geom_of(x.dims);
  const std::size_t r = x.dims.size();
  std::vector<double> sc(r, 1.0);
  Dims out(x.dims);
  if (!sizes.empty()) {
    if (sizes.size() != r) fail_run("Resize: sizes rank mismatch");
    out = sizes;
    for (std::size_t k = 0; k < r; ++k) sc[k] = double(out[k]) / double(x.dims[k]);
  } else {
    if (scales.size() != r) fail_run("Resize: scales rank mismatch");
    sc = scales;
    for (std::size_t k = 0; k < r; ++k) out[k] = std::int64_t(std::floor(double(x.dims[k]) * sc[k]));
  }
  if (out[0] != x.dims[0] || out[1] != x.dims[1]) fail_run("Resize: batch and channel axes must keep their size");
  if (mode != "nearest" && mode != "linear") fail_run("Resize: unsupported mode " + mode);
  Tensor cur = x;
  for (int k = 0; k < g.spatial; ++k) {
    const std::size_t dim = std::size_t(2 + k);
    const int axis = 3 - g.spatial + k;
    if (out[dim] == x.dims[dim] && sc[dim] == 1.0) continue;
    cur = resize_axis(cur, axis, out[dim], sc[dim], mode, coord_mode, nearest_mode);
  }
  return cur;
}

std::vector<double> as_doubles(const Tensor& t) { return std::vector<double>(t.data.begin(), t.data.end()); }

Dims as_ints(const Tensor& t) {
  Dims out;
  for (float v : t.data) out.push_back(std::int64_t(std::llround(v)));
  return out;
}

const std::set<std::string>& supported_ops() {
  static const std::set<std::string> ops{
      "Conv", "ConvTranspose", "BatchNormalization", "InstanceNormalization", "Relu", "LeakyRelu", "PRelu",
      "Sigmoid", "Tanh", "Clip", "Add", "Sub", "Mul", "Div", "Concat", "MaxPool", "Resize", "Upsample",
      "Identity", "Dropout", "Constant"};
  return ops;
}

}  // namespace

struct Model::Impl {
  onnx::ModelProto proto;
  std::string origin;
  std::string input_name, output_name;
  int spatial = 0;
  Dims input_spatial;
  std::unordered_map<std::string, Tensor> initializers;

  Tensor eval(const onnx::NodeProto& node, const Inputs& in) const {
    const Attrs a(node);
    const std::string& op = node.op_type();
    if (op == "Conv") return conv(a, in);
    if (op == "ConvTranspose") return conv_transpose(a, in);
    if (op == "MaxPool") return max_pool(a, in);
    if (op == "BatchNormalization") return batch_norm(a, in);
    if (op == "InstanceNormalization") return instance_norm(a, in);
    if (op == "Relu") return unary(need(in, 0, "Relu"), [](float v) { return v > 0.0f ? v : 0.0f; });
    if (op == "LeakyRelu") {
      const float alpha = a.f("alpha", 0.01f);
      return unary(need(in, 0, "LeakyRelu"), [alpha](float v) { return v >= 0.0f ? v : alpha * v; });
    }
    if (op == "PRelu")
      return broadcast(need(in, 0, "PRelu"), need(in, 1, "PRelu"),
                       [](float v, float s) { return v >= 0.0f ? v : s * v; });
    if (op == "Sigmoid") return unary(need(in, 0, "Sigmoid"), [](float v) { return 1.0f / (1.0f + std::exp(-v)); });
    if (op == "Tanh") return unary(need(in, 0, "Tanh"), [](float v) { return std::tanh(v); });
    if (op == "Clip") {
      float lo = a.f("min", -std::numeric_limits<float>::infinity());
      float hi = a.f("max", std::numeric_limits<float>::infinity());
      if (const Tensor* t = optional_input(in, 1)) lo = t->data.at(0);
      if (const Tensor* t = optional_input(in, 2)) hi = t->data.at(0);
      return unary(need(in, 0, "Clip"), [lo, hi](float v) { return std::min(std::max(v, lo), hi); });
    }
    if (op == "Add") return broadcast(need(in, 0, "Add"), need(in, 1, "Add"), std::plus<float>());
    if (op == "Sub") return broadcast(need(in, 0, "Sub"), need(in, 1, "Sub"), std::minus<float>());
    if (op == "Mul") return broadcast(need(in, 0, "Mul"), need(in, 1, "Mul"), std::multiplies<float>());
    if (op == "Div") return broadcast(need(in, 0, "Div"), need(in, 1, "Div"), std::divides<float>());
    if (op == "Concat") return concat(a, in);
    if (op == "Identity" || op == "Dropout") return need(in, 0, op.c_str());
    if (op == "Constant") {
      if (const onnx::TensorProto* t = a.t("value")) return from_proto(*t);
      if (a.has("value_float")) return Tensor({}, a.f("value_float", 0.0f));
      if (a.has("value_floats")) {
        auto v = a.floats("value_floats");
        return Tensor({std::int64_t(v.size())}, v);
      }
      if (a.has("value_ints")) {
        Dims v = a.ints("value_ints");
        return Tensor({std::int64_t(v.size())}, std::vector<float>(v.begin(), v.end()));
      }
      if (a.has("value_int")) return Tensor({}, float(a.i("value_int", 0)));
      fail_run("Constant: unsupported value attribute");
    }
    if (op == "Resize") {
      if (a.i("antialias", 0) != 0) fail_run("Resize: antialias is not supported");
      const Tensor* scales = optional_input(in, 2);
      const Tensor* sizes = optional_input(in, 3);
      if (scales && scales->size() == 0) scales = nullptr;
      if (!scales && !sizes) fail_run("Resize: needs scales or sizes");
      return resize(need(in, 0, "Resize"), scales ? as_doubles(*scales) : std::vector<double>{},
                    sizes ? as_ints(*sizes) : Dims{}, a.s("mode", "nearest"),
                    a.s("coordinate_transformation_mode", "half_pixel"), a.s("nearest_mode", "round_prefer_floor"));
    }
    if (op == "Upsample") {
      std::vector<double> sc;
      if (const Tensor* t = optional_input(in, 1)) sc = as_doubles(*t);
      else for (float v : a.floats("scales")) sc.push_back(v);
      return resize(need(in, 0, "Upsample"), sc, {}, a.s("mode", "nearest"), "asymmetric", "floor");
    }
    fail_run("unsupported operator " + op);
  }
};

Model::Model(std::unique_ptr<Impl> impl) : impl_(std::move(impl)) {}
Model::Model(Model&&) noexcept = default;
Model& Model::operator=(Model&&) noexcept = default;
Model::~Model() = default;

Model Model::load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail_load("cannot open '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse(buf.str(), path);
}

namespace {

Dims value_dims(const onnx::ValueInfoProto& v, bool& ok) {
  Dims d;
  ok = v.type().has_tensor_type() && v.type().tensor_type().elem_type() == onnx::TensorProto::FLOAT &&
       v.type().tensor_type().has_shape();
  if (!ok) return d;
  for (const auto& dim : v.type().tensor_type().shape().dim()) d.push_back(dim.has_dim_value() ? dim.dim_value() : 0);
  return d;
}

}  // namespace

Model Model::parse(const std::string& bytes, const std::string& origin) {
  auto impl = std::make_unique<Impl>();
  impl->origin = origin;
  if (!impl->proto.ParseFromString(bytes) || !impl->proto.has_graph())
    fail_load("'" + origin + "' is not a serialized model");
  const onnx::GraphProto& g = impl->proto.graph();

  for (const auto& t : g.initializer()) impl->initializers.emplace(t.name(), from_proto(t));

  std::vector<const onnx::ValueInfoProto*> inputs;
  for (const auto& v : g.input())
    if (!impl->initializers.count(v.name())) inputs.push_back(&v);
  if (inputs.size() != 1 || g.output_size() != 1)
    throw Error(ErrorCode::ModelSignature, "'" + origin + "' must have exactly one input and one output, has " +
                                               std::to_string(inputs.size()) + " and " +
                                               std::to_string(g.output_size()));
  bool ok_in = false, ok_out = false;
  const Dims din = value_dims(*inputs[0], ok_in);
  const Dims dout = value_dims(g.output(0), ok_out);
  if (!ok_in || !ok_out) throw Error(ErrorCode::ModelSignature, "input and output must be float32 tensors");
  if (din.size() != 4 && din.size() != 5)
    throw Error(ErrorCode::ModelSignature, "input rank must be 4 or 5 (batch, channel, spatial...), got " +
                                               std::to_string(din.size()));
  if (dout.size() != din.size()) throw Error(ErrorCode::ModelSignature, "output rank differs from input rank");
  if (din[1] > 1 || dout[1] > 1) throw Error(ErrorCode::ModelSignature, "input and output must have one channel");
  impl->input_name = inputs[0]->name();
  impl->output_name = g.output(0).name();
  impl->spatial = int(din.size()) - 2;
  impl->input_spatial.assign(din.begin() + 2, din.end());

  // Every operator supported, every value defined before use, extra outputs
  // unused.
  std::set<std::string> defined{impl->input_name};
  for (const auto& [name, t] : impl->initializers) defined.insert(name);
  std::set<std::string> side_outputs;
  for (const auto& node : g.node()) {
    if (!supported_ops().count(node.op_type())) fail_load("unsupported operator " + node.op_type());
    if (!node.domain().empty() && node.domain() != "ai.onnx")
      fail_load("operator domain '" + node.domain() + "' is not supported");
    for (const auto& name : node.input()) {
      if (name.empty()) continue;
      if (!defined.count(name)) fail_load("node '" + node.name() + "' reads undefined value '" + name + "'");
      if (side_outputs.count(name)) fail_load("secondary output '" + name + "' is consumed; not supported");
    }
    for (int i = 0; i < node.output_size(); ++i) {
      defined.insert(node.output(i));
      if (i > 0 && !node.output(i).empty()) side_outputs.insert(node.output(i));
    }
  }
  if (!defined.count(impl->output_name)) fail_load("graph output '" + impl->output_name + "' is never produced");
  if (side_outputs.count(impl->output_name)) fail_load("graph output is a secondary node output");
  return Model(std::move(impl));
}

int Model::spatial_rank() const { return impl_->spatial; }
const std::vector<std::int64_t>& Model::input_spatial_dims() const { return impl_->input_spatial; }
const std::string& Model::origin() const { return impl_->origin; }

Tensor Model::run(const Tensor& input) const {
  if (input.rank() != impl_->spatial + 2 || input.dims[1] != 1)
    throw Error(ErrorCode::ModelSignature, "input dims " + dims_str(input.dims) + " do not fit the model");
  for (std::size_t k = 0; k < impl_->input_spatial.size(); ++k)
    if (impl_->input_spatial[k] > 0 && impl_->input_spatial[k] != input.dims[2 + k])
      throw Error(ErrorCode::ModelSignature, "model expects fixed spatial dims; got " + dims_str(input.dims));

  std::unordered_map<std::string, Tensor> values;
  auto lookup = [&](const std::string& name) -> const Tensor* {
    if (name.empty()) return nullptr;
    if (auto it = values.find(name); it != values.end()) return &it->second;
    if (auto it = impl_->initializers.find(name); it != impl_->initializers.end()) return &it->second;
    if (name == impl_->input_name) return &input;
    return nullptr;
  };
  for (const auto& node : impl_->proto.graph().node()) {
    Inputs in;
    for (const auto& name : node.input()) in.push_back(lookup(name));
    values[node.output(0)] = impl_->eval(node, in);
  }
  const Tensor* out = lookup(impl_->output_name);
  if (!out) fail_run("graph output was not produced");
  return *out;
}

}  // namespace curvseg::nn
