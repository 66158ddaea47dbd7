#include "curvseg/io.hpp"

#include <png.h>
#include <zlib.h>

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>

namespace curvseg::io {

namespace {

[[noreturn]] void fail(const std::string& what) { throw Error(ErrorCode::Io, what); }

bool ends_with(const std::string& s, const std::string& suffix) {
  return s.size() >= suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

bool is_png(const std::string& p) { return ends_with(p, ".png"); }
bool is_nifti(const std::string& p) { return ends_with(p, ".nii") || ends_with(p, ".nii.gz"); }

// ---- PNG ----------------------------------------------------------------

struct PngRaw {
  Index height = 0, width = 0;
  int depth = 8;
  std::vector<std::uint16_t> values;
};

PngRaw read_png(const std::string& path) {
  std::FILE* fp = std::fopen(path.c_str(), "rb");
  if (!fp) fail("cannot open '" + path + "'");
  std::array<png_byte, 8> sig{};
  if (std::fread(sig.data(), 1, 8, fp) != 8 || png_sig_cmp(sig.data(), 0, 8) != 0) {
    std::fclose(fp);
    fail("'" + path + "' is not a PNG file");
  }
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!info) {
    png_destroy_read_struct(&png, nullptr, nullptr);
    std::fclose(fp);
    fail("libpng initialisation failed");
  }
  PngRaw raw;
  std::vector<png_byte> buffer;
  std::vector<png_bytep> rows;
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    std::fclose(fp);
    fail("corrupt PNG '" + path + "'");
  }
  png_init_io(png, fp);
  png_set_sig_bytes(png, 8);
  png_read_info(png, info);
  const int color = png_get_color_type(png, info);
  const int bits = png_get_bit_depth(png, info);
  if (color == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
  if (color == PNG_COLOR_TYPE_GRAY && bits < 8) png_set_expand_gray_1_2_4_to_8(png);
  if (color & PNG_COLOR_MASK_COLOR) png_set_rgb_to_gray_fixed(png, 1, -1, -1);
  if (color & PNG_COLOR_MASK_ALPHA) png_set_strip_alpha(png);
  png_read_update_info(png, info);
  raw.width = png_get_image_width(png, info);
  raw.height = png_get_image_height(png, info);
  raw.depth = png_get_bit_depth(png, info);
  const std::size_t rowbytes = png_get_rowbytes(png, info);
  buffer.resize(rowbytes * std::size_t(raw.height));
  rows.resize(std::size_t(raw.height));
  for (Index y = 0; y < raw.height; ++y) rows[std::size_t(y)] = buffer.data() + std::size_t(y) * rowbytes;
  png_read_image(png, rows.data());
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);
  std::fclose(fp);

  raw.values.resize(std::size_t(raw.height * raw.width));
  for (std::size_t i = 0; i < raw.values.size(); ++i)
    raw.values[i] = raw.depth == 16 ? std::uint16_t(buffer[2 * i] << 8 | buffer[2 * i + 1]) : buffer[i];
  return raw;
}

void write_png(const std::string& path, Index height, Index width, int depth, const std::vector<std::uint16_t>& v) {
  std::FILE* fp = std::fopen(path.c_str(), "wb");
  if (!fp) fail("cannot write '" + path + "'");
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!info) {
    png_destroy_write_struct(&png, nullptr);
    std::fclose(fp);
    fail("libpng initialisation failed");
  }
  const std::size_t bpp = depth == 16 ? 2 : 1;
  std::vector<png_byte> buffer(std::size_t(height * width) * bpp);
  std::vector<png_bytep> rows(static_cast<std::size_t>(height));
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (depth == 16) {
      buffer[2 * i] = png_byte(v[i] >> 8);
      buffer[2 * i + 1] = png_byte(v[i] & 0xff);
    } else {
      buffer[i] = png_byte(v[i]);
    }
  }
  for (Index y = 0; y < height; ++y) rows[std::size_t(y)] = buffer.data() + std::size_t(y * width) * bpp;
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    std::fclose(fp);
    fail("PNG encoding failed for '" + path + "'");
  }
  png_init_io(png, fp);
  png_set_IHDR(png, info, png_uint_32(width), png_uint_32(height), depth, PNG_COLOR_TYPE_GRAY, PNG_INTERLACE_NONE,
               PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  png_write_image(png, rows.data());
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
  if (std::fclose(fp) != 0) fail("cannot write '" + path + "'");
}

void require_2d(const std::string& path, int ndim) {
  if (ndim != 2) fail("PNG holds 2D images only; use .nii or .nii.gz for '" + path + "'");
}

// ---- NIfTI-1 ------------------------------------------------------------

constexpr std::size_t kHeader = 348;
constexpr std::size_t kVoxOffset = 352;

enum NiftiType : std::int16_t {
  kUint8 = 2, kInt16 = 4, kInt32 = 8, kFloat32 = 16, kFloat64 = 64, kInt8 = 256, kUint16 = 512, kUint32 = 768,
};

template <class T>
T get(const std::vector<char>& b, std::size_t off, bool swap) {
  std::array<char, sizeof(T)> tmp{};
  std::memcpy(tmp.data(), b.data() + off, sizeof(T));
  if (swap) std::reverse(tmp.begin(), tmp.end());
  T v;
  std::memcpy(&v, tmp.data(), sizeof(T));
  return v;
}

template <class T>
void put(std::vector<char>& b, std::size_t off, T v) {
  std::memcpy(b.data() + off, &v, sizeof(T));
}

std::vector<char> read_all_gz(const std::string& path) {
  gzFile gz = gzopen(path.c_str(), "rb");
  if (!gz) fail("cannot open '" + path + "'");
  std::vector<char> out;
  std::array<char, 1 << 16> chunk{};
  for (;;) {
    const int n = gzread(gz, chunk.data(), unsigned(chunk.size()));
    if (n < 0) {
      gzclose(gz);
      fail("corrupt compressed data in '" + path + "'");
    }
    if (n == 0) break;
    out.insert(out.end(), chunk.begin(), chunk.begin() + n);
  }
  gzclose(gz);
  return out;
}

ScalarField read_nifti(const std::string& path) {
  const std::vector<char> b = read_all_gz(path);
  if (b.size() < kHeader) fail("'" + path + "' is too short for a NIfTI header");
  bool swap = false;
  if (get<std::int32_t>(b, 0, false) != 348) {
    if (get<std::int32_t>(b, 0, true) != 348) fail("'" + path + "' is not a NIfTI-1 file");
    swap = true;
  }
  if (std::memcmp(b.data() + 344, "n+1", 4) != 0) fail("'" + path + "' is not a single-file NIfTI-1 image");
  std::array<std::int16_t, 8> dim{};
  std::array<float, 8> pixdim{};
  for (std::size_t i = 0; i < 8; ++i) {
    dim[i] = get<std::int16_t>(b, 40 + 2 * i, swap);
    pixdim[i] = get<float>(b, 76 + 4 * i, swap);
  }
  const auto type = get<std::int16_t>(b, 70, swap);
  const auto vox = std::size_t(get<float>(b, 108, swap));
  float slope = get<float>(b, 112, swap);
  const float inter = get<float>(b, 116, swap);
  if (slope == 0.0f || !std::isfinite(slope)) slope = 1.0f;
  if (dim[0] < 2 || dim[0] > 7) fail("'" + path + "' has invalid rank " + std::to_string(dim[0]));
  for (int k = 4; k <= dim[0]; ++k)
    if (dim[std::size_t(k)] > 1) fail("'" + path + "' has more than three axes; only single-channel volumes");
  const int nd = dim[0] >= 3 && dim[3] > 1 ? 3 : 2;
  std::vector<Index> dims;
  std::vector<double> spacing;
  for (int k = nd; k >= 1; --k) {
    if (dim[std::size_t(k)] < 1) fail("'" + path + "' has a non-positive extent");
    dims.push_back(dim[std::size_t(k)]);
    const double s = pixdim[std::size_t(k)];
    spacing.push_back(s > 0.0 && std::isfinite(s) ? s : 1.0);
  }
  const Shape shape(dims, spacing);
  std::size_t width = 0;
  switch (type) {
    case kUint8: case kInt8: width = 1; break;
    case kInt16: case kUint16: width = 2; break;
    case kInt32: case kUint32: case kFloat32: width = 4; break;
    case kFloat64: width = 8; break;
    default: fail("'" + path + "' uses unsupported NIfTI datatype " + std::to_string(type));
  }
  if (vox < kHeader || b.size() < vox + shape.size() * width) fail("'" + path + "' is truncated");
  ScalarField f(shape);
  for (std::size_t i = 0; i < shape.size(); ++i) {
    const std::size_t off = vox + i * width;
    double v = 0.0;
    switch (type) {
      case kUint8: v = std::uint8_t(b[off]); break;
      case kInt8: v = std::int8_t(b[off]); break;
      case kInt16: v = get<std::int16_t>(b, off, swap); break;
      case kUint16: v = get<std::uint16_t>(b, off, swap); break;
      case kInt32: v = get<std::int32_t>(b, off, swap); break;
      case kUint32: v = get<std::uint32_t>(b, off, swap); break;
      case kFloat32: v = get<float>(b, off, swap); break;
      case kFloat64: v = get<double>(b, off, swap); break;
      default: break;
    }
    f[i] = v * slope + inter;
  }
  return f;
}

void write_nifti(const std::string& path, const Shape& shape, NiftiType type, const std::vector<char>& payload) {
  std::vector<char> b(kVoxOffset, 0);
  put<std::int32_t>(b, 0, 348);
  const int nd = shape.ndim();
  put<std::int16_t>(b, 40, std::int16_t(nd));
  for (int k = 1; k <= 7; ++k) {
    const std::int16_t d = k <= nd ? std::int16_t(shape.dim(nd - k)) : 1;
    put<std::int16_t>(b, 40 + 2 * std::size_t(k), d);
    put<float>(b, 76 + 4 * std::size_t(k), k <= nd ? float(shape.spacing(nd - k)) : 1.0f);
  }
  put<float>(b, 76, 1.0f);  // qfac
  put<std::int16_t>(b, 70, type);
  put<std::int16_t>(b, 72, std::int16_t(type == kFloat32 ? 32 : 8));
  put<float>(b, 108, float(kVoxOffset));
  put<float>(b, 112, 1.0f);
  b[123] = 2;  // millimetres
  std::memcpy(b.data() + 344, "n+1", 4);
  b.insert(b.end(), payload.begin(), payload.end());
  if (ends_with(path, ".gz")) {
    gzFile gz = gzopen(path.c_str(), "wb6");
    if (!gz) fail("cannot write '" + path + "'");
    const int n = gzwrite(gz, b.data(), unsigned(b.size()));
    if (gzclose(gz) != Z_OK || n != int(b.size())) fail("cannot write '" + path + "'");
  } else {
    std::ofstream out(path, std::ios::binary);
    out.write(b.data(), std::streamsize(b.size()));
    if (!out) fail("cannot write '" + path + "'");
  }
}

void require_image_path(const std::string& path) {
  if (!is_image_path(path)) fail("unsupported image extension: '" + path + "' (expected .png, .nii or .nii.gz)");
}

}  // namespace

bool is_image_path(const std::string& path) { return is_png(path) || is_nifti(path); }

std::string image_extension(int ndim) { return ndim == 2 ? ".png" : ".nii.gz"; }

ScalarField read_image(const std::string& path) {
  require_image_path(path);
  if (is_nifti(path)) return read_nifti(path);
  const PngRaw raw = read_png(path);
  ScalarField f(Shape{raw.height, raw.width});
  for (std::size_t i = 0; i < f.size(); ++i) f[i] = raw.values[i];
  return f;
}

BinaryMask read_mask(const std::string& path) {
  const ScalarField f = read_image(path);
  BinaryMask m(f.shape());
  for (std::size_t i = 0; i < f.size(); ++i) m[i] = f[i] != 0.0 ? 1 : 0;
  return m;
}

void write_mask(const std::string& path, const BinaryMask& m) {
  require_image_path(path);
  if (is_png(path)) {
    require_2d(path, m.shape().ndim());
    std::vector<std::uint16_t> v(m.size());
    for (std::size_t i = 0; i < m.size(); ++i) v[i] = m[i] ? 255 : 0;
    write_png(path, m.shape().dim(0), m.shape().dim(1), 8, v);
    return;
  }
  std::vector<char> payload(m.size());
  for (std::size_t i = 0; i < m.size(); ++i) payload[i] = char(m[i] ? 1 : 0);
  write_nifti(path, m.shape(), kUint8, payload);
}

void write_image(const std::string& path, const ScalarField& f) {
  require_image_path(path);
  if (is_png(path)) {
    require_2d(path, f.shape().ndim());
    std::vector<std::uint16_t> v(f.size());
    for (std::size_t i = 0; i < f.size(); ++i) v[i] = std::uint16_t(std::lround(std::clamp(f[i], 0.0, 1.0) * 65535.0));
    write_png(path, f.shape().dim(0), f.shape().dim(1), 16, v);
    return;
  }
  std::vector<char> payload(f.size() * sizeof(float));
  for (std::size_t i = 0; i < f.size(); ++i) {
    const float v = float(std::clamp(f[i], 0.0, 1.0));
    std::memcpy(payload.data() + i * sizeof(float), &v, sizeof(float));
  }
  write_nifti(path, f.shape(), kFloat32, payload);
}

// ---- key = value --------------------------------------------------------

namespace {

std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  const auto b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

nlohmann::json parse_scalar(const std::string& v) {
  if (v == "true") return true;
  if (v == "false") return false;
  if (v.size() >= 2 && v.front() == '"' && v.back() == '"') return v.substr(1, v.size() - 2);
  std::int64_t i = 0;
  auto [pi, ei] = std::from_chars(v.data(), v.data() + v.size(), i);
  if (ei == std::errc() && pi == v.data() + v.size()) return i;
  double d = 0.0;
  auto [pd, ed] = std::from_chars(v.data(), v.data() + v.size(), d);
  if (ed == std::errc() && pd == v.data() + v.size()) return d;
  return v;
}

// Unquoted comma-separated numbers become an array.
nlohmann::json parse_value(const std::string& v) {
  if (v.find(',') == std::string::npos || v.front() == '"') return parse_scalar(v);
  nlohmann::json arr = nlohmann::json::array();
  std::istringstream in(v);
  std::string item;
  while (std::getline(in, item, ',')) {
    nlohmann::json x = parse_scalar(trim(item));
    if (!x.is_number()) return v;
    arr.push_back(std::move(x));
  }
  return arr;
}

}  // namespace

nlohmann::json parse_key_value(const std::string& text, const std::string& origin) {
  nlohmann::json out = nlohmann::json::object();
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    const std::string where = origin + ":" + std::to_string(lineno);
    if (eq == std::string::npos) throw Error(ErrorCode::Config, where + ": expected key = value");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty()) throw Error(ErrorCode::Config, where + ": empty key");
    if (out.contains(key)) throw Error(ErrorCode::Config, where + ": duplicate key '" + key + "'");
    out[key] = parse_value(value);
  }
  return out;
}

nlohmann::json read_key_value(const std::string& path) { return parse_key_value(read_text(path), path); }

std::string read_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail("cannot open '" + path + "'");
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  out << text;
  if (!out) fail("cannot write '" + path + "'");
}

}  // namespace curvseg::io
