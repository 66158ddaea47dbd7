#pragma once

#include <string>

#include <nlohmann/json.hpp>

#include "curvseg/grid.hpp"

namespace curvseg::io {

/// 2D images are grayscale PNG (8 or 16 bit), 3D volumes NIfTI-1 (.nii or
/// .nii.gz). The format follows the file extension. All failures throw
/// ErrorCode::Io.

/// Intensities as stored (PNG: 0..255 or 0..65535; NIfTI: after scl_slope /
/// scl_inter).
ScalarField read_image(const std::string& path);

/// Nonzero cells are foreground.
BinaryMask read_mask(const std::string& path);

/// PNG foreground is the maximum value (255), NIfTI stores uint8 0/1.
void write_mask(const std::string& path, const BinaryMask& m);

/// Values clamped to [0, 1]; PNG scales to 16 bit, NIfTI stores float32.
void write_image(const std::string& path, const ScalarField& f);

/// True for .png, .nii and .nii.gz.
bool is_image_path(const std::string& path);

/// Preferred extension for a grid of this dimensionality: ".png" or ".nii.gz".
std::string image_extension(int ndim);

/// Flat "key = value" text, one pair per line; '#' starts a comment. Values
/// become JSON numbers, booleans or strings; an unquoted comma-separated list
/// of numbers becomes an array. Duplicate keys and lines without '=' throw
/// ErrorCode::Config.
nlohmann::json parse_key_value(const std::string& text, const std::string& origin = "<text>");
nlohmann::json read_key_value(const std::string& path);

std::string read_text(const std::string& path);
void write_text(const std::string& path, const std::string& text);

}  // namespace curvseg::io
