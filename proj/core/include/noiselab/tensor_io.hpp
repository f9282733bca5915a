#pragma once

#include <string>

#include "noiselab/tensor.hpp"

namespace noiselab {

// On-disk tensor container: magic "NSMT", u32 version (1), u32 dtype code
// (1 = f32), u32 dims C, H, W, then the row-major little-endian f32 payload.
// Values narrow to f32 on write; read(write(x)) is exact at f32 precision.

void write_tensor(const std::string& path, const ImageTensor& x);

/// Throws FormatError (with byte offset) on bad magic, version, dtype or a
/// truncated payload.
ImageTensor read_tensor(const std::string& path);

/// 8-bit image import, mapping [0, 255] to [0, 1] by division by 255.
/// Supports PNG (gray, gray+alpha, palette, RGB, RGBA; alpha dropped,
/// 16-bit narrowed) and binary PGM/PPM with maxval 255.
ImageTensor read_image8(const std::string& path);

/// 8-bit PGM (1 channel) / PPM (3 channels) export; values are clamped to
/// [0, 1] and quantized by rounding to 255ths.
void write_pnm8(const std::string& path, const ImageTensor& x);

/// Dispatch by extension: .nsmt via read_tensor, anything else via
/// read_image8.
ImageTensor load_image_any(const std::string& path);

} // namespace noiselab
