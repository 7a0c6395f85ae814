#pragma once

#include <string>

#include "tomonet/sinogram.hpp"
#include "tomonet/tensor.hpp"

namespace tomonet {

// Raw image container: 8-byte magic "TSIMG\0\0\1", a little-endian uint32
// header length, a UTF-8 JSON header {height, width, depth, dtype, endianness}
// with dtype "f32" or "f64", then the raw little-endian payload ordered plane
// by plane with x fastest: for d, for y, for x.
void write_raw_image(const std::string& path, const Tensor3& image,
                     const std::string& dtype = "f64");
Tensor3 read_raw_image(const std::string& path);

// Sinograms reuse the raw container with height = n_angles, width = n_bins;
// angles are implied as k*pi/n_angles.
void write_sinogram(const std::string& path, const Sinogram& sino);
Sinogram read_sinogram(const std::string& path);

// 8-bit grayscale preview, min-max normalized. Raw files stay the source of
// truth; this is for eyeballing only.
void write_pgm(const std::string& path, const Tensor3& image);

}  // namespace tomonet
