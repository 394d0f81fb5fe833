#pragma once

#include <cstdint>
#include <string>

#include "hdrcm/image.hpp"

namespace hdrcm {

// Portable float map. Written little-endian (scale -1.0), 32-bit floats,
// rows bottom-up per the format convention. "PF" for 3 channels, "Pf" for
// 1. Big-endian files (positive scale) are byte-swapped on read.
void write_pfm(const std::string& path, const ImageF& img);
ImageF read_pfm(const std::string& path);

// Radiance shared-exponent pixel codec. Encode takes the exponent from
// the largest component (max = f * 2^x, f in [0.5, 1)), mantissas are
// floor(c * 256 / 2^x); decode returns m * 2^(e - 136). All-zero input
// maps to four zero bytes; negatives are clipped.
void encode_rgbe(double r, double g, double b, std::uint8_t out[4]);
void decode_rgbe(const std::uint8_t in[4], double& r, double& g, double& b);

// Radiance picture container (.hdr): "#?RADIANCE" header,
// FORMAT=32-bit_rle_rgbe, "-Y h +X w" resolution, new-style RLE
// scanlines on write. Read accepts both RLE and flat scanlines.
void write_hdr(const std::string& path, const ImageF& img);
ImageF read_hdr(const std::string& path);

// Binary 8-bit PPM/PGM (P6/P5), values quantized by round(255*x).
void write_ppm(const std::string& path, const ImageF& img);
ImageF read_ppm(const std::string& path);

}  // namespace hdrcm
