#pragma once

#include <string>

#include "mv3d/image.hpp"

namespace mv3d {

// Binary PNM writers/readers. RGB images are P6 maxval 255; depth maps are
// P5 maxval 65535 with the most significant byte first; masks are P5 maxval
// 255. Filesystem failures raise IoError, malformed content FormatError.

void write_ppm(const std::string& path, const ImageU8& img);
ImageU8 read_ppm(const std::string& path);

void write_pgm16(const std::string& path, const DepthImage& img);
DepthImage read_pgm16(const std::string& path);

void write_pgm8(const std::string& path, const MaskImage& img);
MaskImage read_pgm8(const std::string& path);

}  // namespace mv3d
