#pragma once

#include <cstdint>
#include <fstream>
#include <string>
#include <vector>

#include "gx/common.hpp"

namespace gx {

// Plain-text PGM (P2), one raster row per line.
inline void write_pgm(const std::string& path, int height, int width,
                      const std::vector<std::uint8_t>& pixels) {
  if (static_cast<std::size_t>(height) * width != pixels.size())
    throw RuntimeFailure("write_pgm: pixel count does not match dimensions");
  std::ofstream out(path);
  if (!out) throw RuntimeFailure("write_pgm: cannot open " + path);
  out << "P2\n" << width << " " << height << "\n255\n";
  for (int r = 0; r < height; ++r) {
    for (int c = 0; c < width; ++c) {
      if (c) out << ' ';
      out << static_cast<int>(pixels[static_cast<std::size_t>(r) * width + c]);
    }
    out << '\n';
  }
  if (!out) throw RuntimeFailure("write_pgm: write failed for " + path);
}

}  // namespace gx
