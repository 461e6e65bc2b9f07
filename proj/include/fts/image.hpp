#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "fts/error.hpp"

namespace fts {

// Row-major W x H grid.
template <class T>
struct Grid {
  int width = 0;
  int height = 0;
  std::vector<T> data;

  Grid() = default;
  Grid(int w, int h, T fill = T{}) : width(w), height(h), data(static_cast<size_t>(w) * h, fill) {}

  T& operator()(int x, int y) { return data[static_cast<size_t>(y) * width + x]; }
  const T& operator()(int x, int y) const { return data[static_cast<size_t>(y) * width + x]; }
  size_t size() const { return data.size(); }
  bool same_shape(int w, int h) const { return width == w && height == h; }
  template <class U>
  bool same_shape(const Grid<U>& o) const { return width == o.width && height == o.height; }
  bool operator==(const Grid&) const = default;
};

using Mask = Grid<std::uint8_t>;          // 0 = background, 1 = foreground
using DistanceField = Grid<double>;       // pixels
using SoftSilhouette = Grid<double>;      // coverage in [0, 1]

Mask invert(const Mask& mask);
std::size_t count_set(const Mask& mask);

// Binary PGM (P5, maxval 255). Any nonzero sample is foreground.
Mask read_pgm(const std::filesystem::path& path);
void write_pgm(const std::filesystem::path& path, const Mask& mask);
// 8-bit PNG through libpng; any nonzero gray value is foreground.
Mask read_png(const std::filesystem::path& path);
// Dispatches on the file signature.
Mask read_mask(const std::filesystem::path& path);

}  // namespace fts
