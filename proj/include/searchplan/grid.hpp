#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include "searchplan/geo.hpp"
#include "searchplan/particles.hpp"

namespace searchplan {

/// Regular grid of square cells over a rectangle of a local frame.
/// Cell (ix, iy) covers [x_min + ix*cell, x_min + (ix+1)*cell) x [y_min + iy*cell, ...).
struct GridSpec {
  LocalFrame frame;
  double cell_size_m = 0.0;
  double x_min = 0.0, x_max = 0.0, y_min = 0.0, y_max = 0.0;

  GridSpec() = default;
  GridSpec(LocalFrame f, double cell, double xmin, double xmax, double ymin, double ymax)
      : frame(f), cell_size_m(cell), x_min(xmin), x_max(xmax), y_min(ymin), y_max(ymax) {
    if (!(cell > 0.0)) throw std::invalid_argument("grid cell size must be positive");
    if (!(xmax > xmin) || !(ymax > ymin)) throw std::invalid_argument("grid extent is degenerate");
  }

  /// Square grid centered on the frame origin.
  static GridSpec centered(const GeoPoint& center, double half_width_m, double cell_m) {
    return GridSpec(LocalFrame(center), cell_m, -half_width_m, half_width_m, -half_width_m, half_width_m);
  }

  std::size_t nx() const { return static_cast<std::size_t>(std::ceil((x_max - x_min) / cell_size_m - 1e-12)); }
  std::size_t ny() const { return static_cast<std::size_t>(std::ceil((y_max - y_min) / cell_size_m - 1e-12)); }
  std::size_t cell_count() const { return nx() * ny(); }

  /// Cell index for a planar point, or -1 when off the extent.
  std::int64_t cell_of(const Vec2& xy) const {
    if (!(xy.x >= x_min && xy.x < x_max && xy.y >= y_min && xy.y < y_max)) return -1;
    const auto ix = static_cast<std::size_t>(std::floor((xy.x - x_min) / cell_size_m));
    const auto iy = static_cast<std::size_t>(std::floor((xy.y - y_min) / cell_size_m));
    if (ix >= nx() || iy >= ny()) return -1;
    return static_cast<std::int64_t>(iy * nx() + ix);
  }

  Vec2 cell_center(std::size_t ix, std::size_t iy) const {
    return {x_min + (static_cast<double>(ix) + 0.5) * cell_size_m, y_min + (static_cast<double>(iy) + 0.5) * cell_size_m};
  }
};

struct CellProbabilityMap {
  GridSpec grid;
  std::vector<double> cells;  ///< row-major, iy * nx + ix; iy = 0 is the southern row
  double off_extent = 0.0;

  double at(std::size_t ix, std::size_t iy) const { return cells.at(iy * grid.nx() + ix); }
  double max_cell() const { return cells.empty() ? 0.0 : *std::max_element(cells.begin(), cells.end()); }
  double total() const {
    double t = off_extent;
    for (double c : cells) t += c;
    return t;
  }
};

/// Sums particle weights per cell. Each cell's contributions are sorted before
/// summation so the result does not depend on particle order.
inline CellProbabilityMap grid_aggregate(const ParticleSet& ps, const GridSpec& grid) {
  std::vector<std::vector<double>> buckets(grid.cell_count());
  std::vector<double> off;
  for (const auto& p : ps) {
    const auto c = grid.cell_of(grid.frame.project_unchecked(p.position));
    if (c < 0) off.push_back(p.weight);
    else buckets[static_cast<std::size_t>(c)].push_back(p.weight);
  }
  CellProbabilityMap map{grid, std::vector<double>(grid.cell_count(), 0.0), 0.0};
  for (std::size_t i = 0; i < buckets.size(); ++i) {
    std::sort(buckets[i].begin(), buckets[i].end());
    map.cells[i] = pairwise_sum(buckets[i]);
  }
  std::sort(off.begin(), off.end());
  map.off_extent = pairwise_sum(off);
  return map;
}

inline void write_map_csv(std::ostream& out, const CellProbabilityMap& map) {
  out << "cell_x,cell_y,probability\n" << std::setprecision(17);
  const std::size_t nx = map.grid.nx();
  for (std::size_t iy = 0; iy < map.grid.ny(); ++iy)
    for (std::size_t ix = 0; ix < nx; ++ix) out << ix << ',' << iy << ',' << map.cells[iy * nx + ix] << '\n';
}

/// 8-bit grayscale raster, north up: black marks the most probable cell, white zero.
struct GrayImage {
  std::size_t width = 0;
  std::size_t height = 0;
  std::vector<std::uint8_t> pixels;  ///< row-major, top row first
};

inline GrayImage render_heatmap(const CellProbabilityMap& map) {
  const std::size_t nx = map.grid.nx();
  const std::size_t ny = map.grid.ny();
  GrayImage img{nx, ny, std::vector<std::uint8_t>(nx * ny, 255)};
  const double peak = map.max_cell();
  if (peak <= 0.0) return img;
  for (std::size_t iy = 0; iy < ny; ++iy) {
    for (std::size_t ix = 0; ix < nx; ++ix) {
      const double v = map.cells[iy * nx + ix] / peak;
      const auto level = static_cast<std::uint8_t>(std::lround(255.0 * (1.0 - v)));
      img.pixels[(ny - 1 - iy) * nx + ix] = level;
    }
  }
  return img;
}

inline void write_pgm(std::ostream& out, const GrayImage& img) {
  out << "P5\n" << img.width << ' ' << img.height << "\n255\n";
  out.write(reinterpret_cast<const char*>(img.pixels.data()), static_cast<std::streamsize>(img.pixels.size()));
}

}  // namespace searchplan
