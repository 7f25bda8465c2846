#pragma once

#include <cstddef>
#include <vector>

#include "evoplace/bookshelf.hpp"
#include "evoplace/placement_state.hpp"

namespace evoplace::place {

/// Weighted half-perimeter wirelength; pins at cell center plus offset.
double hpwl(const io::BenchmarkCase& c, const PlacementState& s);

struct Gradient {
  double value = 0.0;
  std::vector<double> grad_x;
  std::vector<double> grad_y;
};

/// Log-sum-exp wirelength at temperature gamma (layout units). The gradient
/// covers every cell, fixed ones included; callers mask as needed.
Gradient smooth_wl(const io::BenchmarkCase& c, const PlacementState& s, double gamma);

struct BinGrid {
  int nx = 0;
  int ny = 0;
  double xmin = 0.0;
  double ymin = 0.0;
  double bin_w = 0.0;
  double bin_h = 0.0;
  double bin_capacity = 0.0;
  /// Footprints narrower (shorter) than stretch bins are widened to that
  /// size at reduced density, so every cell straddles a bin boundary and
  /// keeps a nonzero gradient. 0 disables. The outermost bins extend to
  /// infinity.
  double stretch = 2.0;
  std::vector<double> occupancy;  // row-major, index = iy * nx + ix

  double& at(int ix, int iy) { return occupancy[static_cast<std::size_t>(iy) * static_cast<std::size_t>(nx) + static_cast<std::size_t>(ix)]; }
  double at(int ix, int iy) const { return occupancy[static_cast<std::size_t>(iy) * static_cast<std::size_t>(nx) + static_cast<std::size_t>(ix)]; }
};

/// nx = ny = max(8, ceil(sqrt(movable count))), capacity = target_density * bin area.
BinGrid make_bin_grid(const io::BenchmarkCase& c, double target_density = 1.0, double stretch = 2.0);
BinGrid make_bin_grid(const io::LayoutRegion& region, int nx, int ny, double target_density = 1.0,
                      double stretch = 2.0);

/// Recomputes grid.occupancy from all cells (fixed cells included).
void rasterize(const io::BenchmarkCase& c, const PlacementState& s, BinGrid& grid);

/// Sum over bins of max(0, occ - cap)^2 / cap with its analytic gradient.
/// Refreshes grid.occupancy as a side effect.
Gradient density_penalty(const io::BenchmarkCase& c, const PlacementState& s, BinGrid& grid);

/// Sum of bin excess over total movable area, clamped to [0, 1]. Refreshes
/// grid.occupancy.
double overflow(const io::BenchmarkCase& c, const PlacementState& s, BinGrid& grid);

/// Overflow from an already rasterized grid.
double overflow_of(const io::BenchmarkCase& c, const BinGrid& grid);

}  // namespace evoplace::place
