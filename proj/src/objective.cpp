#include "evoplace/objective.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "evoplace/error.hpp"

namespace evoplace::place {

double hpwl(const io::BenchmarkCase& c, const PlacementState& s) {
  double total = 0.0;
  for (const io::Net& net : c.nets) {
    double x_lo = std::numeric_limits<double>::infinity();
    double x_hi = -x_lo;
    double y_lo = x_lo;
    double y_hi = -x_lo;
    for (const io::Pin& pin : net.pins) {
      const double px = s.x[pin.cell] + pin.dx;
      const double py = s.y[pin.cell] + pin.dy;
      x_lo = std::min(x_lo, px);
      x_hi = std::max(x_hi, px);
      y_lo = std::min(y_lo, py);
      y_hi = std::max(y_hi, py);
    }
    total += net.weight * ((x_hi - x_lo) + (y_hi - y_lo));
  }
  return total;
}

namespace {

// One axis of one net: gamma*ln(sum e^{p/g}) + gamma*ln(sum e^{-p/g}), with
// d/dp written into grad (scaled by weight).
double lse_axis(const std::vector<double>& p, double gamma, double weight, std::vector<double>& d) {
  double hi = p[0];
  double lo = p[0];
  for (double v : p) {
    hi = std::max(hi, v);
    lo = std::min(lo, v);
  }
  double s_pos = 0.0;
  double s_neg = 0.0;
  d.resize(p.size());
  for (double v : p) {
    s_pos += std::exp((v - hi) / gamma);
    s_neg += std::exp((lo - v) / gamma);
  }
  for (std::size_t i = 0; i < p.size(); ++i)
    d[i] = weight * (std::exp((p[i] - hi) / gamma) / s_pos - std::exp((lo - p[i]) / gamma) / s_neg);
  return weight * ((hi + gamma * std::log(s_pos)) + (gamma * std::log(s_neg) - lo));
}

}  // namespace

Gradient smooth_wl(const io::BenchmarkCase& c, const PlacementState& s, double gamma) {
  if (!(gamma > 0.0)) throw Error(ErrorCode::InvalidArgument, "smooth_wl needs gamma > 0");
  Gradient g;
  g.grad_x.assign(c.cells.size(), 0.0);
  g.grad_y.assign(c.cells.size(), 0.0);
  std::vector<double> px, py, dx, dy;
  for (const io::Net& net : c.nets) {
    if (net.pins.size() < 2) continue;  // contributes exactly 0
    px.clear();
    py.clear();
    for (const io::Pin& pin : net.pins) {
      px.push_back(s.x[pin.cell] + pin.dx);
      py.push_back(s.y[pin.cell] + pin.dy);
    }
    g.value += lse_axis(px, gamma, net.weight, dx);
    g.value += lse_axis(py, gamma, net.weight, dy);
    for (std::size_t k = 0; k < net.pins.size(); ++k) {
      g.grad_x[net.pins[k].cell] += dx[k];
      g.grad_y[net.pins[k].cell] += dy[k];
    }
  }
  return g;
}

BinGrid make_bin_grid(const io::LayoutRegion& region, int nx, int ny, double target_density, double stretch) {
  if (nx < 1 || ny < 1) throw Error(ErrorCode::InvalidArgument, "bin grid needs nx, ny >= 1");
  if (!(target_density > 0.0)) throw Error(ErrorCode::InvalidArgument, "target density must be positive");
  if (!(stretch >= 0.0)) throw Error(ErrorCode::InvalidArgument, "stretch must be nonnegative");
  BinGrid g;
  g.nx = nx;
  g.ny = ny;
  g.xmin = region.xmin;
  g.ymin = region.ymin;
  g.bin_w = region.width() / nx;
  g.bin_h = region.height() / ny;
  g.bin_capacity = target_density * g.bin_w * g.bin_h;
  g.stretch = stretch;
  g.occupancy.assign(static_cast<std::size_t>(nx) * static_cast<std::size_t>(ny), 0.0);
  return g;
}

BinGrid make_bin_grid(const io::BenchmarkCase& c, double target_density, double stretch) {
  const int n = std::max(8, static_cast<int>(std::ceil(std::sqrt(static_cast<double>(c.movable_count())))));
  return make_bin_grid(c.region, n, n, target_density, stretch);
}

namespace {

struct Footprint {
  double lo_x, hi_x, lo_y, hi_y, scale;
  int ix0, ix1, iy0, iy1;  // inclusive bin range, empty when ix0 > ix1
};

Footprint footprint(const io::Cell& cell, double x, double y, const BinGrid& g) {
  const double fw = std::max(cell.width, g.stretch * g.bin_w);
  const double fh = std::max(cell.height, g.stretch * g.bin_h);
  Footprint f;
  f.lo_x = x - 0.5 * fw;
  f.hi_x = x + 0.5 * fw;
  f.lo_y = y - 0.5 * fh;
  f.hi_y = y + 0.5 * fh;
  f.scale = cell.area() / (fw * fh);
  auto bin = [](double v, double origin, double size, int n) {
    const double t = std::floor((v - origin) / size);
    return static_cast<int>(std::clamp(t, 0.0, static_cast<double>(n - 1)));
  };
  f.ix0 = bin(f.lo_x, g.xmin, g.bin_w, g.nx);
  f.ix1 = bin(f.hi_x, g.xmin, g.bin_w, g.nx);
  f.iy0 = bin(f.lo_y, g.ymin, g.bin_h, g.ny);
  f.iy1 = bin(f.hi_y, g.ymin, g.bin_h, g.ny);
  return f;
}

// Edge bins extend to infinity, so area outside the region is charged to the
// nearest boundary bin instead of vanishing.
double bin_lo(int i, double origin, double size) {
  return i == 0 ? -std::numeric_limits<double>::infinity() : origin + i * size;
}

double bin_hi(int i, int n, double origin, double size) {
  return i == n - 1 ? std::numeric_limits<double>::infinity() : origin + (i + 1) * size;
}

double overlap(double lo, double hi, double b0, double b1) {
  return std::max(0.0, std::min(hi, b1) - std::max(lo, b0));
}

// d overlap / d center, for a footprint sliding rigidly.
double overlap_slope(double lo, double hi, double b0, double b1) {
  if (overlap(lo, hi, b0, b1) <= 0.0) return 0.0;
  return (hi < b1 ? 1.0 : 0.0) - (lo > b0 ? 1.0 : 0.0);
}

}  // namespace

void rasterize(const io::BenchmarkCase& c, const PlacementState& s, BinGrid& g) {
  std::fill(g.occupancy.begin(), g.occupancy.end(), 0.0);
  for (const io::Cell& cell : c.cells) {
    const Footprint f = footprint(cell, s.x[cell.id], s.y[cell.id], g);
    for (int iy = f.iy0; iy <= f.iy1; ++iy) {
      const double oy = overlap(f.lo_y, f.hi_y, bin_lo(iy, g.ymin, g.bin_h), bin_hi(iy, g.ny, g.ymin, g.bin_h));
      if (oy <= 0.0) continue;
      for (int ix = f.ix0; ix <= f.ix1; ++ix) {
        const double ox = overlap(f.lo_x, f.hi_x, bin_lo(ix, g.xmin, g.bin_w), bin_hi(ix, g.nx, g.xmin, g.bin_w));
        if (ox > 0.0) g.at(ix, iy) += f.scale * ox * oy;
      }
    }
  }
}

Gradient density_penalty(const io::BenchmarkCase& c, const PlacementState& s, BinGrid& g) {
  rasterize(c, s, g);
  Gradient out;
  out.grad_x.assign(c.cells.size(), 0.0);
  out.grad_y.assign(c.cells.size(), 0.0);
  std::vector<double> coef(g.occupancy.size(), 0.0);
  for (std::size_t b = 0; b < g.occupancy.size(); ++b) {
    const double excess = std::max(0.0, g.occupancy[b] - g.bin_capacity);
    out.value += excess * excess / g.bin_capacity;
    coef[b] = 2.0 * excess / g.bin_capacity;
  }
  if (out.value == 0.0) return out;
  for (const io::Cell& cell : c.cells) {
    const Footprint f = footprint(cell, s.x[cell.id], s.y[cell.id], g);
    double gx = 0.0;
    double gy = 0.0;
    for (int iy = f.iy0; iy <= f.iy1; ++iy) {
      const double by0 = bin_lo(iy, g.ymin, g.bin_h);
      const double by1 = bin_hi(iy, g.ny, g.ymin, g.bin_h);
      const double oy = overlap(f.lo_y, f.hi_y, by0, by1);
      if (oy <= 0.0) continue;
      const double sy = overlap_slope(f.lo_y, f.hi_y, by0, by1);
      for (int ix = f.ix0; ix <= f.ix1; ++ix) {
        const double k = coef[static_cast<std::size_t>(iy) * static_cast<std::size_t>(g.nx) + static_cast<std::size_t>(ix)];
        if (k == 0.0) continue;
        const double bx0 = bin_lo(ix, g.xmin, g.bin_w);
        const double bx1 = bin_hi(ix, g.nx, g.xmin, g.bin_w);
        const double ox = overlap(f.lo_x, f.hi_x, bx0, bx1);
        if (ox <= 0.0) continue;
        gx += k * f.scale * overlap_slope(f.lo_x, f.hi_x, bx0, bx1) * oy;
        gy += k * f.scale * ox * sy;
      }
    }
    out.grad_x[cell.id] = gx;
    out.grad_y[cell.id] = gy;
  }
  return out;
}

double overflow_of(const io::BenchmarkCase& c, const BinGrid& g) {
  double excess = 0.0;
  for (double occ : g.occupancy) excess += std::max(0.0, occ - g.bin_capacity);
  const double area = c.movable_area();
  if (!(area > 0.0)) return 0.0;
  return std::clamp(excess / area, 0.0, 1.0);
}

double overflow(const io::BenchmarkCase& c, const PlacementState& s, BinGrid& g) {
  rasterize(c, s, g);
  return overflow_of(c, g);
}

}  // namespace evoplace::place
