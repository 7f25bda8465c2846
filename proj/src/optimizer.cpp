#include "evoplace/optimizer.hpp"

#include <algorithm>
#include <cmath>

#include "evoplace/error.hpp"

namespace evoplace::place {

std::vector<double> default_precondition(const io::BenchmarkCase& c, double lambda_density) {
  std::vector<double> diag(c.cells.size(), 0.0);
  std::vector<std::size_t> seen(c.cells.size(), static_cast<std::size_t>(-1));
  for (const io::Net& net : c.nets) {
    for (const io::Pin& pin : net.pins) {
      if (seen[pin.cell] == net.id) continue;  // a net counts once per cell
      seen[pin.cell] = net.id;
      diag[pin.cell] += net.weight;
    }
  }
  for (const io::Cell& cell : c.cells)
    diag[cell.id] = std::clamp(diag[cell.id] + lambda_density * cell.area(), kPrecondFloor, kPrecondCeil);
  return diag;
}

MoveBounds MoveBounds::of(const io::BenchmarkCase& c, double min_w, double min_h) {
  MoveBounds b;
  const std::size_t n = c.cells.size();
  b.lo_x.resize(n);
  b.hi_x.resize(n);
  b.lo_y.resize(n);
  b.hi_y.resize(n);
  b.movable.resize(n);
  const io::LayoutRegion& r = c.region;
  for (const io::Cell& cell : c.cells) {
    const std::size_t i = cell.id;
    b.movable[i] = cell.movable();
    if (!cell.movable()) {
      b.lo_x[i] = b.hi_x[i] = cell.pl_x;
      b.lo_y[i] = b.hi_y[i] = cell.pl_y;
      continue;
    }
    const double w = std::max(cell.width, min_w);
    const double h = std::max(cell.height, min_h);
    b.lo_x[i] = r.xmin + 0.5 * w;
    b.hi_x[i] = r.xmax - 0.5 * w;
    if (b.lo_x[i] > b.hi_x[i]) b.lo_x[i] = b.hi_x[i] = r.center_x();
    b.lo_y[i] = r.ymin + 0.5 * h;
    b.hi_y[i] = r.ymax - 0.5 * h;
    if (b.lo_y[i] > b.hi_y[i]) b.lo_y[i] = b.hi_y[i] = r.center_y();
  }
  return b;
}

void MoveBounds::project(std::vector<double>& x, std::vector<double>& y) const {
  for (std::size_t i = 0; i < x.size(); ++i) {
    x[i] = std::clamp(x[i], lo_x[i], hi_x[i]);
    y[i] = std::clamp(y[i], lo_y[i], hi_y[i]);
  }
}

OptimizerState OptimizerState::start(const std::vector<double>& x, const std::vector<double>& y, double initial_step) {
  if (!(initial_step > 0.0)) throw Error(ErrorCode::InvalidArgument, "initial step must be positive");
  OptimizerState s;
  s.ux = s.vx = x;
  s.uy = s.vy = y;
  s.bb_step = initial_step;
  return s;
}

OptimizerState nesterov_bb_step(const OptimizerState& opt, const std::vector<double>& grad_x,
                                const std::vector<double>& grad_y, const std::vector<double>& precond_diag,
                                const MoveBounds& bounds, const StepControls& controls) {
  const std::size_t n = opt.vx.size();
  if (grad_x.size() != n || grad_y.size() != n || precond_diag.size() != n || bounds.movable.size() != n)
    throw Error(ErrorCode::InvalidArgument, "optimizer dimension mismatch");
  OptimizerState next = opt;
  next.prev_gx.assign(n, 0.0);
  next.prev_gy.assign(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    if (!bounds.movable[i]) continue;
    next.prev_gx[i] = grad_x[i] / precond_diag[i];
    next.prev_gy[i] = grad_y[i] / precond_diag[i];
  }

  double alpha = opt.bb_step;
  if (opt.has_prev) {
    double sy = 0.0;
    double yy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double sx_i = opt.vx[i] - opt.prev_vx[i];
      const double sy_i = opt.vy[i] - opt.prev_vy[i];
      const double yx_i = next.prev_gx[i] - opt.prev_gx[i];
      const double yy_i = next.prev_gy[i] - opt.prev_gy[i];
      sy += sx_i * yx_i + sy_i * yy_i;
      yy += yx_i * yx_i + yy_i * yy_i;
    }
    if (yy >= 1e-20) alpha = std::abs(sy) / yy;
  }
  if (alpha > 0.0 && std::isfinite(alpha)) next.bb_step = alpha;
  double step = next.bb_step * controls.step_scale;
  if (std::isfinite(controls.max_move)) {
    double g_max = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      g_max = std::max({g_max, std::abs(next.prev_gx[i]), std::abs(next.prev_gy[i])});
    if (step * g_max > controls.max_move) step = controls.max_move / g_max;
  }

  const double a_next = 0.5 * (1.0 + std::sqrt(4.0 * opt.a * opt.a + 1.0));
  const double coef = controls.momentum_scale * (opt.a - 1.0) / a_next;

  next.prev_vx = opt.vx;
  next.prev_vy = opt.vy;
  for (std::size_t i = 0; i < n; ++i) {
    if (!bounds.movable[i]) continue;
    next.ux[i] = std::clamp(opt.vx[i] - step * next.prev_gx[i], bounds.lo_x[i], bounds.hi_x[i]);
    next.uy[i] = std::clamp(opt.vy[i] - step * next.prev_gy[i], bounds.lo_y[i], bounds.hi_y[i]);
    next.vx[i] = std::clamp(next.ux[i] + coef * (next.ux[i] - opt.ux[i]), bounds.lo_x[i], bounds.hi_x[i]);
    next.vy[i] = std::clamp(next.uy[i] + coef * (next.uy[i] - opt.uy[i]), bounds.lo_y[i], bounds.hi_y[i]);
  }
  next.a = a_next;
  next.has_prev = true;
  ++next.steps;
  return next;
}

}  // namespace evoplace::place
