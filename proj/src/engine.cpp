#include "evoplace/engine.hpp"

#include <chrono>
#include <cmath>
#include <limits>

#include "evoplace/error.hpp"
#include "evoplace/objective.hpp"
#include "evoplace/optimizer.hpp"
#include "evoplace/rng.hpp"

namespace evoplace::place {

std::string_view to_string(Status s) {
  switch (s) {
    case Status::Success: return "Success";
    case Status::Divergence: return "Divergence";
    case Status::Error: return "Error";
  }
  return "Error";
}

Status parse_status(std::string_view text) {
  if (text == "Success") return Status::Success;
  if (text == "Divergence") return Status::Divergence;
  if (text == "Error") return Status::Error;
  throw Error(ErrorCode::InvalidArgument, "unknown status '" + std::string(text) + "'");
}

bool EvalResult::same_outcome(const EvalResult& o) const {
  const bool hpwl_eq = (std::isnan(hpwl) && std::isnan(o.hpwl)) || hpwl == o.hpwl;
  return status == o.status && hpwl_eq && iterations == o.iterations && overflow_final == o.overflow_final &&
         message == o.message;
}

PlacementState default_init(const io::BenchmarkCase& c, std::uint64_t seed, double noise_frac) {
  PlacementState s = io::placement_from_case(c);
  const std::size_t n = c.cells.size();
  const std::vector<double> gx = gaussian_stream(seed, 0, n);
  const std::vector<double> gy = gaussian_stream(seed, 1, n);
  const io::LayoutRegion& r = c.region;
  // Same expression shape as the identity init program, so both round alike.
  const double w = r.width();
  const double h = r.height();
  const double sigma = noise_frac * (h < w ? h : w);
  for (const io::Cell& cell : c.cells) {
    if (!cell.movable()) continue;
    s.x[cell.id] = r.center_x() + sigma * gx[cell.id];
    s.y[cell.id] = r.center_y() + sigma * gy[cell.id];
  }
  return s;
}

bool overflow_plateau(const std::vector<double>& h, int window, double tolerance) {
  const auto w = static_cast<std::size_t>(window);
  if (h.size() <= w) return false;
  return std::abs(h.back() - h[h.size() - 1 - w]) < tolerance;
}

namespace {

double l1_movable(const std::vector<double>& gx, const std::vector<double>& gy, const MoveBounds& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < gx.size(); ++i)
    if (b.movable[i]) s += std::abs(gx[i]) + std::abs(gy[i]);
  return s;
}

// Scale below which an HPWL is not a meaningful divergence reference: every
// net packed into a square of its cells' total area.
double hpwl_floor(const io::BenchmarkCase& c) {
  double f = 0.0;
  for (const io::Net& net : c.nets) {
    double area = 0.0;
    for (const io::Pin& pin : net.pins) area += c.cells[pin.cell].area();
    f += net.weight * 2.0 * std::sqrt(area);
  }
  return f;
}

struct Loop {
  const io::BenchmarkCase& c;
  const dsl::StrategyBundle& strat;
  const EngineConfig& cfg;
  std::uint64_t seed;
  const dsl::FeatureTable& features;

  PlaceOutcome run() {
    PlaceOutcome out;
    BinGrid grid = make_bin_grid(c, cfg.target_density, cfg.density_stretch);
    // overflow is judged on true cell extents
    BinGrid exact = make_bin_grid(c, cfg.target_density, 0.0);
    const MoveBounds bounds = MoveBounds::of(c);
    const double span = std::max(c.region.width(), c.region.height());
    const double max_move = cfg.max_move * std::max(grid.bin_w, grid.bin_h);
    PlacementState s = strat.init ? dsl::eval_init(*strat.init, c, features, seed)
                                  : default_init(c, seed, cfg.init_noise);
    bounds.project(s.x, s.y);
    out.initial_hpwl = hpwl(c, s);

    OptimizerState opt = OptimizerState::start(s.x, s.y, cfg.initial_step * span);
    const double g_hi = cfg.gamma_start * span;
    const double g_lo = cfg.gamma_end * span;
    const double floor = hpwl_floor(c);
    double lambda = 0.0;
    bool lambda_set = false;
    double hpwl_ref = std::numeric_limits<double>::infinity();
    int last_noise = -1 << 30;
    PlacementState cur = s;

    auto finish = [&](Status st, int iters, double h, double ovf, std::string msg) {
      out.result.status = st;
      out.result.iterations = iters;
      out.result.hpwl = std::isfinite(h) ? h : std::numeric_limits<double>::max();
      out.result.overflow_final = ovf;
      out.result.message = std::move(msg);
      out.placement = cur;
      return out;
    };

    for (int it = 0; it < cfg.max_iters; ++it) {
      cur.x = opt.vx;
      cur.y = opt.vy;
      cur.iteration = it;
      Gradient dens = density_penalty(c, cur, grid);
      const double ovf = overflow(c, cur, exact);
      const double t = std::clamp((ovf - cfg.stop_overflow) / (1.0 - cfg.stop_overflow), 0.0, 1.0);
      const double gamma = g_lo * std::pow(g_hi / g_lo, t);
      Gradient wl = smooth_wl(c, cur, gamma);
      const double h = hpwl(c, cur);
      cur.overflow_history.push_back(ovf);
      cur.wl_history.push_back(h);

      const double objective = wl.value + lambda * dens.value;
      if (!std::isfinite(objective) || !std::isfinite(h))
        return finish(Status::Divergence, it, h, ovf, "non-finite objective");
      if (it == cfg.warmup_iters) hpwl_ref = std::max(h, floor);
      if (it >= cfg.warmup_iters && h > cfg.divergence_factor * hpwl_ref)
        return finish(Status::Divergence, it, h, ovf, "HPWL exceeded divergence bound");
      if (it >= cfg.warmup_iters && ovf <= cfg.stop_overflow) return finish(Status::Success, it, h, ovf, "");

      const double wl_norm = l1_movable(wl.grad_x, wl.grad_y, bounds);
      const double d_norm = l1_movable(dens.grad_x, dens.grad_y, bounds);
      if (it >= cfg.warmup_iters) {
        if (!lambda_set) {
          if (d_norm > 0.0) {
            lambda = wl_norm / d_norm;
            lambda_set = true;
          }
        } else {
          lambda *= cfg.lambda_growth;
        }
      }
      std::vector<double> gx(c.cells.size(), 0.0);
      std::vector<double> gy(c.cells.size(), 0.0);
      for (std::size_t i = 0; i < gx.size(); ++i) {
        if (!bounds.movable[i]) continue;
        gx[i] = wl.grad_x[i] + lambda * dens.grad_x[i];
        gy[i] = wl.grad_y[i] + lambda * dens.grad_y[i];
      }

      std::vector<double> diag;
      if (strat.precond) {
        dsl::PrecondStats ps{lambda, wl_norm, d_norm, it, ovf};
        diag = dsl::eval_precond(*strat.precond, c, features, ps);
      } else {
        diag = default_precondition(c, lambda);
      }

      dsl::PolicyOutput po;
      if (strat.opt_policy) {
        dsl::RunStats rs;
        rs.iteration = it;
        rs.max_iters = cfg.max_iters;
        rs.overflow = ovf;
        const auto& oh = cur.overflow_history;
        const auto w = static_cast<std::size_t>(cfg.plateau_window);
        rs.overflow_delta = oh.size() > w ? oh.back() - oh[oh.size() - 1 - w] : 1.0;
        rs.hpwl = h;
        const auto& wh = cur.wl_history;
        rs.wl_trend = wh.size() > 10 && wh[wh.size() - 11] > 0.0 ? (wh.back() - wh[wh.size() - 11]) / wh[wh.size() - 11] : 0.0;
        rs.lambda = lambda;
        rs.gamma = gamma;
        rs.bb_step = opt.bb_step;
        po = dsl::eval_opt_policy(*strat.opt_policy, c, features, rs);
      }

      const std::vector<double> prev_ux = opt.ux;
      const std::vector<double> prev_uy = opt.uy;
      opt = nesterov_bb_step(opt, gx, gy, diag, bounds, {po.step_scale, po.momentum_scale, max_move});
      if (cfg.momentum_restart) {
        double dir = 0.0;
        for (std::size_t i = 0; i < gx.size(); ++i)
          dir += opt.prev_gx[i] * (opt.ux[i] - prev_ux[i]) + opt.prev_gy[i] * (opt.uy[i] - prev_uy[i]);
        if (dir > 0.0) opt.a = 1.0;
      }

      double sigma = po.noise_level;
      if (sigma <= 0.0 && ovf > cfg.stop_overflow && it - last_noise >= cfg.plateau_window &&
          overflow_plateau(cur.overflow_history, cfg.plateau_window, cfg.plateau_tolerance))
        sigma = cfg.plateau_noise * span;
      if (sigma > 0.0) {
        Rng rng(derive_seed(seed, {fnv1a("engine-noise"), static_cast<std::uint64_t>(it)}));
        for (std::size_t i = 0; i < gx.size(); ++i) {
          if (!bounds.movable[i]) continue;
          const double dx = sigma * rng.normal();
          const double dy = sigma * rng.normal();
          opt.ux[i] = std::clamp(opt.ux[i] + dx, bounds.lo_x[i], bounds.hi_x[i]);
          opt.uy[i] = std::clamp(opt.uy[i] + dy, bounds.lo_y[i], bounds.hi_y[i]);
          opt.vx[i] = std::clamp(opt.vx[i] + dx, bounds.lo_x[i], bounds.hi_x[i]);
          opt.vy[i] = std::clamp(opt.vy[i] + dy, bounds.lo_y[i], bounds.hi_y[i]);
        }
        opt.has_prev = false;
        opt.noise_level = sigma;
        last_noise = it;
      }
    }
    cur.x = opt.vx;
    cur.y = opt.vy;
    cur.iteration = cfg.max_iters;
    const double ovf = overflow(c, cur, exact);
    const double h = hpwl(c, cur);
    if (!std::isfinite(h)) return finish(Status::Divergence, cfg.max_iters, h, ovf, "non-finite objective");
    return finish(Status::Success, cfg.max_iters, h, ovf, "");
  }
};

}  // namespace

PlaceOutcome place(const io::BenchmarkCase& c, const dsl::StrategyBundle& strategies, const EngineConfig& cfg,
                   std::uint64_t seed, const dsl::FeatureTable* features) {
  const auto t0 = std::chrono::steady_clock::now();
  PlaceOutcome out;
  try {
    strategies.validate();
    dsl::FeatureTable local;
    if (!features) {
      local = dsl::extract_features(c);
      features = &local;
    }
    out = Loop{c, strategies, cfg, seed, *features}.run();
  } catch (const Error& e) {
    out.result = EvalResult{};
    out.result.status = Status::Error;
    out.result.hpwl = std::numeric_limits<double>::quiet_NaN();
    out.result.message = e.what();
  } catch (const std::exception& e) {
    out.result = EvalResult{};
    out.result.status = Status::Error;
    out.result.hpwl = std::numeric_limits<double>::quiet_NaN();
    out.result.message = std::string("internal: ") + e.what();
  }
  out.result.runtime = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return out;
}

EvalResult run_global_place(const io::BenchmarkCase& c, const dsl::StrategyBundle& strategies,
                            const EngineConfig& cfg, std::uint64_t seed, const dsl::FeatureTable* features) {
  return place(c, strategies, cfg, seed, features).result;
}

}  // namespace evoplace::place
