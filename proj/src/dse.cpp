#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "evoplace/dse.hpp"
#include "evoplace/error.hpp"
#include "evoplace/rng.hpp"

namespace evoplace::dse {

const std::vector<std::string>& digest_names() {
  static const std::vector<std::string> n = {"log_cells",   "log_nets",    "utilization", "macro_share",
                                             "fixed_share", "mean_degree", "degree_cv",   "aspect"};
  return n;
}

std::vector<double> placement_digest(const dsl::FeatureTable& f) {
  const auto& degree = f.column("degree");
  const auto& fixed = f.column("is_fixed");
  double mean = 0.0, fixed_n = 0.0;
  for (std::size_t i = 0; i < degree.size(); ++i) {
    mean += degree[i];
    fixed_n += fixed[i];
  }
  const double n = std::max<double>(1.0, static_cast<double>(degree.size()));
  mean /= n;
  double var = 0.0;
  for (double d : degree) var += (d - mean) * (d - mean) / n;
  const double cells = f.scalar("num_cells");
  const double h = f.scalar("region_h");
  return {std::log1p(cells),
          std::log1p(f.scalar("num_nets")),
          f.scalar("utilization"),
          f.scalar("num_macros") / std::max(1.0, cells),
          fixed_n / n,
          mean,
          mean > 0 ? std::sqrt(var) / mean : 0.0,
          h > 0 ? f.scalar("region_w") / h : 1.0};
}

std::vector<double> DesignPoint::features() const {
  std::vector<double> x = embedding;
  x.insert(x.end(), digest.begin(), digest.end());
  return x;
}

double normalized_loss(double hpwl, double baseline, bool success) {
  if (!success || !std::isfinite(hpwl) || !(baseline > 0)) return 1.0;
  const double r = hpwl / baseline;
  return r / (1.0 + r);
}

DseResult run_dse(const std::vector<DesignPoint>& pool, std::size_t N, std::uint64_t seed,
                  const PointEvaluator& evaluate, const DseOptions& opts) {
  const std::size_t n = pool.size();
  if (n == 0) throw Error(ErrorCode::InvalidArgument, "empty design pool");
  if (N < 1 || N > n) throw Error(ErrorCode::InvalidArgument, "evaluation budget must be in [1, pool size]");
  std::vector<std::vector<double>> X(n);
  for (std::size_t i = 0; i < n; ++i) {
    X[i] = pool[i].features();
    if (X[i].size() != X[0].size()) throw Error(ErrorCode::InvalidArgument, "design points differ in dimension");
  }
  const bool residual = opts.mode == FusionMode::Residual && opts.surrogate != nullptr;
  std::vector<double> prior(n, 0.0);
  if (residual)
    for (std::size_t i = 0; i < n; ++i) prior[i] = opts.surrogate->predict(pool[i]);

  DseResult res;
  std::vector<bool> done(n, false);
  auto run_one = [&](std::size_t i, const char* phase, double ei, const Prediction& pred) {
    const std::optional<double> y = evaluate(i);
    const double v = y && std::isfinite(*y) ? *y : 1.0;
    done[i] = true;
    res.order.push_back(i);
    res.y.push_back(v);
    if (res.order.size() == 1 || v < res.best_y || (v == res.best_y && i < res.best)) {
      res.best = i;
      res.best_y = v;
    }
    json rec = {{"record", "dse-step"}, {"step", res.order.size()}, {"index", i}, {"id", pool[i].id},
                {"phase", phase},       {"y", v},                   {"failed", !y.has_value()}, {"best_y", res.best_y},
                {"best_id", pool[res.best].id}};
    if (std::string(phase) == "ei") rec.update({{"ei", ei}, {"mu", pred.mu}, {"sigma", pred.sigma}});
    res.history.push_back(rec);
  };

  // seeded initial sample without replacement
  const std::size_t init = std::min(N, opts.init_count ? opts.init_count : std::max<std::size_t>(5, N / 10));
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  Rng rng(derive_seed(seed, {fnv1a("dse-init")}));
  for (std::size_t i = 0; i < init; ++i) std::swap(perm[i], perm[i + rng.below(n - i)]);
  for (std::size_t i = 0; i < init; ++i) run_one(perm[i], "init", 0.0, {});

  // hyperparameters from the initial sample
  std::vector<std::vector<double>> Xinit;
  std::vector<double> rinit;
  for (std::size_t k = 0; k < res.order.size(); ++k) {
    Xinit.push_back(X[res.order[k]]);
    rinit.push_back(res.y[k] - prior[res.order[k]]);
  }
  KernelParams kp;
  kp.length_scale = median_pairwise_distance(Xinit);
  const double rmean = std::accumulate(rinit.begin(), rinit.end(), 0.0) / static_cast<double>(rinit.size());
  double rvar = 0.0;
  for (double r : rinit) rvar += (r - rmean) * (r - rmean) / static_cast<double>(rinit.size());
  kp.signal_var = std::max(rvar, 1e-6);
  kp.noise_var = opts.noise_var;

  while (res.order.size() < N) {
    std::vector<std::vector<double>> Xo;
    std::vector<double> r;
    for (std::size_t k = 0; k < res.order.size(); ++k) {
      Xo.push_back(X[res.order[k]]);
      r.push_back(res.y[k] - prior[res.order[k]]);
    }
    const double mean = residual ? 0.0 : std::accumulate(r.begin(), r.end(), 0.0) / static_cast<double>(r.size());
    const GpModel gp = gp_fit(Xo, r, kp, mean);
    std::size_t pick = n;
    double pick_ei = -1.0;
    Prediction pick_pred;
    for (std::size_t i = 0; i < n; ++i) {
      if (done[i]) continue;
      Prediction p = gp_predict(gp, X[i]);
      p.mu += prior[i];
      const double ei = expected_improvement(p.mu, p.sigma, res.best_y, opts.xi);
      if (pick == n || ei > pick_ei || (ei == pick_ei && p.mu < pick_pred.mu)) {
        pick = i;
        pick_ei = ei;
        pick_pred = p;
      }
    }
    run_one(pick, "ei", pick_ei, pick_pred);
  }
  return res;
}

}  // namespace evoplace::dse
