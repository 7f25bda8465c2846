#pragma once

#include <cstdint>
#include <string>
#include <string_view>

#include "evoplace/bookshelf.hpp"
#include "evoplace/placement_state.hpp"
#include "evoplace/strategy.hpp"

namespace evoplace::place {

struct EngineConfig {
  int max_iters = 1000;
  double stop_overflow = 0.10;
  double divergence_factor = 10.0;
  /// Smoothing temperature endpoints as fractions of the region span; gamma
  /// moves log-linearly between them as overflow falls to stop_overflow.
  double gamma_start = 0.05;
  double gamma_end = 0.005;
  double target_density = 1.0;
  double density_stretch = 1.25;  // minimum footprint, in bins
  int warmup_iters = 10;
  double lambda_growth = 1.05;
  /// First optimizer step, as a fraction of the span.
  double initial_step = 0.01;
  bool momentum_restart = true;
  /// Largest per-iteration move of any coordinate, in bin widths.
  double max_move = 0.2;
  int plateau_window = 20;
  double plateau_tolerance = 1e-3;
  double plateau_noise = 0.005;  // sigma as a fraction of the span
  double init_noise = 0.001;     // default_init sigma as a fraction of min(region dims)
};

enum class Status { Success, Divergence, Error };

std::string_view to_string(Status s);
Status parse_status(std::string_view text);

struct EvalResult {
  Status status = Status::Error;
  double hpwl = 0.0;  // NaN for Error
  double runtime = 0.0;
  int iterations = 0;
  double overflow_final = 0.0;
  std::string message;

  /// Equality of everything except wall-clock runtime.
  bool same_outcome(const EvalResult& o) const;
};

/// Movable centers at the region center plus seeded Gaussian noise of
/// sigma = noise_frac * min(region width, height); fixed cells at .pl.
PlacementState default_init(const io::BenchmarkCase& c, std::uint64_t seed, double noise_frac = 0.001);

/// True when the built-in plateau rule fires at the last entry of history.
bool overflow_plateau(const std::vector<double>& overflow_history, int window, double tolerance);

struct PlaceOutcome {
  EvalResult result;
  PlacementState placement;  // final positions and traces
  double initial_hpwl = 0.0;
};

/// Runs the full engine. Never throws for strategy faults; those become
/// Status::Error. `features` may be null (computed on demand).
PlaceOutcome place(const io::BenchmarkCase& c, const dsl::StrategyBundle& strategies, const EngineConfig& cfg,
                   std::uint64_t seed, const dsl::FeatureTable* features = nullptr);

EvalResult run_global_place(const io::BenchmarkCase& c, const dsl::StrategyBundle& strategies,
                            const EngineConfig& cfg, std::uint64_t seed, const dsl::FeatureTable* features = nullptr);

}  // namespace evoplace::place
