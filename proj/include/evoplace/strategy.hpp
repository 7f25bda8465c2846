#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "evoplace/bookshelf.hpp"
#include "evoplace/dsl.hpp"
#include "evoplace/placement_state.hpp"

namespace evoplace::dsl {

/// Placement inputs visible to strategies. Vectors are shared so that
/// repeated hook evaluation does not copy them.
struct FeatureTable {
  static constexpr int kVersion = 1;
  using Column = std::shared_ptr<const std::vector<double>>;

  std::size_t cell_count = 0;
  std::vector<Column> columns;  // in feature_names() order
  std::vector<double> scalars;  // in scalar_names() order

  const std::vector<double>& column(std::string_view name) const;
  double scalar(std::string_view name) const;
};

FeatureTable extract_features(const io::BenchmarkCase& c);

/// One-paragraph digest of the feature table for prompts.
std::string feature_summary(const FeatureTable& f);

struct StrategyProgram {
  Kind kind = Kind::Init;
  std::string source;
  Program ast;
  std::string id;  // hash of source
};

/// Parses and checks; errors as parse_program/check_program.
StrategyProgram parse_strategy(std::string_view source, Kind kind);
StrategyProgram load_strategy(const std::filesystem::path& path, Kind kind);

/// Kind named by the outputs a program assigns; TypeError when none or
/// several kinds match.
Kind infer_kind(std::string_view source);
StrategyProgram load_strategy(const std::filesystem::path& path);

struct StrategyBundle {
  std::optional<StrategyProgram> init;
  std::optional<StrategyProgram> precond;
  std::optional<StrategyProgram> opt_policy;

  /// Throws InvalidArgument when a program's kind does not match its slot.
  void validate() const;
  std::optional<StrategyProgram>& slot(Kind kind);
  const std::optional<StrategyProgram>& slot(Kind kind) const;
};

/// Programs that reproduce the built-in engine behavior exactly.
std::string identity_source(Kind kind);

struct PrecondStats {
  double lambda = 0.0;
  double wl_grad_norm = 0.0;
  double density_grad_norm = 0.0;
  int iteration = 0;
  double overflow = 1.0;
};

struct RunStats {
  int iteration = 0;
  int max_iters = 0;
  double overflow = 1.0;
  double overflow_delta = 1.0;  // overflow_t - overflow_{t-20}; 1 until 21 samples exist
  double hpwl = 0.0;
  double wl_trend = 0.0;  // relative HPWL change over the last 10 iterations
  double lambda = 0.0;
  double gamma = 0.0;
  double bb_step = 0.0;
};

struct PolicyOutput {
  double step_scale = 1.0;
  double noise_level = 0.0;
  double momentum_scale = 1.0;
};

/// Movable centers from the program, clamped to the region; fixed cells at
/// their .pl positions. Throws StrategyRuntimeError.
place::PlacementState eval_init(const StrategyProgram& p, const io::BenchmarkCase& c, const FeatureTable& f,
                                std::uint64_t seed);

/// diag_scale * default_precondition(lambda), clamped to [1e-8, 1e12].
std::vector<double> eval_precond(const StrategyProgram& p, const io::BenchmarkCase& c, const FeatureTable& f,
                                 const PrecondStats& stats);

/// Outputs clamped to step in [0.01, 100], noise in [0, 0.05 span],
/// momentum in [0, 2].
PolicyOutput eval_opt_policy(const StrategyProgram& p, const io::BenchmarkCase& c, const FeatureTable& f,
                             const RunStats& stats);

/// Raw interpreter entry: evaluates every statement and returns the final
/// value of each output, broadcast to cell_count when it is a vector output.
std::vector<std::vector<double>> run_program(const StrategyProgram& p, const FeatureTable& f,
                                             const std::vector<double>& stats, std::uint64_t seed);

}  // namespace evoplace::dsl
