#pragma once

#include <limits>
#include <vector>

#include "evoplace/bookshelf.hpp"

namespace evoplace::place {

constexpr double kPrecondFloor = 1e-8;
constexpr double kPrecondCeil = 1e12;

/// diag_i = sum of weights of nets touching i + lambda * area_i, floored at 1e-8.
std::vector<double> default_precondition(const io::BenchmarkCase& c, double lambda_density);

/// Box constraints keeping each movable cell inside the region; fixed cells
/// have lo == hi == their position.
struct MoveBounds {
  std::vector<double> lo_x, hi_x, lo_y, hi_y;
  std::vector<char> movable;

  /// min_w/min_h widen small cells so that a footprint of at least that
  /// size stays inside the region.
  static MoveBounds of(const io::BenchmarkCase& c, double min_w = 0.0, double min_h = 0.0);
  void project(std::vector<double>& x, std::vector<double>& y) const;
};

/// Nesterov accelerated gradient with a Barzilai-Borwein step. Gradients are
/// evaluated at the reference point (vx, vy); (ux, uy) is the main sequence.
struct OptimizerState {
  std::vector<double> ux, uy;            // main solution
  std::vector<double> vx, vy;            // reference (look-ahead) solution
  std::vector<double> prev_vx, prev_vy;  // reference point of the last step
  std::vector<double> prev_gx, prev_gy;  // its preconditioned gradient
  double a = 1.0;                        // Nesterov sequence
  double bb_step = 0.0;
  double noise_level = 0.0;
  bool has_prev = false;
  int steps = 0;

  static OptimizerState start(const std::vector<double>& x, const std::vector<double>& y, double initial_step);
};

struct StepControls {
  double step_scale = 1.0;
  double momentum_scale = 1.0;
  /// Trust region: the step is shrunk so no coordinate moves farther.
  double max_move = std::numeric_limits<double>::infinity();
};

/// One step from the gradient at (opt.vx, opt.vy). Fixed cells never move
/// and every new position is projected onto the bounds.
OptimizerState nesterov_bb_step(const OptimizerState& opt, const std::vector<double>& grad_x,
                                const std::vector<double>& grad_y, const std::vector<double>& precond_diag,
                                const MoveBounds& bounds, const StepControls& controls = {});

}  // namespace evoplace::place
