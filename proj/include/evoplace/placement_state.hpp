#pragma once

#include <vector>

namespace evoplace::place {

/// Cell-center coordinates for every cell of a case (fixed cells included,
/// indexed by cell id) plus per-iteration traces filled in by the engine.
struct PlacementState {
  std::vector<double> x;
  std::vector<double> y;
  int iteration = 0;
  std::vector<double> overflow_history;
  std::vector<double> wl_history;

  std::size_t size() const { return x.size(); }
};

}  // namespace evoplace::place
