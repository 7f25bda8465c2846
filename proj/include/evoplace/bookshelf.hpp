#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "evoplace/placement_state.hpp"

namespace evoplace::io {

enum class CellKind { Movable, Fixed, Macro };

struct Cell {
  std::size_t id = 0;
  std::string name;
  double width = 0.0;
  double height = 0.0;
  CellKind kind = CellKind::Movable;
  /// Center coordinates from the .pl file. Mandatory for fixed cells; an
  /// optional hint for movable ones.
  double pl_x = 0.0;
  double pl_y = 0.0;
  bool has_position = false;

  double area() const { return width * height; }
  bool movable() const { return kind != CellKind::Fixed; }
};

struct Pin {
  std::size_t cell = 0;
  double dx = 0.0;  // offset from the cell center
  double dy = 0.0;
};

struct Net {
  std::size_t id = 0;
  std::string name;
  std::vector<Pin> pins;
  double weight = 1.0;
};

struct LayoutRegion {
  double xmin = 0.0;
  double ymin = 0.0;
  double xmax = 0.0;
  double ymax = 0.0;

  double width() const { return xmax - xmin; }
  double height() const { return ymax - ymin; }
  double center_x() const { return 0.5 * (xmin + xmax); }
  double center_y() const { return 0.5 * (ymin + ymax); }
};

/// An immutable placement instance. Safe to share read-only across threads.
struct BenchmarkCase {
  std::string name;
  std::vector<Cell> cells;
  std::vector<Net> nets;
  LayoutRegion region;
  std::map<std::string, std::filesystem::path> source_paths;

  std::size_t movable_count() const;
  double movable_area() const;
  std::size_t pin_count() const;
};

struct ParseOptions {
  /// Treat terminals as movable (I/O-freed benchmark variants).
  bool unfix_terminals = false;
  /// Movable cells larger than this multiple of the median movable area are
  /// tagged Macro.
  double macro_area_factor = 100.0;
};

BenchmarkCase parse_case(const std::filesystem::path& aux_path, const ParseOptions& options = {});

/// Checks every BenchmarkCase invariant; throws Error(InvalidCase, ...).
void validate_case(const BenchmarkCase& c);

/// Re-derives Movable/Macro tags from areas (fixed cells untouched).
void tag_macros(BenchmarkCase& c, double macro_area_factor = 100.0);

/// Writes a .pl file (lower-left coordinates, `/FIXED` on fixed cells). The
/// coordinates are printed so that parse_case recovers every center
/// bit-exactly.
void write_placement(const BenchmarkCase& c, const place::PlacementState& placement,
                     const std::filesystem::path& path);

/// Writes the complete Bookshelf set (.aux/.nodes/.nets/.wts/.pl/.scl) into
/// `dir` and returns the .aux path. Positions come from the cells' .pl data.
std::filesystem::path write_case(const BenchmarkCase& c, const std::filesystem::path& dir);

/// Cell-center placement taken from the .pl data (region center for movable
/// cells without a hint).
place::PlacementState placement_from_case(const BenchmarkCase& c);

// ---------------------------------------------------------------------------
// Synthetic generator

enum class Topology { ClusteredCliques, RandomNets };

/// Desk-scale benchmark description. Loaded from an INI-style file; see
/// docs/formats.md for the schema.
struct SyntheticSpec {
  std::string name = "synth";
  Topology topology = Topology::ClusteredCliques;
  // ClusteredCliques
  int clique_count = 2;
  int clique_size = 10;
  double intra_weight = 1.0;
  int pads_per_clique = 2;
  double pad_weight = 1.0;
  int inter_clique_nets = 1;
  // RandomNets
  int num_cells = 100;
  int num_nets = 120;
  int max_net_degree = 4;
  int num_pads = 8;
  // shared
  double utilization = 0.25;
  double cell_width = 1.0;
  double cell_height = 1.0;
  /// Movable widths are drawn from {1, ..., width_levels} * cell_width.
  int width_levels = 1;
  int macro_count = 0;
  double macro_scale = 12.0;

  int movable_cell_count() const;
};

SyntheticSpec load_synthetic_spec(const std::filesystem::path& path);

BenchmarkCase generate_synthetic(const SyntheticSpec& spec, std::uint64_t seed);

/// Manifest written next to generated files: counts a parser must reproduce.
struct CaseManifest {
  std::string name;
  std::size_t num_cells = 0;
  std::size_t num_movable = 0;
  std::size_t num_fixed = 0;
  std::size_t num_macros = 0;
  std::size_t num_nets = 0;
  std::size_t num_pins = 0;
  LayoutRegion region;
};

CaseManifest manifest_of(const BenchmarkCase& c);
void write_manifest(const CaseManifest& m, const std::filesystem::path& path);
CaseManifest read_manifest(const std::filesystem::path& path);

/// For ClusteredCliques cases: every clique packed as a square block against
/// the corner holding its pads. A cheap reference placement whose HPWL bounds
/// what clustering can achieve.
place::PlacementState clustered_corner_placement(const BenchmarkCase& c, const SyntheticSpec& spec);

}  // namespace evoplace::io
