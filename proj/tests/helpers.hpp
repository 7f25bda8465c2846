#pragma once

#include <filesystem>
#include <fstream>
#include <sstream>
#include <functional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "evoplace/bookshelf.hpp"
#include "evoplace/error.hpp"
#include "evoplace/placement_state.hpp"
#include "evoplace/rng.hpp"

namespace evoplace::testing {

inline std::filesystem::path data_dir() { return EVOPLACE_DATA_DIR; }

inline std::filesystem::path case_path(const std::string& name) {
  return data_dir() / "cases" / name / (name + ".aux");
}

// Fresh empty directory under the build tree.
inline std::filesystem::path scratch(const std::string& name) {
  const auto p = std::filesystem::path(EVOPLACE_SCRATCH_DIR) / name;
  std::filesystem::remove_all(p);
  std::filesystem::create_directories(p);
  return p;
}

inline std::string read_file(const std::filesystem::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

// Code of the evoplace::Error thrown by f; throws if f does not throw one.
inline ErrorCode code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  throw std::logic_error("expected an evoplace::Error");
}

struct CellSpec {
  std::string name;
  double w = 1.0, h = 1.0;
  bool fixed = false;
  double x = 0.0, y = 0.0;
};

// nets as lists of (cell index, dx, dy)
using NetSpec = std::vector<std::tuple<std::size_t, double, double>>;

inline io::BenchmarkCase make_case(const std::vector<CellSpec>& cells, const std::vector<NetSpec>& nets,
                                   io::LayoutRegion region, std::vector<double> weights = {}) {
  io::BenchmarkCase c;
  c.name = "handmade";
  c.region = region;
  for (std::size_t i = 0; i < cells.size(); ++i) {
    io::Cell cell;
    cell.id = i;
    cell.name = cells[i].name.empty() ? "c" + std::to_string(i) : cells[i].name;
    cell.width = cells[i].w;
    cell.height = cells[i].h;
    cell.kind = cells[i].fixed ? io::CellKind::Fixed : io::CellKind::Movable;
    cell.pl_x = cells[i].x;
    cell.pl_y = cells[i].y;
    cell.has_position = true;
    c.cells.push_back(cell);
  }
  for (std::size_t n = 0; n < nets.size(); ++n) {
    io::Net net;
    net.id = n;
    net.name = "n" + std::to_string(n);
    net.weight = weights.empty() ? 1.0 : weights[n];
    for (const auto& [cell, dx, dy] : nets[n]) net.pins.push_back({cell, dx, dy});
    c.nets.push_back(net);
  }
  return c;
}

// Random netlist with `movable` cells, a few fixed pads and pin offsets.
inline io::BenchmarkCase random_case(std::uint64_t seed, std::size_t movable, std::size_t nets, double side) {
  Rng rng(seed);
  std::vector<CellSpec> cells;
  for (std::size_t i = 0; i < movable; ++i)
    cells.push_back({"", 0.5 + rng.uniform(), 0.5 + rng.uniform(), false, side / 2, side / 2});
  for (int p = 0; p < 4; ++p) cells.push_back({"", 1, 1, true, rng.uniform(0, side), rng.uniform(0, side)});
  std::vector<NetSpec> ns;
  std::vector<double> weights;
  for (std::size_t n = 0; n < nets; ++n) {
    NetSpec net;
    const std::size_t deg = 2 + rng.below(4);
    for (std::size_t k = 0; k < deg; ++k) {
      const std::size_t cell = rng.below(cells.size());
      net.emplace_back(cell, rng.uniform(-0.3, 0.3), rng.uniform(-0.3, 0.3));
    }
    ns.push_back(net);
    weights.push_back(0.5 + rng.uniform());
  }
  return make_case(cells, ns, {0, 0, side, side}, weights);
}

inline place::PlacementState at(std::vector<double> x, std::vector<double> y) {
  place::PlacementState s;
  s.x = std::move(x);
  s.y = std::move(y);
  return s;
}

inline place::PlacementState random_placement(const io::BenchmarkCase& c, std::uint64_t seed) {
  Rng rng(seed);
  place::PlacementState s;
  for (const auto& cell : c.cells) {
    if (cell.movable()) {
      s.x.push_back(rng.uniform(c.region.xmin + 1, c.region.xmax - 1));
      s.y.push_back(rng.uniform(c.region.ymin + 1, c.region.ymax - 1));
    } else {
      s.x.push_back(cell.pl_x);
      s.y.push_back(cell.pl_y);
    }
  }
  return s;
}

}  // namespace evoplace::testing
