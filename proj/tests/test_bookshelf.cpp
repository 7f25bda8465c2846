#include <cmath>
#include <fstream>

#include <doctest.h>

#include "evoplace/bookshelf.hpp"
#include "evoplace/error.hpp"
#include "evoplace/objective.hpp"
#include "helpers.hpp"

using namespace evoplace;
using namespace evoplace::testing;
namespace fs = std::filesystem;

namespace {

void write_file(const fs::path& p, const std::string& text) { std::ofstream(p) << text; }

fs::path two_cell_case(const fs::path& dir, const std::string& nets) {
  write_file(dir / "t.aux", "RowBasedPlacement : t.nodes t.nets t.pl t.scl\n");
  write_file(dir / "t.nodes", "UCLA nodes 1.0\nNumNodes : 2\nNumTerminals : 0\na 1 1\nb 1 1\n");
  write_file(dir / "t.nets", nets);
  write_file(dir / "t.pl", "UCLA pl 1.0\na 0 0 : N\nb 2 0 : N\n");
  write_file(dir / "t.scl",
             "UCLA scl 1.0\nNumRows : 1\nCoreRow Horizontal\n Coordinate : 0\n Height : 4\n Sitewidth : 1\n"
             " Sitespacing : 1\n Siteorient : 1\n Sitesymmetry : 1\n SubrowOrigin : 0 NumSites : 4\nEnd\n");
  return dir / "t.aux";
}

// Copies a case directory so its .pl can be replaced.
fs::path copy_case(const std::string& name, const fs::path& dir) {
  fs::copy(data_dir() / "cases" / name, dir, fs::copy_options::overwrite_existing | fs::copy_options::recursive);
  return dir / (name + ".aux");
}

}  // namespace

TEST_CASE("minimal two-cell case") {
  const auto dir = scratch("bookshelf_min");
  const auto c = io::parse_case(two_cell_case(dir, "UCLA nets 1.0\nNumNets : 1\nNumPins : 2\nNetDegree : 2 n0\na B\nb B\n"));
  CHECK(c.cells.size() == 2);
  CHECK(c.nets.size() == 1);
  CHECK(c.pin_count() == 2);
  CHECK(c.cells[0].name == "a");
  CHECK(c.cells[1].pl_x == doctest::Approx(2.5));  // .pl is lower-left
}

TEST_CASE("dangling pin and empty netlist") {
  const auto dir = scratch("bookshelf_bad");
  CHECK(code_of([&] {
          io::parse_case(two_cell_case(dir, "UCLA nets 1.0\nNumNets : 1\nNumPins : 2\nNetDegree : 2 n0\na B\nz B\n"));
        }) == ErrorCode::DanglingPinReference);
  CHECK(code_of([&] { io::parse_case(two_cell_case(dir, "UCLA nets 1.0\nNumNets : 0\nNumPins : 0\n")); }) ==
        ErrorCode::EmptyNetlist);
  CHECK(code_of([&] { io::parse_case(dir / "missing.aux"); }) == ErrorCode::MissingFile);
}

TEST_CASE("syntax errors carry a line") {
  const auto dir = scratch("bookshelf_syntax");
  try {
    io::parse_case(two_cell_case(dir, "UCLA nets 1.0\nNumNets : 1\nNumPins : 2\nNetDegree : two n0\na B\nb B\n"));
    FAIL("expected SyntaxError");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::SyntaxError);
    CHECK(e.line() == 4);
  }
}

TEST_CASE("generated cases match their manifest") {
  for (const std::string name : {"two_clique", "random100"}) {
    const auto c = io::parse_case(case_path(name));
    const auto m = io::read_manifest(data_dir() / "cases" / name / (name + ".manifest.json"));
    const auto got = io::manifest_of(c);
    CHECK(got.num_cells == m.num_cells);
    CHECK(got.num_movable == m.num_movable);
    CHECK(got.num_fixed == m.num_fixed);
    CHECK(got.num_macros == m.num_macros);
    CHECK(got.num_nets == m.num_nets);
    CHECK(got.num_pins == m.num_pins);
    CHECK(got.region.xmax == m.region.xmax);
    CHECK(got.region.ymax == m.region.ymax);
  }
  CHECK(io::parse_case(case_path("random100")).cells.size() == 110);
}

TEST_CASE("placement roundtrip is bit exact") {
  const auto dir = scratch("bookshelf_roundtrip");
  const auto aux = copy_case("random100", dir);
  const auto base = io::parse_case(aux);
  const auto pl = dir / "random100.pl";
  for (std::uint64_t seed = 0; seed < 1000; ++seed) {
    Rng rng(seed);
    auto s = io::placement_from_case(base);
    for (std::size_t i = 0; i < s.size(); ++i)
      if (base.cells[i].movable()) {
        s.x[i] = rng.uniform(base.region.xmin, base.region.xmax);
        s.y[i] = rng.uniform(base.region.ymin, base.region.ymax);
      }
    io::write_placement(base, s, pl);
    const auto c = io::parse_case(aux);
    for (std::size_t i = 0; i < c.cells.size(); ++i) REQUIRE(c.cells[i].movable() == base.cells[i].movable());
    const auto back = io::placement_from_case(c);
    REQUIRE(back.x == s.x);
    REQUIRE(back.y == s.y);
  }
}

TEST_CASE("non-finite coordinates are rejected") {
  const auto c = io::parse_case(case_path("toy2"));
  auto s = io::placement_from_case(c);
  s.x[0] = std::nan("");
  CHECK(code_of([&] { io::write_placement(c, s, scratch("bookshelf_nan") / "x.pl"); }) == ErrorCode::NonFiniteCoordinate);
}

TEST_CASE("parse write parse is the identity on committed cases") {
  for (const std::string name : {"toy2", "two_clique", "random100"}) {
    const auto a = io::parse_case(case_path(name));
    const auto dir = scratch("bookshelf_rewrite_" + name);
    const auto b = io::parse_case(io::write_case(a, dir));
    REQUIRE(a.cells.size() == b.cells.size());
    REQUIRE(a.nets.size() == b.nets.size());
    for (std::size_t i = 0; i < a.cells.size(); ++i) {
      CHECK(a.cells[i].name == b.cells[i].name);
      CHECK(a.cells[i].pl_x == b.cells[i].pl_x);
      CHECK(a.cells[i].pl_y == b.cells[i].pl_y);
      CHECK(a.cells[i].width == b.cells[i].width);
      CHECK(a.cells[i].kind == b.cells[i].kind);
    }
    for (std::size_t n = 0; n < a.nets.size(); ++n) {
      CHECK(a.nets[n].weight == b.nets[n].weight);
      REQUIRE(a.nets[n].pins.size() == b.nets[n].pins.size());
      for (std::size_t k = 0; k < a.nets[n].pins.size(); ++k) {
        CHECK(a.nets[n].pins[k].cell == b.nets[n].pins[k].cell);
        CHECK(a.nets[n].pins[k].dx == b.nets[n].pins[k].dx);
        CHECK(a.nets[n].pins[k].dy == b.nets[n].pins[k].dy);
      }
    }
  }
}

TEST_CASE("synthetic generator") {
  io::SyntheticSpec spec;
  spec.clique_count = 2;
  spec.clique_size = 10;
  spec.intra_weight = 1.0;
  const auto a = io::generate_synthetic(spec, 7);
  const auto b = io::generate_synthetic(spec, 7);
  REQUIRE(a.cells.size() == b.cells.size());
  for (std::size_t i = 0; i < a.cells.size(); ++i) CHECK(a.cells[i].pl_x == b.cells[i].pl_x);
  CHECK(a.nets.size() == b.nets.size());

  // corner packing beats a uniform random placement
  const double packed = place::hpwl(a, io::clustered_corner_placement(a, spec));
  const double scattered = place::hpwl(a, random_placement(a, 3));
  CHECK(packed < scattered);

  io::SyntheticSpec empty = spec;
  empty.clique_size = 0;
  CHECK(code_of([&] { io::generate_synthetic(empty, 0); }) == ErrorCode::InvalidSpec);
  io::SyntheticSpec none = spec;
  none.topology = io::Topology::RandomNets;
  none.num_cells = 0;
  CHECK(code_of([&] { io::generate_synthetic(none, 0); }) == ErrorCode::InvalidSpec);
}

TEST_CASE("committed two-clique spec reproduces the committed case") {
  const auto spec = io::load_synthetic_spec(data_dir() / "cases" / "specs" / "two_clique.ini");
  const auto gen = io::generate_synthetic(spec, 7);
  const auto disk = io::parse_case(case_path("two_clique"));
  REQUIRE(gen.cells.size() == disk.cells.size());
  const auto a = io::placement_from_case(gen);
  const auto b = io::placement_from_case(disk);
  for (std::size_t i = 0; i < gen.cells.size(); ++i) {
    CHECK(gen.cells[i].name == disk.cells[i].name);
    CHECK(gen.cells[i].kind == disk.cells[i].kind);
  }
  CHECK(a.x == b.x);
  CHECK(a.y == b.y);
}
