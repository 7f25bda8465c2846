#include "evoplace/bookshelf.hpp"

#include <algorithm>
#include <cerrno>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <unordered_map>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <json.hpp>

#include "evoplace/error.hpp"
#include "evoplace/rng.hpp"

namespace evoplace::io {

namespace fs = std::filesystem;

std::size_t BenchmarkCase::movable_count() const {
  return static_cast<std::size_t>(
      std::count_if(cells.begin(), cells.end(), [](const Cell& c) { return c.movable(); }));
}

double BenchmarkCase::movable_area() const {
  double a = 0.0;
  for (const Cell& c : cells)
    if (c.movable()) a += c.area();
  return a;
}

std::size_t BenchmarkCase::pin_count() const {
  std::size_t n = 0;
  for (const Net& net : nets) n += net.pins.size();
  return n;
}

namespace {

struct Line {
  int number = 0;
  std::vector<std::string> tokens;
};

// Splits into whitespace-delimited tokens; ':' is always its own token and
// '#' starts a comment.
std::vector<Line> read_lines(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::MissingFile, path.string());
  std::vector<Line> out;
  std::string raw;
  int number = 0;
  while (std::getline(in, raw)) {
    ++number;
    if (auto hash = raw.find('#'); hash != std::string::npos) raw.resize(hash);
    Line line{number, {}};
    std::string tok;
    auto flush = [&] {
      if (!tok.empty()) line.tokens.push_back(std::move(tok));
      tok.clear();
    };
    for (char ch : raw) {
      if (std::isspace(static_cast<unsigned char>(ch))) {
        flush();
      } else if (ch == ':') {
        flush();
        line.tokens.emplace_back(":");
      } else {
        tok.push_back(ch);
      }
    }
    flush();
    if (line.tokens.empty()) continue;
    if (line.tokens[0] == "UCLA") continue;
    out.push_back(std::move(line));
  }
  return out;
}

double to_double(const Line& line, std::size_t idx) {
  if (idx >= line.tokens.size()) throw Error(ErrorCode::SyntaxError, "expected a number", line.number);
  const std::string& tok = line.tokens[idx];
  char* end = nullptr;
  errno = 0;
  const double v = std::strtod(tok.c_str(), &end);
  if (end == tok.c_str() || *end != '\0' || errno == ERANGE)
    throw Error(ErrorCode::SyntaxError, "bad number '" + tok + "'", line.number);
  return v;
}

long double to_long_double(const Line& line, std::size_t idx) {
  if (idx >= line.tokens.size()) throw Error(ErrorCode::SyntaxError, "expected a number", line.number);
  const std::string& tok = line.tokens[idx];
  char* end = nullptr;
  errno = 0;
  const long double v = std::strtold(tok.c_str(), &end);
  if (end == tok.c_str() || *end != '\0' || errno == ERANGE)
    throw Error(ErrorCode::SyntaxError, "bad number '" + tok + "'", line.number);
  return v;
}

long to_int(const Line& line, std::size_t idx) {
  const double v = to_double(line, idx);
  if (v != std::floor(v) || v < 0)
    throw Error(ErrorCode::SyntaxError, "bad count '" + line.tokens[idx] + "'", line.number);
  return static_cast<long>(v);
}

// "Key : value" header records.
bool header_value(const Line& line, const char* key, long& out) {
  if (line.tokens.size() >= 3 && line.tokens[0] == key && line.tokens[1] == ":") {
    out = to_int(line, 2);
    return true;
  }
  return false;
}

struct AuxFiles {
  fs::path nodes, nets, wts, pl, scl;
};

AuxFiles read_aux(const fs::path& aux) {
  const auto lines = read_lines(aux);
  AuxFiles files;
  const fs::path dir = aux.parent_path();
  for (const Line& line : lines) {
    for (const std::string& tok : line.tokens) {
      const fs::path p(tok);
      const std::string ext = p.extension().string();
      if (ext == ".nodes") files.nodes = dir / p;
      else if (ext == ".nets") files.nets = dir / p;
      else if (ext == ".wts") files.wts = dir / p;
      else if (ext == ".pl") files.pl = dir / p;
      else if (ext == ".scl") files.scl = dir / p;
    }
  }
  auto require = [&](const fs::path& p, const char* what) {
    if (p.empty()) throw Error(ErrorCode::MissingFile, aux.string() + " lists no " + what + " file");
    if (!fs::exists(p)) throw Error(ErrorCode::MissingFile, p.string());
  };
  require(files.nodes, ".nodes");
  require(files.nets, ".nets");
  require(files.pl, ".pl");
  require(files.scl, ".scl");
  if (!files.wts.empty() && !fs::exists(files.wts)) throw Error(ErrorCode::MissingFile, files.wts.string());
  return files;
}

// Zero-size I/O objects appear in some benchmark variants; give them a
// negligible extent so every cell has a positive bounding box.
constexpr double kMinTerminalExtent = 1e-6;

void read_nodes(const fs::path& path, BenchmarkCase& c, std::unordered_map<std::string, std::size_t>& index) {
  long declared_nodes = -1;
  long declared_terminals = -1;
  long terminals = 0;
  for (const Line& line : read_lines(path)) {
    long v = 0;
    if (header_value(line, "NumNodes", v)) {
      declared_nodes = v;
      continue;
    }
    if (header_value(line, "NumTerminals", v)) {
      declared_terminals = v;
      continue;
    }
    if (line.tokens.size() < 3)
      throw Error(ErrorCode::SyntaxError, "node record needs name width height", line.number);
    Cell cell;
    cell.id = c.cells.size();
    cell.name = line.tokens[0];
    cell.width = to_double(line, 1);
    cell.height = to_double(line, 2);
    bool terminal = false;
    if (line.tokens.size() >= 4) {
      const std::string& tag = line.tokens[3];
      if (tag == "terminal" || tag == "terminal_NI") terminal = true;
      else throw Error(ErrorCode::SyntaxError, "unexpected token '" + tag + "'", line.number);
    }
    if (terminal) {
      ++terminals;
      cell.kind = CellKind::Fixed;
      cell.width = std::max(cell.width, kMinTerminalExtent);
      cell.height = std::max(cell.height, kMinTerminalExtent);
    }
    if (!(cell.width > 0.0) || !(cell.height > 0.0))
      throw Error(ErrorCode::SyntaxError, "non-positive size for '" + cell.name + "'", line.number);
    if (!index.emplace(cell.name, cell.id).second)
      throw Error(ErrorCode::SyntaxError, "duplicate node '" + cell.name + "'", line.number);
    c.cells.push_back(std::move(cell));
  }
  if (declared_nodes >= 0 && static_cast<std::size_t>(declared_nodes) != c.cells.size())
    throw Error(ErrorCode::SyntaxError, "NumNodes says " + std::to_string(declared_nodes) + " but file has " +
                                            std::to_string(c.cells.size()));
  if (declared_terminals >= 0 && declared_terminals != terminals)
    throw Error(ErrorCode::SyntaxError, "NumTerminals mismatch");
}

void read_nets(const fs::path& path, BenchmarkCase& c, const std::unordered_map<std::string, std::size_t>& index,
               std::unordered_map<std::string, std::size_t>& net_index) {
  const auto lines = read_lines(path);
  long declared_nets = -1;
  long declared_pins = -1;
  std::size_t i = 0;
  while (i < lines.size()) {
    const Line& line = lines[i];
    long v = 0;
    if (header_value(line, "NumNets", v)) {
      declared_nets = v;
      ++i;
      continue;
    }
    if (header_value(line, "NumPins", v)) {
      declared_pins = v;
      ++i;
      continue;
    }
    if (line.tokens.size() < 3 || line.tokens[0] != "NetDegree" || line.tokens[1] != ":")
      throw Error(ErrorCode::SyntaxError, "expected NetDegree, got '" + line.tokens[0] + "'", line.number);
    const long degree = to_int(line, 2);
    if (degree < 1) throw Error(ErrorCode::SyntaxError, "net with no pins", line.number);
    Net net;
    net.id = c.nets.size();
    net.name = line.tokens.size() >= 4 ? line.tokens[3] : "net" + std::to_string(net.id);
    ++i;
    for (long p = 0; p < degree; ++p, ++i) {
      if (i >= lines.size()) throw Error(ErrorCode::SyntaxError, "truncated net '" + net.name + "'", line.number);
      const Line& pl = lines[i];
      auto it = index.find(pl.tokens[0]);
      if (it == index.end())
        throw Error(ErrorCode::DanglingPinReference, "undeclared cell '" + pl.tokens[0] + "'", pl.number);
      Pin pin;
      pin.cell = it->second;
      // name [I|O|B] [: dx dy]
      auto colon = std::find(pl.tokens.begin(), pl.tokens.end(), ":");
      if (colon != pl.tokens.end()) {
        const auto at = static_cast<std::size_t>(colon - pl.tokens.begin());
        pin.dx = to_double(pl, at + 1);
        pin.dy = to_double(pl, at + 2);
      }
      net.pins.push_back(pin);
    }
    if (!net_index.emplace(net.name, net.id).second)
      throw Error(ErrorCode::SyntaxError, "duplicate net '" + net.name + "'", line.number);
    c.nets.push_back(std::move(net));
  }
  if (declared_nets >= 0 && static_cast<std::size_t>(declared_nets) != c.nets.size())
    throw Error(ErrorCode::SyntaxError, "NumNets mismatch");
  if (declared_pins >= 0 && static_cast<std::size_t>(declared_pins) != c.pin_count())
    throw Error(ErrorCode::SyntaxError, "NumPins mismatch");
}

void read_wts(const fs::path& path, BenchmarkCase& c, const std::unordered_map<std::string, std::size_t>& net_index) {
  for (const Line& line : read_lines(path)) {
    if (line.tokens.size() < 2) throw Error(ErrorCode::SyntaxError, "weight record needs name value", line.number);
    auto it = net_index.find(line.tokens[0]);
    if (it == net_index.end()) throw Error(ErrorCode::SyntaxError, "unknown net '" + line.tokens[0] + "'", line.number);
    const double w = to_double(line, 1);
    if (!(w >= 0.0) || !std::isfinite(w)) throw Error(ErrorCode::SyntaxError, "bad net weight", line.number);
    c.nets[it->second].weight = w;
  }
}

void read_pl(const fs::path& path, BenchmarkCase& c, const std::unordered_map<std::string, std::size_t>& index) {
  for (const Line& line : read_lines(path)) {
    if (line.tokens.size() < 3) throw Error(ErrorCode::SyntaxError, "placement record needs name x y", line.number);
    auto it = index.find(line.tokens[0]);
    if (it == index.end()) throw Error(ErrorCode::SyntaxError, "unknown node '" + line.tokens[0] + "'", line.number);
    Cell& cell = c.cells[it->second];
    // Lower-left corner to center in extended precision; write_placement
    // relies on this to make the round trip exact.
    const long double llx = to_long_double(line, 1);
    const long double lly = to_long_double(line, 2);
    cell.pl_x = static_cast<double>(llx + static_cast<long double>(0.5 * cell.width));
    cell.pl_y = static_cast<double>(lly + static_cast<long double>(0.5 * cell.height));
    cell.has_position = true;
    for (std::size_t t = 3; t < line.tokens.size(); ++t) {
      if (line.tokens[t] == "/FIXED" || line.tokens[t] == "/FIXED_NI") cell.kind = CellKind::Fixed;
    }
  }
}

LayoutRegion read_scl(const fs::path& path) {
  LayoutRegion r{std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity(),
                 -std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity()};
  const auto lines = read_lines(path);
  bool in_row = false;
  double coord = 0, height = 0, sitewidth = 1, origin = 0, sites = 0;
  int rows = 0;
  for (const Line& line : lines) {
    const std::string& key = line.tokens[0];
    if (key == "NumRows") continue;
    if (key == "CoreRow") {
      in_row = true;
      coord = height = origin = sites = 0;
      sitewidth = 1;
      continue;
    }
    if (key == "End") {
      if (!in_row) throw Error(ErrorCode::SyntaxError, "End outside CoreRow", line.number);
      in_row = false;
      ++rows;
      r.xmin = std::min(r.xmin, origin);
      r.xmax = std::max(r.xmax, origin + sites * sitewidth);
      r.ymin = std::min(r.ymin, coord);
      r.ymax = std::max(r.ymax, coord + height);
      continue;
    }
    if (!in_row) throw Error(ErrorCode::SyntaxError, "unexpected token '" + key + "'", line.number);
    if (key == "Coordinate") coord = to_double(line, 2);
    else if (key == "Height") height = to_double(line, 2);
    else if (key == "Sitewidth") sitewidth = to_double(line, 2);
    else if (key == "SubrowOrigin") {
      origin = to_double(line, 2);
      // "SubrowOrigin : x NumSites : n" on one line
      if (line.tokens.size() >= 6 && line.tokens[3] == "NumSites") sites = to_double(line, 5);
    } else if (key == "NumSites") sites = to_double(line, 2);
    // Sitespacing, Siteorient, Sitesymmetry: not needed for global placement
  }
  if (in_row) throw Error(ErrorCode::SyntaxError, "unterminated CoreRow in " + path.string());
  if (rows == 0) throw Error(ErrorCode::InvalidCase, "no rows in " + path.string());
  return r;
}

}  // namespace

void tag_macros(BenchmarkCase& c, double macro_area_factor) {
  std::vector<double> areas;
  for (const Cell& cell : c.cells)
    if (cell.movable()) areas.push_back(cell.area());
  if (areas.empty()) return;
  std::sort(areas.begin(), areas.end());
  const std::size_t n = areas.size();
  const double median = n % 2 ? areas[n / 2] : 0.5 * (areas[n / 2 - 1] + areas[n / 2]);
  for (Cell& cell : c.cells) {
    if (!cell.movable()) continue;
    cell.kind = cell.area() > macro_area_factor * median ? CellKind::Macro : CellKind::Movable;
  }
}

void validate_case(const BenchmarkCase& c) {
  if (c.cells.empty()) throw Error(ErrorCode::EmptyNetlist, "case '" + c.name + "' has no cells");
  if (c.movable_count() == 0) throw Error(ErrorCode::EmptyNetlist, "case '" + c.name + "' has no movable cells");
  if (c.nets.empty()) throw Error(ErrorCode::EmptyNetlist, "case '" + c.name + "' has no nets");
  const LayoutRegion& r = c.region;
  if (!(r.xmax > r.xmin) || !(r.ymax > r.ymin) || !std::isfinite(r.xmin) || !std::isfinite(r.xmax) ||
      !std::isfinite(r.ymin) || !std::isfinite(r.ymax))
    throw Error(ErrorCode::InvalidCase, "degenerate layout region");
  std::unordered_map<std::string, std::size_t> names;
  for (std::size_t i = 0; i < c.cells.size(); ++i) {
    const Cell& cell = c.cells[i];
    if (cell.id != i) throw Error(ErrorCode::InvalidCase, "cell ids must equal positions");
    if (!(cell.width > 0.0) || !(cell.height > 0.0) || !std::isfinite(cell.area()))
      throw Error(ErrorCode::InvalidCase, "cell '" + cell.name + "' has non-positive size");
    if (!names.emplace(cell.name, i).second) throw Error(ErrorCode::InvalidCase, "duplicate cell '" + cell.name + "'");
    if (cell.kind == CellKind::Fixed &&
        (!cell.has_position || !std::isfinite(cell.pl_x) || !std::isfinite(cell.pl_y)))
      throw Error(ErrorCode::InvalidCase, "fixed cell '" + cell.name + "' has no position");
  }
  for (std::size_t n = 0; n < c.nets.size(); ++n) {
    const Net& net = c.nets[n];
    if (net.id != n) throw Error(ErrorCode::InvalidCase, "net ids must equal positions");
    if (net.pins.empty()) throw Error(ErrorCode::InvalidCase, "net '" + net.name + "' has no pins");
    if (!(net.weight >= 0.0) || !std::isfinite(net.weight))
      throw Error(ErrorCode::InvalidCase, "net '" + net.name + "' has a bad weight");
    for (const Pin& pin : net.pins) {
      if (pin.cell >= c.cells.size())
        throw Error(ErrorCode::DanglingPinReference, "net '" + net.name + "' references cell " + std::to_string(pin.cell));
      const Cell& cell = c.cells[pin.cell];
      const double tx = 0.5 * cell.width * (1.0 + 1e-9) + 1e-9;
      const double ty = 0.5 * cell.height * (1.0 + 1e-9) + 1e-9;
      if (std::abs(pin.dx) > tx || std::abs(pin.dy) > ty)
        throw Error(ErrorCode::InvalidCase, "pin of net '" + net.name + "' lies outside cell '" + cell.name + "'");
    }
  }
}

BenchmarkCase parse_case(const fs::path& aux_path, const ParseOptions& options) {
  if (!fs::exists(aux_path)) throw Error(ErrorCode::MissingFile, aux_path.string());
  const AuxFiles files = read_aux(aux_path);
  BenchmarkCase c;
  c.name = aux_path.stem().string();
  c.source_paths = {{"aux", aux_path}, {"nodes", files.nodes}, {"nets", files.nets}, {"pl", files.pl}, {"scl", files.scl}};
  if (!files.wts.empty()) c.source_paths["wts"] = files.wts;

  std::unordered_map<std::string, std::size_t> index;
  std::unordered_map<std::string, std::size_t> net_index;
  read_nodes(files.nodes, c, index);
  read_nets(files.nets, c, index, net_index);
  if (!files.wts.empty()) read_wts(files.wts, c, net_index);
  read_pl(files.pl, c, index);
  c.region = read_scl(files.scl);

  if (options.unfix_terminals) {
    for (Cell& cell : c.cells) cell.kind = CellKind::Movable;
  }
  tag_macros(c, options.macro_area_factor);
  validate_case(c);
  return c;
}

namespace {

// Enough digits for a 64-bit-mantissa long double to survive strtold.
std::string format_ld(long double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.21Lg", v);
  return buf;
}

std::string format_d(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::ofstream open_out(const fs::path& path) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + path.string());
  return out;
}

void write_pl_lines(std::ostream& out, const BenchmarkCase& c, const std::vector<double>& x, const std::vector<double>& y) {
  out << "UCLA pl 1.0\n\n";
  for (const Cell& cell : c.cells) {
    const long double llx = static_cast<long double>(x[cell.id]) - static_cast<long double>(0.5 * cell.width);
    const long double lly = static_cast<long double>(y[cell.id]) - static_cast<long double>(0.5 * cell.height);
    out << cell.name << '\t' << format_ld(llx) << '\t' << format_ld(lly) << "\t: N";
    if (cell.kind == CellKind::Fixed) out << " /FIXED";
    out << '\n';
  }
}

}  // namespace

void write_placement(const BenchmarkCase& c, const place::PlacementState& placement, const fs::path& path) {
  if (placement.x.size() != c.cells.size() || placement.y.size() != c.cells.size())
    throw Error(ErrorCode::InvalidArgument, "placement size does not match cell count");
  for (std::size_t i = 0; i < c.cells.size(); ++i) {
    if (!std::isfinite(placement.x[i]) || !std::isfinite(placement.y[i]))
      throw Error(ErrorCode::NonFiniteCoordinate, "cell '" + c.cells[i].name + "'");
  }
  std::ofstream out = open_out(path);
  write_pl_lines(out, c, placement.x, placement.y);
  if (!out) throw Error(ErrorCode::IoError, "write failed: " + path.string());
}

place::PlacementState placement_from_case(const BenchmarkCase& c) {
  place::PlacementState s;
  s.x.resize(c.cells.size());
  s.y.resize(c.cells.size());
  for (const Cell& cell : c.cells) {
    s.x[cell.id] = cell.has_position ? cell.pl_x : c.region.center_x();
    s.y[cell.id] = cell.has_position ? cell.pl_y : c.region.center_y();
  }
  return s;
}

fs::path write_case(const BenchmarkCase& c, const fs::path& dir) {
  fs::create_directories(dir);
  const std::string base = c.name;
  const bool weighted = std::any_of(c.nets.begin(), c.nets.end(), [](const Net& n) { return n.weight != 1.0; });
  {
    std::ofstream out = open_out(dir / (base + ".aux"));
    out << "RowBasedPlacement : " << base << ".nodes " << base << ".nets ";
    if (weighted) out << base << ".wts ";
    out << base << ".pl " << base << ".scl\n";
  }
  {
    std::ofstream out = open_out(dir / (base + ".nodes"));
    std::size_t terminals = 0;
    for (const Cell& cell : c.cells) terminals += cell.kind == CellKind::Fixed;
    out << "UCLA nodes 1.0\n\nNumNodes : " << c.cells.size() << "\nNumTerminals : " << terminals << "\n\n";
    for (const Cell& cell : c.cells) {
      out << '\t' << cell.name << '\t' << format_d(cell.width) << '\t' << format_d(cell.height);
      if (cell.kind == CellKind::Fixed) out << "\tterminal";
      out << '\n';
    }
  }
  {
    std::ofstream out = open_out(dir / (base + ".nets"));
    out << "UCLA nets 1.0\n\nNumNets : " << c.nets.size() << "\nNumPins : " << c.pin_count() << "\n\n";
    for (const Net& net : c.nets) {
      out << "NetDegree : " << net.pins.size() << "   " << net.name << '\n';
      for (const Pin& pin : net.pins)
        out << '\t' << c.cells[pin.cell].name << "\tB : " << format_d(pin.dx) << '\t' << format_d(pin.dy) << '\n';
    }
  }
  if (weighted) {
    std::ofstream out = open_out(dir / (base + ".wts"));
    out << "UCLA wts 1.0\n\n";
    for (const Net& net : c.nets) out << net.name << '\t' << format_d(net.weight) << '\n';
  }
  {
    std::ofstream out = open_out(dir / (base + ".pl"));
    const place::PlacementState s = placement_from_case(c);
    write_pl_lines(out, c, s.x, s.y);
  }
  {
    std::ofstream out = open_out(dir / (base + ".scl"));
    const LayoutRegion& r = c.region;
    const double w = r.width();
    const double h = r.height();
    const bool integral_w = w == std::floor(w) && w < 1e9;
    const double sitewidth = integral_w ? 1.0 : w;
    const double sites = integral_w ? w : 1.0;
    const bool unit_rows = h == std::floor(h) && h <= 10000;
    const long rows = unit_rows ? static_cast<long>(h) : 1;
    const double row_h = unit_rows ? 1.0 : h;
    out << "UCLA scl 1.0\n\nNumRows : " << rows << "\n\n";
    for (long k = 0; k < rows; ++k) {
      out << "CoreRow Horizontal\n"
          << "  Coordinate    :   " << format_d(r.ymin + static_cast<double>(k) * row_h) << '\n'
          << "  Height        :   " << format_d(row_h) << '\n'
          << "  Sitewidth     :   " << format_d(sitewidth) << '\n'
          << "  Sitespacing   :   " << format_d(sitewidth) << '\n'
          << "  Siteorient    :   1\n  Sitesymmetry  :   1\n"
          << "  SubrowOrigin  :   " << format_d(r.xmin) << "\tNumSites  :  " << format_d(sites) << '\n'
          << "End\n";
    }
  }
  return dir / (base + ".aux");
}

// ---------------------------------------------------------------------------

int SyntheticSpec::movable_cell_count() const {
  const int base = topology == Topology::ClusteredCliques ? clique_count * clique_size : num_cells;
  return base + macro_count;
}

SyntheticSpec load_synthetic_spec(const fs::path& path) {
  if (!fs::exists(path)) throw Error(ErrorCode::MissingFile, path.string());
  boost::property_tree::ptree tree;
  try {
    boost::property_tree::read_ini(path.string(), tree);
  } catch (const boost::property_tree::ini_parser_error& e) {
    throw Error(ErrorCode::InvalidSpec, e.what(), static_cast<int>(e.line()));
  }
  const boost::property_tree::ptree& root =
      tree.get_child_optional("synthetic") ? tree.get_child("synthetic") : tree;
  SyntheticSpec s;
  for (const auto& [key, node] : root) {
    if (!node.empty()) continue;  // a section other than [synthetic]
    const std::string value = node.data();
    try {
      if (key == "name") s.name = value;
      else if (key == "topology") {
        if (value == "clustered_cliques") s.topology = Topology::ClusteredCliques;
        else if (value == "random") s.topology = Topology::RandomNets;
        else throw Error(ErrorCode::InvalidSpec, "unknown topology '" + value + "'");
      } else if (key == "clique_count") s.clique_count = std::stoi(value);
      else if (key == "clique_size") s.clique_size = std::stoi(value);
      else if (key == "intra_weight") s.intra_weight = std::stod(value);
      else if (key == "pads_per_clique") s.pads_per_clique = std::stoi(value);
      else if (key == "pad_weight") s.pad_weight = std::stod(value);
      else if (key == "inter_clique_nets") s.inter_clique_nets = std::stoi(value);
      else if (key == "num_cells") s.num_cells = std::stoi(value);
      else if (key == "num_nets") s.num_nets = std::stoi(value);
      else if (key == "max_net_degree") s.max_net_degree = std::stoi(value);
      else if (key == "num_pads") s.num_pads = std::stoi(value);
      else if (key == "utilization") s.utilization = std::stod(value);
      else if (key == "cell_width") s.cell_width = std::stod(value);
      else if (key == "cell_height") s.cell_height = std::stod(value);
      else if (key == "width_levels") s.width_levels = std::stoi(value);
      else if (key == "macro_count") s.macro_count = std::stoi(value);
      else if (key == "macro_scale") s.macro_scale = std::stod(value);
      else throw Error(ErrorCode::InvalidSpec, "unknown key '" + key + "'");
    } catch (const std::logic_error&) {
      throw Error(ErrorCode::InvalidSpec, "bad value for '" + key + "': " + value);
    }
  }
  return s;
}

namespace {

void check_spec(const SyntheticSpec& s) {
  auto fail = [](const std::string& why) { throw Error(ErrorCode::InvalidSpec, why); };
  if (s.movable_cell_count() < 2) fail("need at least 2 movable cells");
  if (s.topology == Topology::ClusteredCliques) {
    if (s.clique_count < 1 || s.clique_size < 1) fail("clique_count and clique_size must be positive");
    if (s.pads_per_clique < 0 || s.inter_clique_nets < 0) fail("negative pad/net count");
    if (!(s.intra_weight >= 0.0) || !(s.pad_weight >= 0.0)) fail("net weights must be nonnegative");
  } else {
    if (s.num_cells < 2) fail("num_cells must be at least 2");
    if (s.num_nets < 0 || s.num_pads < 0) fail("negative net/pad count");
    if (s.max_net_degree < 2) fail("max_net_degree must be at least 2");
  }
  if (!(s.utilization > 0.0 && s.utilization <= 1.0)) fail("utilization must be in (0, 1]");
  if (!(s.cell_width > 0.0) || !(s.cell_height > 0.0)) fail("cell size must be positive");
  if (s.width_levels < 1) fail("width_levels must be positive");
  if (s.macro_count < 0 || !(s.macro_scale >= 1.0)) fail("bad macro settings");
}

struct Builder {
  BenchmarkCase c;

  std::size_t add_cell(std::string name, double w, double h, CellKind kind) {
    Cell cell;
    cell.id = c.cells.size();
    cell.name = std::move(name);
    cell.width = w;
    cell.height = h;
    cell.kind = kind;
    c.cells.push_back(std::move(cell));
    return c.cells.back().id;
  }

  void add_net(std::string name, const std::vector<std::size_t>& cells, double weight) {
    Net net;
    net.id = c.nets.size();
    net.name = std::move(name);
    net.weight = weight;
    for (std::size_t id : cells) net.pins.push_back(Pin{id, 0.0, 0.0});
    c.nets.push_back(std::move(net));
  }

  void place_fixed(std::size_t id, double cx, double cy) {
    c.cells[id].pl_x = cx;
    c.cells[id].pl_y = cy;
    c.cells[id].has_position = true;
  }
};

// Corner k (mod 4): bottom-left, top-right, top-left, bottom-right.
std::pair<double, double> corner(const LayoutRegion& r, int k) {
  switch (k % 4) {
    case 0: return {r.xmin, r.ymin};
    case 1: return {r.xmax, r.ymax};
    case 2: return {r.xmin, r.ymax};
    default: return {r.xmax, r.ymin};
  }
}

std::pair<double, double> corner_inward(int k) {
  switch (k % 4) {
    case 0: return {1.0, 1.0};
    case 1: return {-1.0, -1.0};
    case 2: return {1.0, -1.0};
    default: return {-1.0, 1.0};
  }
}

}  // namespace

BenchmarkCase generate_synthetic(const SyntheticSpec& spec, std::uint64_t seed) {
  check_spec(spec);
  Rng rng(derive_seed(seed, {fnv1a("generate_synthetic")}));
  Builder b;
  b.c.name = spec.name;

  auto draw_width = [&] {
    return spec.cell_width * static_cast<double>(1 + rng.below(static_cast<std::size_t>(spec.width_levels)));
  };

  std::vector<std::vector<std::size_t>> cliques;
  std::vector<std::size_t> movable;
  if (spec.topology == Topology::ClusteredCliques) {
    for (int k = 0; k < spec.clique_count; ++k) {
      cliques.emplace_back();
      for (int i = 0; i < spec.clique_size; ++i) {
        const std::size_t id = b.add_cell("c" + std::to_string(k) + "_" + std::to_string(i), draw_width(),
                                          spec.cell_height, CellKind::Movable);
        cliques.back().push_back(id);
        movable.push_back(id);
      }
    }
  } else {
    for (int i = 0; i < spec.num_cells; ++i)
      movable.push_back(b.add_cell("o" + std::to_string(i), draw_width(), spec.cell_height, CellKind::Movable));
  }
  std::vector<std::size_t> macros;
  for (int m = 0; m < spec.macro_count; ++m) {
    const double side = spec.macro_scale * spec.cell_height;
    macros.push_back(b.add_cell("m" + std::to_string(m), side, side, CellKind::Movable));
  }

  double area = 0.0;
  for (const Cell& cell : b.c.cells) area += cell.area();
  const double side = std::ceil(std::sqrt(area / spec.utilization)) + 2.0 * spec.cell_height;
  b.c.region = LayoutRegion{0.0, 0.0, side, side};
  const double pad = spec.cell_height;

  if (spec.topology == Topology::ClusteredCliques) {
    for (int k = 0; k < spec.clique_count; ++k) {
      const auto& members = cliques[static_cast<std::size_t>(k)];
      for (std::size_t i = 0; i < members.size(); ++i)
        for (std::size_t j = i + 1; j < members.size(); ++j)
          b.add_net("q" + std::to_string(k) + "_" + std::to_string(i) + "_" + std::to_string(j),
                    {members[i], members[j]}, spec.intra_weight);
      const auto [cx, cy] = corner(b.c.region, k);
      const auto [ix, iy] = corner_inward(k);
      const int lap = k / 4;  // more than four cliques share corners, stepped inward
      for (int j = 0; j < spec.pads_per_clique; ++j) {
        const std::size_t id = b.add_cell("p" + std::to_string(k) + "_" + std::to_string(j), pad, pad, CellKind::Fixed);
        const double along = 0.5 * pad + static_cast<double>(j / 2 + 2 * lap) * pad;
        const double px = j % 2 == 0 ? cx + ix * along : cx + ix * 0.5 * pad;
        const double py = j % 2 == 0 ? cy + iy * 0.5 * pad : cy + iy * along;
        b.place_fixed(id, px, py);
        std::vector<std::size_t> pins{id};
        for (std::size_t i = static_cast<std::size_t>(j); i < members.size();
             i += static_cast<std::size_t>(spec.pads_per_clique))
          pins.push_back(members[i]);
        b.add_net("pn" + std::to_string(k) + "_" + std::to_string(j), pins, spec.pad_weight);
      }
    }
    if (spec.clique_count > 1) {
      for (int e = 0; e < spec.inter_clique_nets; ++e) {
        const std::size_t k1 = rng.below(cliques.size());
        std::size_t k2 = rng.below(cliques.size() - 1);
        if (k2 >= k1) ++k2;
        const std::size_t a = cliques[k1][rng.below(cliques[k1].size())];
        const std::size_t z = cliques[k2][rng.below(cliques[k2].size())];
        b.add_net("x" + std::to_string(e), {a, z}, 1.0);
      }
    }
  } else {
    std::vector<std::size_t> pads;
    const double perimeter = 4.0 * side;
    for (int p = 0; p < spec.num_pads; ++p) {
      const std::size_t id = b.add_cell("p" + std::to_string(p), pad, pad, CellKind::Fixed);
      const double t = perimeter * (static_cast<double>(p) + 0.5) / static_cast<double>(spec.num_pads);
      double px = 0, py = 0;
      if (t < side) { px = t; py = 0.5 * pad; }
      else if (t < 2 * side) { px = side - 0.5 * pad; py = t - side; }
      else if (t < 3 * side) { px = 3 * side - t; py = side - 0.5 * pad; }
      else { px = 0.5 * pad; py = 4 * side - t; }
      px = std::clamp(px, 0.5 * pad, side - 0.5 * pad);
      py = std::clamp(py, 0.5 * pad, side - 0.5 * pad);
      b.place_fixed(id, px, py);
      pads.push_back(id);
    }
    for (int n = 0; n < spec.num_nets; ++n) {
      const std::size_t degree = 2 + rng.below(static_cast<std::size_t>(spec.max_net_degree - 1));
      std::vector<std::size_t> pins;
      while (pins.size() < std::min(degree, movable.size())) {
        const std::size_t cand = movable[rng.below(movable.size())];
        if (std::find(pins.begin(), pins.end(), cand) == pins.end()) pins.push_back(cand);
      }
      if (!pads.empty() && rng.uniform() < 0.2) pins.push_back(pads[rng.below(pads.size())]);
      b.add_net("n" + std::to_string(n), pins, 1.0);
    }
  }
  for (std::size_t m = 0; m < macros.size(); ++m) {
    for (int e = 0; e < 3; ++e)
      b.add_net("mn" + std::to_string(m) + "_" + std::to_string(e), {macros[m], movable[rng.below(movable.size())]}, 1.0);
  }
  tag_macros(b.c);
  validate_case(b.c);
  return std::move(b.c);
}

CaseManifest manifest_of(const BenchmarkCase& c) {
  CaseManifest m;
  m.name = c.name;
  m.num_cells = c.cells.size();
  m.num_movable = c.movable_count();
  m.num_fixed = m.num_cells - m.num_movable;
  m.num_macros = static_cast<std::size_t>(
      std::count_if(c.cells.begin(), c.cells.end(), [](const Cell& cell) { return cell.kind == CellKind::Macro; }));
  m.num_nets = c.nets.size();
  m.num_pins = c.pin_count();
  m.region = c.region;
  return m;
}

void write_manifest(const CaseManifest& m, const fs::path& path) {
  nlohmann::json j = {{"name", m.name},
                      {"num_cells", m.num_cells},
                      {"num_movable", m.num_movable},
                      {"num_fixed", m.num_fixed},
                      {"num_macros", m.num_macros},
                      {"num_nets", m.num_nets},
                      {"num_pins", m.num_pins},
                      {"region", {m.region.xmin, m.region.ymin, m.region.xmax, m.region.ymax}}};
  std::ofstream out = open_out(path);
  out << j.dump(2) << '\n';
}

CaseManifest read_manifest(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::MissingFile, path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::SyntaxError, e.what());
  }
  CaseManifest m;
  m.name = j.at("name").get<std::string>();
  m.num_cells = j.at("num_cells");
  m.num_movable = j.at("num_movable");
  m.num_fixed = j.at("num_fixed");
  m.num_macros = j.at("num_macros");
  m.num_nets = j.at("num_nets");
  m.num_pins = j.at("num_pins");
  const auto& r = j.at("region");
  m.region = LayoutRegion{r[0], r[1], r[2], r[3]};
  return m;
}

place::PlacementState clustered_corner_placement(const BenchmarkCase& c, const SyntheticSpec& spec) {
  place::PlacementState s = placement_from_case(c);
  if (spec.topology != Topology::ClusteredCliques) return s;
  std::unordered_map<std::string, std::size_t> index;
  for (const Cell& cell : c.cells) index.emplace(cell.name, cell.id);
  const int cols = static_cast<int>(std::ceil(std::sqrt(static_cast<double>(spec.clique_size))));
  const double pitch_x = spec.cell_width * static_cast<double>(spec.width_levels);
  const double pitch_y = spec.cell_height;
  for (int k = 0; k < spec.clique_count; ++k) {
    const auto [cx, cy] = corner(c.region, k);
    const auto [ix, iy] = corner_inward(k);
    for (int i = 0; i < spec.clique_size; ++i) {
      const auto it = index.find("c" + std::to_string(k) + "_" + std::to_string(i));
      if (it == index.end()) continue;
      const double gx = 1.5 + static_cast<double>(i % cols);
      const double gy = 1.5 + static_cast<double>(i / cols);
      s.x[it->second] = cx + ix * gx * pitch_x;
      s.y[it->second] = cy + iy * gy * pitch_y;
    }
  }
  return s;
}

}  // namespace evoplace::io
