#include <algorithm>
#include <cmath>
#include <cstdio>

#include "evoplace/error.hpp"
#include "evoplace/strategy.hpp"

namespace evoplace::dsl {

namespace {

std::size_t index_of(const std::vector<std::string>& names, std::string_view name) {
  const auto it = std::find(names.begin(), names.end(), name);
  if (it == names.end()) throw Error(ErrorCode::InvalidArgument, "no feature named '" + std::string(name) + "'");
  return static_cast<std::size_t>(it - names.begin());
}

double median(std::vector<double> v) {
  if (v.empty()) return 0.0;
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

}  // namespace

const std::vector<double>& FeatureTable::column(std::string_view name) const {
  return *columns[index_of(feature_names(), name)];
}

double FeatureTable::scalar(std::string_view name) const { return scalars[index_of(scalar_names(), name)]; }

FeatureTable extract_features(const io::BenchmarkCase& c) {
  const std::size_t n = c.cells.size();
  const io::LayoutRegion& r = c.region;
  std::vector<double> area(n), width(n), height(n), degree(n, 0.0), pins(n, 0.0), net_w(n, 0.0);
  std::vector<double> is_macro(n), is_fixed(n), nbr_x(n, 0.0), nbr_y(n, 0.0), nbr_count(n, 0.0), hint_x(n), hint_y(n);

  std::vector<double> movable_areas;
  double total_area = 0.0;
  double movable_area = 0.0;
  double macros = 0.0;
  for (const io::Cell& cell : c.cells) {
    const std::size_t i = cell.id;
    area[i] = cell.area();
    width[i] = cell.width;
    height[i] = cell.height;
    is_macro[i] = cell.kind == io::CellKind::Macro ? 1.0 : 0.0;
    is_fixed[i] = cell.kind == io::CellKind::Fixed ? 1.0 : 0.0;
    hint_x[i] = cell.has_position ? cell.pl_x : r.center_x();
    hint_y[i] = cell.has_position ? cell.pl_y : r.center_y();
    total_area += area[i];
    if (cell.movable()) {
      movable_area += area[i];
      movable_areas.push_back(area[i]);
    }
    macros += is_macro[i];
  }

  std::vector<std::size_t> seen(n, static_cast<std::size_t>(-1));
  for (const io::Net& net : c.nets) {
    for (const io::Pin& pin : net.pins) {
      pins[pin.cell] += 1.0;
      if (seen[pin.cell] == net.id) continue;
      seen[pin.cell] = net.id;
      degree[pin.cell] += 1.0;
      net_w[pin.cell] += net.weight;
    }
    // centroid of the fixed cells sharing a net, counted per incidence
    for (const io::Pin& fp : net.pins) {
      const io::Cell& fixed = c.cells[fp.cell];
      if (fixed.movable()) continue;
      for (const io::Pin& pin : net.pins) {
        if (pin.cell == fp.cell) continue;
        nbr_x[pin.cell] += fixed.pl_x;
        nbr_y[pin.cell] += fixed.pl_y;
        nbr_count[pin.cell] += 1.0;
      }
    }
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (nbr_count[i] > 0.0) {
      nbr_x[i] /= nbr_count[i];
      nbr_y[i] /= nbr_count[i];
    } else {
      nbr_x[i] = r.center_x();
      nbr_y[i] = r.center_y();
    }
  }

  FeatureTable f;
  f.cell_count = n;
  for (auto* v : {&area, &width, &height, &degree, &pins, &net_w, &is_macro, &is_fixed, &nbr_x, &nbr_y, &hint_x, &hint_y})
    f.columns.push_back(std::make_shared<const std::vector<double>>(std::move(*v)));
  const double region_area = r.width() * r.height();
  f.scalars = {r.xmin,
               r.ymin,
               r.xmax,
               r.ymax,
               r.center_x(),
               r.center_y(),
               r.width(),
               r.height(),
               std::max(r.width(), r.height()),
               total_area,
               movable_area,
               movable_area / region_area,
               static_cast<double>(n),
               static_cast<double>(c.movable_count()),
               static_cast<double>(c.nets.size()),
               median(movable_areas),
               macros};
  return f;
}

std::string feature_summary(const FeatureTable& f) {
  std::string out = "Feature table v" + std::to_string(FeatureTable::kVersion) + ".\nScalars:";
  char buf[96];
  const auto& names = scalar_names();
  for (std::size_t i = 0; i < names.size(); ++i) {
    std::snprintf(buf, sizeof buf, " %s=%.6g", names[i].c_str(), f.scalars[i]);
    out += buf;
  }
  out += "\nPer-cell vectors (min / mean / max):\n";
  const auto& cols = feature_names();
  for (std::size_t i = 0; i < cols.size(); ++i) {
    const auto& v = *f.columns[i];
    double lo = 0, hi = 0, mean = 0;
    if (!v.empty()) {
      lo = *std::min_element(v.begin(), v.end());
      hi = *std::max_element(v.begin(), v.end());
      for (double x : v) mean += x;
      mean /= static_cast<double>(v.size());
    }
    std::snprintf(buf, sizeof buf, "- %s: %.6g / %.6g / %.6g\n", cols[i].c_str(), lo, mean, hi);
    out += buf;
  }
  return out;
}

}  // namespace evoplace::dsl
