#include <algorithm>
#include <cmath>
#include <numeric>

#include "evoplace/error.hpp"
#include "evoplace/objective.hpp"
#include "evoplace/optimizer.hpp"
#include "evoplace/rng.hpp"
#include "evoplace/strategy.hpp"

namespace evoplace::dsl {

namespace {

struct Value {
  bool is_vector = false;
  double scalar = 0.0;
  std::shared_ptr<const std::vector<double>> vec;

  double at(std::size_t i) const { return is_vector ? (*vec)[i] : scalar; }
};

Value make_scalar(double v) {
  Value out;
  out.scalar = v;
  return out;
}

Value make_vector(std::vector<double> v) {
  Value out;
  out.is_vector = true;
  out.vec = std::make_shared<const std::vector<double>>(std::move(v));
  return out;
}

[[noreturn]] void runtime_error(const Expr& e, const std::string& why) {
  throw Error(ErrorCode::StrategyRuntimeError, why + " in '" + print_expr(e) + "'", e.line, e.col);
}

template <class F>
Value map1(const Value& a, std::size_t n, F f) {
  if (!a.is_vector) return make_scalar(f(a.scalar));
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) out[i] = f((*a.vec)[i]);
  return make_vector(std::move(out));
}

template <class F>
Value map2(const Value& a, const Value& b, std::size_t n, F f) {
  if (!a.is_vector && !b.is_vector) return make_scalar(f(a.scalar, b.scalar));
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) out[i] = f(a.at(i), b.at(i));
  return make_vector(std::move(out));
}

template <class F>
Value map3(const Value& a, const Value& b, const Value& c, std::size_t n, F f) {
  if (!a.is_vector && !b.is_vector && !c.is_vector) return make_scalar(f(a.scalar, b.scalar, c.scalar));
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) out[i] = f(a.at(i), b.at(i), c.at(i));
  return make_vector(std::move(out));
}

std::vector<double> as_vector(const Value& v, std::size_t n) {
  if (v.is_vector) return *v.vec;
  return std::vector<double>(n, v.scalar);
}

// Lloyd iterations on a line. Labels are cluster ranks by centroid.
std::vector<double> kmeans1d(const std::vector<double>& v, int k, std::uint64_t seed) {
  const std::size_t n = v.size();
  if (n == 0) return {};
  std::vector<double> distinct(v);
  std::sort(distinct.begin(), distinct.end());
  distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
  const std::size_t kk = std::min<std::size_t>(static_cast<std::size_t>(k), distinct.size());
  // seeded choice of kk distinct values as starting centroids
  Rng rng(derive_seed(seed, {fnv1a("kmeans1d"), static_cast<std::uint64_t>(k)}));
  std::vector<std::size_t> pick(distinct.size());
  std::iota(pick.begin(), pick.end(), 0);
  for (std::size_t i = 0; i < kk; ++i) {
    const std::size_t j = i + rng.below(pick.size() - i);
    std::swap(pick[i], pick[j]);
  }
  std::vector<double> centroid(kk);
  for (std::size_t i = 0; i < kk; ++i) centroid[i] = distinct[pick[i]];
  std::sort(centroid.begin(), centroid.end());

  std::vector<std::size_t> label(n, 0);
  std::vector<double> sum(kk);
  std::vector<std::size_t> count(kk);
  for (int it = 0; it < kKmeansIterations; ++it) {
    for (std::size_t i = 0; i < n; ++i) {
      std::size_t best = 0;
      double best_d = std::abs(v[i] - centroid[0]);
      for (std::size_t c = 1; c < kk; ++c) {
        const double d = std::abs(v[i] - centroid[c]);
        if (d < best_d) {
          best_d = d;
          best = c;
        }
      }
      label[i] = best;
    }
    std::fill(sum.begin(), sum.end(), 0.0);
    std::fill(count.begin(), count.end(), 0);
    for (std::size_t i = 0; i < n; ++i) {
      sum[label[i]] += v[i];
      ++count[label[i]];
    }
    bool moved = false;
    for (std::size_t c = 0; c < kk; ++c) {
      if (count[c] == 0) continue;
      const double next = sum[c] / static_cast<double>(count[c]);
      moved = moved || next != centroid[c];
      centroid[c] = next;
    }
    if (!moved) break;
  }
  std::vector<std::size_t> order(kk);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return centroid[a] < centroid[b]; });
  std::vector<double> rank(kk);
  for (std::size_t r = 0; r < kk; ++r) rank[order[r]] = static_cast<double>(r);
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) out[i] = rank[label[i]];
  return out;
}

class Interpreter {
 public:
  Interpreter(std::size_t n, std::uint64_t seed) : n_(n), seed_(seed) {}

  std::vector<Value> slots;

  Value eval(const Expr& e) {
    switch (e.op) {
      case Op::Num: return make_scalar(e.number);
      case Op::Var: return slots[static_cast<std::size_t>(e.slot)];
      case Op::Neg: return map1(eval(e.args[0]), n_, [](double a) { return -a; });
      case Op::Not: return map1(eval(e.args[0]), n_, [](double a) { return a == 0.0 ? 1.0 : 0.0; });
      case Op::Call: return call(e);
      default: break;
    }
    const Value a = eval(e.args[0]);
    const Value b = eval(e.args[1]);
    switch (e.op) {
      case Op::Add: return map2(a, b, n_, [](double x, double y) { return x + y; });
      case Op::Sub: return map2(a, b, n_, [](double x, double y) { return x - y; });
      case Op::Mul: return map2(a, b, n_, [](double x, double y) { return x * y; });
      case Op::Div: return map2(a, b, n_, [](double x, double y) { return x / y; });
      case Op::Lt: return map2(a, b, n_, [](double x, double y) { return x < y ? 1.0 : 0.0; });
      case Op::Le: return map2(a, b, n_, [](double x, double y) { return x <= y ? 1.0 : 0.0; });
      case Op::Gt: return map2(a, b, n_, [](double x, double y) { return x > y ? 1.0 : 0.0; });
      case Op::Ge: return map2(a, b, n_, [](double x, double y) { return x >= y ? 1.0 : 0.0; });
      case Op::Eq: return map2(a, b, n_, [](double x, double y) { return x == y ? 1.0 : 0.0; });
      case Op::Ne: return map2(a, b, n_, [](double x, double y) { return x != y ? 1.0 : 0.0; });
      case Op::And: return map2(a, b, n_, [](double x, double y) { return x != 0.0 && y != 0.0 ? 1.0 : 0.0; });
      case Op::Or: return map2(a, b, n_, [](double x, double y) { return x != 0.0 || y != 0.0 ? 1.0 : 0.0; });
      default: runtime_error(e, "unsupported operator");
    }
  }

 private:
  double reduce_sum(const Value& v) const {
    if (!v.is_vector) return v.scalar;
    double s = 0.0;
    for (double x : *v.vec) s += x;
    return s;
  }

  double reduce_mean(const Expr& e, const Value& v) const {
    if (!v.is_vector) return v.scalar;
    if (v.vec->empty()) runtime_error(e, "mean of an empty vector");
    return reduce_sum(v) / static_cast<double>(v.vec->size());
  }

  Value call(const Expr& e) {
    const std::string& f = e.name;
    if (f == "rand_n") return make_vector(gaussian_stream(seed_, static_cast<std::uint64_t>(e.args[0].number), n_));
    if (f == "kmeans1d") {
      const Value v = eval(e.args[0]);
      return make_vector(kmeans1d(as_vector(v, n_), static_cast<int>(e.args[1].number), seed_));
    }
    std::vector<Value> a;
    a.reserve(e.args.size());
    for (const Expr& arg : e.args) a.push_back(eval(arg));

    if (f == "mean") return make_scalar(reduce_mean(e, a[0]));
    if (f == "sum") return make_scalar(reduce_sum(a[0]));
    if (f == "std") {
      if (!a[0].is_vector) return make_scalar(0.0);
      const double m = reduce_mean(e, a[0]);
      double ss = 0.0;
      for (double x : *a[0].vec) ss += (x - m) * (x - m);
      return make_scalar(std::sqrt(ss / static_cast<double>(a[0].vec->size())));
    }
    if ((f == "min" || f == "max") && a.size() == 1) {
      if (!a[0].is_vector) return a[0];
      if (a[0].vec->empty()) runtime_error(e, f + " of an empty vector");
      const auto& v = *a[0].vec;
      return make_scalar(f == "min" ? *std::min_element(v.begin(), v.end()) : *std::max_element(v.begin(), v.end()));
    }
    if (f == "min") return map2(a[0], a[1], n_, [](double x, double y) { return y < x ? y : x; });
    if (f == "max") return map2(a[0], a[1], n_, [](double x, double y) { return y > x ? y : x; });
    if (f == "quantile") {
      const double q = a[1].scalar;
      if (!(q >= 0.0 && q <= 1.0)) runtime_error(e, "quantile level outside [0, 1]");
      if (!a[0].is_vector) return a[0];
      std::vector<double> v = *a[0].vec;
      if (v.empty()) runtime_error(e, "quantile of an empty vector");
      std::sort(v.begin(), v.end());
      const double pos = q * static_cast<double>(v.size() - 1);
      const auto lo = static_cast<std::size_t>(std::floor(pos));
      const std::size_t hi = std::min(lo + 1, v.size() - 1);
      const double t = pos - static_cast<double>(lo);
      return make_scalar(v[lo] + t * (v[hi] - v[lo]));
    }
    if (f == "clamp")
      return map3(a[0], a[1], a[2], n_, [](double x, double lo, double hi) { return std::min(std::max(x, lo), hi); });
    if (f == "select")
      return map3(a[0], a[1], a[2], n_, [](double m, double x, double y) { return m != 0.0 ? x : y; });
    if (f == "abs") return map1(a[0], n_, [](double x) { return std::abs(x); });
    if (f == "exp") return map1(a[0], n_, [](double x) { return std::exp(x); });
    if (f == "sign") return map1(a[0], n_, [](double x) { return x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0); });
    if (f == "log") {
      bool bad = false;
      Value r = map1(a[0], n_, [&](double x) {
        bad = bad || !(x > 0.0);
        return std::log(x);
      });
      if (bad) runtime_error(e, "log of a non-positive value");
      return r;
    }
    if (f == "sqrt") {
      bool bad = false;
      Value r = map1(a[0], n_, [&](double x) {
        bad = bad || x < 0.0;
        return std::sqrt(x);
      });
      if (bad) runtime_error(e, "sqrt of a negative value");
      return r;
    }
    if (f == "pow") {
      bool bad = false;
      Value r = map2(a[0], a[1], n_, [&](double x, double y) {
        const double p = std::pow(x, y);
        bad = bad || (std::isnan(p) && !std::isnan(x) && !std::isnan(y));
        return p;
      });
      if (bad) runtime_error(e, "pow domain error");
      return r;
    }
    runtime_error(e, "unknown builtin");
  }

  std::size_t n_;
  std::uint64_t seed_;
};

void require_kind(const StrategyProgram& p, Kind kind) {
  if (p.kind != kind)
    throw Error(ErrorCode::InvalidArgument, "expected a " + std::string(to_string(kind)) + " program, got " +
                                                std::string(to_string(p.kind)));
}

}  // namespace

std::vector<std::vector<double>> run_program(const StrategyProgram& p, const FeatureTable& f,
                                             const std::vector<double>& stats, std::uint64_t seed) {
  const std::size_t n = f.cell_count;
  Interpreter in(n, seed);
  in.slots.resize(static_cast<std::size_t>(p.ast.slot_count));
  std::size_t slot = 0;
  for (const auto& col : f.columns) {
    in.slots[slot].is_vector = true;
    in.slots[slot].vec = col;
    ++slot;
  }
  for (double s : f.scalars) in.slots[slot++] = make_scalar(s);
  if (stats.size() != stat_names(p.kind).size())
    throw Error(ErrorCode::InvalidArgument, "wrong number of run statistics");
  for (double s : stats) in.slots[slot++] = make_scalar(s);

  for (const Stmt& s : p.ast.stmts) in.slots[static_cast<std::size_t>(s.slot)] = in.eval(s.value);

  std::vector<std::vector<double>> out;
  for (const Symbol& sym : outputs(p.kind)) {
    const Stmt* def = nullptr;
    for (const Stmt& s : p.ast.stmts)
      if (!s.is_let && s.name == sym.name) def = &s;
    const Value& v = in.slots[static_cast<std::size_t>(def->slot)];
    out.push_back(sym.type == Type::Vector ? as_vector(v, n) : std::vector<double>{v.scalar});
  }
  return out;
}

place::PlacementState eval_init(const StrategyProgram& p, const io::BenchmarkCase& c, const FeatureTable& f,
                                std::uint64_t seed) {
  require_kind(p, Kind::Init);
  const auto out = run_program(p, f, {}, seed);
  place::PlacementState s = io::placement_from_case(c);
  const io::LayoutRegion& r = c.region;
  for (const io::Cell& cell : c.cells) {
    if (!cell.movable()) continue;
    const double x = out[0][cell.id];
    const double y = out[1][cell.id];
    if (!std::isfinite(x) || !std::isfinite(y))
      throw Error(ErrorCode::StrategyRuntimeError, "NonFiniteInit: cell '" + cell.name + "'");
    s.x[cell.id] = std::clamp(x, r.xmin, r.xmax);
    s.y[cell.id] = std::clamp(y, r.ymin, r.ymax);
  }
  return s;
}

std::vector<double> eval_precond(const StrategyProgram& p, const io::BenchmarkCase& c, const FeatureTable& f,
                                 const PrecondStats& stats) {
  require_kind(p, Kind::Precond);
  const std::vector<double> st = {stats.lambda, stats.wl_grad_norm, stats.density_grad_norm,
                                  static_cast<double>(stats.iteration), stats.overflow};
  const auto out = run_program(p, f, st, 0);
  std::vector<double> diag = place::default_precondition(c, stats.lambda);
  for (std::size_t i = 0; i < diag.size(); ++i) {
    const double scale = out[0][i];
    if (!std::isfinite(scale))
      throw Error(ErrorCode::StrategyRuntimeError, "non-finite diag_scale for cell '" + c.cells[i].name + "'");
    diag[i] = std::clamp(scale * diag[i], place::kPrecondFloor, place::kPrecondCeil);
  }
  return diag;
}

PolicyOutput eval_opt_policy(const StrategyProgram& p, const io::BenchmarkCase& c, const FeatureTable& f,
                             const RunStats& stats) {
  require_kind(p, Kind::OptPolicy);
  const std::vector<double> st = {static_cast<double>(stats.iteration),
                                  static_cast<double>(stats.max_iters),
                                  stats.overflow,
                                  stats.overflow_delta,
                                  stats.hpwl,
                                  stats.wl_trend,
                                  stats.lambda,
                                  stats.gamma,
                                  stats.bb_step};
  const auto out = run_program(p, f, st, 0);
  for (const auto& v : out)
    if (!std::isfinite(v[0])) throw Error(ErrorCode::StrategyRuntimeError, "non-finite policy output");
  const double span = std::max(c.region.width(), c.region.height());
  PolicyOutput po;
  po.step_scale = std::clamp(out[0][0], 0.01, 100.0);
  po.noise_level = std::clamp(out[1][0], 0.0, 0.05 * span);
  po.momentum_scale = std::clamp(out[2][0], 0.0, 2.0);
  return po;
}

}  // namespace evoplace::dsl
