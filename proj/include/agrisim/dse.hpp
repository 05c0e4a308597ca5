#pragma once

// Design-space exploration: exhaustive sweeps, viability boundaries,
// golden-section search of the tag spacing and min-mean-max test sets.

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <thread>
#include <variant>
#include <vector>

#include "agrisim/cosim.hpp"

namespace agrisim {

struct ContinuousRange {
  double lo = 0.0;
  double hi = 1.0;
  double step = 0.1;

  std::vector<double> values() const
  {
    const auto n = static_cast<std::size_t>(std::floor((hi - lo) / step + 1e-9)) + 1;
    std::vector<double> v(n);
    for (std::size_t i = 0; i < n; ++i) v[i] = lo + step * static_cast<double>(i);
    return v;
  }
};

struct DiscreteSet {
  std::vector<double> values;
};

struct ModeSet {
  std::vector<std::string> modes;
};

using AxisValue = std::variant<double, std::string>;

inline std::string format_value(const AxisValue& v)
{
  if (const auto* s = std::get_if<std::string>(&v)) return *s;
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.9g", std::get<double>(v));
  return buf;
}

struct Axis {
  std::string name;
  std::variant<ContinuousRange, DiscreteSet, ModeSet> domain;

  std::vector<AxisValue> values() const
  {
    std::vector<AxisValue> out;
    if (const auto* r = std::get_if<ContinuousRange>(&domain)) {
      for (double x : r->values()) out.emplace_back(x);
    } else if (const auto* d = std::get_if<DiscreteSet>(&domain)) {
      for (double x : d->values) out.emplace_back(x);
    } else {
      for (const auto& m : std::get<ModeSet>(domain).modes) out.emplace_back(m);
    }
    return out;
  }

  std::vector<std::string> validate() const
  {
    std::vector<std::string> out;
    if (name.empty()) out.emplace_back("axis without a name");
    if (const auto* r = std::get_if<ContinuousRange>(&domain)) {
      if (!(r->lo < r->hi)) out.push_back("axis " + name + ": lo must be below hi");
      if (!(r->step > 0.0)) out.push_back("axis " + name + ": step must be positive");
    } else if (const auto* d = std::get_if<DiscreteSet>(&domain)) {
      if (d->values.empty()) out.push_back("axis " + name + ": empty set");
    } else if (std::get<ModeSet>(domain).modes.empty()) {
      out.push_back("axis " + name + ": empty mode set");
    }
    return out;
  }
};

using Assignment = std::vector<std::pair<std::string, AxisValue>>;

struct DesignSpace {
  std::vector<Axis> axes;

  std::vector<std::string> validate() const
  {
    std::vector<std::string> out;
    if (axes.empty()) out.emplace_back("design space has no axes");
    for (std::size_t i = 0; i < axes.size(); ++i) {
      for (const auto& p : axes[i].validate()) out.push_back(p);
      for (std::size_t j = 0; j < i; ++j) {
        if (axes[j].name == axes[i].name) out.push_back("duplicate axis " + axes[i].name);
      }
    }
    return out;
  }

  std::size_t size() const
  {
    std::size_t n = axes.empty() ? 0 : 1;
    for (const auto& a : axes) n *= a.values().size();
    return n;
  }

  /// Point `index` in lexicographic order, first axis slowest.
  Assignment point(std::size_t index) const
  {
    Assignment out(axes.size());
    for (std::size_t k = axes.size(); k-- > 0;) {
      const auto vals = axes[k].values();
      out[k] = {axes[k].name, vals[index % vals.size()]};
      index /= vals.size();
    }
    return out;
  }
};

inline std::optional<AxisValue> lookup(const Assignment& a, const std::string& name)
{
  for (const auto& [k, v] : a) {
    if (k == name) return v;
  }
  return std::nullopt;
}

/// Per-point seed derived from the global seed and the canonical index.
inline std::uint64_t point_seed(std::uint64_t global, std::uint64_t index)
{
  std::uint64_t z = global + 0x9E3779B97F4A7C15ULL * (index + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

inline RadiusMethod parse_radius_method(const std::string& s)
{
  if (s == "true") return RadiusMethod::True;
  if (s == "fixed") return RadiusMethod::Fixed;
  if (s == "static") return RadiusMethod::Static;
  if (s == "pre-calibration" || s == "precalibration") return RadiusMethod::PreCalibration;
  if (s == "estimator") return RadiusMethod::Estimator;
  throw ConfigError("unknown radius method '" + s + "'");
}

/// Sets the full-load tyre compression as a linear load table.
inline void set_tyre_compression(Scenario& sc, double full_load_compression)
{
  sc.tyre.mode = CompressionMode::Table;
  sc.tyre.table = {{0.0, 0.0}, {sc.localization.full_load_mass, full_load_compression}};
}

/// Writes one named design parameter into the scenario (SI units).
inline void apply_parameter(Scenario& sc, const std::string& name, const AxisValue& value)
{
  auto num = [&]() {
    if (const auto* d = std::get_if<double>(&value)) return *d;
    throw ConfigError("parameter " + name + " expects a number");
  };
  if (name == "radius_method") {
    const auto* s = std::get_if<std::string>(&value);
    if (!s) throw ConfigError("radius_method expects a mode name");
    sc.localization.radius_method = parse_radius_method(*s);
    return;
  }
  if (name == "tracking_method") {
    const auto* s = std::get_if<std::string>(&value);
    if (!s) throw ConfigError("tracking_method expects a mode name");
    if (*s == "heading") sc.tracker.method = TrackingMethod::HeadingError;
    else if (*s == "lateral") sc.tracker.method = TrackingMethod::LateralError;
    else if (*s == "segment") sc.tracker.method = TrackingMethod::LineSegment;
    else throw ConfigError("unknown tracking method '" + *s + "'");
    return;
  }
  const double v = num();
  if (name == "speed") sc.cruise_speed = v;
  else if (name == "cg_shift") sc.load.cg_shift = v;
  else if (name == "friction") sc.vehicle.friction = v;
  else if (name == "load") sc.load.load_mass = v;
  else if (name == "tyre_compression") set_tyre_compression(sc, v);
  else if (name == "x_init") sc.initial_offset.x = v;
  else if (name == "y_init") sc.initial_offset.y = v;
  else if (name == "psi_init") sc.initial_offset.psi = v;
  else if (name == "look_ahead") sc.tracker.look_ahead = v;
  else if (name == "tag_spacing") {
    if (!sc.feed) throw ConfigError("tag_spacing requires a feed section");
    sc.feed->tag_spacing = v;
  } else {
    throw ConfigError("unknown design parameter '" + name + "'");
  }
  sc.sdps[name] = v;
}

inline Scenario apply_assignment(Scenario sc, const Assignment& a)
{
  for (const auto& [name, value] : a) apply_parameter(sc, name, value);
  return sc;
}

// --- sweep ------------------------------------------------------------------

struct CandidateResult {
  std::size_t index = 0;
  Assignment assignment;
  std::uint64_t seed = 0;
  double cost = kNaN;
  bool viable = false;
  double max_xte = kNaN;
  std::size_t b_suc = 0;
  std::size_t b_tot = 0;
  double runtime = 0.0;  // s, wall clock; not part of the canonical output
  std::string failure;
  std::vector<Vec2> path;
};

using PointEvaluator = std::function<Evaluation(const Assignment&, std::uint64_t seed)>;

/// Runs fn(i) for i in [0, n) on `workers` threads.
inline void parallel_for(std::size_t n, int workers, const std::function<void(std::size_t)>& fn)
{
  workers = std::max(1, std::min<int>(workers, static_cast<int>(n)));
  if (workers == 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&]() {
      for (std::size_t i = next++; i < n; i = next++) fn(i);
    });
  }
  for (auto& t : pool) t.join();
}

inline std::vector<CandidateResult> sweep(const DesignSpace& space, const PointEvaluator& eval, int workers,
                                          std::uint64_t global_seed)
{
  const auto problems = space.validate();
  if (!problems.empty()) throw ConfigError("design space: " + problems.front());
  const std::size_t n = space.size();
  std::vector<CandidateResult> results(n);
  parallel_for(n, workers, [&](std::size_t i) {
    CandidateResult& r = results[i];
    r.index = i;
    r.assignment = space.point(i);
    r.seed = point_seed(global_seed, i);
    const auto start = std::chrono::steady_clock::now();
    try {
      const Evaluation ev = eval(r.assignment, r.seed);
      r.cost = ev.cost;
      r.viable = ev.viable;
      r.max_xte = ev.max_xte;
      r.b_suc = ev.b_suc;
      r.b_tot = ev.b_tot;
      r.failure = ev.reason;
      r.path = ev.path;
    } catch (const std::exception& e) {
      r.viable = false;
      r.failure = std::string("error: ") + e.what();
    }
    r.runtime = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  });
  return results;
}

/// Evaluator running the co-simulation of `base` with the assignment applied.
/// With `path_stride` > 0 every n-th true position is kept for plotting.
inline PointEvaluator scenario_evaluator(const Scenario& base, Criterion criterion, int path_stride = 0)
{
  return [base, criterion, path_stride](const Assignment& a, std::uint64_t seed) {
    Scenario sc = apply_assignment(base, a);
    sc.cosim.seed = seed;
    const Trace trace = run(sc);
    Evaluation ev = evaluate(trace, criterion);
    if (path_stride > 0) {
      for (std::size_t i = 0; i < trace.rows.size(); i += static_cast<std::size_t>(path_stride)) {
        ev.path.push_back({trace.rows[i].x_true, trace.rows[i].y_true});
      }
    }
    return ev;
  };
}

// --- viability boundary -----------------------------------------------------

struct BoundaryGroup {
  Assignment key;                           // the non-speed axes
  std::optional<double> max_viable_speed;
  std::vector<double> violations;           // viable speeds above a non-viable speed
};

inline std::vector<BoundaryGroup> classify_boundary(const std::vector<CandidateResult>& results,
                                                    const std::string& speed_axis = "speed")
{
  std::map<std::string, std::size_t> slot;
  std::vector<BoundaryGroup> groups;
  std::vector<std::vector<std::pair<double, bool>>> runs;
  for (const auto& r : results) {
    Assignment key;
    std::optional<double> speed;
    std::string label;
    for (const auto& [name, v] : r.assignment) {
      if (name == speed_axis) {
        if (const auto* d = std::get_if<double>(&v)) speed = *d;
      } else {
        key.emplace_back(name, v);
        label += name + "=" + format_value(v) + ";";
      }
    }
    if (!speed) throw std::invalid_argument("classify_boundary: result without axis " + speed_axis);
    auto [it, fresh] = slot.emplace(label, groups.size());
    if (fresh) {
      groups.push_back({key, std::nullopt, {}});
      runs.emplace_back();
    }
    runs[it->second].emplace_back(*speed, r.viable);
  }
  for (std::size_t g = 0; g < groups.size(); ++g) {
    auto& pts = runs[g];
    std::sort(pts.begin(), pts.end());
    std::optional<double> first_bad;
    for (const auto& [speed, ok] : pts) {
      if (ok) {
        groups[g].max_viable_speed = speed;
        if (first_bad) groups[g].violations.push_back(speed);
      } else if (!first_bad) {
        first_bad = speed;
      }
    }
  }
  return groups;
}

/// Narrowed speed range around the detected boundaries for a refinement pass.
inline std::optional<ContinuousRange> refinement_range(const std::vector<BoundaryGroup>& groups,
                                                       const ContinuousRange& original, double band, double step)
{
  std::optional<double> lo, hi;
  for (const auto& g : groups) {
    if (!g.max_viable_speed) continue;
    lo = std::min(lo.value_or(*g.max_viable_speed), *g.max_viable_speed);
    hi = std::max(hi.value_or(*g.max_viable_speed), *g.max_viable_speed);
  }
  if (!lo) return std::nullopt;
  ContinuousRange r{std::max(original.lo, *lo - band), std::min(original.hi, *hi + band), step};
  if (!(r.lo < r.hi)) return std::nullopt;
  return r;
}

// --- golden-section search ---------------------------------------------------

inline constexpr double kGoldenRatio = 0.6180339887498949;  // (sqrt(5) - 1) / 2

struct GoldenResult {
  double x = 0.0;
  double cost = 0.0;
  int evaluations = 0;           // search evaluations, including the midpoint
  int fallback_evaluations = 0;
  bool unimodality_warning = false;
  std::vector<std::pair<double, double>> probes;  // (x, cost) in evaluation order
  std::vector<double> widths;                     // bracket width after each iteration
};

inline int golden_evaluation_bound(double width, double tol)
{
  return static_cast<int>(std::ceil(std::log(width / tol) / std::log(1.0 / kGoldenRatio))) + 2;
}

/// Minimizes a unimodal f on [lo, hi]. On equal interior costs the search
/// moves towards a strictly better point evaluated so far, else to the right. When a
/// point outside the final bracket beats its midpoint, a coarse grid of
/// `fallback_points` is scanned and the better answer returned.
inline GoldenResult golden_section(const std::function<double(double)>& f, double lo, double hi, double tol,
                                   int fallback_points = 41)
{
  if (!(tol > 0.0)) throw std::invalid_argument("golden_section: tol must be positive");
  if (!(lo < hi)) throw std::invalid_argument("golden_section: empty interval");
  GoldenResult res;
  std::map<double, double> memo;
  auto eval = [&](double x) {
    x = std::clamp(x, lo, hi);
    auto it = memo.find(x);
    if (it != memo.end()) return it->second;
    const double c = f(x);
    memo.emplace(x, c);
    res.probes.emplace_back(x, c);
    return c;
  };

  double a = lo, b = hi;
  double x1 = b - kGoldenRatio * (b - a), x2 = a + kGoldenRatio * (b - a);
  double f1 = eval(x1), f2 = eval(x2);
  while (b - a > tol) {
    bool go_left = f1 < f2;
    if (f1 == f2) {
      const auto best = std::min_element(memo.begin(), memo.end(),
                                         [](const auto& p, const auto& q) { return p.second < q.second; });
      go_left = best->second < f1 && best->first < x1;
    }
    if (go_left) {
      b = x2;
      x2 = x1;
      f2 = f1;
      x1 = b - kGoldenRatio * (b - a);
      if (b - a > tol) f1 = eval(x1);
    } else {
      a = x1;
      x1 = x2;
      f1 = f2;
      x2 = a + kGoldenRatio * (b - a);
      if (b - a > tol) f2 = eval(x2);
    }
    res.widths.push_back(b - a);
  }
  res.x = 0.5 * (a + b);
  res.cost = eval(res.x);
  res.evaluations = static_cast<int>(memo.size());

  for (const auto& [x, c] : memo) {
    if ((x < a || x > b) && c < res.cost) res.unimodality_warning = true;
  }
  if (res.unimodality_warning && fallback_points > 1) {
    const std::size_t before = memo.size();
    for (int i = 0; i < fallback_points; ++i) {
      const double x = lo + (hi - lo) * i / (fallback_points - 1);
      const double c = eval(x);
      if (c < res.cost) {
        res.cost = c;
        res.x = x;
      }
    }
    res.fallback_evaluations = static_cast<int>(memo.size() - before);
  }
  return res;
}

// --- min-mean-max test sets --------------------------------------------------

struct Factor {
  std::string name;
  double min = 0.0;
  double mean = 0.0;
  double max = 0.0;
};

struct MinMeanMaxSet {
  std::vector<Factor> factors{{"load", 6.0, 300.0, 600.0},
                              {"friction", 0.3, 0.5, 0.7},
                              {"x_init", -0.5, 0.0, 0.5},
                              {"y_init", -0.1, 0.0, 0.1},
                              {"psi_init", -15.0 * kPi / 180.0, 0.0, 15.0 * kPi / 180.0}};

  std::vector<std::string> validate() const
  {
    std::vector<std::string> out;
    for (const auto& f : factors) {
      if (!(f.min <= f.mean && f.mean <= f.max)) out.push_back("factor " + f.name + ": need min <= mean <= max");
    }
    return out;
  }
};

enum class ExpansionMode { OneFactorAtATime, FullFactorial };

/// Environment points: the all-mean baseline followed by each factor at its
/// min and max, or the full 3^k cross product (first factor slowest).
inline std::vector<Assignment> environment_points(const MinMeanMaxSet& set, ExpansionMode mode)
{
  const auto problems = set.validate();
  if (!problems.empty()) throw ConfigError(problems.front());
  std::vector<Assignment> out;
  Assignment base;
  for (const auto& f : set.factors) base.emplace_back(f.name, f.mean);
  if (mode == ExpansionMode::OneFactorAtATime) {
    out.push_back(base);
    for (std::size_t i = 0; i < set.factors.size(); ++i) {
      for (double v : {set.factors[i].min, set.factors[i].max}) {
        Assignment p = base;
        p[i].second = v;
        out.push_back(p);
      }
    }
    return out;
  }
  DesignSpace space;
  for (const auto& f : set.factors) space.axes.push_back({f.name, DiscreteSet{{f.min, f.mean, f.max}}});
  for (std::size_t i = 0; i < space.size(); ++i) out.push_back(space.point(i));
  return out;
}

struct SystemConfig {
  double compression = 0.0;  // m, full-load rear tyre compression
  RadiusMethod method = RadiusMethod::Static;
};

inline std::vector<SystemConfig> system_configs(const std::vector<double>& compressions = {0.001, 0.02, 0.04},
                                                const std::vector<RadiusMethod>& methods = {
                                                    RadiusMethod::Static, RadiusMethod::PreCalibration,
                                                    RadiusMethod::Estimator})
{
  std::vector<SystemConfig> out;
  for (double c : compressions) {
    for (RadiusMethod m : methods) out.push_back({c, m});
  }
  return out;
}

struct MatrixCell {
  std::size_t config = 0;
  std::size_t environment = 0;
  Assignment assignment;  // configuration and environment parameters
};

/// Evaluation matrix: every system configuration against every environment point.
inline std::vector<MatrixCell> expand_min_mean_max(const MinMeanMaxSet& set, const std::vector<SystemConfig>& configs,
                                                   ExpansionMode mode)
{
  const auto env = environment_points(set, mode);
  std::vector<MatrixCell> out;
  for (std::size_t c = 0; c < configs.size(); ++c) {
    for (std::size_t e = 0; e < env.size(); ++e) {
      MatrixCell cell{c, e, {}};
      cell.assignment.emplace_back("tyre_compression", configs[c].compression);
      cell.assignment.emplace_back("radius_method", std::string(to_string(configs[c].method)));
      for (const auto& p : env[e]) cell.assignment.push_back(p);
      out.push_back(std::move(cell));
    }
  }
  return out;
}

struct BoxplotStats {
  double median = 0.0;
  double q25 = 0.0;
  double q75 = 0.0;
  double whisker_lo = 0.0;
  double whisker_hi = 0.0;
};

/// Quantile by linear interpolation between order statistics.
inline double quantile(std::vector<double> v, double q)
{
  if (v.empty()) throw std::invalid_argument("quantile: empty input");
  std::sort(v.begin(), v.end());
  const double pos = q * static_cast<double>(v.size() - 1);
  const auto i = static_cast<std::size_t>(std::floor(pos));
  if (i + 1 >= v.size()) return v.back();
  return v[i] + (pos - static_cast<double>(i)) * (v[i + 1] - v[i]);
}

inline BoxplotStats boxplot_stats(const std::vector<double>& values)
{
  if (values.empty()) throw std::invalid_argument("boxplot_stats: empty input");
  const auto [mn, mx] = std::minmax_element(values.begin(), values.end());
  return {quantile(values, 0.5), quantile(values, 0.25), quantile(values, 0.75), *mn, *mx};
}

// --- feeding search -----------------------------------------------------------

struct FeedSearchResult {
  MatrixCell cell;
  std::uint64_t seed = 0;
  GoldenResult search;
  bool feasible = true;  // some spacing placed at least one portion correctly
  double spacing = 0.0;  // m, reported d_t; the lower bound when infeasible
};

inline constexpr double kMinTagSpacing = 0.3;  // m
inline constexpr double kMaxTagSpacing = 20.0;

/// Cost of one tag spacing for a feeding scenario (fixed seed).
inline double feed_spacing_cost(const Scenario& sc, double d_t)
{
  Scenario s = sc;
  apply_parameter(s, "tag_spacing", d_t);
  return evaluate(run(s), FeedSuccess{}).cost;
}

/// Golden-section search of d_t in [0.3, 20] m for every matrix cell. A cell
/// whose cost never drops below zero has no feasible spacing.
inline std::vector<FeedSearchResult> run_feed_matrix(const Scenario& base, const std::vector<MatrixCell>& cells,
                                                     double tol, int workers, std::uint64_t global_seed)
{
  if (!base.feed) throw ConfigError("feed matrix requires a feed section");
  std::vector<FeedSearchResult> out(cells.size());
  parallel_for(cells.size(), workers, [&](std::size_t i) {
    out[i].cell = cells[i];
    out[i].seed = point_seed(global_seed, i);
    Scenario sc = apply_assignment(base, cells[i].assignment);
    sc.cosim.seed = out[i].seed;
    out[i].search = golden_section([&](double d) { return feed_spacing_cost(sc, d); }, kMinTagSpacing, kMaxTagSpacing, tol);
    out[i].feasible = out[i].search.cost < 0.0;
    out[i].spacing = out[i].feasible ? out[i].search.x : kMinTagSpacing;
  });
  return out;
}

}  // namespace agrisim
