#pragma once

// Output files: trace CSV, JSON summaries, sweep results CSV and static SVG
// plots. All number formatting goes through snprintf so repeated runs write
// byte-identical files.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "agrisim/calibration.hpp"
#include "agrisim/cosim.hpp"
#include "agrisim/dse.hpp"

namespace agrisim {

using Json = nlohmann::ordered_json;

inline std::string fmt9(double v)
{
  if (std::isnan(v)) return "nan";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return buf;
}

inline constexpr const char* kTraceHeader =
    "t,x_true,y_true,psi_true,u,v,yaw_rate,roll,x_s,y_s,psi_s,psi_dot_s,u_o,delta_o,ekf_x,ekf_y,ekf_psi,ekf_trace_P,xte,"
    "event";

inline std::string trace_csv(const Trace& trace)
{
  std::string out = kTraceHeader;
  out += '\n';
  for (const auto& r : trace.rows) {
    for (double v : {r.t, r.x_true, r.y_true, r.psi_true, r.u, r.v, r.yaw_rate, r.roll, r.x_s, r.y_s, r.psi_s,
                     r.psi_dot_s, r.u_o, r.delta_o, r.ekf_x, r.ekf_y, r.ekf_psi, r.ekf_trace_p, r.xte}) {
      out += fmt9(v);
      out += ',';
    }
    for (std::size_t i = 0; i < r.events.size(); ++i) {
      if (i) out += ';';
      out += r.events[i];
    }
    out += '\n';
  }
  return out;
}

inline Json number_or_null(double v)
{
  if (!std::isfinite(v)) return nullptr;
  return std::stod(fmt9(v));
}

inline Json summary_json(const Scenario& sc, const Trace& trace)
{
  const auto& s = trace.summary;
  Json j;
  j["scenario"] = sc.name;
  j["seed"] = sc.cosim.seed;
  j["termination"] = to_string(s.termination);
  if (!s.fault.empty()) j["fault"] = s.fault;
  j["duration_s"] = number_or_null(s.duration);
  j["rows"] = trace.rows.size();
  j["xte"] = {{"max_m", number_or_null(s.max_xte)}, {"mean_abs_m", number_or_null(s.mean_xte)},
              {"rms_m", number_or_null(s.rms_xte)}};
  if (s.b_tot > 0 || !s.dispenses.empty()) {
    Json d;
    d["hits"] = s.b_suc;
    d["misses"] = s.b_tot - s.b_suc;
    d["placements"] = s.b_tot;
    Json list = Json::array();
    for (const auto& r : s.dispenses) {
      list.push_back({{"index", r.index}, {"planned_m", number_or_null(r.planned)},
                      {"actual_m", number_or_null(r.actual)}, {"time_s", number_or_null(r.time)}, {"hit", r.hit}});
    }
    d["records"] = list;
    j["dispense"] = d;
  }
  j["wheel_radius"] = {{"true_m", number_or_null(s.true_radius)}, {"assumed_m", number_or_null(s.assumed_radius)}};
  if (sc.localization.mode == LocalizationMode::Ekf) {
    j["ekf"] = {{"final_position_error_m", number_or_null(s.final_position_error)},
                {"covariance_violations", s.covariance_violations},
                {"guard_activations", s.filter.guard_activations},
                {"skipped_updates", s.filter.skipped_updates}};
  }
  return j;
}

inline std::string results_csv(const std::vector<CandidateResult>& results)
{
  std::ostringstream o;
  o << "index";
  if (!results.empty()) {
    for (const auto& [name, v] : results.front().assignment) o << ',' << name;
  }
  o << ",seed,cost,viable,max_xte,b_suc,b_tot,failure\n";
  for (const auto& r : results) {
    o << r.index;
    for (const auto& [name, v] : r.assignment) o << ',' << format_value(v);
    std::string failure = r.failure;
    std::replace(failure.begin(), failure.end(), ',', ';');
    std::replace(failure.begin(), failure.end(), '\n', ' ');
    o << ',' << r.seed << ',' << fmt9(r.cost) << ',' << (r.viable ? 1 : 0) << ',' << fmt9(r.max_xte) << ',' << r.b_suc
      << ',' << r.b_tot << ',' << failure << '\n';
  }
  return o.str();
}

inline Json boundary_json(const std::vector<BoundaryGroup>& groups)
{
  Json out = Json::array();
  for (const auto& g : groups) {
    Json key;
    for (const auto& [name, v] : g.key) {
      if (const auto* d = std::get_if<double>(&v)) key[name] = number_or_null(*d);
      else key[name] = std::get<std::string>(v);
    }
    Json viol = Json::array();
    for (double v : g.violations) viol.push_back(number_or_null(v));
    out.push_back({{"group", key},
                   {"max_viable_speed", g.max_viable_speed ? number_or_null(*g.max_viable_speed) : Json(nullptr)},
                   {"monotonicity_violations", viol}});
  }
  return out;
}

inline void write_file(const std::string& path, const std::string& content)
{
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write " + path);
  f << content;
}

// --- SVG -----------------------------------------------------------------------

namespace svg_detail {

struct Frame {
  double x0, x1, y0, y1;  // data bounds
  double width = 640, height = 480, margin = 40;

  double sx() const { return (width - 2 * margin) / std::max(x1 - x0, 1e-9); }
  double sy() const { return (height - 2 * margin) / std::max(y1 - y0, 1e-9); }
  double px(double x) const { return margin + (x - x0) * sx(); }
  double py(double y) const { return height - margin - (y - y0) * sy(); }
};

inline Frame equal_aspect(double x0, double x1, double y0, double y1)
{
  const double pad = 0.05 * std::max({x1 - x0, y1 - y0, 1e-3});
  x0 -= pad;
  x1 += pad;
  y0 -= pad;
  y1 += pad;
  const double w = x1 - x0, h = y1 - y0;
  Frame f{x0, x1, y0, y1};
  f.height = std::clamp(f.width * h / w, 200.0, 900.0);
  if (w / h > (f.width - 80) / (f.height - 80)) {
    const double extra = w * (f.height - 80) / (f.width - 80) - h;
    f.y0 -= extra / 2;
    f.y1 += extra / 2;
  } else {
    const double extra = h * (f.width - 80) / (f.height - 80) - w;
    f.x0 -= extra / 2;
    f.x1 += extra / 2;
  }
  return f;
}

inline std::string header(const Frame& f)
{
  return "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + fmt9(f.width) + "\" height=\"" + fmt9(f.height) +
         "\" viewBox=\"0 0 " + fmt9(f.width) + " " + fmt9(f.height) + "\">\n<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
}

inline std::string polyline(const Frame& f, const std::vector<Vec2>& pts, const std::string& color, double width,
                            const std::string& extra = "")
{
  std::string s = "<polyline fill=\"none\" stroke=\"" + color + "\" stroke-width=\"" + fmt9(width) + "\"" + extra + " points=\"";
  for (const auto& p : pts) {
    if (!std::isfinite(p.x) || !std::isfinite(p.y)) continue;
    s += fmt9(f.px(p.x)) + "," + fmt9(f.py(p.y)) + " ";
  }
  return s + "\"/>\n";
}

inline std::string text(double x, double y, const std::string& t, int size = 12, const std::string& anchor = "start")
{
  return "<text x=\"" + fmt9(x) + "\" y=\"" + fmt9(y) + "\" font-family=\"sans-serif\" font-size=\"" +
         std::to_string(size) + "\" text-anchor=\"" + anchor + "\">" + t + "</text>\n";
}

inline std::vector<Vec2> route_points(const Route& route)
{
  return route.empty() ? std::vector<Vec2>{} : route.densify(0.05);
}

inline void bounds(const std::vector<Vec2>& pts, double& x0, double& x1, double& y0, double& y1)
{
  for (const auto& p : pts) {
    if (!std::isfinite(p.x) || !std::isfinite(p.y)) continue;
    x0 = std::min(x0, p.x);
    x1 = std::max(x1, p.x);
    y0 = std::min(y0, p.y);
    y1 = std::max(y1, p.y);
  }
}

}  // namespace svg_detail

/// Route (grey), true path (blue) and EKF estimate (orange, dashed).
inline std::string path_svg(const Route& route, const Trace& trace)
{
  using namespace svg_detail;
  const auto rp = route_points(route);
  std::vector<Vec2> truth, est;
  for (const auto& r : trace.rows) {
    truth.push_back({r.x_true, r.y_true});
    if (std::isfinite(r.ekf_x)) est.push_back({r.ekf_x, r.ekf_y});
  }
  double x0 = 1e300, x1 = -1e300, y0 = 1e300, y1 = -1e300;
  bounds(rp, x0, x1, y0, y1);
  bounds(truth, x0, x1, y0, y1);
  if (x0 > x1) x0 = x1 = y0 = y1 = 0.0;
  const Frame f = equal_aspect(x0, x1, y0, y1);
  std::string s = header(f);
  s += polyline(f, rp, "#999999", 3);
  s += polyline(f, truth, "#1f77b4", 1.5);
  if (!est.empty()) s += polyline(f, est, "#ff7f0e", 1, " stroke-dasharray=\"4 3\"");
  s += text(f.margin, 20, "route (grey), true path (blue)" + std::string(est.empty() ? "" : ", estimate (orange)"));
  return s + "</svg>\n";
}

/// Sweep paths over the route, green when viable and red otherwise.
inline std::string sweep_paths_svg(const Route& route, const std::vector<CandidateResult>& results)
{
  using namespace svg_detail;
  const auto rp = route_points(route);
  double x0 = 1e300, x1 = -1e300, y0 = 1e300, y1 = -1e300;
  bounds(rp, x0, x1, y0, y1);
  for (const auto& r : results) bounds(r.path, x0, x1, y0, y1);
  if (x0 > x1) x0 = x1 = y0 = y1 = 0.0;
  const Frame f = equal_aspect(x0, x1, y0, y1);
  std::string s = header(f);
  for (const auto& r : results) {
    if (!r.viable) s += polyline(f, r.path, "#d62728", 0.8, " stroke-opacity=\"0.6\"");
  }
  for (const auto& r : results) {
    if (r.viable) s += polyline(f, r.path, "#2ca02c", 0.8, " stroke-opacity=\"0.6\"");
  }
  s += polyline(f, rp, "#000000", 1, " stroke-dasharray=\"2 2\"");
  s += text(f.margin, 20, "viable (green), non-viable (red), route (dashed)");
  return s + "</svg>\n";
}

/// Max XTE against the first numeric axis, one line per combination of the
/// remaining axes, with the viability threshold.
inline std::string boundary_svg(const std::vector<CandidateResult>& results, const std::string& speed_axis,
                                double threshold)
{
  using namespace svg_detail;
  std::map<std::string, std::vector<Vec2>> lines;
  double x0 = 1e300, x1 = -1e300, y0 = 0.0, y1 = threshold;
  for (const auto& r : results) {
    const auto sp = lookup(r.assignment, speed_axis);
    if (!sp || !std::holds_alternative<double>(*sp) || !std::isfinite(r.max_xte)) continue;
    std::string label;
    for (const auto& [name, v] : r.assignment) {
      if (name != speed_axis) label += name + "=" + format_value(v) + " ";
    }
    const double x = std::get<double>(*sp);
    lines[label].push_back({x, r.max_xte});
    x0 = std::min(x0, x);
    x1 = std::max(x1, x);
    y1 = std::max(y1, r.max_xte);
  }
  if (x0 > x1) x0 = x1 = 0.0;
  Frame f{x0, x1, y0, y1 * 1.05, 720, 480, 50};
  std::string s = header(f);
  s += polyline(f, {{x0, threshold}, {x1, threshold}}, "#000000", 1, " stroke-dasharray=\"6 3\"");
  const char* palette[] = {"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"};
  std::size_t i = 0;
  for (auto& [label, pts] : lines) {
    std::sort(pts.begin(), pts.end(), [](Vec2 a, Vec2 b) { return a.x < b.x; });
    s += polyline(f, pts, palette[i % 10], 1);
    ++i;
  }
  s += text(f.margin, 20, "max XTE [m] vs " + speed_axis + "; dashed: threshold " + fmt9(threshold) + " m");
  s += text(f.px(x0), f.height - 10, fmt9(x0), 11, "middle") + text(f.px(x1), f.height - 10, fmt9(x1), 11, "middle");
  s += text(5, f.py(y1), fmt9(y1), 11) + text(5, f.py(0), "0", 11);
  return s + "</svg>\n";
}

struct BoxplotSeries {
  std::string label;
  BoxplotStats stats;
};

inline std::string boxplot_svg(const std::vector<BoxplotSeries>& series, const std::string& y_label)
{
  using namespace svg_detail;
  double y0 = 0.0, y1 = 1.0;
  for (const auto& b : series) y1 = std::max(y1, b.stats.whisker_hi);
  const double n = static_cast<double>(std::max<std::size_t>(series.size(), 1));
  Frame f{0.0, n, y0, y1 * 1.05, std::max(320.0, 90.0 * n), 480, 50};
  std::string s = header(f);
  for (std::size_t i = 0; i < series.size(); ++i) {
    const auto& b = series[i].stats;
    const double cx = static_cast<double>(i) + 0.5;
    const double l = f.px(cx - 0.3), r = f.px(cx + 0.3);
    s += polyline(f, {{cx, b.whisker_lo}, {cx, b.q25}}, "#000000", 1);
    s += polyline(f, {{cx, b.q75}, {cx, b.whisker_hi}}, "#000000", 1);
    s += polyline(f, {{cx - 0.15, b.whisker_lo}, {cx + 0.15, b.whisker_lo}}, "#000000", 1);
    s += polyline(f, {{cx - 0.15, b.whisker_hi}, {cx + 0.15, b.whisker_hi}}, "#000000", 1);
    s += "<rect x=\"" + fmt9(l) + "\" y=\"" + fmt9(f.py(b.q75)) + "\" width=\"" + fmt9(r - l) + "\" height=\"" +
         fmt9(std::max(f.py(b.q25) - f.py(b.q75), 0.5)) + "\" fill=\"#aec7e8\" stroke=\"#1f77b4\"/>\n";
    s += polyline(f, {{cx - 0.3, b.median}, {cx + 0.3, b.median}}, "#d62728", 2);
    s += text(f.px(cx), f.height - 20, series[i].label, 10, "middle");
  }
  s += text(f.margin, 20, y_label);
  s += text(5, f.py(y1), fmt9(y1), 11) + text(5, f.py(0), "0", 11);
  return s + "</svg>\n";
}

}  // namespace agrisim
