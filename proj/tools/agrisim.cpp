// agrisim command-line driver.
//
// Exit codes: 0 ok, 1 configuration error, 2 plant/controller fault (or, for
// sweep, every candidate failed).

#include <CLI11.hpp>

#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include "agrisim/calibration.hpp"
#include "agrisim/cosim.hpp"
#include "agrisim/dse.hpp"
#include "agrisim/report.hpp"
#include "agrisim/scenario_io.hpp"

namespace fs = std::filesystem;
using namespace agrisim;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 1;
constexpr int kExitFault = 2;

struct Common {
  std::string scenario;
  std::optional<std::uint64_t> seed;
  std::string out = "out";
};

ScenarioFile load(const Common& c)
{
  ScenarioFile f = load_scenario(c.scenario);
  if (c.seed) f.scenario.cosim.seed = *c.seed;
  fs::create_directories(c.out);
  return f;
}

std::string path_in(const Common& c, const std::string& name) { return (fs::path(c.out) / name).string(); }

Criterion parse_criterion(const std::string& s)
{
  if (s == "feed-success") return FeedSuccess{};
  const std::string prefix = "max-xte=";
  if (s.rfind(prefix, 0) == 0) {
    try {
      std::size_t used = 0;
      const double v = std::stod(s.substr(prefix.size()), &used);
      if (used == s.size() - prefix.size() && v > 0.0) return MaxXte{v};
    } catch (const std::exception&) {
    }
  }
  throw ConfigError("criterion must be max-xte=<meters> or feed-success, got '" + s + "'");
}

int cmd_simulate(const Common& c)
{
  const ScenarioFile f = load(c);
  const Trace trace = run(f.scenario);
  write_file(path_in(c, "trace.csv"), trace_csv(trace));
  write_file(path_in(c, "summary.json"), summary_json(f.scenario, trace).dump(2) + "\n");
  write_file(path_in(c, "path.svg"), path_svg(resolve_feed(f.scenario).route, trace));
  const auto& s = trace.summary;
  std::cout << "termination: " << to_string(s.termination) << (s.fault.empty() ? "" : " (" + s.fault + ")") << "\n"
            << "rows: " << trace.rows.size() << "\nmax XTE: " << fmt9(s.max_xte) << " m, mean |XTE|: " << fmt9(s.mean_xte)
            << " m\n";
  if (s.b_tot > 0) std::cout << "dispense hits: " << s.b_suc << "/" << s.b_tot << "\n";
  return s.termination == Termination::Fault ? kExitFault : kExitOk;
}

std::string speed_axis_of(const DesignSpace& space)
{
  for (const auto& a : space.axes) {
    if (a.name == "speed") return a.name;
  }
  return "";
}

int run_design_sweep(const Common& c, const ScenarioFile& f, const Criterion& criterion, int workers,
                     std::optional<double> refine)
{
  const DesignSpace& space = *f.design;
  const auto results = sweep(space, scenario_evaluator(f.scenario, criterion, 10), workers, f.scenario.cosim.seed);
  write_file(path_in(c, "results.csv"), results_csv(results));
  const Route route = resolve_feed(f.scenario).route;
  write_file(path_in(c, "paths.svg"), sweep_paths_svg(route, results));

  std::size_t failed = 0, viable = 0;
  for (const auto& r : results) {
    if (r.failure.rfind("error:", 0) == 0) ++failed;
    if (r.viable) ++viable;
  }
  std::cout << "candidates: " << results.size() << ", viable: " << viable << ", failed: " << failed << "\n";

  const std::string speed = speed_axis_of(space);
  if (!speed.empty()) {
    const auto groups = classify_boundary(results, speed);
    write_file(path_in(c, "boundary.json"), boundary_json(groups).dump(2) + "\n");
    const double th = std::holds_alternative<MaxXte>(criterion) ? std::get<MaxXte>(criterion).threshold : 0.0;
    write_file(path_in(c, "boundary.svg"), boundary_svg(results, speed, th));
    for (const auto& g : groups) {
      std::string label;
      for (const auto& [n, v] : g.key) label += n + "=" + format_value(v) + " ";
      std::cout << label << "-> max viable speed "
                << (g.max_viable_speed ? fmt9(*g.max_viable_speed) + " m/s" : std::string("none"));
      if (!g.violations.empty()) std::cout << " (monotonicity violations: " << g.violations.size() << ")";
      std::cout << "\n";
    }
    if (refine) {
      const Axis* ax = nullptr;
      for (const auto& a : space.axes) {
        if (a.name == speed) ax = &a;
      }
      const auto* range = std::get_if<ContinuousRange>(&ax->domain);
      if (!range) throw ConfigError("--refine needs the speed axis declared as a range");
      const auto narrowed = refinement_range(groups, *range, *refine, range->step / 2.0);
      if (!narrowed) {
        std::cout << "refinement skipped: no viable boundary\n";
      } else {
        DesignSpace fine = space;
        for (auto& a : fine.axes) {
          if (a.name == speed) a.domain = *narrowed;
        }
        const auto refined = sweep(fine, scenario_evaluator(f.scenario, criterion, 10), workers, f.scenario.cosim.seed);
        write_file(path_in(c, "results_refined.csv"), results_csv(refined));
        write_file(path_in(c, "boundary_refined.json"), boundary_json(classify_boundary(refined, speed)).dump(2) + "\n");
        std::cout << "refined pass: " << refined.size() << " candidates over [" << fmt9(narrowed->lo) << ", "
                  << fmt9(narrowed->hi) << "] step " << fmt9(narrowed->step) << "\n";
      }
    }
  }
  return failed == results.size() ? kExitFault : kExitOk;
}

int run_matrix(const Common& c, const ScenarioFile& f, int workers)
{
  const MatrixSpec& m = *f.matrix;
  const auto configs = system_configs(m.compressions, m.methods);
  const auto cells = expand_min_mean_max(m.set, configs, m.mode);
  std::cout << "configurations: " << configs.size() << ", runs: " << cells.size() << "\n";
  const auto results = run_feed_matrix(f.scenario, cells, m.tolerance, workers, f.scenario.cosim.seed);

  std::ostringstream csv;
  csv << "config,environment";
  for (const auto& [n, v] : cells.front().assignment) csv << ',' << n;
  csv << ",seed,feasible,d_t,cost,evaluations,unimodality_warning\n";
  std::vector<std::vector<double>> per_config(configs.size());
  for (const auto& r : results) {
    csv << r.cell.config << ',' << r.cell.environment;
    for (const auto& [n, v] : r.cell.assignment) csv << ',' << format_value(v);
    csv << ',' << r.seed << ',' << (r.feasible ? 1 : 0) << ',' << fmt9(r.spacing) << ',' << fmt9(r.search.cost) << ','
        << r.search.evaluations + r.search.fallback_evaluations << ',' << (r.search.unimodality_warning ? 1 : 0) << '\n';
    per_config[r.cell.config].push_back(r.spacing);
  }
  write_file(path_in(c, "matrix.csv"), csv.str());

  std::vector<BoxplotSeries> series;
  Json stats = Json::array();
  for (std::size_t i = 0; i < configs.size(); ++i) {
    const BoxplotStats b = boxplot_stats(per_config[i]);
    const std::string label = fmt9(configs[i].compression * 1000.0) + "mm " + to_string(configs[i].method);
    series.push_back({label, b});
    stats.push_back({{"compression_m", configs[i].compression},
                     {"method", to_string(configs[i].method)},
                     {"median", number_or_null(b.median)},
                     {"q25", number_or_null(b.q25)},
                     {"q75", number_or_null(b.q75)},
                     {"whisker_lo", number_or_null(b.whisker_lo)},
                     {"whisker_hi", number_or_null(b.whisker_hi)}});
    std::cout << label << ": median d_t " << fmt9(b.median) << " m [" << fmt9(b.whisker_lo) << ", "
              << fmt9(b.whisker_hi) << "]\n";
  }
  write_file(path_in(c, "boxplots.json"), stats.dump(2) + "\n");
  write_file(path_in(c, "boxplots.svg"), boxplot_svg(series, "feasible tag spacing d_t [m]"));
  return kExitOk;
}

int cmd_sweep(const Common& c, int workers, const std::optional<std::string>& criterion_flag, std::optional<double> refine)
{
  const ScenarioFile f = load(c);
  if (!f.design && !f.matrix) throw ConfigError("scenario has no [design] or [matrix] section");
  const Criterion criterion = criterion_flag ? parse_criterion(*criterion_flag) : f.criterion;
  int code = kExitOk;
  if (f.design) code = run_design_sweep(c, f, criterion, workers, refine);
  if (f.matrix) code = std::max(code, run_matrix(c, f, workers));
  return code;
}

int cmd_calibrate_demo(const Common& c)
{
  const ScenarioFile f = load(c);
  const Scenario& sc = f.scenario;
  const RfidReaderModel* front = nullptr;
  const RfidReaderModel* rear = nullptr;
  for (const auto& r : sc.readers) {
    if (r.position == ReaderPosition::Front && !front) front = &r;
    if (r.position == ReaderPosition::Rear && !rear) rear = &r;
  }
  if (!front || !rear) throw ConfigError("calibrate-demo needs a front and a rear [reader]");
  const double r_true = effective_wheel_radius(sc.vehicle, sc.load, sc.tyre);
  const double speed = sc.cruise_speed > 0.0 ? sc.cruise_speed : 0.25;
  const ReaderGeometry geom{front->mount_offset - rear->mount_offset, front->semi_major, rear->semi_major};

  std::vector<double> tags;
  for (const auto& t : sc.map.rfid_tags) tags.push_back(t.position.x);
  if (tags.empty()) tags.push_back(0.0);

  RadiusKalman kalman(sc.vehicle.wheel_radius, 0.01 * 0.01);
  Json passes = Json::array();
  std::vector<PassObservation> history;
  for (std::size_t i = 0; i < tags.size(); ++i) {
    PassSetup setup;
    setup.true_radius = r_true;
    setup.counts_per_rev = sc.encoder.counts_per_rev;
    setup.quantized = sc.encoder.quantized;
    setup.tag_position = tags[i];
    setup.start = tags[i] - front->mount_offset - 1.0;
    setup.stop = tags[i] - rear->mount_offset + 1.0;
    setup.front = *front;
    setup.rear = *rear;
    const SimulatedPass pass = simulate_tag_pass(setup, [speed](double) { return speed; });
    const PassAssembly a = assemble_pass(pass.events, pass.encoder_log, geom);
    Json p;
    p["tag_position_m"] = number_or_null(tags[i]);
    p["diagnostics"] = a.diagnostics;
    PassObservation obs{static_cast<int>(i), false, false, std::nullopt};
    if (a.record) {
      obs.front_detected = a.record->front_seen;
      obs.rear_detected = a.record->rear_seen;
      Json iv = Json::array();
      for (const auto& x : a.record->intervals) {
        iv.push_back({{"kind", to_string(x.kind)}, {"distance_m", number_or_null(x.distance)},
                      {"counts", number_or_null(x.counts)}, {"elapsed_s", number_or_null(x.elapsed)},
                      {"complete", x.complete}});
      }
      p["intervals"] = iv;
      try {
        const double r = ls_radius(*a.record, sc.encoder.counts_per_rev);
        p["radius_m"] = number_or_null(r);
        p["speed_m_s"] = number_or_null(tag_speed(*a.record));
        kalman.add_pass(*a.record, sc.encoder.counts_per_rev);
        std::cout << "pass " << i << ": R* = " << fmt9(r) << " m, speed " << fmt9(tag_speed(*a.record)) << " m/s\n";
      } catch (const EstimatorUnavailable& e) {
        p["radius_m"] = nullptr;
        p["diagnostics"].push_back(e.what());
      }
    }
    history.push_back(obs);
    passes.push_back(p);
  }
  Json report;
  report["true_radius_m"] = number_or_null(r_true);
  report["counts_per_rev"] = sc.encoder.counts_per_rev;
  report["quantized"] = sc.encoder.quantized;
  report["passes"] = passes;
  report["kalman_radius_m"] = number_or_null(kalman.estimate());
  Json health = Json::array();
  for (const auto& d : reader_health(history)) health.push_back({{"issue", to_string(d.issue)}, {"message", d.message}});
  report["health"] = health;
  write_file(path_in(c, "calibration.json"), report.dump(2) + "\n");
  std::cout << "true R = " << fmt9(r_true) << " m, filtered R = " << fmt9(kalman.estimate()) << " m\n";
  return kExitOk;
}

int cmd_ekf_demo(const Common& c, bool dead_reckoning_only)
{
  ScenarioFile f = load(c);
  Scenario& sc = f.scenario;
  sc.localization.mode = LocalizationMode::Ekf;
  if (dead_reckoning_only) {
    sc.localization.use_poles = sc.localization.use_sidewall = sc.localization.use_rfid = false;
  }
  const Trace trace = run(sc);
  std::ostringstream csv;
  csv << "t,x_true,y_true,psi_true,ekf_x,ekf_y,ekf_psi,ekf_trace_P,position_error\n";
  double sum = 0.0, worst = 0.0;
  for (const auto& r : trace.rows) {
    const double e = std::hypot(r.x_true - r.ekf_x, r.y_true - r.ekf_y);
    sum += e;
    worst = std::max(worst, e);
    csv << fmt9(r.t) << ',' << fmt9(r.x_true) << ',' << fmt9(r.y_true) << ',' << fmt9(r.psi_true) << ','
        << fmt9(r.ekf_x) << ',' << fmt9(r.ekf_y) << ',' << fmt9(r.ekf_psi) << ',' << fmt9(r.ekf_trace_p) << ','
        << fmt9(e) << '\n';
  }
  write_file(path_in(c, "belief.csv"), csv.str());
  Json j = summary_json(sc, trace);
  j["position_error"] = {{"mean_m", number_or_null(sum / static_cast<double>(trace.rows.size()))},
                         {"max_m", number_or_null(worst)},
                         {"final_m", number_or_null(trace.summary.final_position_error)}};
  j["dead_reckoning_only"] = dead_reckoning_only;
  write_file(path_in(c, "ekf_summary.json"), j.dump(2) + "\n");
  write_file(path_in(c, "path.svg"), path_svg(resolve_feed(sc).route, trace));
  std::cout << "final position error: " << fmt9(trace.summary.final_position_error) << " m, mean "
            << fmt9(sum / static_cast<double>(trace.rows.size())) << " m\n";
  return trace.summary.termination == Termination::Fault ? kExitFault : kExitOk;
}

void add_common(CLI::App* app, Common& c)
{
  app->add_option("--scenario", c.scenario, "scenario file")->required()->check(CLI::ExistingFile);
  app->add_option("--seed", c.seed, "override the scenario seed");
  app->add_option("--out", c.out, "output directory")->capture_default_str();
}

}  // namespace

int main(int argc, char** argv)
{
  CLI::App app{"agrisim: agricultural vehicle co-simulation and design-space exploration"};
  app.require_subcommand(1);

  Common sim, swp, cal, ekf;
  int workers = 1;
  std::optional<std::string> criterion;
  std::optional<double> refine;
  bool dr_only = false;

  auto* s1 = app.add_subcommand("simulate", "run one scenario and write trace, summary and path plot");
  add_common(s1, sim);
  auto* s2 = app.add_subcommand("sweep", "run the scenario's design space or min-mean-max matrix");
  add_common(s2, swp);
  s2->add_option("--workers", workers, "parallel workers")->check(CLI::PositiveNumber)->capture_default_str();
  s2->add_option("--criterion", criterion, "max-xte=<m> or feed-success");
  s2->add_option("--refine", refine, "re-sweep speed within BAND m/s of the boundary at half the step")
      ->check(CLI::PositiveNumber);
  auto* s3 = app.add_subcommand("calibrate-demo", "replay simulated tag passes through the radius estimator");
  add_common(s3, cal);
  auto* s4 = app.add_subcommand("ekf-demo", "run the scenario with the EKF and report estimation error");
  add_common(s4, ekf);
  s4->add_flag("--dead-reckoning-only", dr_only, "disable pole, sidewall and tag updates");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (*s1) return cmd_simulate(sim);
    if (*s2) return cmd_sweep(swp, workers, criterion, refine);
    if (*s3) return cmd_calibrate_demo(cal);
    if (*s4) return cmd_ekf_demo(ekf, dr_only);
  } catch (const ScenarioError& e) {
    for (const auto& msg : e.errors) std::cerr << "error: " << msg << "\n";
    return kExitConfig;
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "fault: " << e.what() << "\n";
    return kExitFault;
  }
  return kExitConfig;
}
