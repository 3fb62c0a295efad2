// herding: run scenario files or the bundled suite, or print the feasibility report.
//
//   herding run scenarios/2v2-allocated.json --out results --svg
//   herding suite --out results
//   herding check-bounds scenarios/4v4-two-zones-allocated.json
//
// HERDING_LOG=quiet|info|debug sets stderr verbosity (default info).
// Exit status: 0 no breach, 2 breach, 1 error. For `suite` a breach anywhere wins over an abort.

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "herding/io.hpp"
#include "herding/sim.hpp"
#include "herding/suite.hpp"

namespace fs = std::filesystem;
using namespace herding;

namespace
{

enum class LogLevel { quiet = 0, info = 1, debug = 2 };

LogLevel log_level()
{
  const char * env = std::getenv("HERDING_LOG");
  if (env == nullptr) {
    return LogLevel::info;
  }
  const std::string v = env;
  if (v == "quiet" || v == "0") {
    return LogLevel::quiet;
  }
  if (v == "debug" || v == "2") {
    return LogLevel::debug;
  }
  return LogLevel::info;
}

void log(LogLevel level, const std::string & msg)
{
  if (static_cast<int>(level) <= static_cast<int>(log_level())) {
    std::cerr << msg << '\n';
  }
}

struct Overrides
{
  std::optional<std::string> controller;
  std::optional<double> dt;
  std::optional<std::size_t> k_max;
  std::optional<double> k_d;
};

void apply(Scenario & sc, const Overrides & o)
{
  if (o.controller) {
    sc.controller.kind = io::parse_controller_kind(*o.controller);
  }
  if (o.dt) {
    if (!(*o.dt > 0.0)) {
      throw std::invalid_argument("--dt must be positive");
    }
    sc.dt = *o.dt;
  }
  if (o.k_max) {
    sc.controller.dual.k_max = *o.k_max;
  }
  if (o.k_d) {
    sc.params.k_d = *o.k_d;
  }
}

std::string read_file(const std::string & path)
{
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw std::runtime_error("cannot open " + path);
  }
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_outputs(const Scenario & sc, const EpisodeLog & log_, const fs::path & out, bool svg)
{
  fs::create_directories(out);
  const auto open = [](const fs::path & p) {
    std::ofstream f(p, std::ios::binary);
    if (!f) {
      throw std::runtime_error("cannot write " + p.string());
    }
    return f;
  };
  {
    auto f = open(out / (sc.name + ".csv"));
    io::write_csv(f, log_, sc.zones.size());
  }
  {
    auto f = open(out / (sc.name + ".metrics.json"));
    f << io::metrics_json(log_).dump(2) << '\n';
  }
  if (svg) {
    auto f = open(out / (sc.name + ".svg"));
    io::write_svg(f, log_, sc);
  }
}

void describe(const EpisodeLog & l)
{
  if (l.abort_reason) {
    log(LogLevel::info, l.scenario_name + ": aborted: " + *l.abort_reason);
  }
  log(
    LogLevel::debug, l.scenario_name + ": " + std::to_string(l.ticks.size()) + " ticks, " +
                       std::to_string(l.fallback_ticks) + " infeasible-fallback ticks, " +
                       std::to_string(l.violation_ticks) + " ticks with assumption violations");
}

int run_command(const std::string & file, const fs::path & out, bool svg, const Overrides & o)
{
  Scenario sc = io::parse_scenario(read_file(file));
  apply(sc, o);
  log(LogLevel::info, "running " + sc.name + " (" + io::to_string(sc.controller.kind) + ", " +
                        std::to_string(sc.num_steps()) + " steps)");
  const auto l = run(sc);
  describe(l);
  write_outputs(sc, l, out, svg);
  std::cout << sc.name << ": breach=" << (l.breach ? "true" : "false")
            << " deadlock=" << (l.deadlock ? "true" : "false")
            << " budget=" << io::format_fixed(l.budget, 4) << " min_h=" << io::format_double(l.min_h)
            << '\n';
  if (l.abort_reason) {
    return 1;
  }
  return l.breach ? 2 : 0;
}

int suite_command(const fs::path & out, bool svg, const Overrides & o)
{
  std::printf("%-26s %-7s %-9s %10s %10s\n", "scenario", "breach", "deadlock", "budget", "runtime_s");
  bool any_breach = false;
  bool any_abort = false;
  for (auto sc : suite::bundled()) {
    Overrides per = o;
    if (sc.controller.kind != ControllerKind::dual) {
      per.k_max.reset();
    }
    apply(sc, per);
    const auto t0 = std::chrono::steady_clock::now();
    const auto l = run(sc);
    const double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    describe(l);
    write_outputs(sc, l, out, svg);
    std::printf(
      "%-26s %-7s %-9s %10.4f %10.3f\n", sc.name.c_str(), l.breach ? "true" : "false",
      l.deadlock ? "true" : "false", l.budget, secs);
    std::fflush(stdout);
    any_breach = any_breach || l.breach;
    any_abort = any_abort || l.abort_reason.has_value();
  }
  // A breach outranks an abort: it is the safety verdict the suite exists to report.
  if (any_breach) {
    return 2;
  }
  return any_abort ? 1 : 0;
}

int check_bounds_command(const std::string & file, const Overrides & o)
{
  Scenario sc = io::parse_scenario(read_file(file));
  apply(sc, o);
  const auto gains = select_all_gains(sc.initial, sc.params, sc.zones, sc.gains.base, sc.gains.margin);
  const auto rep =
    feasibility_report(sc.initial.sheep.size(), sc.initial.dogs.size(), sc.params, gains, sc.bounds);
  io::json j;
  j["scenario"] = sc.name;
  j["feasibility"] = io::feasibility_json(rep);
  j["initial_assumption_violations"] = io::json::array();
  for (const auto & v : monitor_assumptions(sc.initial, sc.params, sc.zones, sc.bounds)) {
    j["initial_assumption_violations"].push_back(v.describe());
  }
  std::cout << j.dump(2) << '\n';
  return 0;
}

}  // namespace

int main(int argc, char ** argv)
{
  CLI::App app{"Herding simulator: dogs defend protected zones from a flock using barrier-function QPs"};
  app.require_subcommand(1);

  Overrides o;
  std::string controller;
  double dt = 0.0;
  std::size_t k_max = 0;
  double k_d = 0.0;
  std::string out = ".";
  bool svg = false;
  std::string file;

  const auto add_overrides = [&](CLI::App * cmd) {
    cmd->add_option("--dt", dt, "integration step [s]");
    cmd->add_option("--kmax", k_max, "dual-subgradient rounds per tick")->check(CLI::PositiveNumber);
    cmd->add_option("--kd", k_d, "dog repulsion gain k_D")->check(CLI::NonNegativeNumber);
  };

  auto * run_cmd = app.add_subcommand("run", "simulate one scenario file");
  run_cmd->add_option("scenario", file, "scenario JSON")->required();
  run_cmd->add_option("--controller", controller, "centralized | allocated | dual")
    ->check(CLI::IsMember({"centralized", "allocated", "dual"}));
  run_cmd->add_option("--out", out, "output directory");
  run_cmd->add_flag("--svg", svg, "also write an SVG plot");
  add_overrides(run_cmd);

  auto * suite_cmd = app.add_subcommand("suite", "simulate the eight bundled scenarios");
  suite_cmd->add_option("--out", out, "output directory");
  suite_cmd->add_flag("--svg", svg, "also write SVG plots");
  add_overrides(suite_cmd);

  auto * bounds_cmd = app.add_subcommand("check-bounds", "print the feasibility report");
  bounds_cmd->add_option("scenario", file, "scenario JSON")->required();
  add_overrides(bounds_cmd);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError & e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  const auto * active = app.get_subcommands().front();
  const auto given = [&](const std::string & name) {
    const auto * opt = active->get_option_no_throw(name);
    return opt != nullptr && opt->count() > 0;
  };
  if (given("--controller")) {
    o.controller = controller;
  }
  if (given("--dt")) {
    o.dt = dt;
  }
  if (given("--kmax")) {
    o.k_max = k_max;
  }
  if (given("--kd")) {
    o.k_d = k_d;
  }

  try {
    if (active == run_cmd) {
      return run_command(file, out, svg, o);
    }
    if (active == suite_cmd) {
      return suite_command(out, svg, o);
    }
    return check_bounds_command(file, o);
  } catch (const io::ScenarioError & e) {
    std::cerr << file << ": " << e.what() << '\n';
    return 1;
  } catch (const std::exception & e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}
