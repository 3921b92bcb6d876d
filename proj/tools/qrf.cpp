// Scenario runner: qrf {run|validate|sweep} --scenario FILE [options]
#include <cstdio>
#include <iostream>
#include <optional>

#include <CLI11.hpp>

#include "qrf/runner.hpp"
#include "qrf/scenario.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitNumerical = 3;

struct Options {
  std::string scenario;
  std::string out = "results";
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> grid_points;
  std::optional<std::size_t> mc_samples;
};

void apply_overrides(qrf::Scenario& sc, const Options& o) {
  if (o.seed) sc.set("numerics.seed", *o.seed);
  if (o.grid_points) sc.set("numerics.grid_points", *o.grid_points);
  if (o.mc_samples) sc.set("numerics.mc_samples", *o.mc_samples);
}

int exit_code(const qrf::Error& e) {
  return qrf::is_numerical(e.code()) ? kExitNumerical : kExitConfig;
}

void report(const qrf::Error& e) {
  if (const auto* se = dynamic_cast<const qrf::ScenarioError*>(&e)) {
    for (const auto& d : se->diagnostics()) std::cerr << "error: " << qrf::format(d) << "\n";
    return;
  }
  std::cerr << "error: " << e.what() << "\n";
}

int cmd_run(const Options& o) {
  qrf::Scenario sc = qrf::Scenario::load(o.scenario);
  apply_overrides(sc, o);
  const auto table = qrf::run(sc);
  qrf::write_table(table, o.out, sc.name());
  std::cout << (std::filesystem::path(o.out) / (sc.name() + ".csv")).string() << "\n";
  return kExitOk;
}

int cmd_validate(const Options& o) {
  qrf::Scenario sc = qrf::Scenario::load(o.scenario);
  apply_overrides(sc, o);
  std::vector<qrf::Diagnostic> diags;
  // A sweep is valid when every variant is.
  for (const auto& v : qrf::expand_sweep(sc)) {
    auto d = qrf::validate(v);
    diags.insert(diags.end(), d.begin(), d.end());
  }
  for (const auto& d : diags) std::cout << qrf::format(d) << "\n";
  return diags.empty() ? kExitOk : kExitConfig;
}

int cmd_sweep(const Options& o) {
  qrf::Scenario sc = qrf::Scenario::load(o.scenario);
  apply_overrides(sc, o);
  const auto variants = qrf::expand_sweep(sc);
  const auto outcomes = qrf::run_sweep(variants, o.out, qrf::thread_cap());
  int code = kExitOk;
  for (const auto& r : outcomes) {
    if (r.ok) {
      std::cout << (std::filesystem::path(o.out) / (r.name + ".csv")).string() << "\n";
      continue;
    }
    std::cerr << "error: " << r.name << ": " << r.error << "\n";
    const int c = qrf::is_numerical(r.code) ? kExitNumerical : kExitConfig;
    code = std::max(code, c);
  }
  return code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Quantum reference frame scenario runner"};
  app.require_subcommand(1);
  Options o;

  auto add_common = [&o](CLI::App* sub, bool with_out) {
    sub->add_option("--scenario", o.scenario, "scenario file (.scn key = value, or .json)")->required();
    if (with_out) sub->add_option("--out", o.out, "output directory")->capture_default_str();
    sub->add_option("--seed", o.seed, "base RNG seed");
    sub->add_option("--grid-points", o.grid_points, "momentum grid points");
    sub->add_option("--mc-samples", o.mc_samples, "Monte Carlo samples (0 disables)");
  };
  auto* run = app.add_subcommand("run", "run one scenario and write CSV + JSON");
  add_common(run, true);
  auto* val = app.add_subcommand("validate", "check a scenario without running it");
  add_common(val, false);
  auto* sweep = app.add_subcommand("sweep", "run the cartesian product of sweep.* lists");
  add_common(sweep, true);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (*run) return cmd_run(o);
    if (*val) return cmd_validate(o);
    return cmd_sweep(o);
  } catch (const qrf::Error& e) {
    report(e);
    return exit_code(e);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitNumerical;
  }
}
