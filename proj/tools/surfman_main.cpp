// Command-line experiment runner for the two-surface manipulation simulator.

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "surfman/harness.hpp"
#include "surfman/scaling.hpp"
#include "surfman/scenario.hpp"

namespace {

int cmd_run(const std::string& scenario_path, const surfman::harness::RunOptions& options) {
  const surfman::harness::Scenario scenario =
      surfman::harness::load_scenario(scenario_path);
  surfman::harness::RunResult result =
      surfman::harness::run_scenario(scenario, options);
  if (!options.quiet) {
    std::cout << result.metrics.report();
    if (!options.out_dir.empty())
      std::cout << "outputs written under " << options.out_dir << "\n";
  }
  return result.exit_code;
}

int cmd_sweep(const std::string& grid_path, const std::string& scenario_path,
              const surfman::harness::RunOptions& options) {
  const auto grid = surfman::harness::parse_sweep_file(grid_path);
  const auto base = surfman::harness::parse_kv_file(scenario_path);
  const surfman::harness::SweepResult result =
      surfman::harness::sweep(base, grid, options);
  const std::string report = result.report();
  if (!options.quiet) std::cout << report;
  if (!options.out_dir.empty()) {
    std::filesystem::create_directories(options.out_dir);
    std::ofstream out(std::filesystem::path(options.out_dir) / "sweep.txt",
                      std::ios::binary);
    out << report;
  }
  return 0;
}

int cmd_table(const std::string& db_path, const std::string& platform,
              int dof, int workspace, int surface, bool quiet) {
  using namespace surfman::scaling;
  if (dof > 0 || workspace > 0 || surface > 0) {
    if (dof <= 0 || workspace <= 0 || surface <= 0) {
      std::cerr << "table: --dof, --workspace and --surface go together\n";
      return 2;
    }
    PlatformSpec spec;
    spec.name = "query";
    spec.dof_su = dof;
    spec.mw_min = workspace;
    spec.ss_su = surface;
    std::cout << mobility_requirement(spec).str() << "\n";
    return 0;
  }

  std::vector<PlatformSpec> db;
  if (db_path.empty()) {
    db = builtin_platforms();
  } else {
    std::ifstream in(db_path);
    if (!in) {
      std::cerr << "table: cannot open " << db_path << "\n";
      return 2;
    }
    std::ostringstream text;
    text << in.rdbuf();
    db = load_platforms_json(text.str());
  }

  if (!platform.empty()) {
    std::vector<PlatformSpec> filtered;
    for (const auto& spec : db)
      if (spec.name == platform) filtered.push_back(spec);
    if (filtered.empty()) {
      std::cerr << "table: no platform named '" << platform << "'\n";
      return 2;
    }
    db = filtered;
  }

  const ComparisonReport report = reproduce_table(db);
  if (!quiet) std::cout << report.str();
  return report.mismatches == 0 ? 0 : 1;
}

int cmd_validate(const std::string& scenario_path, bool quiet) {
  const surfman::harness::Scenario scenario =
      surfman::harness::load_scenario(scenario_path);
  if (!quiet) {
    std::cout << "ok: " << scenario.name << " (" << scenario.script.size()
              << " script steps, "
              << (scenario.world.has_rigid() ? "rigid" : "strip")
              << " object)\n";
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"surfman: surface-based manipulation simulator"};
  app.require_subcommand(1);

  std::string out_dir;
  std::uint64_t seed = 0;
  bool seed_set = false;
  bool quiet = false;
  app.add_option("--out", out_dir, "Directory for trajectory and report files");
  app.add_option("--seed", seed, "Override the scenario seed")
      ->each([&](const std::string&) { seed_set = true; });
  app.add_flag("--quiet", quiet, "Suppress stdout reports");

  std::string scenario_path, grid_path, db_path, platform;
  int dof = 0, workspace = 0, surface = 0;

  CLI::App* run = app.add_subcommand("run", "Run one scenario file");
  run->add_option("scenario", scenario_path, "Scenario file")->required();

  CLI::App* sweep = app.add_subcommand("sweep", "Run a parameter grid");
  sweep->add_option("grid", grid_path, "Sweep grid file")->required();
  sweep->add_option("scenario", scenario_path, "Base scenario file")->required();

  CLI::App* table = app.add_subcommand("table", "Platform mobility comparison");
  table->add_option("--db", db_path, "Platform database JSON (default: bundled)");
  table->add_option("--platform", platform, "Show a single platform row");
  table->add_option("--dof", dof, "Ad-hoc query: single unit DoF");
  table->add_option("--workspace", workspace, "Ad-hoc query: workspace in d^2 units");
  table->add_option("--surface", surface, "Ad-hoc query: surface size in d^2 units");

  CLI::App* validate = app.add_subcommand("validate", "Parse and check a scenario");
  validate->add_option("scenario", scenario_path, "Scenario file")->required();

  CLI11_PARSE(app, argc, argv);

  surfman::harness::RunOptions options;
  options.out_dir = out_dir;
  options.quiet = quiet;
  if (seed_set) options.seed_override = seed;

  try {
    if (run->parsed()) return cmd_run(scenario_path, options);
    if (sweep->parsed()) return cmd_sweep(grid_path, scenario_path, options);
    if (table->parsed())
      return cmd_table(db_path, platform, dof, workspace, surface, quiet);
    if (validate->parsed()) return cmd_validate(scenario_path, quiet);
  } catch (const surfman::ConfigError& err) {
    std::cerr << "configuration error: " << err.what() << "\n";
    return 2;
  } catch (const std::exception& err) {
    std::cerr << "error: " << err.what() << "\n";
    return 1;
  }
  return 0;
}
