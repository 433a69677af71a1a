// twinsim command line: run scenarios, summarize latency traces, validate
// configs. Exit codes: 0 success, 2 config/validation failure, 3 runtime or
// I/O failure.

#include <cstdlib>
#include <exception>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "twinsim/map_io.hpp"
#include "twinsim/scenario.hpp"
#include "twinsim/simulation.hpp"
#include "twinsim/stats.hpp"
#include "twinsim/trace.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitRuntime = 3;

std::string resolve_out_dir(const std::string& flag_value) {
  if (!flag_value.empty()) return flag_value;
  if (const char* env = std::getenv("TWINSIM_OUT"); env && *env) return env;
  return "twinsim-out";
}

int cmd_run(const std::string& config_path, long long seed_override, double duration_override,
            const std::string& out_flag) {
  twinsim::ScenarioConfig cfg = twinsim::load_scenario_file(config_path);
  if (seed_override >= 0) cfg.seed = static_cast<std::uint64_t>(seed_override);
  if (duration_override > 0.0) cfg.duration = duration_override;

  const std::string out_dir = resolve_out_dir(out_flag);
  twinsim::Simulation sim(std::move(cfg), out_dir);
  const twinsim::RunSummary summary = sim.run();
  twinsim::print_summary(std::cout, summary);
  std::cout << "traces written to " << out_dir << "\n";
  return kExitOk;
}

int cmd_summarize(const std::string& in_path) {
  const auto rows = twinsim::read_latency_csv_file(in_path);
  const twinsim::LatencySummary s = twinsim::summarize_latency(rows);
  twinsim::RunSummary summary;
  summary.has_latency = true;
  summary.latency = s;
  std::cout << "latency (seconds)\n";
  twinsim::print_stat_row(std::cout, "edge_compute", s.edge_compute);
  twinsim::print_stat_row(std::cout, "upload", s.upload);
  twinsim::print_stat_row(std::cout, "cloud_compute", s.cloud_compute);
  twinsim::print_stat_row(std::cout, "download", s.download);
  twinsim::print_stat_row(std::cout, "total", s.total);
  std::cout << "requests: " << s.requests << "\n";
  return kExitOk;
}

int cmd_validate(const std::string& config_path) {
  const twinsim::ScenarioConfig cfg = twinsim::load_scenario_file(config_path);
  const twinsim::RoadNetwork net = twinsim::load_network_file(cfg.map_path);
  twinsim::validate_scenario(cfg, net);
  // Flow paths and route existence are checked by constructing the driver.
  twinsim::Simulation sim(cfg);
  std::cout << "OK: " << config_path << "\n";
  std::cout << "  nodes: " << net.nodes.size() << ", segments: " << net.segments.size()
            << ", rsus: " << net.rsus.size() << "\n";
  std::cout << "  origin node: " << sim.origin_node()
            << ", destination node: " << sim.destination_node() << "\n";
  std::cout << "  latency budget: " << twinsim::fmt6(sim.budget()) << " s\n";
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"cloud/edge smart-mobility digital twin simulator"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir;
  std::string in_path;
  long long seed_override = -1;
  double duration_override = -1.0;

  CLI::App* run = app.add_subcommand("run", "execute a scenario and write traces");
  run->add_option("--config", config_path, "scenario document")->required();
  run->add_option("--seed", seed_override, "override the scenario seed");
  run->add_option("--duration", duration_override, "override the duration (seconds)");
  run->add_option("--out", out_dir, "output directory (default $TWINSIM_OUT or twinsim-out)");

  CLI::App* summarize = app.add_subcommand("summarize", "statistics from a latency trace");
  summarize->add_option("--in", in_path, "latency.csv path")->required();

  CLI::App* validate = app.add_subcommand("validate", "check a scenario and its map");
  validate->add_option("--config", config_path, "scenario document")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed()) return cmd_run(config_path, seed_override, duration_override, out_dir);
    if (summarize->parsed()) return cmd_summarize(in_path);
    if (validate->parsed()) return cmd_validate(config_path);
  } catch (const twinsim::ParseError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const twinsim::ValidationError& e) {
    std::cerr << "validation error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
  return kExitOk;
}
