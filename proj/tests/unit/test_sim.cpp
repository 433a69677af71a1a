#include <catch2/catch_amalgamated.hpp>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "twinsim/simulation.hpp"

using namespace twinsim;

namespace {

const std::filesystem::path kScenarioDir{TWINSIM_SCENARIO_DIR};

ScenarioConfig bundled(const std::string& name) {
  return load_scenario_file((kScenarioDir / name).string());
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  REQUIRE(in);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

/// All latencies pinned to the measured maxima, drops off, dsrc everywhere.
ScenarioConfig pinned_max_config() {
  ScenarioConfig cfg = bundled("congestion_off.json");
  cfg.edge.noise.compute_latency = {0.173, 0.173, 0.173};
  cfg.cloud.compute_latency = {0.207, 0.207, 0.207};
  cfg.links.backbone_up.latency = {0.001345, 0.001345, 0.001345};
  cfg.links.backbone_down.latency = {0.001345, 0.001345, 0.001345};
  cfg.links.dsrc.latency = {0.105, 0.105, 0.105};
  cfg.links.policy.mmwave_zones.clear();
  cfg.links.policy.dsrc_zones = {{{0.0, 0.0}, 1e6}};
  return cfg;
}

}  // namespace

TEST_CASE("zero-flow scenario selects the default route") {
  Simulation sim(bundled("congestion_off.json"));
  const RunSummary summary = sim.run();
  REQUIRE(summary.routes.size() == 1);
  CHECK(summary.routes[0].used_default);
  CHECK(summary.routes[0].segments == std::vector<std::string>{"ab"});
  CHECK(sim.ego().active_route == std::vector<std::string>{"ab"});
  CHECK(summary.budget_violations == 0);
  CHECK(summary.requests_unanswered == 0);
}

TEST_CASE("saturated default route diverts to the alternative") {
  Simulation sim(bundled("congestion_on.json"));
  const RunSummary summary = sim.run();
  REQUIRE(summary.routes.size() == 1);
  CHECK_FALSE(summary.routes[0].used_default);
  CHECK(summary.routes[0].segments == std::vector<std::string>{"ac", "cd", "db"});
  // adopted before reaching the entrance node
  CHECK(sim.ego().active_route == std::vector<std::string>{"ac", "cd", "db"});
}

TEST_CASE("same config and seed produce byte-identical trace files") {
  const auto out1 = std::filesystem::path("sim-determinism-1");
  const auto out2 = std::filesystem::path("sim-determinism-2");
  {
    Simulation sim(bundled("congestion_on.json"), out1.string());
    sim.run();
  }
  {
    Simulation sim(bundled("congestion_on.json"), out2.string());
    sim.run();
  }
  for (const auto* name : {"latency.csv", "occupancy.csv", "routes.csv"}) {
    CHECK(slurp(out1 / name) == slurp(out2 / name));
  }
}

TEST_CASE("a different seed changes the traces") {
  ScenarioConfig cfg = bundled("congestion_on.json");
  const auto out1 = std::filesystem::path("sim-seed-1");
  const auto out2 = std::filesystem::path("sim-seed-2");
  {
    Simulation sim(cfg, out1.string());
    sim.run();
  }
  cfg.seed = 999;
  {
    Simulation sim(cfg, out2.string());
    sim.run();
  }
  CHECK(slurp(out1 / "occupancy.csv") != slurp(out2 / "occupancy.csv"));
}

TEST_CASE("trace files are append-only with non-decreasing grouped stamps") {
  const auto out = std::filesystem::path("sim-traces");
  Simulation sim(bundled("congestion_on.json"), out.string());
  sim.run();

  const auto occupancy = read_occupancy_csv_file((out / "occupancy.csv").string());
  REQUIRE(!occupancy.empty());
  double prev = 0.0;
  std::string prev_seg;
  for (const auto& row : occupancy) {
    REQUIRE(row.stamp >= prev);
    if (row.stamp > prev) {
      prev = row.stamp;
      prev_seg.clear();
    } else {
      // within a stamp group segments are sorted and unique
      REQUIRE(prev_seg < row.segment);
    }
    prev_seg = row.segment;
  }

  const auto latency = read_latency_csv_file((out / "latency.csv").string());
  double prev_t = -1.0;
  for (const auto& row : latency) {
    REQUIRE(row.t_request > prev_t);
    prev_t = row.t_request;
  }
}

TEST_CASE("route decisions replay exactly from the logged occupancy snapshot") {
  const auto out = std::filesystem::path("sim-replay");
  Simulation sim(bundled("congestion_on.json"), out.string());
  sim.run();

  const RoadNetwork& net = sim.network();
  for (const auto& row : read_routes_csv_file((out / "routes.csv").string())) {
    OccupancySnapshot snap;
    for (const auto& [seg, occ] : row.occupancy_snapshot) {
      snap.per_segment[seg].occupancy = occ;
    }
    const RoutePlan replayed =
        plan(net, snap, row.origin_node, row.destination_node, PlannerConfig{0.5, 2.0});
    CHECK(replayed.segments == row.segments);
    CHECK(replayed.total_length == Catch::Approx(row.total_length).margin(1e-6));
    // logged occupancies carry 6-decimal precision
    CHECK(replayed.cost == Catch::Approx(row.cost).margin(1e-2));
  }
}

TEST_CASE("the ego never counts toward occupancy") {
  // Zero flows: the ego is the only object in the world, so every occupancy
  // row must stay at zero while it drives through full sensor coverage.
  const auto out = std::filesystem::path("sim-ego-excluded");
  Simulation sim(bundled("congestion_off.json"), out.string());
  sim.run();
  for (const auto& row : read_occupancy_csv_file((out / "occupancy.csv").string())) {
    CHECK(row.count == 0);
  }
}

TEST_CASE("pinned-maximum latencies compose to exactly 487.69 ms per request") {
  ScenarioConfig cfg = pinned_max_config();
  cfg.ego.v_ego = 1.0;  // keeps the natural trigger far outside the horizon
  cfg.duration = 12.0;
  Simulation sim(cfg);
  for (int i = 1; i <= 5; ++i) sim.inject_route_request(2.0 * i);
  const RunSummary summary = sim.run();

  REQUIRE(sim.latency_rows().size() == 5);
  for (const auto& row : sim.latency_rows()) {
    CHECK(row.report.total == Catch::Approx(0.48769).epsilon(1e-9));
    CHECK(row.report.edge_compute == Catch::Approx(0.173).epsilon(1e-9));
    CHECK(row.report.upload == Catch::Approx(0.001345).epsilon(1e-9));
    CHECK(row.report.cloud_compute == Catch::Approx(0.207).epsilon(1e-9));
    CHECK(row.report.download == Catch::Approx(0.106345).epsilon(1e-9));
    CHECK(row.report.within_budget);
  }
  CHECK(summary.budget_violations == 0);
}

TEST_CASE("at pinned maxima the plan still arrives before the entrance node") {
  // Trigger fires with the front edge within S; even with every phase at its
  // maximum the response lands while the ego is at least S - v*0.488 short
  // of the node, so the decision precedes node entry.
  ScenarioConfig cfg = pinned_max_config();
  Simulation sim(cfg);
  const RunSummary summary = sim.run();

  REQUIRE(sim.latency_rows().size() == 1);
  const LatencyRow& row = sim.latency_rows()[0];
  CHECK(row.report.total == Catch::Approx(0.48769).epsilon(1e-9));

  // Node crossing time on the 330 m approach at 20 km/h.
  const double t_cross = 330.0 / cfg.ego.v_ego;
  CHECK(row.t_request + row.report.total < t_cross);

  // Adopted (not a fallback at the node, not a budget rejection).
  CHECK(summary.budget_violations == 0);
  CHECK(summary.requests_unanswered == 0);
  CHECK(sim.ego().active_route == std::vector<std::string>{"ab"});
}

TEST_CASE("dropped requests leave the leg unanswered and fall back at the node") {
  ScenarioConfig cfg = bundled("congestion_off.json");
  cfg.links.request.p_drop = 1.0;  // request control channel always fails
  Simulation sim(cfg);
  const RunSummary summary = sim.run();
  CHECK(summary.routes.empty());            // the cloud never heard the request
  CHECK(summary.requests_unanswered == 1);
  CHECK(summary.retransmissions >= 1);
  // the ego still proceeds on the default route adopted at the node
  CHECK(sim.ego().active_route == std::vector<std::string>{"ab"});
}

TEST_CASE("dropped responses are retransmitted and counted") {
  ScenarioConfig cfg = pinned_max_config();
  cfg.ego.v_ego = 1.0;
  cfg.duration = 10.0;
  cfg.links.dsrc.p_drop = 1.0;  // radio hop always fails
  Simulation sim(cfg);
  sim.inject_route_request(1.0);
  const RunSummary summary = sim.run();
  CHECK(summary.requests_unanswered == 1);
  CHECK(summary.retransmissions >= 1);
  CHECK(summary.dropped_messages >= 2);
  CHECK(sim.latency_rows().empty());
}

TEST_CASE("dropped detection uploads are never retransmitted; the round degrades") {
  ScenarioConfig cfg = pinned_max_config();
  cfg.ego.v_ego = 1.0;
  cfg.duration = 5.0;
  cfg.links.backbone_up.p_drop = 1.0;  // every upload lost
  Simulation sim(cfg);
  sim.inject_route_request(1.0);
  const RunSummary summary = sim.run();

  // The round completes on an empty batch and still answers the request.
  REQUIRE(sim.latency_rows().size() == 1);
  CHECK(summary.retransmissions == 0);  // uploads are superseded, not retried
  REQUIRE(summary.routes.size() == 1);
  CHECK(summary.routes[0].used_default);  // nothing observed, default stands
}

TEST_CASE("validation mode flags broken scenarios at construction") {
  ScenarioConfig cfg = bundled("congestion_off.json");
  cfg.ego.start_segment = "ab";  // does not lead to an entrance node
  CHECK_THROWS_AS(Simulation(cfg), ValidationError);
}
