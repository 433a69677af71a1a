// Acceptance suite. Each criterion prints exactly one PASS/FAIL line; the
// process exits with the number of failed criteria.
//
// Usage: acceptance [scenario_dir]

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "twinsim/cloud.hpp"
#include "twinsim/edge.hpp"
#include "twinsim/planner.hpp"
#include "twinsim/random.hpp"
#include "twinsim/scenario.hpp"
#include "twinsim/simulation.hpp"
#include "twinsim/stats.hpp"
#include "twinsim/traffic.hpp"
#include "twinsim/vehicle.hpp"

using namespace twinsim;

namespace {

std::filesystem::path g_scenario_dir = "scenarios";
int g_failures = 0;

void report(int index, const std::string& name, bool pass, const std::string& detail) {
  std::printf("%s criterion %d: %s%s%s\n", pass ? "PASS" : "FAIL", index, name.c_str(),
              detail.empty() ? "" : " -- ", detail.c_str());
  std::fflush(stdout);
  if (!pass) ++g_failures;
}

ScenarioConfig bundled(const std::string& name) {
  return load_scenario_file((g_scenario_dir / name).string());
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// -- criterion 1: trigger arithmetic -----------------------------------------

void criterion_trigger_arithmetic() {
  const double s = trigger_distance(5.5556, 3.0, 0.7);
  const double budget = latency_budget(17.367, 5.5556);
  const bool pass = std::abs(s - 17.367) <= 0.001 && std::abs(budget - 3.126) <= 0.001;
  char buf[128];
  std::snprintf(buf, sizeof(buf), "S = %.6f m, T_max = %.6f s", s, budget);
  report(1, "trigger distance and latency budget", pass, buf);
}

// -- criterion 2: worst-case budget ------------------------------------------

void criterion_worst_case_budget() {
  ScenarioConfig cfg = bundled("congestion_off.json");
  cfg.edge.noise.compute_latency = {0.173, 0.173, 0.173};
  cfg.cloud.compute_latency = {0.207, 0.207, 0.207};
  cfg.links.backbone_up.latency = {0.001345, 0.001345, 0.001345};
  cfg.links.backbone_down.latency = {0.001345, 0.001345, 0.001345};
  cfg.links.dsrc.latency = {0.105, 0.105, 0.105};
  cfg.links.policy.mmwave_zones.clear();
  cfg.links.policy.dsrc_zones = {{{0.0, 0.0}, 1e6}};
  cfg.duration = 51.0;

  Simulation sim(cfg);
  for (int i = 1; i <= 100; ++i) sim.inject_route_request(0.5 * i);
  sim.run();

  const auto& rows = sim.latency_rows();
  bool pass = rows.size() == 100;
  double worst = 0.0;
  for (const auto& row : rows) {
    worst = std::max(worst, row.report.total);
    if (!(row.report.total <= 0.488 && row.report.total <= 3.126 &&
          row.report.within_budget)) {
      pass = false;
    }
  }
  char buf[160];
  std::snprintf(buf, sizeof(buf), "%zu requests, worst total %.6f s <= 0.488 s <= 3.126 s",
                rows.size(), worst);
  report(2, "worst-case latency composition stays within budget", pass, buf);
}

// -- criterion 3: latency distribution fidelity -------------------------------

void criterion_distribution_fidelity() {
  struct Row {
    const char* name;
    TriangularDist dist;
  };
  // measured rows, seconds: min / avg / max
  const std::vector<Row> rows = {
      {"edge", {0.102, 0.107, 0.173}},
      {"cloud", {0.181, 0.188, 0.207}},
      {"updown", {0.00243, 0.00261, 0.00269}},
      {"wifi", {0.00181, 0.0158, 0.105}},
  };
  bool pass = true;
  std::string detail;
  std::vector<std::vector<double>> samples;
  for (const auto& row : rows) {
    RngStream rng(2026, row.name);
    std::vector<double> xs;
    xs.reserve(10000);
    double sum = 0.0;
    for (int i = 0; i < 10000; ++i) {
      xs.push_back(row.dist.sample(rng));
      sum += xs.back();
    }
    const double err = std::abs(sum / 10000.0 - row.dist.mean());
    if (err > 0.002) pass = false;
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%s|mean err|=%.5f s ", row.name, err);
    detail += buf;
    samples.push_back(std::move(xs));
  }
  // summary block shape: min <= avg <= max per phase
  std::vector<LatencyRow> lrows(10000);
  for (int i = 0; i < 10000; ++i) {
    lrows[i].report.edge_compute = samples[0][i];
    lrows[i].report.upload = samples[2][i];
    lrows[i].report.cloud_compute = samples[1][i];
    lrows[i].report.download = samples[3][i];
    lrows[i].report.total = samples[0][i] + samples[2][i] + samples[1][i] + samples[3][i];
  }
  const LatencySummary s = summarize_latency(lrows);
  for (const StatRow* r :
       {&s.edge_compute, &s.upload, &s.cloud_compute, &s.download, &s.total}) {
    if (!(r->min <= r->avg && r->avg <= r->max)) pass = false;
  }
  // The published Total Avg (243 ms) is below the published Total Min
  // (287 ms) and below the sum of the phase averages (~313 ms); totals here
  // are defined as the sum of phases and 243 ms is intentionally not a target.
  report(3, "per-phase triangular means within 2 ms; summary rows ordered", pass, detail);
}

// -- criterion 4: route-selection behavior ------------------------------------

void criterion_route_selection() {
  bool pass = true;
  std::string detail;
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    {
      ScenarioConfig cfg = bundled("congestion_off.json");
      cfg.seed = seed;
      Simulation sim(cfg);
      const RunSummary s = sim.run();
      if (s.routes.size() != 1 || !s.routes[0].used_default ||
          s.routes[0].segments != std::vector<std::string>{"ab"}) {
        pass = false;
        detail += "seed " + std::to_string(seed) + " off-run wrong; ";
      }
    }
    {
      ScenarioConfig cfg = bundled("congestion_on.json");
      cfg.seed = seed;
      Simulation sim(cfg);
      const RunSummary s = sim.run();
      if (s.routes.size() != 1 || s.routes[0].used_default ||
          s.routes[0].segments != std::vector<std::string>{"ac", "cd", "db"} ||
          sim.ego().active_route != std::vector<std::string>{"ac", "cd", "db"}) {
        pass = false;
        detail += "seed " + std::to_string(seed) + " on-run wrong; ";
      }
    }
  }
  if (detail.empty()) detail = "20/20 seeds: default on zero flow, alternative on saturation";
  report(4, "route selection across 20 seeded runs", pass, detail);
}

// -- criterion 5: planner oracle equivalence ----------------------------------

struct OraclePath {
  double cost = 0.0;
  double length = 0.0;
  std::vector<std::string> segments;
};

template <typename WeightFn>
void dfs_paths(const RoadNetwork& net, const std::string& cur, const std::string& dst,
               std::set<std::string>& visited, OraclePath& acc, WeightFn weight,
               std::optional<OraclePath>& best) {
  if (cur == dst) {
    const bool better =
        !best || acc.cost < best->cost ||
        (acc.cost == best->cost &&
         (acc.length < best->length ||
          (acc.length == best->length && acc.segments < best->segments)));
    if (better) best = acc;
    return;
  }
  auto it = net.outgoing.find(cur);
  if (it == net.outgoing.end()) return;
  for (const auto& seg_id : it->second) {
    const RoadSegment& seg = net.segment(seg_id);
    if (visited.count(seg.to_node)) continue;
    visited.insert(seg.to_node);
    const OraclePath saved = acc;
    acc.cost += weight(seg);
    acc.length += seg.length;
    acc.segments.push_back(seg_id);
    dfs_paths(net, seg.to_node, dst, visited, acc, weight, best);
    acc = saved;
    visited.erase(seg.to_node);
  }
}

template <typename WeightFn>
std::optional<OraclePath> enumerate_best(const RoadNetwork& net, const std::string& src,
                                         const std::string& dst, WeightFn weight) {
  std::set<std::string> visited{src};
  OraclePath acc;
  std::optional<OraclePath> best;
  dfs_paths(net, src, dst, visited, acc, weight, best);
  return best;
}

void criterion_planner_oracle() {
  RngStream rng(50001);
  int compared = 0, mismatches = 0, unreachable = 0;
  for (int trial = 0; trial < 200; ++trial) {
    const int n = 2 + static_cast<int>(rng.uniform() * 9);
    const int m = 1 + static_cast<int>(rng.uniform() * 20);
    RoadNetwork net;
    for (int i = 0; i < n; ++i) {
      RoadNode node;
      node.id = "n" + std::to_string(i);
      node.position = {7.0 * i, 0.0};
      net.nodes[node.id] = node;
    }
    for (int e = 0; e < m; ++e) {
      const int a = static_cast<int>(rng.uniform() * n);
      int b = static_cast<int>(rng.uniform() * n);
      if (a == b) b = (b + 1) % n;
      RoadSegment seg;
      seg.id = "e" + std::to_string(e);
      seg.from_node = "n" + std::to_string(a);
      seg.to_node = "n" + std::to_string(b);
      const double len = rng.uniform_range(1.0, 40.0);
      seg.polyline = {net.nodes[seg.from_node].position,
                      net.nodes[seg.from_node].position + Vec2{len, 0.0}};
      seg.length = len;
      seg.capacity = default_capacity(len);
      net.segments[seg.id] = seg;
    }
    for (const auto& [id, seg] : net.segments) net.outgoing[seg.from_node].push_back(id);

    OccupancySnapshot snap;
    for (const auto& [id, seg] : net.segments) {
      snap.per_segment[id].occupancy = rng.uniform();
    }
    const PlannerConfig cfg{rng.uniform(), rng.uniform_range(0.0, 4.0)};

    // Oracle: trigger on the enumerated shortest path, weighted enumeration.
    const auto shortest =
        enumerate_best(net, "n0", "n1", [](const RoadSegment& s) { return s.length; });
    if (!shortest) {
      try {
        plan(net, snap, "n0", "n1", cfg);
        ++mismatches;
      } catch (const NoRouteError&) {
        ++unreachable;
      }
      continue;
    }
    double max_occ = 0.0;
    for (const auto& id : shortest->segments) {
      max_occ = std::max(max_occ, snap.occupancy_of(id));
    }
    OraclePath want;
    if (max_occ <= cfg.theta) {
      want = *shortest;
      want.cost = 0.0;
      for (const auto& id : want.segments) {
        const RoadSegment& s = net.segment(id);
        want.cost += s.length * (1.0 + cfg.beta * snap.occupancy_of(id));
      }
    } else {
      want = *enumerate_best(net, "n0", "n1", [&](const RoadSegment& s) {
        return s.length * (1.0 + cfg.beta * snap.occupancy_of(s.id));
      });
    }
    const RoutePlan got = plan(net, snap, "n0", "n1", cfg);
    if (got.segments != want.segments || got.cost != want.cost) ++mismatches;
    ++compared;
  }
  char buf[128];
  std::snprintf(buf, sizeof(buf), "%d planned, %d unreachable, %d mismatches", compared,
                unreachable, mismatches);
  report(5, "plan equals exhaustive simple-path enumeration", mismatches == 0 && compared > 50,
         buf);
}

// -- criterion 6: fusion oracle equivalence -----------------------------------

void criterion_fusion_oracle() {
  RngStream rng(60001);
  int mismatches = 0;
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<GlobalDetection> batch;
    const int n = static_cast<int>(rng.uniform() * 30);
    for (int i = 0; i < n; ++i) {
      GlobalDetection d;
      d.position = {rng.uniform_range(0, 40), rng.uniform_range(0, 40)};
      d.cls = rng.uniform() < 0.7 ? ObjectClass::vehicle : ObjectClass::pedestrian;
      d.dims = default_dims(d.cls);
      d.confidence = rng.uniform_range(0.5, 1.0);
      d.rsu_id = "r" + std::to_string(static_cast<int>(rng.uniform() * 4));
      d.stamp = rng.uniform();
      batch.push_back(d);
    }
    const double epsilon = rng.uniform_range(0.5, 5.0);
    const auto fused = fuse(batch, epsilon);

    // brute-force connected components (BFS over the epsilon graph)
    std::vector<int> comp(batch.size(), -1);
    int n_comp = 0;
    for (std::size_t i = 0; i < batch.size(); ++i) {
      if (comp[i] >= 0) continue;
      std::vector<std::size_t> stack{i};
      comp[i] = n_comp;
      while (!stack.empty()) {
        const std::size_t cur = stack.back();
        stack.pop_back();
        for (std::size_t j = 0; j < batch.size(); ++j) {
          if (comp[j] >= 0 || batch[j].cls != batch[cur].cls) continue;
          if (distance(batch[j].position, batch[cur].position) <= epsilon) {
            comp[j] = n_comp;
            stack.push_back(j);
          }
        }
      }
      ++n_comp;
    }
    if (fused.size() != static_cast<std::size_t>(n_comp)) {
      ++mismatches;
      continue;
    }
    // compare centroid multisets
    std::multiset<std::string> got, want;
    for (const auto& f : fused) {
      char buf[96];
      std::snprintf(buf, sizeof(buf), "%d|%.9f|%.9f", static_cast<int>(f.cls),
                    f.global_position.x, f.global_position.y);
      got.insert(buf);
    }
    for (int c = 0; c < n_comp; ++c) {
      double w = 0, x = 0, y = 0;
      int cls = 0;
      for (std::size_t i = 0; i < batch.size(); ++i) {
        if (comp[i] != c) continue;
        w += batch[i].confidence;
        x += batch[i].position.x * batch[i].confidence;
        y += batch[i].position.y * batch[i].confidence;
        cls = static_cast<int>(batch[i].cls);
      }
      char buf[96];
      std::snprintf(buf, sizeof(buf), "%d|%.9f|%.9f", cls, x / w, y / w);
      want.insert(buf);
    }
    if (got != want) ++mismatches;
  }

  // Single RSU, zero noise/dropout: fused equals ground truth within range.
  const RsuSite rsu{"r1", {{0.0, 0.0}, 0.35}, 150.0};
  int truth_mismatches = 0;
  for (int trial = 0; trial < 50; ++trial) {
    ObjectRegistry reg;
    std::vector<Vec2> truth;
    const int n = 1 + static_cast<int>(rng.uniform() * 12);
    for (int i = 0; i < n; ++i) {
      DynamicObject obj;
      obj.id = "v" + std::to_string(i);
      obj.cls = ObjectClass::vehicle;
      obj.pose.position = {rng.uniform_range(-200, 200), rng.uniform_range(-200, 200)};
      obj.dims = default_dims(obj.cls);
      obj.segment_id = "s";
      reg.insert(obj);
    }
    const SensorFrame frame = sense(reg, rsu, 0.0);
    NoiseModel noise;
    noise.sigma_pos = 0.0;
    noise.p_miss = 0.0;
    noise.c_min = 1.0;
    RngStream det_rng(5);
    const DetectOutput out = detect(frame, noise, det_rng);
    std::vector<GlobalDetection> globals;
    for (const auto& det : out.detections) globals.push_back(make_global(det, rsu));
    // well-separated truth only: merge-free check needs distinct objects
    const auto fused = fuse(globals, 1e-6);
    for (const auto& obj : reg.objects) {
      if (distance(obj.pose.position, rsu.pose.position) <= rsu.sensing_range) {
        truth.push_back(obj.pose.position);
      }
    }
    if (fused.size() != truth.size()) {
      ++truth_mismatches;
      continue;
    }
    for (std::size_t i = 0; i < fused.size(); ++i) {
      if (std::abs(fused[i].global_position.x - truth[i].x) > 1e-9 ||
          std::abs(fused[i].global_position.y - truth[i].y) > 1e-9) {
        ++truth_mismatches;
      }
    }
  }
  char buf[128];
  std::snprintf(buf, sizeof(buf), "%d partition mismatches, %d ground-truth mismatches",
                mismatches, truth_mismatches);
  report(6, "fusion equals brute-force connected components", mismatches == 0 && truth_mismatches == 0,
         buf);
}

// -- criterion 7: transform round-trip ----------------------------------------

void criterion_transform_roundtrip() {
  RngStream rng(70001);
  double worst = 0.0;
  for (int trial = 0; trial < 10000; ++trial) {
    const Vec2 truth{rng.uniform_range(-500, 500), rng.uniform_range(-500, 500)};
    ObjectRegistry reg;
    DynamicObject obj;
    obj.id = "v";
    obj.cls = ObjectClass::vehicle;
    obj.pose.position = truth;
    reg.insert(obj);
    const RsuSite rsu{"r",
                      {{rng.uniform_range(-500, 500), rng.uniform_range(-500, 500)},
                       rng.uniform_range(-7, 7)},
                      1e9};
    const SensorFrame frame = sense(reg, rsu, 0.0);
    Detection det;
    det.rsu_id = "r";
    det.local_position = frame.observations[0].local_position;
    const Vec2 back = detection_to_global(det, rsu);
    worst = std::max({worst, std::abs(back.x - truth.x), std::abs(back.y - truth.y)});
  }
  char buf[96];
  std::snprintf(buf, sizeof(buf), "worst axis error %.3e m over 10^4 poses", worst);
  report(7, "to_global inverts sense within 1e-9 m", worst <= 1e-9, buf);
}

// -- criterion 8: trigger-condition suite -------------------------------------

void criterion_trigger_conditions() {
  RngStream rng(80001);
  const TriggerConfig cfg;  // 3 s, 0.7 m
  int agreements = 0, cases = 0, fired = 0, blocked_by_leader = 0;
  bool leader_case_ok = true;

  for (int trial = 0; trial < 500; ++trial) {
    const double length = rng.uniform_range(40.0, 400.0);
    RoadNetwork net;
    for (int i = 0; i < 2; ++i) {
      RoadNode node;
      node.id = "n" + std::to_string(i);
      node.position = {length * i, 0.0};
      node.role = i == 0 ? NodeRole::entrance : NodeRole::exit;
      net.nodes[node.id] = node;
    }
    RoadSegment seg;
    seg.id = "s0";
    seg.from_node = "n0";
    seg.to_node = "n1";
    seg.polyline = {{0, 0}, {length, 0}};
    seg.length = length;
    seg.capacity = default_capacity(length);
    net.segments[seg.id] = seg;
    net.outgoing["n0"].push_back("s0");

    const double v_ego = rng.uniform_range(1.0, 14.0);
    const double ego_arc = rng.uniform_range(0.0, length);
    EgoState ego;
    ego.object.id = "ego";
    ego.object.cls = ObjectClass::vehicle;
    ego.object.speed = v_ego;
    ego.object.segment_id = "s0";
    ego.object.arc_position = ego_arc;
    refresh_pose(ego.object, net);
    ego.v_ego = v_ego;

    ObjectRegistry reg;
    reg.insert(ego.object);
    const int n = static_cast<int>(rng.uniform() * 5);
    for (int i = 0; i < n; ++i) {
      DynamicObject o;
      o.id = "v" + std::to_string(i);
      o.cls = rng.uniform() < 0.8 ? ObjectClass::vehicle : ObjectClass::pedestrian;
      o.speed = 4.0;
      o.segment_id = "s0";
      o.arc_position = rng.uniform_range(0.0, length);
      refresh_pose(o, net);
      reg.insert(o);
    }

    const bool got = should_trigger(ego, reg, net, "n1", cfg);

    // full-scan oracle, written from the narrative: fire iff the front edge
    // is within S of the node and no vehicle sits strictly between.
    const double s_formula = v_ego * cfg.t_headway + cfg.l_r;
    const double front_edge = (length - ego_arc) - cfg.l_r;
    bool leader_between = false;
    for (const auto& o : reg.objects) {
      if (o.id == "ego" || o.cls != ObjectClass::vehicle) continue;
      if (o.arc_position > ego_arc && o.arc_position < length) leader_between = true;
    }
    const bool want = front_edge <= s_formula && !leader_between;

    if (got == want) ++agreements;
    if (got) ++fired;
    ++cases;
    // the car-following clause on its own
    if (leader_between && got) leader_case_ok = false;
    if (leader_between) ++blocked_by_leader;
  }
  char buf[160];
  std::snprintf(buf, sizeof(buf),
                "%d/%d oracle agreement, %d fired, %d leader-blocked placements", agreements,
                cases, fired, blocked_by_leader);
  report(8, "trigger conditions match the full-scan oracle",
         agreements == cases && leader_case_ok && fired > 20 && blocked_by_leader > 20, buf);
}

// -- criterion 9: determinism --------------------------------------------------

void criterion_determinism() {
  const std::filesystem::path out1 = "acceptance-det-1";
  const std::filesystem::path out2 = "acceptance-det-2";
  {
    Simulation sim(bundled("congestion_on.json"), out1.string());
    sim.run();
  }
  {
    Simulation sim(bundled("congestion_on.json"), out2.string());
    sim.run();
  }
  bool pass = true;
  for (const auto* name : {"latency.csv", "occupancy.csv", "routes.csv"}) {
    const std::string a = slurp(out1 / name);
    if (a.empty() || a != slurp(out2 / name)) pass = false;
  }
  report(9, "identical config and seed give byte-identical traces", pass,
         pass ? "latency.csv, occupancy.csv, routes.csv identical" : "trace files differ");
}

}  // namespace

int main(int argc, char** argv) {
  if (argc > 1) g_scenario_dir = argv[1];

  try {
    criterion_trigger_arithmetic();
    criterion_worst_case_budget();
    criterion_distribution_fidelity();
    criterion_route_selection();
    criterion_planner_oracle();
    criterion_fusion_oracle();
    criterion_transform_roundtrip();
    criterion_trigger_conditions();
    criterion_determinism();
  } catch (const std::exception& e) {
    std::fprintf(stderr, "acceptance suite aborted: %s\n", e.what());
    return 99;
  }

  if (g_failures == 0) {
    std::printf("all acceptance criteria passed\n");
  } else {
    std::printf("%d acceptance criteria FAILED\n", g_failures);
  }
  return g_failures;
}
