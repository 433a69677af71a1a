#pragma once

// Scenario document: every knob of one simulation run. JSON sections mirror
// the subsystem configs; omitted sections fall back to defaults, unknown keys
// are rejected. The top-level `window` seeds cloud.window unless the cloud
// section overrides it.

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "twinsim/cloud.hpp"
#include "twinsim/edge.hpp"
#include "twinsim/map_io.hpp"
#include "twinsim/net.hpp"
#include "twinsim/planner.hpp"
#include "twinsim/traffic.hpp"
#include "twinsim/vehicle.hpp"

namespace twinsim {

struct EgoConfig {
  Vec2 origin;
  Vec2 destination;
  double v_ego = 5.5556;  // 20 km/h
  std::string start_segment;
  double start_arc = 0.0;
};

struct EdgeConfig {
  NoiseModel noise;
  double sensor_period = 0.1;  // seconds, 10 Hz LiDAR cadence
  std::map<std::string, NoiseModel> per_rsu;

  const NoiseModel& for_rsu(const std::string& rsu_id) const {
    auto it = per_rsu.find(rsu_id);
    return it == per_rsu.end() ? noise : it->second;
  }
};

struct CloudConfig {
  double window = 0.5;     // synchronization window, seconds
  double epsilon = 1.5;    // fusion distance, meters
  double lateral_max = 3.0;
  double v_stationary = 0.3;
  int k = 5;  // windows of track history
  TriangularDist compute_latency{0.181, 0.188, 0.207};  // seconds
  double sync_delay = 0.25;  // emission lag after window close, seconds
};

struct VehicleConfig {
  TriggerConfig trigger;
  double status_period = 0.1;  // seconds
};

struct LinksConfig {
  // Measured defaults where available: dsrc carries the Wi-Fi measurements;
  // the two backbone halves split the combined up/download measurement.
  // cellular and mmwave are declared placeholders.
  LinkModel cellular{LinkClass::cellular, {0.020, 0.050, 0.120}, 0.0};
  LinkModel dsrc{LinkClass::dsrc, {0.00181, 0.0158, 0.105}, 0.0};
  LinkModel mmwave{LinkClass::mmwave, {0.0005, 0.001, 0.003}, 0.0};
  LinkModel backbone_up{LinkClass::wired, {0.001215, 0.001305, 0.001345}, 0.0};
  LinkModel backbone_down{LinkClass::wired, {0.001215, 0.001305, 0.001345}, 0.0};
  LinkModel request{LinkClass::wired, {0.0, 0.0, 0.0}, 0.0};
  LinkSelectionPolicy policy;
  double retx_timeout = 0.2;  // seconds

  const LinkModel& by_class(LinkClass c) const {
    switch (c) {
      case LinkClass::cellular: return cellular;
      case LinkClass::dsrc: return dsrc;
      case LinkClass::mmwave: return mmwave;
      case LinkClass::wired: return backbone_up;
    }
    return cellular;
  }
};

struct ScenarioConfig {
  std::string map_path;
  std::vector<FlowSpec> flows;
  EgoConfig ego;
  EdgeConfig edge;
  CloudConfig cloud;
  PlannerConfig planner;
  VehicleConfig vehicle;
  LinksConfig links;
  std::uint64_t seed = 1;
  double duration = 0.0;
};

namespace detail {

inline Vec2 parse_point(const json& v, const std::string& where) {
  if (!v.is_array() || v.size() != 2) throw ParseError(where + " must be [x, y]");
  return {as_number(v[0], where), as_number(v[1], where)};
}

inline TriangularDist parse_triangular(const json& v, const std::string& where) {
  if (!v.is_array() || v.size() != 3) throw ParseError(where + " must be [min, mode, max]");
  TriangularDist d{as_number(v[0], where), as_number(v[1], where), as_number(v[2], where)};
  if (!d.valid()) throw ParseError(where + " must satisfy min <= mode <= max");
  return d;
}

inline void parse_noise_into(const json& j, NoiseModel& noise, const std::string& where) {
  if (j.contains("sigma_pos")) noise.sigma_pos = as_number(j["sigma_pos"], where + ".sigma_pos");
  if (j.contains("p_miss")) noise.p_miss = as_number(j["p_miss"], where + ".p_miss");
  if (j.contains("c_min")) noise.c_min = as_number(j["c_min"], where + ".c_min");
  if (j.contains("compute_latency")) {
    noise.compute_latency = parse_triangular(j["compute_latency"], where + ".compute_latency");
  }
  if (noise.p_miss < 0.0 || noise.p_miss > 1.0) throw ParseError(where + ".p_miss out of [0,1]");
  if (noise.c_min < 0.0 || noise.c_min > 1.0) throw ParseError(where + ".c_min out of [0,1]");
  if (noise.sigma_pos < 0.0) throw ParseError(where + ".sigma_pos must be >= 0");
}

inline void parse_link_into(const json& j, LinkModel& link, const std::string& where) {
  reject_unknown_keys(j, {"latency", "p_drop"}, where);
  if (j.contains("latency")) link.latency = parse_triangular(j["latency"], where + ".latency");
  if (j.contains("p_drop")) link.p_drop = as_number(j["p_drop"], where + ".p_drop");
  if (link.p_drop < 0.0 || link.p_drop > 1.0) throw ParseError(where + ".p_drop out of [0,1]");
}

inline std::vector<CoverageZone> parse_zones(const json& j, const std::string& where) {
  if (!j.is_array()) throw ParseError(where + " must be an array");
  std::vector<CoverageZone> zones;
  for (const auto& jz : j) {
    reject_unknown_keys(jz, {"x", "y", "radius"}, where + " entry");
    CoverageZone z;
    z.center.x = as_number(require_key(jz, "x", where), where + ".x");
    z.center.y = as_number(require_key(jz, "y", where), where + ".y");
    z.radius = as_number(require_key(jz, "radius", where), where + ".radius");
    if (z.radius <= 0.0) throw ParseError(where + " radius must be > 0");
    zones.push_back(z);
  }
  return zones;
}

}  // namespace detail

/// Parses a scenario document. `base_dir` resolves the relative map path.
inline ScenarioConfig load_scenario(const std::string& document,
                                    const std::filesystem::path& base_dir) {
  using namespace detail;

  json doc;
  try {
    doc = json::parse(document);
  } catch (const json::exception& e) {
    throw ParseError(std::string("scenario document is not valid JSON: ") + e.what());
  }
  if (!doc.is_object()) throw ParseError("scenario document must be a JSON object");
  reject_unknown_keys(doc,
                      {"map", "flows", "ego", "edge", "cloud", "planner", "vehicle", "links",
                       "seed", "duration", "window"},
                      "scenario document");

  ScenarioConfig cfg;

  const std::filesystem::path map_path(
      as_string(require_key(doc, "map", "scenario document"), "map path"));
  cfg.map_path = map_path.is_absolute() ? map_path.string() : (base_dir / map_path).string();

  cfg.duration = as_number(require_key(doc, "duration", "scenario document"), "duration");
  if (cfg.duration <= 0.0) throw ParseError("duration must be > 0");
  if (doc.contains("seed")) {
    const double s = as_number(doc["seed"], "seed");
    if (s < 0 || s != std::floor(s)) throw ParseError("seed must be a non-negative integer");
    cfg.seed = static_cast<std::uint64_t>(s);
  }
  if (doc.contains("window")) {
    cfg.cloud.window = as_number(doc["window"], "window");
  }

  if (doc.contains("flows")) {
    if (!doc["flows"].is_array()) throw ParseError("flows must be an array");
    for (const auto& jf : doc["flows"]) {
      reject_unknown_keys(jf, {"entry_node", "route", "class", "spawn_rate", "speed"},
                          "flow record");
      FlowSpec flow;
      flow.entry_node = as_string(require_key(jf, "entry_node", "flow record"), "entry_node");
      const json& jroute = require_key(jf, "route", "flow record");
      if (!jroute.is_array()) throw ParseError("flow route must be an array of segment ids");
      for (const auto& js : jroute) {
        flow.route.push_back(as_string(js, "flow route segment"));
      }
      flow.cls = parse_object_class(
          as_string(require_key(jf, "class", "flow record"), "flow class"), "flow record");
      flow.spawn_rate = as_number(require_key(jf, "spawn_rate", "flow record"), "spawn_rate");
      flow.speed = as_number(require_key(jf, "speed", "flow record"), "flow speed");
      cfg.flows.push_back(std::move(flow));
    }
  }

  {
    const json& je = require_key(doc, "ego", "scenario document");
    reject_unknown_keys(je, {"origin", "destination", "v_ego", "start_segment", "start_arc"},
                        "ego section");
    cfg.ego.origin = parse_point(require_key(je, "origin", "ego section"), "ego.origin");
    cfg.ego.destination =
        parse_point(require_key(je, "destination", "ego section"), "ego.destination");
    cfg.ego.v_ego = as_number(require_key(je, "v_ego", "ego section"), "ego.v_ego");
    if (cfg.ego.v_ego <= 0.0) throw ParseError("ego.v_ego must be > 0");
    cfg.ego.start_segment =
        as_string(require_key(je, "start_segment", "ego section"), "ego.start_segment");
    cfg.ego.start_arc = as_number(require_key(je, "start_arc", "ego section"), "ego.start_arc");
    if (cfg.ego.start_arc < 0.0) throw ParseError("ego.start_arc must be >= 0");
  }

  if (doc.contains("edge")) {
    const json& je = doc["edge"];
    reject_unknown_keys(
        je, {"sigma_pos", "p_miss", "c_min", "compute_latency", "sensor_period", "per_rsu"},
        "edge section");
    parse_noise_into(je, cfg.edge.noise, "edge");
    if (je.contains("sensor_period")) {
      cfg.edge.sensor_period = as_number(je["sensor_period"], "edge.sensor_period");
      if (cfg.edge.sensor_period <= 0.0) throw ParseError("edge.sensor_period must be > 0");
    }
    if (je.contains("per_rsu")) {
      for (const auto& [rsu_id, jo] : je["per_rsu"].items()) {
        reject_unknown_keys(jo, {"sigma_pos", "p_miss", "c_min", "compute_latency"},
                            "edge.per_rsu." + rsu_id);
        NoiseModel noise = cfg.edge.noise;
        parse_noise_into(jo, noise, "edge.per_rsu." + rsu_id);
        cfg.edge.per_rsu[rsu_id] = noise;
      }
    }
  }

  if (doc.contains("cloud")) {
    const json& jc = doc["cloud"];
    reject_unknown_keys(jc,
                        {"window", "epsilon", "lateral_max", "v_stationary", "k",
                         "compute_latency", "sync_delay"},
                        "cloud section");
    if (jc.contains("window")) cfg.cloud.window = as_number(jc["window"], "cloud.window");
    if (jc.contains("epsilon")) cfg.cloud.epsilon = as_number(jc["epsilon"], "cloud.epsilon");
    if (jc.contains("lateral_max")) {
      cfg.cloud.lateral_max = as_number(jc["lateral_max"], "cloud.lateral_max");
    }
    if (jc.contains("v_stationary")) {
      cfg.cloud.v_stationary = as_number(jc["v_stationary"], "cloud.v_stationary");
    }
    if (jc.contains("k")) {
      const double k = as_number(jc["k"], "cloud.k");
      if (k < 2 || k != std::floor(k)) throw ParseError("cloud.k must be an integer >= 2");
      cfg.cloud.k = static_cast<int>(k);
    }
    if (jc.contains("compute_latency")) {
      cfg.cloud.compute_latency =
          parse_triangular(jc["compute_latency"], "cloud.compute_latency");
    }
    if (jc.contains("sync_delay")) {
      cfg.cloud.sync_delay = as_number(jc["sync_delay"], "cloud.sync_delay");
      if (cfg.cloud.sync_delay < 0.0) throw ParseError("cloud.sync_delay must be >= 0");
    }
    if (cfg.cloud.window <= 0.0) throw ParseError("cloud.window must be > 0");
    if (cfg.cloud.epsilon <= 0.0) throw ParseError("cloud.epsilon must be > 0");
    if (cfg.cloud.lateral_max <= 0.0) throw ParseError("cloud.lateral_max must be > 0");
  }

  if (doc.contains("planner")) {
    const json& jp = doc["planner"];
    reject_unknown_keys(jp, {"theta", "beta"}, "planner section");
    if (jp.contains("theta")) cfg.planner.theta = as_number(jp["theta"], "planner.theta");
    if (jp.contains("beta")) cfg.planner.beta = as_number(jp["beta"], "planner.beta");
    if (cfg.planner.theta < 0.0 || cfg.planner.theta > 1.0) {
      throw ParseError("planner.theta out of [0,1]");
    }
    if (cfg.planner.beta < 0.0) throw ParseError("planner.beta must be >= 0");
  }

  if (doc.contains("vehicle")) {
    const json& jv = doc["vehicle"];
    reject_unknown_keys(jv, {"t_headway", "l_r", "v_ego", "status_period"}, "vehicle section");
    if (jv.contains("t_headway")) {
      cfg.vehicle.trigger.t_headway = as_number(jv["t_headway"], "vehicle.t_headway");
    }
    if (jv.contains("l_r")) cfg.vehicle.trigger.l_r = as_number(jv["l_r"], "vehicle.l_r");
    if (jv.contains("status_period")) {
      cfg.vehicle.status_period = as_number(jv["status_period"], "vehicle.status_period");
    }
    if (jv.contains("v_ego")) {
      // Accepted as an alias of ego.v_ego; a disagreement is a config bug.
      const double v = as_number(jv["v_ego"], "vehicle.v_ego");
      if (std::abs(v - cfg.ego.v_ego) > 1e-12) {
        throw ParseError("vehicle.v_ego disagrees with ego.v_ego");
      }
    }
    if (cfg.vehicle.trigger.t_headway <= 0.0 || cfg.vehicle.trigger.l_r <= 0.0) {
      throw ParseError("vehicle.t_headway and vehicle.l_r must be > 0");
    }
    if (cfg.vehicle.status_period <= 0.0) throw ParseError("vehicle.status_period must be > 0");
  }

  if (doc.contains("links")) {
    const json& jl = doc["links"];
    reject_unknown_keys(jl,
                        {"cellular", "dsrc", "mmwave", "backbone_up", "backbone_down",
                         "request", "mmwave_zones", "dsrc_zones", "retx_timeout"},
                        "links section");
    if (jl.contains("cellular")) parse_link_into(jl["cellular"], cfg.links.cellular, "links.cellular");
    if (jl.contains("dsrc")) parse_link_into(jl["dsrc"], cfg.links.dsrc, "links.dsrc");
    if (jl.contains("mmwave")) parse_link_into(jl["mmwave"], cfg.links.mmwave, "links.mmwave");
    if (jl.contains("backbone_up")) {
      parse_link_into(jl["backbone_up"], cfg.links.backbone_up, "links.backbone_up");
    }
    if (jl.contains("backbone_down")) {
      parse_link_into(jl["backbone_down"], cfg.links.backbone_down, "links.backbone_down");
    }
    if (jl.contains("request")) parse_link_into(jl["request"], cfg.links.request, "links.request");
    if (jl.contains("mmwave_zones")) {
      cfg.links.policy.mmwave_zones = parse_zones(jl["mmwave_zones"], "links.mmwave_zones");
    }
    if (jl.contains("dsrc_zones")) {
      cfg.links.policy.dsrc_zones = parse_zones(jl["dsrc_zones"], "links.dsrc_zones");
    }
    if (jl.contains("retx_timeout")) {
      cfg.links.retx_timeout = as_number(jl["retx_timeout"], "links.retx_timeout");
      if (cfg.links.retx_timeout <= 0.0) throw ParseError("links.retx_timeout must be > 0");
    }
  }

  return cfg;
}

inline ScenarioConfig load_scenario_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open scenario file: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return load_scenario(buf.str(), std::filesystem::path(path).parent_path());
}

/// Cross-checks a scenario against its loaded network. Throws on violations
/// that only the map can reveal.
inline void validate_scenario(const ScenarioConfig& cfg, const RoadNetwork& net) {
  const RoadSegment& start = net.segment(cfg.ego.start_segment);
  if (cfg.ego.start_arc > start.length) {
    throw ValidationError("ego.start_arc exceeds the start segment length");
  }
  if (net.node(start.to_node).role != NodeRole::entrance) {
    throw ValidationError("ego start segment must lead to an entrance node");
  }
  if (net.nodes_with_role(NodeRole::exit).empty()) {
    throw ValidationError("map declares no exit node");
  }
  for (const auto& f : cfg.flows) {
    net.node(f.entry_node);
    for (const auto& seg : f.route) net.segment(seg);
  }
  // Flow path shape is validated by TrafficSim's constructor.
}

/// N_O: the entrance node the ego's start segment leads to.
inline std::string resolve_origin_node(const ScenarioConfig& cfg, const RoadNetwork& net) {
  return net.segment(cfg.ego.start_segment).to_node;
}

/// N_D: the exit node nearest the ego destination point (ties: smaller id).
inline std::string resolve_destination_node(const ScenarioConfig& cfg, const RoadNetwork& net) {
  std::string best;
  double best_dist = 0.0;
  for (const auto& id : net.nodes_with_role(NodeRole::exit)) {
    const double d = distance(net.node(id).position, cfg.ego.destination);
    if (best.empty() || d < best_dist) {
      best = id;
      best_dist = d;
    }
  }
  if (best.empty()) throw ValidationError("map declares no exit node");
  return best;
}

}  // namespace twinsim
