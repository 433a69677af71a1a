#pragma once

// Trace files. All floats are serialized with a fixed 6-decimal format so a
// rerun with the same config and seed is byte-identical. Files are
// append-only with non-decreasing timestamps.
//
//   latency.csv   request_id,t_request,edge_compute,upload,cloud_compute,
//                 download,total,budget,within_budget
//   occupancy.csv stamp,segment,count,occupancy
//   routes.csv    decided_at,request_id,origin_node,destination_node,
//                 used_default,segments,total_length,max_occupancy,cost,
//                 occupancy_snapshot
//
// `segments` is |-joined; `occupancy_snapshot` is ;-joined seg=occ pairs and
// is sufficient to replay the planner decision offline.

#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "twinsim/net.hpp"
#include "twinsim/planner.hpp"
#include "twinsim/world.hpp"

namespace twinsim {

inline std::string fmt6(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6f", v);
  return buf;
}

class CsvWriter {
 public:
  CsvWriter() = default;

  void open(const std::string& path, const std::string& header) {
    out_.open(path, std::ios::binary | std::ios::trunc);
    if (!out_) throw std::runtime_error("cannot open trace file for writing: " + path);
    out_ << header << "\n";
  }

  bool is_open() const { return out_.is_open(); }

  void row(const std::string& line) { out_ << line << "\n"; }

  void close() {
    if (out_.is_open()) out_.close();
  }

 private:
  std::ofstream out_;
};

// ---------------------------------------------------------------------------
// Row records (also the reader's output)
// ---------------------------------------------------------------------------

struct LatencyRow {
  std::uint64_t request_id = 0;
  double t_request = 0.0;
  LatencyReport report;
};

struct OccupancyRow {
  double stamp = 0.0;
  std::string segment;
  int count = 0;
  double occupancy = 0.0;
};

struct RouteRow {
  double decided_at = 0.0;
  std::uint64_t request_id = 0;
  std::string origin_node;
  std::string destination_node;
  bool used_default = false;
  std::vector<std::string> segments;
  double total_length = 0.0;
  double max_occupancy = 0.0;
  double cost = 0.0;
  std::map<std::string, double> occupancy_snapshot;
};

inline std::string latency_csv_header() {
  return "request_id,t_request,edge_compute,upload,cloud_compute,download,total,budget,"
         "within_budget";
}

inline std::string occupancy_csv_header() { return "stamp,segment,count,occupancy"; }

inline std::string routes_csv_header() {
  return "decided_at,request_id,origin_node,destination_node,used_default,segments,"
         "total_length,max_occupancy,cost,occupancy_snapshot";
}

inline std::string to_csv(const LatencyRow& r) {
  std::ostringstream os;
  os << r.request_id << ',' << fmt6(r.t_request) << ',' << fmt6(r.report.edge_compute) << ','
     << fmt6(r.report.upload) << ',' << fmt6(r.report.cloud_compute) << ','
     << fmt6(r.report.download) << ',' << fmt6(r.report.total) << ',' << fmt6(r.report.budget)
     << ',' << (r.report.within_budget ? 1 : 0);
  return os.str();
}

inline std::string to_csv(const OccupancyRow& r) {
  std::ostringstream os;
  os << fmt6(r.stamp) << ',' << r.segment << ',' << r.count << ',' << fmt6(r.occupancy);
  return os.str();
}

inline std::string to_csv(const RouteRow& r) {
  std::ostringstream os;
  os << fmt6(r.decided_at) << ',' << r.request_id << ',' << r.origin_node << ','
     << r.destination_node << ',' << (r.used_default ? 1 : 0) << ',';
  for (std::size_t i = 0; i < r.segments.size(); ++i) {
    if (i) os << '|';
    os << r.segments[i];
  }
  os << ',' << fmt6(r.total_length) << ',' << fmt6(r.max_occupancy) << ',' << fmt6(r.cost)
     << ',';
  bool first = true;
  for (const auto& [seg, occ] : r.occupancy_snapshot) {
    if (!first) os << ';';
    os << seg << '=' << fmt6(occ);
    first = false;
  }
  return os.str();
}

// ---------------------------------------------------------------------------
// Readers
// ---------------------------------------------------------------------------

namespace detail {

inline std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (c == sep) {
      out.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  out.push_back(cur);
  return out;
}

inline double to_double(const std::string& s, const std::string& where) {
  try {
    std::size_t pos = 0;
    const double v = std::stod(s, &pos);
    if (pos != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw ParseError("bad number '" + s + "' in " + where);
  }
}

}  // namespace detail

inline std::vector<LatencyRow> read_latency_csv(std::istream& in) {
  std::vector<LatencyRow> rows;
  std::string line;
  if (!std::getline(in, line)) throw ParseError("latency csv is empty");
  if (line != latency_csv_header()) throw ParseError("latency csv has an unexpected header");
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto f = detail::split(line, ',');
    if (f.size() != 9) throw ParseError("latency csv row has wrong arity");
    LatencyRow r;
    r.request_id = static_cast<std::uint64_t>(detail::to_double(f[0], "request_id"));
    r.t_request = detail::to_double(f[1], "t_request");
    r.report.request_id = r.request_id;
    r.report.edge_compute = detail::to_double(f[2], "edge_compute");
    r.report.upload = detail::to_double(f[3], "upload");
    r.report.cloud_compute = detail::to_double(f[4], "cloud_compute");
    r.report.download = detail::to_double(f[5], "download");
    r.report.total = detail::to_double(f[6], "total");
    r.report.budget = detail::to_double(f[7], "budget");
    r.report.within_budget = f[8] == "1";
    rows.push_back(std::move(r));
  }
  return rows;
}

inline std::vector<LatencyRow> read_latency_csv_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open latency csv: " + path);
  return read_latency_csv(in);
}

inline std::vector<OccupancyRow> read_occupancy_csv_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open occupancy csv: " + path);
  std::vector<OccupancyRow> rows;
  std::string line;
  if (!std::getline(in, line) || line != occupancy_csv_header()) {
    throw ParseError("occupancy csv has an unexpected header");
  }
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto f = detail::split(line, ',');
    if (f.size() != 4) throw ParseError("occupancy csv row has wrong arity");
    rows.push_back({detail::to_double(f[0], "stamp"), f[1],
                    static_cast<int>(detail::to_double(f[2], "count")),
                    detail::to_double(f[3], "occupancy")});
  }
  return rows;
}

inline std::vector<RouteRow> read_routes_csv_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open routes csv: " + path);
  std::vector<RouteRow> rows;
  std::string line;
  if (!std::getline(in, line) || line != routes_csv_header()) {
    throw ParseError("routes csv has an unexpected header");
  }
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto f = detail::split(line, ',');
    if (f.size() != 10) throw ParseError("routes csv row has wrong arity");
    RouteRow r;
    r.decided_at = detail::to_double(f[0], "decided_at");
    r.request_id = static_cast<std::uint64_t>(detail::to_double(f[1], "request_id"));
    r.origin_node = f[2];
    r.destination_node = f[3];
    r.used_default = f[4] == "1";
    if (!f[5].empty()) r.segments = detail::split(f[5], '|');
    r.total_length = detail::to_double(f[6], "total_length");
    r.max_occupancy = detail::to_double(f[7], "max_occupancy");
    r.cost = detail::to_double(f[8], "cost");
    if (!f[9].empty()) {
      for (const auto& pair : detail::split(f[9], ';')) {
        const auto kv = detail::split(pair, '=');
        if (kv.size() != 2) throw ParseError("bad occupancy_snapshot entry: " + pair);
        r.occupancy_snapshot[kv[0]] = detail::to_double(kv[1], "occupancy_snapshot");
      }
    }
    rows.push_back(std::move(r));
  }
  return rows;
}

}  // namespace twinsim
