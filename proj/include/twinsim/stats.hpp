#pragma once

// Run statistics in the measured-latency table shape: min / avg / max / mean
// deviation per phase and for the total. "Mean dev." is the mean absolute
// deviation from the average.

#include <cmath>
#include <cstdint>
#include <iomanip>
#include <ostream>
#include <string>
#include <vector>

#include "twinsim/trace.hpp"

namespace twinsim {

struct StatRow {
  double min = 0.0;
  double avg = 0.0;
  double max = 0.0;
  double mean_dev = 0.0;
  std::size_t count = 0;
};

inline StatRow compute_stats(const std::vector<double>& values) {
  if (values.empty()) throw ValidationError("cannot summarize an empty series");
  StatRow s;
  s.count = values.size();
  s.min = values.front();
  s.max = values.front();
  double sum = 0.0;
  for (const double v : values) {
    s.min = std::min(s.min, v);
    s.max = std::max(s.max, v);
    sum += v;
  }
  s.avg = sum / static_cast<double>(values.size());
  double dev = 0.0;
  for (const double v : values) dev += std::abs(v - s.avg);
  s.mean_dev = dev / static_cast<double>(values.size());
  return s;
}

struct LatencySummary {
  StatRow edge_compute;
  StatRow upload;
  StatRow cloud_compute;
  StatRow download;
  StatRow total;
  std::size_t requests = 0;
};

inline LatencySummary summarize_latency(const std::vector<LatencyRow>& rows) {
  if (rows.empty()) throw ValidationError("latency trace contains no requests");
  std::vector<double> edge, up, cloud, down, total;
  for (const auto& r : rows) {
    edge.push_back(r.report.edge_compute);
    up.push_back(r.report.upload);
    cloud.push_back(r.report.cloud_compute);
    down.push_back(r.report.download);
    total.push_back(r.report.total);
  }
  LatencySummary s;
  s.edge_compute = compute_stats(edge);
  s.upload = compute_stats(up);
  s.cloud_compute = compute_stats(cloud);
  s.download = compute_stats(down);
  s.total = compute_stats(total);
  s.requests = rows.size();
  return s;
}

struct RouteDecisionSummary {
  double decided_at = 0.0;
  std::uint64_t request_id = 0;
  bool used_default = false;
  std::vector<std::string> segments;
};

struct RunSummary {
  bool has_latency = false;
  LatencySummary latency;
  std::vector<RouteDecisionSummary> routes;
  std::uint64_t budget_violations = 0;
  std::uint64_t dropped_messages = 0;
  std::uint64_t late_detections = 0;
  std::uint64_t retransmissions = 0;
  std::uint64_t requests_unanswered = 0;
};

inline void print_stat_row(std::ostream& os, const std::string& name, const StatRow& s) {
  os << "  " << std::left << std::setw(14) << name << std::right << std::fixed
     << std::setprecision(6) << std::setw(12) << s.min << std::setw(12) << s.avg
     << std::setw(12) << s.max << std::setw(12) << s.mean_dev << "\n";
}

inline void print_summary(std::ostream& os, const RunSummary& summary) {
  os << "latency (seconds)\n";
  if (summary.has_latency) {
    os << "  " << std::left << std::setw(14) << "phase" << std::right << std::setw(12) << "min"
       << std::setw(12) << "avg" << std::setw(12) << "max" << std::setw(12) << "mean_dev"
       << "\n";
    print_stat_row(os, "edge_compute", summary.latency.edge_compute);
    print_stat_row(os, "upload", summary.latency.upload);
    print_stat_row(os, "cloud_compute", summary.latency.cloud_compute);
    print_stat_row(os, "download", summary.latency.download);
    print_stat_row(os, "total", summary.latency.total);
    os << "  requests: " << summary.latency.requests << "\n";
  } else {
    os << "  (no requests issued)\n";
  }
  os << "routes\n";
  for (const auto& r : summary.routes) {
    os << "  t=" << fmt6(r.decided_at) << " request=" << r.request_id << " "
       << (r.used_default ? "default" : "alternative") << " [";
    for (std::size_t i = 0; i < r.segments.size(); ++i) {
      if (i) os << "|";
      os << r.segments[i];
    }
    os << "]\n";
  }
  os << "counters\n";
  os << "  budget_violations: " << summary.budget_violations << "\n";
  os << "  dropped_messages: " << summary.dropped_messages << "\n";
  os << "  late_detections: " << summary.late_detections << "\n";
  os << "  retransmissions: " << summary.retransmissions << "\n";
  os << "  requests_unanswered: " << summary.requests_unanswered << "\n";
}

}  // namespace twinsim
