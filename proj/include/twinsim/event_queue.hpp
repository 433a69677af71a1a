#pragma once

// Logical-clock discrete-event core. Events run in (time, sequence) order;
// the sequence number is assigned at scheduling time, so equal-time events
// execute in the order they were scheduled and the whole simulation is
// reproducible. Logical processes never read wall-clock time.

#include <cstdint>
#include <functional>
#include <queue>
#include <stdexcept>
#include <vector>

namespace twinsim {

class EventQueue {
 public:
  using Handler = std::function<void()>;

  double now() const { return now_; }

  /// Schedules `fn` at absolute time `at` (>= now).
  void schedule_at(double at, Handler fn) {
    if (at < now_) throw std::logic_error("cannot schedule into the past");
    heap_.push(Event{at, seq_++, std::move(fn)});
  }

  void schedule_in(double delay, Handler fn) { schedule_at(now_ + delay, std::move(fn)); }

  bool empty() const { return heap_.empty(); }

  /// Runs events with time <= t_end, then advances the clock to t_end.
  void run_until(double t_end) {
    while (!heap_.empty() && heap_.top().at <= t_end) {
      Event ev = heap_.top();
      heap_.pop();
      now_ = ev.at;
      ev.fn();
    }
    now_ = std::max(now_, t_end);
  }

 private:
  struct Event {
    double at;
    std::uint64_t seq;
    Handler fn;
  };
  struct Later {
    bool operator()(const Event& a, const Event& b) const {
      if (a.at != b.at) return a.at > b.at;
      return a.seq > b.seq;
    }
  };

  double now_ = 0.0;
  std::uint64_t seq_ = 0;
  std::priority_queue<Event, std::vector<Event>, Later> heap_;
};

}  // namespace twinsim
