#pragma once

#include <charconv>
#include <cstdint>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <system_error>
#include <utility>
#include <vector>

#include "harris/core.hpp"
#include "harris/error.hpp"

namespace harris {

/// What a step proposed to change.
struct Direction {
  enum class Kind : std::uint8_t { full, coordinate, model };

  Kind kind = Kind::full;
  std::size_t index = 0;  // 0-based coordinate, or the proposed model id

  static Direction full() { return {Kind::full, 0}; }
  static Direction coordinate(std::size_t i) { return {Kind::coordinate, i}; }
  static Direction model(std::size_t m) { return {Kind::model, m}; }

  friend bool operator==(const Direction&, const Direction&) = default;
};

template <class State>
struct StepEvent {
  std::uint64_t step = 0;
  Direction direction;
  bool accepted = false;
  State state;
};

/// Append-only record of a chain run. Step indices are contiguous from 1,
/// and a rejected step must leave the state unchanged.
template <class State>
class Trace {
 public:
  explicit Trace(State initial) : initial_(std::move(initial)) {}

  const State& initial() const noexcept { return initial_; }
  const State& current() const noexcept { return events_.empty() ? initial_ : events_.back().state; }
  const std::vector<StepEvent<State>>& events() const noexcept { return events_; }
  std::size_t size() const noexcept { return events_.size(); }
  bool empty() const noexcept { return events_.empty(); }
  std::uint64_t last_step() const noexcept { return events_.empty() ? 0 : events_.back().step; }

  void record(StepEvent<State> event) {
    if (event.step != last_step() + 1)
      throw InvalidInput("trace step index must be " + std::to_string(last_step() + 1) + ", got " +
                         std::to_string(event.step));
    if (!event.accepted && !(event.state == current()))
      throw InvalidInput("rejected step must leave the state unchanged");
    events_.push_back(std::move(event));
  }

 private:
  State initial_;
  std::vector<StepEvent<State>> events_;
};

template <class State>
Trace<State> record_step(Trace<State> trace, StepEvent<State> event) {
  trace.record(std::move(event));
  return trace;
}

/// Shortest round-trip decimal representation of `v`.
inline std::string format_double(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  if (ec != std::errc{}) throw NumericalError("failed to format number");
  return std::string(buf, ptr);
}

inline std::string format_direction(const Direction& d) {
  switch (d.kind) {
    case Direction::Kind::full:
      return "*";
    case Direction::Kind::coordinate:
      return std::to_string(d.index + 1);
    case Direction::Kind::model:
      return "m" + std::to_string(d.index);
  }
  return "?";
}

inline std::string format_coords(const Point& x) {
  std::string out;
  for (std::size_t i = 0; i < x.dim(); ++i) {
    if (i) out += ';';
    out += format_double(x[i]);
  }
  return out;
}

/// CSV with header `step,direction,accepted,coords`. Coordinates are joined
/// by ';'. Directions are 1-based coordinates, `*` for full-dimensional
/// proposals and `m<id>` for model jumps.
template <class State>
void write_trace_csv(std::ostream& os, const Trace<State>& trace) {
  os << "step,direction,accepted,coords\n";
  for (const auto& e : trace.events())
    os << e.step << ',' << format_direction(e.direction) << ',' << (e.accepted ? 1 : 0) << ','
       << format_coords(e.state) << '\n';
}

template <class State>
std::string trace_to_csv(const Trace<State>& trace) {
  std::ostringstream os;
  write_trace_csv(os, trace);
  return os.str();
}

}  // namespace harris
