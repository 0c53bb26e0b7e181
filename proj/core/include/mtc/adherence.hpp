#pragma once

// Checks a constraint against a patient timeline of intake and activity
// events. The semantics per constraint type are this library's own
// interpretation; every threshold lives in AdherenceConfig.
//
//   1  every intake has a matching activity at intake +/- n*unit (before:
//      activity after the intake), within dependency_tolerance
//   2  every complete period of one unit, counted from the window start,
//      holds exactly n intakes
//   3  apart: consecutive intakes at least n*unit apart; within: at most;
//      for: indeterminate (regimen duration is not observable)
//   4  every intake has a matching activity within imprecision_horizon on
//      the required side
//   5  every intake's local clock time is strictly before/after t
//   6  same time: for each intake rank within a period, the spread of the
//      intakes' phase in the period is <= consistency_tolerance; clock time:
//      every intake within consistency_tolerance of t
//   7  every intake's local clock time falls in the day-part window
//
// Without intakes in the window the verdict is indeterminate; so is a
// dependency check when the activity never appears. Negation swaps
// satisfied and violated.

#include <chrono>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "mtc/grammar.hpp"
#include "mtc/normalize.hpp"

namespace mtc {

using Instant = std::chrono::sys_time<std::chrono::minutes>;

enum class EventKind { Intake, Activity };

struct TimelineEvent {
  EventKind kind = EventKind::Intake;
  std::string name;
  Instant time;                // UTC
  int utc_offset_minutes = 0;  // offset of the recorded local time

  /// Local wall-clock minutes since the epoch.
  std::chrono::minutes local_minutes() const;
};

struct ParsedTimestamp {
  Instant time;
  int utc_offset_minutes = 0;
};

/// ISO-8601 date-time with a "Z" or "+hh:mm" offset, minute precision
/// (seconds are accepted and truncated). Throws std::invalid_argument.
ParsedTimestamp parse_timestamp(std::string_view s);
std::string format_local(const TimelineEvent& e);

/// Half-open [start, end).
struct Window {
  Instant start;
  Instant end;
};

/// From local midnight before the first event to local midnight after the
/// last one, using the first event's offset.
Window default_window(const std::vector<TimelineEvent>& events);

class Timeline {
 public:
  /// Sorts events, drops those outside the window and normalizes names.
  Timeline(std::vector<TimelineEvent> events, Window window,
           const AliasTable& aliases = AliasTable::defaults());

  const std::vector<TimelineEvent>& events() const { return events_; }
  const Window& window() const { return window_; }
  std::vector<TimelineEvent> intakes() const;

 private:
  std::vector<TimelineEvent> events_;
  Window window_;
};

/// One JSON object per line: {"kind": "intake"|"activity", "name", "timestamp"}.
std::vector<TimelineEvent> read_timeline_events(std::istream& in);

struct DayPartWindow {
  int start_minute;  // inclusive, minutes after midnight
  int end_minute;    // exclusive
};

struct AdherenceConfig {
  std::chrono::minutes dependency_tolerance{10};
  std::chrono::minutes imprecision_horizon{120};
  std::chrono::minutes consistency_tolerance{60};
  DayPartWindow morning{5 * 60, 12 * 60};
  DayPartWindow noon{11 * 60, 13 * 60};
  DayPartWindow evening{17 * 60, 22 * 60};
};

enum class VerdictKind { Satisfied, Violated, Indeterminate };
std::string_view to_string(VerdictKind v);

struct Verdict {
  VerdictKind kind;
  std::string explanation;
};

Verdict check(const Mtc& mtc, const Timeline& timeline, const AdherenceConfig& cfg = {});

}  // namespace mtc
