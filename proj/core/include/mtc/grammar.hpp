#pragma once

// Abstract syntax for medical temporal constraints (MTCs), a lenient parser
// from surface strings, and the canonical serializer.
//
// Canonical forms (lowercase, digits, singular units):
//   type 1  "{n} {unit} {dp} {act}"     30 minute before eating
//   type 2  "{n} times {unit}"           3 times day
//   type 3  "{n} {unit} {ip}"            6 hour apart
//   type 4  "{dp} {act}"                 before sleep
//   type 5  "{dp} {clock}"               before 9 am
//   type 6  "{p} {t} each {unit}"        at the same time each day
//   type 7  "{p} {d}"                    in morning
// A negated constraint is prefixed with "not ".

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace mtc {

enum class TimeUnit { Minute, Hour, Day, Week };
enum class DependencyPrep { Before, After };
enum class IntervalPrep { Within, For, Apart };
enum class OccurrencePrep { At, In };
enum class DayPart { Morning, Evening, Noon };
enum class Meridiem { Am, Pm };

std::string_view to_string(TimeUnit u);
std::string_view to_string(DependencyPrep p);
std::string_view to_string(IntervalPrep p);
std::string_view to_string(OccurrencePrep p);
std::string_view to_string(DayPart d);
std::string_view to_string(Meridiem m);

/// Accepts singular, plural and common abbreviated spellings ("hrs").
std::optional<TimeUnit> parse_time_unit(std::string_view token);

/// Length of one unit in minutes.
std::int64_t minutes_in(TimeUnit u);

struct SameTime {
  friend bool operator==(const SameTime&, const SameTime&) = default;
};

struct ClockTime {
  int hour = 12;  // 1..12
  int minute = 0; // 0..59
  Meridiem meridiem = Meridiem::Am;

  /// Minutes after midnight, 0..1439.
  int minute_of_day() const;
  static std::optional<ClockTime> make(int hour, int minute, Meridiem m);
  friend bool operator==(const ClockTime&, const ClockTime&) = default;
};

using TimeStamp = std::variant<SameTime, ClockTime>;

/// Normalized activity phrase: nonempty, lowercase, single-spaced. The first
/// word starts with a letter and words use only [a-z0-9'/-], so an activity
/// never collides with a clock time or another form's keywords.
class Activity {
 public:
  /// Throws std::invalid_argument when the folded phrase breaks the rules above.
  explicit Activity(std::string_view phrase);

  /// Reason the folded phrase is not an activity, or nullopt if it is one.
  static std::optional<std::string> check(std::string_view folded);

  const std::string& name() const { return name_; }
  friend bool operator==(const Activity&, const Activity&) = default;

 private:
  std::string name_;
};

struct DefinitiveDependency {
  std::uint32_t count;
  TimeUnit unit;
  DependencyPrep prep;
  Activity activity;
  friend bool operator==(const DefinitiveDependency&, const DefinitiveDependency&) = default;
};

struct Frequency {
  std::uint32_t count;
  TimeUnit unit;
  friend bool operator==(const Frequency&, const Frequency&) = default;
};

struct Interval {
  std::uint32_t count;
  TimeUnit unit;
  IntervalPrep prep;
  friend bool operator==(const Interval&, const Interval&) = default;
};

struct ImpreciseDependency {
  DependencyPrep prep;
  Activity activity;
  friend bool operator==(const ImpreciseDependency&, const ImpreciseDependency&) = default;
};

struct TimeDependency {
  DependencyPrep prep;
  ClockTime time;
  friend bool operator==(const TimeDependency&, const TimeDependency&) = default;
};

struct Consistency {
  OccurrencePrep prep;
  TimeStamp time;
  TimeUnit unit;
  friend bool operator==(const Consistency&, const Consistency&) = default;
};

struct TimeOfDay {
  OccurrencePrep prep;
  DayPart part;
  friend bool operator==(const TimeOfDay&, const TimeOfDay&) = default;
};

using MtcForm = std::variant<DefinitiveDependency, Frequency, Interval, ImpreciseDependency,
                             TimeDependency, Consistency, TimeOfDay>;

struct Mtc {
  MtcForm form;
  bool negated = false;
  friend bool operator==(const Mtc&, const Mtc&) = default;
};

/// MTC type number 1..7, bijective with the MtcForm alternatives.
class MtcType {
 public:
  /// Throws std::out_of_range outside 1..7.
  explicit MtcType(int value);
  int value() const { return value_; }
  std::string_view name() const;
  static std::vector<MtcType> all();
  friend auto operator<=>(const MtcType&, const MtcType&) = default;

 private:
  int value_;
};

MtcType mtc_type(const Mtc& mtc);

/// A string that does not conform to the grammar.
class NonvalidMtc : public std::runtime_error {
 public:
  NonvalidMtc(std::string input, std::string reason);
  const std::string& input() const { return input_; }
  const std::string& reason() const { return reason_; }

 private:
  std::string input_;
  std::string reason_;
};

struct ParseOutcome {
  std::optional<Mtc> mtc;
  std::string reason;  // set when mtc is empty
};

ParseOutcome try_parse_mtc(std::string_view text);

/// Throws NonvalidMtc.
Mtc parse_mtc(std::string_view text);

std::string serialize(const Mtc& mtc);
std::string serialize(const ClockTime& t);

bool is_valid(std::string_view text);

/// Ordered, duplicate-free (by canonical string) sequence of constraints.
class MtcList {
 public:
  MtcList() = default;

  /// Returns false when an equal canonical string is already present.
  bool add(const Mtc& mtc);
  bool contains(const Mtc& mtc) const;

  std::size_t size() const { return items_.size(); }
  bool empty() const { return items_.empty(); }
  const Mtc& operator[](std::size_t i) const { return items_[i]; }
  auto begin() const { return items_.begin(); }
  auto end() const { return items_.end(); }

  std::vector<std::string> canonical_strings() const;
  friend bool operator==(const MtcList&, const MtcList&) = default;

 private:
  std::vector<Mtc> items_;
  std::vector<std::string> keys_;
};

struct NonvalidSegment {
  std::string segment;
  std::string reason;
};

struct ListParse {
  MtcList items;
  std::vector<NonvalidSegment> errors;
};

/// Segments are separated by newlines or ';'. Blank segments are skipped.
ListParse parse_mtc_list(std::string_view text);

/// Human-readable terminal and nonterminal listings used in prompts.
std::string describe_terminals();
std::string describe_nonterminals();

}  // namespace mtc
