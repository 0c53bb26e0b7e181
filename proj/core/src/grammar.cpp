#include "mtc/grammar.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <charconv>
#include <limits>

#include "mtc/normalize.hpp"
#include "mtc/text.hpp"

namespace mtc {

std::string_view to_string(TimeUnit u) {
  switch (u) {
    case TimeUnit::Minute: return "minute";
    case TimeUnit::Hour: return "hour";
    case TimeUnit::Day: return "day";
    case TimeUnit::Week: return "week";
  }
  return "?";
}

std::string_view to_string(DependencyPrep p) {
  return p == DependencyPrep::Before ? "before" : "after";
}

std::string_view to_string(IntervalPrep p) {
  switch (p) {
    case IntervalPrep::Within: return "within";
    case IntervalPrep::For: return "for";
    case IntervalPrep::Apart: return "apart";
  }
  return "?";
}

std::string_view to_string(OccurrencePrep p) { return p == OccurrencePrep::At ? "at" : "in"; }

std::string_view to_string(DayPart d) {
  switch (d) {
    case DayPart::Morning: return "morning";
    case DayPart::Evening: return "evening";
    case DayPart::Noon: return "noon";
  }
  return "?";
}

std::string_view to_string(Meridiem m) { return m == Meridiem::Am ? "am" : "pm"; }

std::optional<TimeUnit> parse_time_unit(std::string_view token) {
  static constexpr std::array<std::pair<std::string_view, TimeUnit>, 14> kUnits{{
      {"minute", TimeUnit::Minute}, {"minutes", TimeUnit::Minute}, {"min", TimeUnit::Minute},
      {"mins", TimeUnit::Minute},   {"hour", TimeUnit::Hour},      {"hours", TimeUnit::Hour},
      {"hr", TimeUnit::Hour},       {"hrs", TimeUnit::Hour},       {"day", TimeUnit::Day},
      {"days", TimeUnit::Day},      {"week", TimeUnit::Week},      {"weeks", TimeUnit::Week},
      {"wk", TimeUnit::Week},       {"wks", TimeUnit::Week},
  }};
  for (const auto& [word, unit] : kUnits)
    if (word == token) return unit;
  return std::nullopt;
}

std::int64_t minutes_in(TimeUnit u) {
  switch (u) {
    case TimeUnit::Minute: return 1;
    case TimeUnit::Hour: return 60;
    case TimeUnit::Day: return 24 * 60;
    case TimeUnit::Week: return 7 * 24 * 60;
  }
  return 1;
}

int ClockTime::minute_of_day() const {
  return ((hour % 12) + (meridiem == Meridiem::Pm ? 12 : 0)) * 60 + minute;
}

std::optional<ClockTime> ClockTime::make(int hour, int minute, Meridiem m) {
  if (hour < 1 || hour > 12 || minute < 0 || minute > 59) return std::nullopt;
  return ClockTime{hour, minute, m};
}

// ---------------------------------------------------------------------------
// Activity

namespace {

bool is_day_part_word(std::string_view w) {
  return w == "morning" || w == "evening" || w == "noon";
}

bool activity_word_char(char c) {
  return (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') || c == '-' || c == '\'' || c == '/';
}

}  // namespace

std::optional<std::string> Activity::check(std::string_view folded) {
  if (folded.empty()) return "empty activity";
  const auto words = text::split_whitespace(folded);
  if (text::join(words, " ") != folded) return "activity is not folded";
  if (!(folded.front() >= 'a' && folded.front() <= 'z'))
    return "activity must start with a letter";
  for (const auto& w : words) {
    if (!std::all_of(w.begin(), w.end(), activity_word_char))
      return "unexpected character in activity '" + w + "'";
    if (w == "or") return "alternatives joined by 'or'";
  }
  if (words.size() == 1 && is_day_part_word(words[0]))
    return "a part of the day is not an activity";
  if (folded == "same time" || folded == "the same time")
    return "the same time is only valid in a consistency constraint";
  return std::nullopt;
}

Activity::Activity(std::string_view phrase) : name_(text::fold(phrase)) {
  if (auto why = check(name_)) throw std::invalid_argument("invalid activity: " + *why);
}

// ---------------------------------------------------------------------------
// MtcType

MtcType::MtcType(int value) : value_(value) {
  if (value < 1 || value > 7) throw std::out_of_range("MTC type must be in 1..7");
}

std::string_view MtcType::name() const {
  static constexpr std::array<std::string_view, 7> kNames{
      "definitive dependency", "frequency",   "interval",   "imprecise dependency",
      "time dependency",       "consistency", "time of day"};
  return kNames[static_cast<std::size_t>(value_ - 1)];
}

std::vector<MtcType> MtcType::all() {
  std::vector<MtcType> out;
  for (int i = 1; i <= 7; ++i) out.emplace_back(i);
  return out;
}

MtcType mtc_type(const Mtc& mtc) { return MtcType(static_cast<int>(mtc.form.index()) + 1); }

NonvalidMtc::NonvalidMtc(std::string input, std::string reason)
    : std::runtime_error("nonvalid MTC '" + input + "': " + reason),
      input_(std::move(input)),
      reason_(std::move(reason)) {}

// ---------------------------------------------------------------------------
// Parser

namespace {

struct Failure {
  std::string reason;
};

using Tokens = std::vector<std::string>;

std::optional<Meridiem> parse_meridiem(std::string_view w) {
  if (w == "am" || w == "a.m." || w == "a.m") return Meridiem::Am;
  if (w == "pm" || w == "p.m." || w == "p.m") return Meridiem::Pm;
  return std::nullopt;
}

bool parse_int(std::string_view s, int& out) {
  if (!text::is_all_digits(s) || s.size() > 2) return false;
  std::from_chars(s.data(), s.data() + s.size(), out);
  return true;
}

// "9", "9:30", "10.30" -> hour/minute.
bool parse_hour_minute(std::string_view s, int& hour, int& minute) {
  const auto sep = s.find_first_of(":.");
  if (sep == std::string_view::npos) {
    minute = 0;
    return parse_int(s, hour);
  }
  const auto mm = s.substr(sep + 1);
  return parse_int(s.substr(0, sep), hour) && mm.size() == 2 && parse_int(mm, minute);
}

// Parses a clock time occupying exactly tokens[pos..end).
std::optional<ClockTime> parse_clock(const Tokens& t, std::size_t pos, std::size_t end) {
  int hour = 0;
  int minute = 0;
  Meridiem m{};
  if (end - pos == 2) {
    auto mer = parse_meridiem(t[pos + 1]);
    if (!mer || !parse_hour_minute(t[pos], hour, minute)) return std::nullopt;
    m = *mer;
  } else if (end - pos == 1) {
    // Glued form: "9am", "10.30pm".
    const std::string& w = t[pos];
    const auto split = w.find_first_not_of("0123456789:.");
    if (split == std::string::npos || split == 0) return std::nullopt;
    auto mer = parse_meridiem(std::string_view(w).substr(split));
    if (!mer || !parse_hour_minute(std::string_view(w).substr(0, split), hour, minute))
      return std::nullopt;
    m = *mer;
  } else {
    return std::nullopt;
  }
  return ClockTime::make(hour, minute, m);
}

bool looks_like_range(std::string_view w) {
  const auto dash = w.find('-');
  if (dash == std::string_view::npos || dash == 0 || dash + 1 == w.size()) return false;
  return text::is_all_digits(w.substr(0, dash)) && text::is_all_digits(w.substr(dash + 1));
}

std::optional<std::uint32_t> parse_count(std::string_view w) {
  if (text::is_all_digits(w)) {
    std::uint64_t v = 0;
    auto [p, ec] = std::from_chars(w.data(), w.data() + w.size(), v);
    if (ec != std::errc{} || v > std::numeric_limits<std::uint32_t>::max()) return std::nullopt;
    return static_cast<std::uint32_t>(v);
  }
  return try_normalize_number(w);
}

std::optional<DependencyPrep> parse_dp(std::string_view w) {
  if (w == "before") return DependencyPrep::Before;
  if (w == "after") return DependencyPrep::After;
  return std::nullopt;
}

std::optional<IntervalPrep> parse_ip(std::string_view w) {
  if (w == "within") return IntervalPrep::Within;
  if (w == "for") return IntervalPrep::For;
  if (w == "apart") return IntervalPrep::Apart;
  return std::nullopt;
}

std::optional<OccurrencePrep> parse_p(std::string_view w) {
  if (w == "at") return OccurrencePrep::At;
  if (w == "in") return OccurrencePrep::In;
  return std::nullopt;
}

std::optional<DayPart> parse_day_part(std::string_view w) {
  if (w == "morning") return DayPart::Morning;
  if (w == "evening") return DayPart::Evening;
  if (w == "noon") return DayPart::Noon;
  return std::nullopt;
}

std::variant<Activity, Failure> parse_activity(const Tokens& t, std::size_t pos) {
  if (pos >= t.size()) return Failure{"missing activity"};
  Tokens rest(t.begin() + static_cast<std::ptrdiff_t>(pos), t.end());
  const std::string phrase = text::join(rest, " ");
  if (auto why = Activity::check(phrase)) return Failure{*why};
  return Activity(phrase);
}

class Parser {
 public:
  explicit Parser(Tokens tokens) : t_(std::move(tokens)) {}

  std::variant<MtcForm, Failure> parse_form(std::size_t pos) {
    if (pos >= t_.size()) return Failure{"negation without a constraint"};
    const std::string& head = t_[pos];
    if (head == "not") return Failure{"double negation"};
    if (looks_like_range(head) ||
        (pos + 2 < t_.size() && text::is_all_digits(head) && (t_[pos + 1] == "-" || t_[pos + 1] == "to") &&
         text::is_all_digits(t_[pos + 2])))
      return Failure{"a numeric range is not a natural number"};
    if (auto n = parse_count(head)) return counted(*n, pos + 1);
    if (auto dp = parse_dp(head)) return dependency(*dp, pos + 1);
    if (auto ip = parse_ip(head); ip && *ip != IntervalPrep::Apart) return leading_interval(*ip, pos + 1);
    if (auto p = parse_p(head)) return occurrence(*p, pos + 1);
    return Failure{"no grammar rule matches"};
  }

 private:
  bool at_end(std::size_t pos) const { return pos >= t_.size(); }

  std::variant<MtcForm, Failure> counted(std::uint32_t n, std::size_t pos) {
    if (n == 0) return Failure{"count must be a positive integer"};
    if (at_end(pos)) return Failure{"expected 'times' or a time unit after the count"};
    if (t_[pos] == "times" || t_[pos] == "time") return frequency(n, pos + 1);
    auto unit = parse_time_unit(t_[pos]);
    if (!unit) return Failure{"expected 'times' or a time unit after the count"};
    ++pos;
    if (at_end(pos)) return Failure{"expected an interval or dependency preposition"};
    if (auto ip = parse_ip(t_[pos])) {
      if (!at_end(pos + 1)) return Failure{"unexpected text after interval constraint"};
      return Interval{n, *unit, *ip};
    }
    if (auto dp = parse_dp(t_[pos])) {
      auto act = parse_activity(t_, pos + 1);
      if (auto* f = std::get_if<Failure>(&act)) return *f;
      return DefinitiveDependency{n, *unit, *dp, std::get<Activity>(act)};
    }
    return Failure{"expected an interval or dependency preposition"};
  }

  std::variant<MtcForm, Failure> frequency(std::uint32_t n, std::size_t pos) {
    if (at_end(pos)) return Failure{"frequency without a time unit"};
    if (at_end(pos + 1)) {
      if (t_[pos] == "daily") return Frequency{n, TimeUnit::Day};
      if (t_[pos] == "weekly") return Frequency{n, TimeUnit::Week};
      if (t_[pos] == "hourly") return Frequency{n, TimeUnit::Hour};
    }
    // optional article: a | an | per | each | every | in a | in an
    if (t_[pos] == "in" && !at_end(pos + 1) && (t_[pos + 1] == "a" || t_[pos + 1] == "an"))
      pos += 2;
    else if (t_[pos] == "a" || t_[pos] == "an" || t_[pos] == "per" || t_[pos] == "each" ||
             t_[pos] == "every")
      pos += 1;
    if (at_end(pos)) return Failure{"frequency without a time unit"};
    auto unit = parse_time_unit(t_[pos]);
    if (!unit) return Failure{"unknown time unit '" + t_[pos] + "'"};
    if (!at_end(pos + 1)) return Failure{"unexpected text after frequency constraint"};
    return Frequency{n, *unit};
  }

  // Lenient "within 2 hours" / "for 7 days".
  std::variant<MtcForm, Failure> leading_interval(IntervalPrep ip, std::size_t pos) {
    if (at_end(pos)) return Failure{"interval without a duration"};
    auto n = parse_count(t_[pos]);
    if (!n) return Failure{"interval without a duration"};
    if (*n == 0) return Failure{"count must be a positive integer"};
    if (at_end(pos + 1)) return Failure{"interval without a time unit"};
    auto unit = parse_time_unit(t_[pos + 1]);
    if (!unit) return Failure{"interval without a time unit"};
    if (!at_end(pos + 2)) return Failure{"unexpected text after interval constraint"};
    return Interval{*n, *unit, ip};
  }

  std::variant<MtcForm, Failure> dependency(DependencyPrep dp, std::size_t pos) {
    if (at_end(pos)) return Failure{"dependency without an activity or time"};
    if (auto clock = parse_clock(t_, pos, t_.size())) return TimeDependency{dp, *clock};
    if (text::is_all_digits(t_[pos].substr(0, 1)))
      return Failure{"malformed clock time"};
    auto act = parse_activity(t_, pos);
    if (auto* f = std::get_if<Failure>(&act)) return *f;
    return ImpreciseDependency{dp, std::get<Activity>(act)};
  }

  std::variant<MtcForm, Failure> occurrence(OccurrencePrep p, std::size_t pos) {
    if (at_end(pos)) return Failure{"occurrence preposition without a time"};
    std::size_t q = pos;
    if (t_[q] == "the" && !at_end(q + 1) && parse_day_part(t_[q + 1])) ++q;
    if (auto d = parse_day_part(t_[q])) {
      if (!at_end(q + 1)) return Failure{"unexpected text after time-of-day constraint"};
      return TimeOfDay{p, *d};
    }

    // Consistency: p t (each|every|per|a) unit
    std::optional<TimeStamp> stamp;
    q = pos;
    if (t_[q] == "the" && !at_end(q + 2) && t_[q + 1] == "same" && t_[q + 2] == "time") {
      stamp = SameTime{};
      q += 3;
    } else if (t_[q] == "same" && !at_end(q + 1) && t_[q + 1] == "time") {
      stamp = SameTime{};
      q += 2;
    } else {
      for (std::size_t len : {2u, 1u}) {
        if (q + len <= t_.size()) {
          if (auto c = parse_clock(t_, q, q + len)) {
            stamp = *c;
            q += len;
            break;
          }
        }
      }
    }
    if (!stamp) return Failure{"expected a part of the day or a time stamp"};
    if (at_end(q)) return Failure{"consistency constraint without 'each <unit>'"};
    if (t_[q] != "each" && t_[q] != "every" && t_[q] != "per" && t_[q] != "a")
      return Failure{"consistency constraint without 'each <unit>'"};
    if (at_end(q + 1)) return Failure{"consistency constraint without a time unit"};
    auto unit = parse_time_unit(t_[q + 1]);
    if (!unit) return Failure{"unknown time unit '" + t_[q + 1] + "'"};
    if (!at_end(q + 2)) return Failure{"unexpected text after consistency constraint"};
    return Consistency{p, *stamp, *unit};
  }

  Tokens t_;
};

}  // namespace

ParseOutcome try_parse_mtc(std::string_view input) {
  const std::string folded = text::fold(input);
  if (folded.empty()) return {std::nullopt, "empty input"};
  Tokens tokens = text::split_whitespace(folded);
  if (std::find(tokens.begin(), tokens.end(), "or") != tokens.end())
    return {std::nullopt, "alternatives joined by 'or'"};
  const bool negated = tokens.front() == "not";
  Parser parser(std::move(tokens));
  auto result = parser.parse_form(negated ? 1 : 0);
  if (auto* f = std::get_if<Failure>(&result)) return {std::nullopt, f->reason};
  return {Mtc{std::get<MtcForm>(std::move(result)), negated}, {}};
}

Mtc parse_mtc(std::string_view text) {
  auto outcome = try_parse_mtc(text);
  if (!outcome.mtc) throw NonvalidMtc(std::string(text), outcome.reason);
  return *outcome.mtc;
}

bool is_valid(std::string_view text) { return try_parse_mtc(text).mtc.has_value(); }

// ---------------------------------------------------------------------------
// Serializer

std::string serialize(const ClockTime& t) {
  std::string out = std::to_string(t.hour);
  if (t.minute != 0) {
    out += '.';
    if (t.minute < 10) out += '0';
    out += std::to_string(t.minute);
  }
  out += ' ';
  out += to_string(t.meridiem);
  return out;
}

namespace {

struct FormWriter {
  std::string operator()(const DefinitiveDependency& v) const {
    return std::to_string(v.count) + " " + std::string(to_string(v.unit)) + " " +
           std::string(to_string(v.prep)) + " " + v.activity.name();
  }
  std::string operator()(const Frequency& v) const {
    return std::to_string(v.count) + " times " + std::string(to_string(v.unit));
  }
  std::string operator()(const Interval& v) const {
    return std::to_string(v.count) + " " + std::string(to_string(v.unit)) + " " +
           std::string(to_string(v.prep));
  }
  std::string operator()(const ImpreciseDependency& v) const {
    return std::string(to_string(v.prep)) + " " + v.activity.name();
  }
  std::string operator()(const TimeDependency& v) const {
    return std::string(to_string(v.prep)) + " " + serialize(v.time);
  }
  std::string operator()(const Consistency& v) const {
    const std::string stamp = std::holds_alternative<SameTime>(v.time)
                                  ? std::string("the same time")
                                  : serialize(std::get<ClockTime>(v.time));
    return std::string(to_string(v.prep)) + " " + stamp + " each " + std::string(to_string(v.unit));
  }
  std::string operator()(const TimeOfDay& v) const {
    return std::string(to_string(v.prep)) + " " + std::string(to_string(v.part));
  }
};

}  // namespace

std::string serialize(const Mtc& mtc) {
  std::string body = std::visit(FormWriter{}, mtc.form);
  return mtc.negated ? "not " + body : body;
}

// ---------------------------------------------------------------------------
// Lists

bool MtcList::add(const Mtc& mtc) {
  std::string key = serialize(mtc);
  if (std::find(keys_.begin(), keys_.end(), key) != keys_.end()) return false;
  keys_.push_back(std::move(key));
  items_.push_back(mtc);
  return true;
}

bool MtcList::contains(const Mtc& mtc) const {
  return std::find(keys_.begin(), keys_.end(), serialize(mtc)) != keys_.end();
}

std::vector<std::string> MtcList::canonical_strings() const { return keys_; }

ListParse parse_mtc_list(std::string_view input) {
  ListParse out;
  for (const auto& piece : text::split_any(input, "\n;")) {
    const auto segment = text::trim(piece);
    if (segment.empty()) continue;
    auto outcome = try_parse_mtc(segment);
    if (outcome.mtc)
      out.items.add(*outcome.mtc);
    else
      out.errors.push_back({std::string(segment), outcome.reason});
  }
  return out;
}

std::string describe_terminals() {
  return "natural number, n: 1 | 2 | 3 | ...\n"
         "activity, act: sleep | eating | exercise | taking medication | ...\n"
         "prepositions of temporal dependency, dp: before | after\n"
         "prepositions of interval dependency, ip: within | for | apart\n"
         "prepositions of occurrence, p: at | in\n"
         "unit of time, u: minute | hour | day | week\n"
         "time stamp, t: the same time | 9 am | 10.30 pm | ...\n"
         "time of the day, d: morning | evening | noon\n";
}

std::string describe_nonterminals() {
  return "1. definitive dependency: n u dp act (e.g. 30 minute before eating)\n"
         "2. frequency: n times u (e.g. 3 times day)\n"
         "3. interval: n u ip (e.g. 6 hour apart)\n"
         "4. imprecise dependency: dp act (e.g. before sleep)\n"
         "5. time dependency: dp t (e.g. before 9 am)\n"
         "6. consistency: p t each u (e.g. at the same time each day)\n"
         "7. time of day: p d (e.g. in morning)\n"
         "Negated constraints are prefixed with \"not\". Multiple constraints are separated by \";\".\n";
}

}  // namespace mtc
