#include "mtc/adherence.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <map>

#include "json.hpp"
#include "mtc/text.hpp"

namespace mtc {

using std::chrono::days;
using std::chrono::minutes;

std::chrono::minutes TimelineEvent::local_minutes() const {
  return time.time_since_epoch() + minutes(utc_offset_minutes);
}

namespace {

bool read_int(std::string_view s, std::size_t pos, std::size_t len, int& out) {
  if (pos + len > s.size()) return false;
  const auto part = s.substr(pos, len);
  if (!text::is_all_digits(part)) return false;
  std::from_chars(part.data(), part.data() + part.size(), out);
  return true;
}

std::int64_t floor_div(std::int64_t a, std::int64_t b) {
  return a / b - ((a % b != 0) && ((a < 0) != (b < 0)) ? 1 : 0);
}

std::int64_t floor_mod(std::int64_t a, std::int64_t b) { return a - floor_div(a, b) * b; }

}  // namespace

ParsedTimestamp parse_timestamp(std::string_view s) {
  auto bad = [&]() { return std::invalid_argument("invalid timestamp '" + std::string(s) + "'"); };
  int y = 0, mo = 0, d = 0, h = 0, mi = 0, sec = 0;
  if (!read_int(s, 0, 4, y) || s.size() < 16 || s[4] != '-' || !read_int(s, 5, 2, mo) || s[7] != '-' ||
      !read_int(s, 8, 2, d) || (s[10] != 'T' && s[10] != ' ') || !read_int(s, 11, 2, h) ||
      s[13] != ':' || !read_int(s, 14, 2, mi))
    throw bad();
  std::size_t pos = 16;
  if (pos < s.size() && s[pos] == ':') {
    if (!read_int(s, pos + 1, 2, sec)) throw bad();
    pos += 3;
    if (pos < s.size() && s[pos] == '.') {
      ++pos;
      while (pos < s.size() && std::isdigit(static_cast<unsigned char>(s[pos]))) ++pos;
    }
  }
  int offset = 0;
  if (pos < s.size() && s[pos] == 'Z') {
    ++pos;
  } else if (pos < s.size() && (s[pos] == '+' || s[pos] == '-')) {
    int oh = 0, om = 0;
    if (!read_int(s, pos + 1, 2, oh)) throw bad();
    std::size_t mpos = pos + 3;
    if (mpos < s.size() && s[mpos] == ':') ++mpos;
    if (!read_int(s, mpos, 2, om) || oh > 23 || om > 59) throw bad();
    offset = (s[pos] == '-' ? -1 : 1) * (oh * 60 + om);
    pos = mpos + 2;
  } else {
    throw bad();  // timezone is required
  }
  if (pos != s.size()) throw bad();
  if (h > 23 || mi > 59 || sec > 60) throw bad();

  const std::chrono::year_month_day ymd{std::chrono::year(y), std::chrono::month(unsigned(mo)),
                                        std::chrono::day(unsigned(d))};
  if (!ymd.ok()) throw bad();
  const auto local = std::chrono::sys_days(ymd).time_since_epoch() + std::chrono::hours(h) + minutes(mi);
  return {Instant(std::chrono::duration_cast<minutes>(local) - minutes(offset)), offset};
}

std::string format_local(const TimelineEvent& e) {
  const auto local = e.local_minutes().count();
  const auto day_index = floor_div(local, 1440);
  const auto tod = floor_mod(local, 1440);
  const std::chrono::year_month_day ymd{std::chrono::sys_days(days(day_index))};
  char buf[32];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02uT%02d:%02d", int(ymd.year()), unsigned(ymd.month()),
                unsigned(ymd.day()), int(tod / 60), int(tod % 60));
  return buf;
}

Window default_window(const std::vector<TimelineEvent>& events) {
  if (events.empty()) return {};
  auto [lo, hi] = std::minmax_element(events.begin(), events.end(),
                                      [](const auto& a, const auto& b) { return a.time < b.time; });
  const auto offset = minutes(events.front().utc_offset_minutes);
  auto local_day_start = [&](Instant t) {
    const auto local = (t.time_since_epoch() + offset).count();
    return Instant(minutes(floor_div(local, 1440) * 1440) - offset);
  };
  return {local_day_start(lo->time), local_day_start(hi->time) + days(1)};
}

Timeline::Timeline(std::vector<TimelineEvent> events, Window window, const AliasTable& aliases)
    : window_(window) {
  for (auto& e : events) {
    if (e.time < window.start || e.time >= window.end) continue;
    e.name = normalize_activity(e.name, aliases);
    events_.push_back(std::move(e));
  }
  std::stable_sort(events_.begin(), events_.end(),
                   [](const auto& a, const auto& b) { return a.time < b.time; });
}

std::vector<TimelineEvent> Timeline::intakes() const {
  std::vector<TimelineEvent> out;
  std::copy_if(events_.begin(), events_.end(), std::back_inserter(out),
               [](const auto& e) { return e.kind == EventKind::Intake; });
  return out;
}

std::vector<TimelineEvent> read_timeline_events(std::istream& in) {
  std::vector<TimelineEvent> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (text::trim(line).empty()) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      TimelineEvent e;
      const auto kind = j.at("kind").get<std::string>();
      if (kind == "intake")
        e.kind = EventKind::Intake;
      else if (kind == "activity")
        e.kind = EventKind::Activity;
      else
        throw std::invalid_argument("unknown event kind '" + kind + "'");
      e.name = j.at("name").get<std::string>();
      const auto ts = parse_timestamp(j.at("timestamp").get<std::string>());
      e.time = ts.time;
      e.utc_offset_minutes = ts.utc_offset_minutes;
      out.push_back(std::move(e));
    } catch (const std::exception& e) {
      throw std::runtime_error("timeline line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return out;
}

std::string_view to_string(VerdictKind v) {
  switch (v) {
    case VerdictKind::Satisfied: return "satisfied";
    case VerdictKind::Violated: return "violated";
    case VerdictKind::Indeterminate: return "indeterminate";
  }
  return "?";
}

// ---------------------------------------------------------------------------

namespace {

Verdict satisfied(std::string why) { return {VerdictKind::Satisfied, std::move(why)}; }
Verdict violated(std::string why) { return {VerdictKind::Violated, std::move(why)}; }
Verdict indeterminate(std::string why) { return {VerdictKind::Indeterminate, std::move(why)}; }

std::string fmt_minutes(std::int64_t m) { return std::to_string(m) + " min"; }

int minute_of_day(const TimelineEvent& e) { return int(floor_mod(e.local_minutes().count(), 1440)); }

std::string clock_text(int minute_of_day) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%02d:%02d", minute_of_day / 60, minute_of_day % 60);
  return buf;
}

class Checker {
 public:
  Checker(const Timeline& tl, const AdherenceConfig& cfg) : tl_(tl), cfg_(cfg), intakes_(tl.intakes()) {}

  Verdict operator()(const DefinitiveDependency& v) const {
    const auto offset = minutes(std::int64_t(v.count) * minutes_in(v.unit));
    return dependency(v.prep, v.activity, [&](const TimelineEvent& intake, const TimelineEvent& act) {
      const auto target = v.prep == DependencyPrep::Before ? intake.time + offset : intake.time - offset;
      const auto diff = act.time > target ? act.time - target : target - act.time;
      return diff <= cfg_.dependency_tolerance;
    }, "at " + serialize(Mtc{v}) + " +/- " + fmt_minutes(cfg_.dependency_tolerance.count()));
  }

  Verdict operator()(const Frequency& v) const {
    const auto period = minutes(std::int64_t(minutes_in(v.unit)));
    const auto& w = tl_.window();
    if (w.start + period > w.end) return indeterminate("window shorter than one " + std::string(to_string(v.unit)));
    std::size_t periods = 0;
    for (auto start = w.start; start + period <= w.end; start += period, ++periods) {
      const auto count = std::count_if(intakes_.begin(), intakes_.end(), [&](const auto& e) {
        return e.time >= start && e.time < start + period;
      });
      if (std::uint32_t(count) != v.count) {
        TimelineEvent marker{EventKind::Intake, "", start, intakes_.front().utc_offset_minutes};
        return violated(std::to_string(count) + " intakes in the " + std::string(to_string(v.unit)) +
                        " starting " + format_local(marker) + ", expected " + std::to_string(v.count));
      }
    }
    return satisfied(std::to_string(v.count) + " intakes in each of " + std::to_string(periods) +
                     " complete period(s)");
  }

  Verdict operator()(const Interval& v) const {
    if (v.prep == IntervalPrep::For) return indeterminate("regimen duration is not observable from a timeline");
    if (intakes_.size() < 2) return indeterminate("fewer than two intakes in the window");
    const auto limit = minutes(std::int64_t(v.count) * minutes_in(v.unit));
    for (std::size_t i = 1; i < intakes_.size(); ++i) {
      const auto gap = intakes_[i].time - intakes_[i - 1].time;
      const bool ok = v.prep == IntervalPrep::Apart ? gap >= limit : gap <= limit;
      if (!ok)
        return violated("intake at " + format_local(intakes_[i]) + " follows intake at " +
                        format_local(intakes_[i - 1]) + " by " + fmt_minutes(gap.count()) +
                        (v.prep == IntervalPrep::Apart ? " < " : " > ") + fmt_minutes(limit.count()));
    }
    return satisfied("all " + std::to_string(intakes_.size() - 1) + " gaps " +
                     (v.prep == IntervalPrep::Apart ? ">= " : "<= ") + fmt_minutes(limit.count()));
  }

  Verdict operator()(const ImpreciseDependency& v) const {
    const auto horizon = cfg_.imprecision_horizon;
    return dependency(v.prep, v.activity, [&](const TimelineEvent& intake, const TimelineEvent& act) {
      if (v.prep == DependencyPrep::Before) return act.time > intake.time && act.time <= intake.time + horizon;
      return act.time < intake.time && act.time >= intake.time - horizon;
    }, "within " + fmt_minutes(horizon.count()) + " " + std::string(to_string(v.prep == DependencyPrep::Before ? DependencyPrep::After : DependencyPrep::Before)) + " the intake");
  }

  Verdict operator()(const TimeDependency& v) const {
    const int t = v.time.minute_of_day();
    for (const auto& e : intakes_) {
      const int m = minute_of_day(e);
      const bool ok = v.prep == DependencyPrep::Before ? m < t : m > t;
      if (!ok)
        return violated("intake at " + format_local(e) + " is not " + std::string(to_string(v.prep)) + " " +
                        serialize(v.time));
    }
    return satisfied("all " + std::to_string(intakes_.size()) + " intakes " + std::string(to_string(v.prep)) +
                     " " + serialize(v.time));
  }

  Verdict operator()(const Consistency& v) const {
    const auto tol = cfg_.consistency_tolerance.count();
    if (const auto* clock = std::get_if<ClockTime>(&v.time)) {
      const int t = clock->minute_of_day();
      for (const auto& e : intakes_) {
        const int diff = std::abs(minute_of_day(e) - t);
        if (diff > tol)
          return violated("intake at " + format_local(e) + " is " + fmt_minutes(diff) + " from " +
                          serialize(*clock) + " (tolerance " + fmt_minutes(tol) + ")");
      }
      return satisfied("all intakes within " + fmt_minutes(tol) + " of " + serialize(*clock));
    }
    if (v.unit == TimeUnit::Minute) return indeterminate("a per-minute phase is not meaningful");
    if (intakes_.size() < 2) return indeterminate("fewer than two intakes in the window");

    // Phase of each intake within its local calendar period, grouped by period.
    const std::int64_t period = minutes_in(v.unit);
    std::map<std::int64_t, std::vector<const TimelineEvent*>> by_period;
    auto phase_of = [&](const TimelineEvent& e) -> std::int64_t {
      std::int64_t local = e.local_minutes().count();
      if (v.unit == TimeUnit::Week) local += 3 * 1440;  // the epoch is a Thursday; weeks start Monday
      return floor_mod(local, period);
    };
    for (const auto& e : intakes_) {
      std::int64_t local = e.local_minutes().count();
      if (v.unit == TimeUnit::Week) local += 3 * 1440;
      by_period[floor_div(local, period)].push_back(&e);
    }
    std::int64_t worst = 0;
    const TimelineEvent* worst_lo = nullptr;
    const TimelineEvent* worst_hi = nullptr;
    for (std::size_t rank = 0;; ++rank) {
      const TimelineEvent* lo = nullptr;
      const TimelineEvent* hi = nullptr;
      for (const auto& [key, events] : by_period) {
        if (rank >= events.size()) continue;
        const auto* e = events[rank];
        if (!lo || phase_of(*e) < phase_of(*lo)) lo = e;
        if (!hi || phase_of(*e) > phase_of(*hi)) hi = e;
      }
      if (!lo) break;
      if (phase_of(*hi) - phase_of(*lo) > worst) {
        worst = phase_of(*hi) - phase_of(*lo);
        worst_lo = lo;
        worst_hi = hi;
      }
    }
    if (worst > tol)
      return violated("intakes at " + format_local(*worst_lo) + " and " + format_local(*worst_hi) +
                      " differ by " + fmt_minutes(worst) + " within their " + std::string(to_string(v.unit)) +
                      " (tolerance " + fmt_minutes(tol) + ")");
    return satisfied("maximum spread " + fmt_minutes(worst) + " <= " + fmt_minutes(tol));
  }

  Verdict operator()(const TimeOfDay& v) const {
    const DayPartWindow w = v.part == DayPart::Morning ? cfg_.morning
                            : v.part == DayPart::Noon  ? cfg_.noon
                                                       : cfg_.evening;
    for (const auto& e : intakes_) {
      const int m = minute_of_day(e);
      if (m < w.start_minute || m >= w.end_minute)
        return violated("intake at " + format_local(e) + " is outside the " + std::string(to_string(v.part)) +
                        " window " + clock_text(w.start_minute) + "-" + clock_text(w.end_minute));
    }
    return satisfied("all " + std::to_string(intakes_.size()) + " intakes in the " +
                     std::string(to_string(v.part)) + " window");
  }

  bool has_intakes() const { return !intakes_.empty(); }

 private:
  template <class Match>
  Verdict dependency(DependencyPrep, const Activity& act, Match match, const std::string& requirement) const {
    std::vector<const TimelineEvent*> acts;
    for (const auto& e : tl_.events())
      if (e.kind == EventKind::Activity && e.name == act.name()) acts.push_back(&e);
    if (acts.empty()) return indeterminate("no '" + act.name() + "' activity recorded in the window");
    for (const auto& intake : intakes_) {
      const bool found = std::any_of(acts.begin(), acts.end(), [&](const auto* a) { return match(intake, *a); });
      if (!found)
        return violated("no '" + act.name() + "' " + requirement + " for intake at " + format_local(intake));
    }
    return satisfied("every intake has a matching '" + act.name() + "' event");
  }

  const Timeline& tl_;
  const AdherenceConfig& cfg_;
  std::vector<TimelineEvent> intakes_;
};

}  // namespace

Verdict check(const Mtc& mtc, const Timeline& timeline, const AdherenceConfig& cfg) {
  Checker checker(timeline, cfg);
  if (!checker.has_intakes()) return indeterminate("no intakes in the window");
  Verdict v = std::visit(checker, mtc.form);
  if (mtc.negated && v.kind != VerdictKind::Indeterminate) {
    v.kind = v.kind == VerdictKind::Satisfied ? VerdictKind::Violated : VerdictKind::Satisfied;
    v.explanation = "negated constraint; underlying check: " + v.explanation;
  }
  return v;
}

}  // namespace mtc
