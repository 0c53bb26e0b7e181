#include <sstream>

#include "doctest.h"
#include "mtc/adherence.hpp"
#include "timelines.hpp"

using namespace mtc;
using namespace mtc::testing;

namespace {
VerdictKind verdict(const std::string& mtc, std::vector<TimelineEvent> events, Window w, AdherenceConfig cfg = {}) {
  return check(parse_mtc(mtc), Timeline(std::move(events), w), cfg).kind;
}
constexpr auto S = VerdictKind::Satisfied;
constexpr auto V = VerdictKind::Violated;
constexpr auto I = VerdictKind::Indeterminate;
}  // namespace

TEST_CASE("timestamps") {
  const auto a = parse_timestamp("2024-03-04T08:00:00Z");
  const auto b = parse_timestamp("2024-03-04T09:30+01:30");
  CHECK(a.time == b.time);
  CHECK(b.utc_offset_minutes == 90);
  CHECK(parse_timestamp("2024-03-04T08:00:59.123-05:00").utc_offset_minutes == -300);
  CHECK_THROWS_AS(parse_timestamp("2024-03-04T08:00"), std::invalid_argument);
  CHECK_THROWS_AS(parse_timestamp("2024-02-30T08:00Z"), std::invalid_argument);
  CHECK_THROWS_AS(parse_timestamp("2024-03-04T25:00Z"), std::invalid_argument);
  CHECK_THROWS_AS(parse_timestamp("yesterday"), std::invalid_argument);
  CHECK(format_local(intake("2024-03-04T23:15-02:00")) == "2024-03-04T23:15");
}

TEST_CASE("timeline construction") {
  const auto w = days_window(1);
  Timeline tl({intake("2024-03-04T20:00Z"), activity("Bedtime", "2024-03-04T21:00Z"), intake("2024-03-04T08:00Z"),
               intake("2024-03-05T08:00Z")},
              w);
  REQUIRE(tl.events().size() == 3);
  CHECK(tl.events()[0].time < tl.events()[1].time);
  CHECK(tl.events()[2].name == "sleep");
  CHECK(tl.intakes().size() == 2);

  std::istringstream in(R"({"kind":"intake","name":"dose","timestamp":"2024-03-04T08:00Z"})" "\n\n"
                        R"({"kind":"activity","name":"meal","timestamp":"2024-03-04T08:30+00:00"})" "\n");
  CHECK(read_timeline_events(in).size() == 2);
  std::istringstream bad(R"({"kind":"nap","name":"x","timestamp":"2024-03-04T08:00Z"})");
  CHECK_THROWS(read_timeline_events(bad));

  const auto dw = default_window({intake("2024-03-04T08:00+02:00"), intake("2024-03-06T01:00+02:00")});
  CHECK(dw.start == parse_timestamp("2024-03-04T00:00+02:00").time);
  CHECK(dw.end == parse_timestamp("2024-03-07T00:00+02:00").time);
}

TEST_CASE("worked examples") {
  CHECK(verdict("2 times day", {intake("2024-03-04T08:00Z"), intake("2024-03-04T20:00Z")}, days_window(1)) == S);
  CHECK(verdict("6 hour apart", {intake("2024-03-04T08:00Z"), intake("2024-03-04T12:00Z")}, days_window(1)) == V);

  const std::vector<TimelineEvent> three{intake("2024-03-04T08:00Z"), intake("2024-03-05T08:30Z"),
                                         intake("2024-03-06T10:30Z")};
  AdherenceConfig tight, loose;
  loose.consistency_tolerance = std::chrono::minutes(180);
  // Spread of clock times: max 10:30 - min 08:00 = 150 minutes.
  CHECK(verdict("at the same time each day", three, days_window(3), tight) == V);
  CHECK(verdict("at the same time each day", three, days_window(3), loose) == S);
  AdherenceConfig edge;
  edge.consistency_tolerance = std::chrono::minutes(150);
  CHECK(verdict("at the same time each day", three, days_window(3), edge) == S);
}

TEST_CASE("frequency") {
  const auto w = days_window(2);
  CHECK(verdict("2 times day", {intake("2024-03-04T08:00Z"), intake("2024-03-04T20:00Z"), intake("2024-03-05T09:00Z")},
                w) == V);
  CHECK(verdict("1 times week", {intake("2024-03-04T08:00Z")}, w) == I);  // no complete week
  CHECK(verdict("2 times day", {}, w) == I);
  CHECK(verdict("not 2 times day", {intake("2024-03-04T08:00Z"), intake("2024-03-04T20:00Z")}, days_window(1)) == V);
  CHECK(verdict("3 times day", {intake("2024-03-04T08:00Z")}, days_window(1)) == V);
}

TEST_CASE("interval") {
  const auto w = days_window(1);
  const std::vector<TimelineEvent> evs{intake("2024-03-04T08:00Z"), intake("2024-03-04T14:00Z"),
                                       intake("2024-03-04T22:00Z")};
  CHECK(verdict("6 hour apart", evs, w) == S);
  CHECK(verdict("7 hour apart", evs, w) == V);
  CHECK(verdict("8 hour within", evs, w) == S);
  CHECK(verdict("7 hour within", evs, w) == V);
  CHECK(verdict("7 day for", evs, w) == I);
  CHECK(verdict("6 hour apart", {intake("2024-03-04T08:00Z")}, w) == I);
}

TEST_CASE("dependencies") {
  const auto w = days_window(1);
  SUBCASE("definitive") {
    const std::vector<TimelineEvent> evs{intake("2024-03-04T07:30Z"), activity("breakfast", "2024-03-04T08:05Z")};
    CHECK(verdict("30 minute before breakfast", evs, w) == S);
    CHECK(verdict("1 hour before breakfast", evs, w) == V);
    AdherenceConfig wide;
    wide.dependency_tolerance = std::chrono::minutes(30);
    CHECK(verdict("1 hour before breakfast", evs, w, wide) == S);
    CHECK(verdict("30 minute after breakfast", evs, w) == V);
    CHECK(verdict("30 minute before dialysis", evs, w) == I);
    CHECK(verdict("2 hour after eating",
                  {activity("a meal", "2024-03-04T12:00Z"), intake("2024-03-04T14:00Z")}, w) == S);
  }
  SUBCASE("imprecise") {
    const std::vector<TimelineEvent> evs{intake("2024-03-04T21:00Z"), activity("going to bed", "2024-03-04T22:30Z")};
    CHECK(verdict("before sleep", evs, w) == S);
    CHECK(verdict("after sleep", evs, w) == V);
    AdherenceConfig narrow;
    narrow.imprecision_horizon = std::chrono::minutes(60);
    CHECK(verdict("before sleep", evs, w, narrow) == V);
    CHECK(verdict("not before sleep", evs, w) == V);
    CHECK(verdict("before exercise", evs, w) == I);
  }
}

TEST_CASE("clock and day-part constraints use local time") {
  const auto w = days_window(1, 120);
  const std::vector<TimelineEvent> evs{intake("2024-03-04T08:30+02:00"), intake("2024-03-04T10:59+02:00")};
  CHECK(verdict("before 11 am", evs, w) == S);
  CHECK(verdict("before 10.59 am", evs, w) == V);  // strict
  CHECK(verdict("after 8 am", evs, w) == S);
  CHECK(verdict("in morning", evs, w) == S);
  CHECK(verdict("at noon", evs, w) == V);
  CHECK(verdict("in evening", {intake("2024-03-04T21:59+02:00")}, w) == S);
  CHECK(verdict("in evening", {intake("2024-03-04T22:00+02:00")}, w) == V);
  CHECK(verdict("at 9 am each day", evs, w) == V);  // 10:59 is 119 minutes away
  AdherenceConfig wide;
  wide.consistency_tolerance = std::chrono::minutes(120);
  CHECK(verdict("at 9 am each day", evs, w, wide) == S);
}

TEST_CASE("consistency ranks") {
  // Twice daily at stable times: the morning and evening doses are compared separately.
  const std::vector<TimelineEvent> evs{intake("2024-03-04T08:00Z"), intake("2024-03-04T20:00Z"),
                                       intake("2024-03-05T08:20Z"), intake("2024-03-05T20:40Z")};
  CHECK(verdict("at the same time each day", evs, days_window(2)) == S);
  CHECK(verdict("at the same time each minute", evs, days_window(2)) == I);
  CHECK(verdict("at the same time each week", {intake("2024-03-04T08:00Z"), intake("2024-03-11T08:30Z")},
                days_window(14)) == S);
  CHECK(verdict("at the same time each week", {intake("2024-03-04T08:00Z"), intake("2024-03-12T08:30Z")},
                days_window(14)) == V);
}

TEST_CASE("explanations are nonempty and deterministic") {
  Rng rng(1);
  for (int i = 0; i < 300; ++i) {
    const Mtc m = random_mtc(rng);
    const auto w = days_window(3);
    const auto evs = random_events(rng, w);
    const auto a = check(m, Timeline(evs, w));
    const auto b = check(m, Timeline(evs, w));
    CHECK_FALSE(a.explanation.empty());
    CHECK(a.kind == b.kind);
    CHECK(a.explanation == b.explanation);
  }
}

TEST_CASE("property: negation inversion") {
  Rng rng(2);
  int determinate = 0;
  for (int i = 0; i < 500; ++i) {
    Mtc m = random_mtc(rng);
    m.negated = false;
    const auto w = days_window(rng.uniform(1, 8));
    const Timeline tl(random_events(rng, w), w);
    const auto v = check(m, tl);
    Mtc n = m;
    n.negated = true;
    const auto nv = check(n, tl);
    if (v.kind == I) {
      CHECK(nv.kind == I);
      continue;
    }
    ++determinate;
    CHECK(nv.kind == (v.kind == S ? V : S));
  }
  CHECK(determinate > 100);
}

TEST_CASE("property: events outside the window do not affect interval checks") {
  Rng rng(3);
  for (int i = 0; i < 300; ++i) {
    const Mtc m{Interval{std::uint32_t(rng.uniform(1, 12)), TimeUnit::Hour, IntervalPrep::Apart}};
    const auto w = days_window(2);
    auto evs = random_events(rng, w);
    const auto before = check(m, Timeline(evs, w));
    evs.push_back({EventKind::Intake, "dose", w.end + std::chrono::minutes(rng.uniform(0, 600)), 0});
    evs.push_back({EventKind::Intake, "dose", w.start - std::chrono::minutes(rng.uniform(1, 600)), 0});
    const auto after = check(m, Timeline(evs, w));
    CHECK(before.kind == after.kind);
    CHECK(before.explanation == after.explanation);
  }
}
