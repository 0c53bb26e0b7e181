#include <set>

#include "doctest.h"
#include "generators.hpp"
#include "mtc/grammar.hpp"
#include "oracles.hpp"

using namespace mtc;

TEST_CASE("parse: quoted labels") {
  const Mtc v1 = parse_mtc("30 minute before taking Sucralfate");
  const auto& dd = std::get<DefinitiveDependency>(v1.form);
  CHECK(dd.count == 30);
  CHECK(dd.unit == TimeUnit::Minute);
  CHECK(dd.prep == DependencyPrep::Before);
  CHECK(dd.activity.name() == "taking sucralfate");
  CHECK_FALSE(v1.negated);

  CHECK(parse_mtc("2 times day") == Mtc{Frequency{2, TimeUnit::Day}});
  CHECK(parse_mtc("at the same time each day") == Mtc{Consistency{OccurrencePrep::At, SameTime{}, TimeUnit::Day}});
  CHECK(parse_mtc("6 hours apart") == Mtc{Interval{6, TimeUnit::Hour, IntervalPrep::Apart}});
  CHECK(parse_mtc("in morning") == Mtc{TimeOfDay{OccurrencePrep::In, DayPart::Morning}});
  CHECK(parse_mtc("before 9 am") == Mtc{TimeDependency{DependencyPrep::Before, *ClockTime::make(9, 0, Meridiem::Am)}});
}

TEST_CASE("parse: nonvalid inputs") {
  CHECK_THROWS_AS(parse_mtc("2 times day OR 3 times day"), NonvalidMtc);
  CHECK_THROWS_AS(parse_mtc(""), NonvalidMtc);
  CHECK_THROWS_AS(parse_mtc("   "), NonvalidMtc);
  CHECK_FALSE(is_valid("purple monkey dishwasher"));
  CHECK_FALSE(is_valid("1-30 minute before eating"));
  CHECK_FALSE(is_valid("1 - 30 minute before eating"));
  CHECK_FALSE(is_valid("0 times day"));
  CHECK_FALSE(is_valid("not not 2 times day"));
  CHECK_FALSE(is_valid("before the same time"));
  CHECK_FALSE(is_valid("at 13 pm each day"));
  CHECK_FALSE(is_valid("at 9.75 am each day"));
  CHECK_FALSE(is_valid("2 times fortnight"));
  CHECK_FALSE(is_valid("before"));
  CHECK(is_valid("6 hours apart"));

  try {
    parse_mtc("2 times day or 3 times day");
    FAIL("expected NonvalidMtc");
  } catch (const NonvalidMtc& e) {
    CHECK_FALSE(e.reason().empty());
    CHECK(e.input() == "2 times day or 3 times day");
  }
}

TEST_CASE("parse: lenient input forms") {
  CHECK(serialize(parse_mtc("Three times a day")) == "3 times day");
  CHECK(serialize(parse_mtc("3 times daily")) == "3 times day");
  CHECK(serialize(parse_mtc("2 times per week")) == "2 times week");
  CHECK(serialize(parse_mtc("1 time each day")) == "1 times day");
  CHECK(serialize(parse_mtc("30 minutes before a meal")) == "30 minute before a meal");
  CHECK(serialize(parse_mtc("BEFORE 9 AM")) == "before 9 am");
  CHECK(serialize(parse_mtc("before 9:30 p.m.")) == "before 9.30 pm");
  CHECK(serialize(parse_mtc("before 9am")) == "before 9 am");
  CHECK(serialize(parse_mtc("at 9 am every day")) == "at 9 am each day");
  CHECK(serialize(parse_mtc("in the morning")) == "in morning");
  CHECK(serialize(parse_mtc("4 hours apart")) == "4 hour apart");
  CHECK(serialize(parse_mtc("NOT 2 times daily")) == "not 2 times day");
  CHECK_FALSE(is_valid("do not take 2 times day"));  // only a bare "not" prefix negates
}

TEST_CASE("serialize: canonical forms") {
  CHECK(serialize(Mtc{Frequency{3, TimeUnit::Day}}) == "3 times day");
  CHECK(serialize(Mtc{TimeDependency{DependencyPrep::Before, *ClockTime::make(9, 0, Meridiem::Am)}}) == "before 9 am");
  CHECK(serialize(Mtc{TimeDependency{DependencyPrep::After, *ClockTime::make(10, 30, Meridiem::Pm)}}) ==
        "after 10.30 pm");
  CHECK(serialize(Mtc{ImpreciseDependency{DependencyPrep::Before, Activity("exercise")}, true}) ==
        "not before exercise");
  CHECK(serialize(Mtc{Consistency{OccurrencePrep::At, *ClockTime::make(9, 5, Meridiem::Am), TimeUnit::Day}}) ==
        "at 9.05 am each day");
}

TEST_CASE("mtc_type") {
  CHECK(mtc_type(Mtc{Interval{6, TimeUnit::Hour, IntervalPrep::Apart}}).value() == 3);
  CHECK(mtc_type(Mtc{TimeOfDay{OccurrencePrep::In, DayPart::Morning}}).value() == 7);
  CHECK(mtc_type(Mtc{ImpreciseDependency{DependencyPrep::Before, Activity("exercise")}, true}).value() == 4);
  CHECK_THROWS_AS(MtcType(0), std::out_of_range);
  CHECK_THROWS_AS(MtcType(8), std::out_of_range);
}

TEST_CASE("clock time bounds") {
  CHECK_FALSE(ClockTime::make(0, 0, Meridiem::Am));
  CHECK_FALSE(ClockTime::make(13, 0, Meridiem::Am));
  CHECK_FALSE(ClockTime::make(9, 60, Meridiem::Am));
  CHECK(ClockTime::make(12, 0, Meridiem::Am)->minute_of_day() == 0);
  CHECK(ClockTime::make(12, 0, Meridiem::Pm)->minute_of_day() == 720);
  CHECK(ClockTime::make(9, 30, Meridiem::Pm)->minute_of_day() == 21 * 60 + 30);
}

TEST_CASE("parse_mtc_list") {
  auto r = parse_mtc_list("2 hour before eating; 3 times day; 4 hour apart");
  REQUIRE(r.items.size() == 3);
  CHECK(mtc_type(r.items[0]).value() == 1);
  CHECK(mtc_type(r.items[1]).value() == 2);
  CHECK(mtc_type(r.items[2]).value() == 3);
  CHECK(r.errors.empty());

  r = parse_mtc_list("3 times day\n3 times day");
  CHECK(r.items.size() == 1);

  r = parse_mtc_list("3 times day; banana");
  CHECK(r.items.size() == 1);
  REQUIRE(r.errors.size() == 1);
  CHECK(r.errors[0].segment == "banana");

  r = parse_mtc_list("3 times day;;\n\n");
  CHECK(r.items.size() == 1);
  CHECK(r.errors.empty());
}

TEST_CASE("property: round trip, type stability, negation") {
  testing::Rng rng(20240611);
  for (int i = 0; i < 5000; ++i) {
    const Mtc m = testing::random_mtc(rng);
    const std::string s = serialize(m);
    const auto back = try_parse_mtc(s);
    REQUIRE_MESSAGE(back.mtc, s << ": " << back.reason);
    CHECK(*back.mtc == m);
    CHECK(serialize(*back.mtc) == s);
    CHECK(mtc_type(*back.mtc) == mtc_type(m));
    CHECK(oracle::type_of(s) == mtc_type(m).value());
    if (!m.negated) {
      const auto neg = try_parse_mtc("not " + s);
      REQUIRE(neg.mtc);
      CHECK(neg.mtc->negated);
      CHECK(neg.mtc->form == m.form);
    }
  }
}

TEST_CASE("property: list dedup") {
  testing::Rng rng(7);
  for (int i = 0; i < 300; ++i) {
    std::string text;
    for (int j = rng.uniform(1, 8); j > 0; --j) {
      const Mtc m = testing::random_mtc(rng, rng.uniform(1, 3));
      text += serialize(m) + (rng.coin() ? "; " : "\n");
      if (rng.coin()) text += serialize(m) + "\n";
    }
    const auto r = parse_mtc_list(text);
    std::set<std::string> seen;
    for (const auto& m : r.items) CHECK(seen.insert(serialize(m)).second);
    CHECK(r.errors.empty());
  }
}

TEST_CASE("MtcList preserves first occurrence order") {
  MtcList list;
  CHECK(list.add(parse_mtc("3 times day")));
  CHECK(list.add(parse_mtc("before sleep")));
  CHECK_FALSE(list.add(parse_mtc("three times a day")));
  CHECK(list.canonical_strings() == std::vector<std::string>{"3 times day", "before sleep"});
}

TEST_CASE("activity restrictions") {
  CHECK(Activity::check("eating") == std::nullopt);
  CHECK(Activity::check("") != std::nullopt);
  CHECK(Activity::check("9 am") != std::nullopt);
  CHECK(Activity::check("the same time") != std::nullopt);
  CHECK_FALSE(is_valid("before noon"));  // noon is a day part, not an activity
  CHECK(is_valid("at noon"));
}

TEST_CASE("grammar description for guided prompts") {
  CHECK(describe_terminals().find("apart") != std::string::npos);
  CHECK(describe_nonterminals().find("7. time of day") != std::string::npos);
}
