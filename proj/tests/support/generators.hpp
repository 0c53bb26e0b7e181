#pragma once

// Seeded generators for property tests.

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "mtc/dataset.hpp"
#include "mtc/grammar.hpp"

namespace mtc::testing {

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  int uniform(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(engine_); }
  bool coin(double p = 0.5) { return std::bernoulli_distribution(p)(engine_); }
  template <class T>
  const T& pick(const std::vector<T>& v) {
    return v[std::size_t(uniform(0, int(v.size()) - 1))];
  }
  std::mt19937_64& engine() { return engine_; }

 private:
  std::mt19937_64 engine_;
};

inline const std::vector<std::string>& sample_activities() {
  static const std::vector<std::string> acts{"eating",       "sleep",          "exercise",       "breakfast",
                                             "dialysis",     "taking sucralfate", "a meal",       "bedtime snack",
                                             "surgery",      "lying down",     "drinking alcohol", "antacids"};
  return acts;
}

inline TimeUnit random_unit(Rng& r) { return static_cast<TimeUnit>(r.uniform(0, 3)); }

inline ClockTime random_clock(Rng& r) {
  return *ClockTime::make(r.uniform(1, 12), r.coin() ? 0 : r.uniform(0, 59), r.coin() ? Meridiem::Am : Meridiem::Pm);
}

inline Mtc random_mtc(Rng& r, int type = 0) {
  if (type == 0) type = r.uniform(1, 7);
  auto count = [&] { return std::uint32_t(r.coin(0.8) ? r.uniform(1, 12) : r.uniform(13, 5000)); };
  auto dprep = [&] { return r.coin() ? DependencyPrep::Before : DependencyPrep::After; };
  auto oprep = [&] { return r.coin() ? OccurrencePrep::At : OccurrencePrep::In; };
  Mtc m{Frequency{1, TimeUnit::Day}};
  switch (type) {
    case 1: m.form = DefinitiveDependency{count(), random_unit(r), dprep(), Activity(r.pick(sample_activities()))}; break;
    case 2: m.form = Frequency{count(), random_unit(r)}; break;
    case 3: m.form = Interval{count(), random_unit(r), static_cast<IntervalPrep>(r.uniform(0, 2))}; break;
    case 4: m.form = ImpreciseDependency{dprep(), Activity(r.pick(sample_activities()))}; break;
    case 5: m.form = TimeDependency{dprep(), random_clock(r)}; break;
    case 6: {
      TimeStamp t = SameTime{};
      if (r.coin(0.4)) t = random_clock(r);
      m.form = Consistency{oprep(), t, random_unit(r)};
      break;
    }
    default: m.form = TimeOfDay{oprep(), static_cast<DayPart>(r.uniform(0, 2))}; break;
  }
  m.negated = r.coin(0.2);
  return m;
}

inline Dug make_dug(std::string id, Source src, std::string text, const std::vector<std::string>& labels,
                    std::optional<bool> difficult = std::nullopt) {
  Dug d;
  d.id = std::move(id);
  d.source = src;
  d.text = std::move(text);
  for (const auto& l : labels) d.labels.add(parse_mtc(l));
  d.difficult = difficult;
  return d;
}

}  // namespace mtc::testing
