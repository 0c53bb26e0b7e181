#include <benchmark/benchmark.h>

#include <random>

#include "mtc/eval.hpp"
#include "mtc/grammar.hpp"
#include "mtc/normalize.hpp"

namespace {

const std::vector<std::string>& labels() {
  static const std::vector<std::string> v{"30 minute before taking sucralfate", "2 times day", "6 hour apart",
                                          "before sleep", "before 9 am", "at the same time each day", "in morning",
                                          "not after eating", "at 10.30 pm each week", "1 times hour"};
  return v;
}

void BM_Parse(benchmark::State& state) {
  std::size_t i = 0;
  for (auto _ : state) benchmark::DoNotOptimize(mtc::try_parse_mtc(labels()[i++ % labels().size()]));
}
BENCHMARK(BM_Parse);

void BM_Normalize(benchmark::State& state) {
  const mtc::RawOutput raw{"1. Take three times daily\n2. 30 minutes before meals\n3. at bedtime; in the morning"};
  for (auto _ : state) benchmark::DoNotOptimize(mtc::normalize_raw_output(raw));
}
BENCHMARK(BM_Normalize);

void BM_Evaluate(benchmark::State& state) {
  const auto n = std::size_t(state.range(0));
  std::mt19937_64 rng(1);
  std::vector<mtc::Dug> gold;
  std::vector<mtc::ExtractionRecord> recs;
  for (std::size_t i = 0; i < n; ++i) {
    mtc::Dug d;
    d.id = std::to_string(i);
    d.text = "t";
    mtc::ExtractionRecord r;
    r.dug_id = d.id;
    for (const auto& l : labels()) {
      if (rng() % 4 == 0) d.labels.add(mtc::parse_mtc(l));
      if (rng() % 4 == 0) {
        r.candidates.push_back({l, true, std::nullopt, false});
        r.parsed.add(mtc::parse_mtc(l));
      }
    }
    gold.push_back(std::move(d));
    recs.push_back(std::move(r));
  }
  const auto space = mtc::build_label_space(gold);
  for (auto _ : state) benchmark::DoNotOptimize(mtc::evaluate(gold, recs, space));
  state.SetItemsProcessed(state.iterations() * std::int64_t(n));
}
BENCHMARK(BM_Evaluate)->Arg(100)->Arg(1000);

void BM_Alpha(benchmark::State& state) {
  const auto units = std::size_t(state.range(0));
  std::mt19937_64 rng(2);
  mtc::AnnotationMatrix m(units, 3);
  for (std::size_t u = 0; u < units; ++u)
    for (std::size_t c = 0; c < 3; ++c) m.set(u, c, std::string(1, char('a' + rng() % 4)));
  for (auto _ : state) benchmark::DoNotOptimize(mtc::krippendorff_alpha(m));
}
BENCHMARK(BM_Alpha)->Arg(100)->Arg(1000);

}  // namespace

BENCHMARK_MAIN();
