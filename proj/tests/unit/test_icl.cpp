#include <atomic>
#include <map>
#include <mutex>
#include <sstream>
#include <thread>

#include "corpus.hpp"
#include "doctest.h"
#include "mtc/icl.hpp"

using namespace mtc;
using testing::make_dug;

namespace {

/// Answers by looking for a marker in the query part of the prompt.
class ScriptedClient : public CompletionClient {
 public:
  explicit ScriptedClient(std::function<std::string(const std::string&)> f) : f_(std::move(f)) {}
  CompletionResponse complete(const CompletionRequest& r) override {
    ++calls;
    return {f_(r.prompt), "stop"};
  }
  std::atomic<int> calls{0};

 private:
  std::function<std::string(const std::string&)> f_;
};

class FlakyClient : public CompletionClient {
 public:
  FlakyClient(int failures, int status) : failures_(failures), status_(status) {}
  CompletionResponse complete(const CompletionRequest&) override {
    ++calls;
    if (calls <= failures_) throw ServiceError(status_, calls, "simulated");
    return {"3 times day", "stop"};
  }
  int calls = 0;

 private:
  int failures_;
  int status_;
};

ExtractOptions quick() {
  ExtractOptions o;
  o.sleep = [](std::chrono::milliseconds) {};
  return o;
}

std::string query_of(const std::string& prompt) { return prompt.substr(prompt.rfind("Guideline:")); }

}  // namespace

TEST_CASE("strategy names and parsing") {
  CHECK(PromptStrategy::simple().name() == "simple");
  CHECK(PromptStrategy::guided().name() == "guided");
  CHECK(PromptStrategy::specialized(MtcType(2)).name() == "specialized-2");
  CHECK(parse_strategy_kind("specialized") == StrategyKind::Specialized);
  CHECK_FALSE(parse_strategy_kind("fancy"));
  std::vector<int> types;
  for (auto t : default_specialized_types()) types.push_back(t.value());
  CHECK(types == std::vector<int>{1, 2, 3, 4, 6, 7});
}

TEST_CASE("templates") {
  const auto& lib = TemplateLibrary::defaults();
  const auto guided = lib.get(PromptStrategy::guided());
  CHECK(guided.header.find(describe_terminals()) != std::string::npos);
  CHECK(guided.header.find(describe_nonterminals()) != std::string::npos);
  CHECK(guided.header.find("sleep") != std::string::npos);
  const auto spec = lib.get(PromptStrategy::specialized(MtcType(2)));
  CHECK(spec.header.find("frequency") != std::string::npos);
  CHECK(spec.header.find("{type") == std::string::npos);
  CHECK(lib.get(PromptStrategy::simple()).header.find('{') == std::string::npos);
  CHECK_THROWS_AS(lib.get(PromptStrategy{StrategyKind::Specialized, std::nullopt}), std::invalid_argument);

  testing::TempDir dir("tmpl");
  testing::spit(dir / "simple.txt", "[header]\nCustom header\n[example]\nQ: {dug}\nA: {answer}\n[query]\nQ: {dug}\nA:\n");
  const auto custom = TemplateLibrary::load(dir.path());
  CHECK(custom.get(PromptStrategy::simple()).header == "Custom header");
  CHECK(custom.get(PromptStrategy::guided()).header == guided.header);
}

TEST_CASE("build_prompt") {
  const auto dug = make_dug("q", Source::Fda, "Take Wellbutrin three times daily.", {"3 times day"});
  const auto& lib = TemplateLibrary::defaults();
  const auto tmpl = lib.get(PromptStrategy::simple());

  const auto zero = build_prompt(tmpl, FewShotSet{}, dug);
  CHECK(zero.rfind(tmpl.header, 0) == 0);
  CHECK(zero.find("Constraints:") == zero.rfind("Constraints:"));

  const auto pool = testing::synthetic_corpus(30, 1);
  const auto fs = select_fewshot(pool, 20, 4);
  const auto p1 = build_prompt(tmpl, fs, dug);
  CHECK(p1 == build_prompt(tmpl, fs, dug));
  std::size_t count = 0;
  for (auto pos = p1.find(dug.text); pos != std::string::npos; pos = p1.find(dug.text, pos + 1)) ++count;
  CHECK(count == 1);
  std::size_t answers = 0;
  for (auto pos = p1.find("Constraints:"); pos != std::string::npos; pos = p1.find("Constraints:", pos + 1)) ++answers;
  CHECK(answers == fs.size() + 1);

  CHECK_THROWS_AS(build_prompt(lib.get(PromptStrategy::specialized(MtcType(2))), fs, dug), StrategyMismatch);
  const auto spec_fs = with_answers(fs, PromptStrategy::specialized(MtcType(2)));
  const auto spec = build_prompt(lib.get(PromptStrategy::specialized(MtcType(2))), spec_fs, dug);
  for (const auto& e : spec_fs.examples) {
    if (e.answer == "NONE") continue;
    for (const auto& part : parse_mtc_list(e.answer).items) CHECK(mtc_type(part).value() == 2);
  }
  CHECK_THROWS_AS(build_prompt(lib.get(PromptStrategy::specialized(MtcType(3))), spec_fs, dug), StrategyMismatch);
  CHECK_NOTHROW(build_prompt(lib.get(PromptStrategy::guided()), fs, dug));
}

TEST_CASE("answer_for") {
  const auto d = make_dug("a", Source::Fda, "t", {"2 times day", "before sleep"});
  CHECK(answer_for(d, PromptStrategy::simple()) == "2 times day; before sleep");
  CHECK(answer_for(d, PromptStrategy::specialized(MtcType(4))) == "before sleep");
  CHECK(answer_for(d, PromptStrategy::specialized(MtcType(6))) == "NONE");
  CHECK(answer_for(make_dug("b", Source::Fda, "t", {}), PromptStrategy::simple()) == "NONE");
}

TEST_CASE("select_fewshot") {
  const auto pool = testing::synthetic_corpus(40, 11);
  SUBCASE("coverage invariants and determinism") {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
      const auto fs = select_fewshot(pool, 20, seed);
      CHECK(fs.size() == 20);
      CHECK(fs.gaps.empty());
      std::set<int> types;
      bool empty = false, multiple = false, difficult = false, simple = false;
      std::set<std::string> ids;
      for (const auto& e : fs.examples) {
        types.insert(e.coverage.types.begin(), e.coverage.types.end());
        empty |= e.coverage.empty;
        multiple |= e.coverage.multiple;
        difficult |= e.coverage.difficult;
        simple |= !e.coverage.difficult;
        CHECK(ids.insert(e.dug.id).second);
      }
      CHECK(types.size() == 7);
      CHECK((empty && multiple && difficult && simple));
      const auto again = select_fewshot(pool, 20, seed);
      for (std::size_t i = 0; i < fs.size(); ++i) CHECK(again.examples[i].dug.id == fs.examples[i].dug.id);
      for (const auto& d : evaluation_split(pool, fs)) CHECK_FALSE(fs.contains(d.id));
      CHECK(evaluation_split(pool, fs).size() == pool.size() - 20);
    }
    CHECK(select_fewshot(pool, 20, 1).examples[10].dug.id != select_fewshot(pool, 20, 2).examples[10].dug.id);
  }
  SUBCASE("whole pool") { CHECK(select_fewshot(pool, pool.size(), 3).size() == pool.size()); }
  SUBCASE("errors") {
    CHECK_THROWS_AS(select_fewshot(pool, pool.size() + 1, 0), InsufficientPool);
    CHECK_THROWS_AS(select_fewshot(pool, 3, 0), InsufficientPool);
  }
  SUBCASE("gap recorded") {
    std::vector<Dug> no_empty;
    for (const auto& d : pool)
      if (!d.labels.empty()) no_empty.push_back(d);
    const auto fs = select_fewshot(no_empty, 20, 0);
    CHECK(std::find(fs.gaps.begin(), fs.gaps.end(), "empty") != fs.gaps.end());
  }
}

TEST_CASE("extract: quoted replay behaviour") {
  testing::TempDir dir("replay");
  const auto dug = make_dug("w", Source::Medscape, "Wellbutrin is usually taken three times daily.", {"3 times day"});
  const FewShotSet none;
  auto opts = quick();

  SUBCASE("frequency") {
    for (const auto& c : plan_prompts(dug, PromptStrategy::simple(), none, opts))
      ReplayClient::write_fixture(dir.path(), c.prompt, "3 times day");
    ReplayClient client(dir.path());
    const auto r = extract(dug, PromptStrategy::simple(), none, client, opts);
    REQUIRE(r.parsed.size() == 1);
    CHECK(r.parsed[0] == Mtc{Frequency{3, TimeUnit::Day}});
    CHECK_FALSE(r.failed);
  }
  SUBCASE("specialized NONE everywhere") {
    const auto spec = PromptStrategy{StrategyKind::Specialized, std::nullopt};
    const auto calls = plan_prompts(dug, spec, none, opts);
    CHECK(calls.size() == 6);
    for (const auto& c : calls) ReplayClient::write_fixture(dir.path(), c.prompt, "NONE");
    ReplayClient client(dir.path());
    const auto r = extract(dug, spec, none, client, opts);
    CHECK(r.raw_outputs.size() == 6);
    CHECK(r.parsed.empty());
    CHECK(r.candidates.empty());
  }
  SUBCASE("OR answer") {
    for (const auto& c : plan_prompts(dug, PromptStrategy::simple(), none, opts))
      ReplayClient::write_fixture(dir.path(), c.prompt, "2 times day OR 3 times day");
    ReplayClient client(dir.path());
    const auto r = extract(dug, PromptStrategy::simple(), none, client, opts);
    CHECK(r.raw_outputs.size() == 1);
    REQUIRE(r.candidates.size() == 1);
    CHECK_FALSE(r.candidates[0].valid);
    CHECK(r.parsed.empty());
  }
  SUBCASE("missing fixture fails without retrying") {
    ReplayClient client(dir.path());
    const auto r = extract(dug, PromptStrategy::simple(), none, client, opts);
    CHECK(r.failed);
    CHECK(r.raw_outputs.at(0).attempts == 1);
    CHECK(r.raw_outputs.at(0).error.find("404") != std::string::npos);
  }
}

TEST_CASE("extract: specialized merge and off-type answers") {
  const auto dug = make_dug("m", Source::Fda, "Take twice daily before meals.", {"2 times day", "before eating"});
  ScriptedClient client([](const std::string& prompt) {
    if (prompt.find("MTC type 2)") != std::string::npos) return std::string("2 times day; before meals");
    if (prompt.find("MTC type 4)") != std::string::npos) return std::string("before eating");
    return std::string("NONE");
  });
  const auto r = extract(dug, PromptStrategy{StrategyKind::Specialized, std::nullopt}, FewShotSet{}, client, quick());
  CHECK(client.calls == 6);
  CHECK(r.parsed.canonical_strings() == std::vector<std::string>{"2 times day", "before eating"});
  int off = 0;
  for (const auto& c : r.candidates) {
    if (c.off_type) {
      ++off;
      CHECK(c.requested_type == MtcType(2));
      CHECK(c.text == "before eating");
    }
  }
  CHECK(off == 1);
  for (const auto& m : r.parsed) {
    bool from_matching_call = false;
    for (const auto& c : r.candidates)
      if (c.valid && !c.off_type && c.text == serialize(m)) from_matching_call = c.requested_type == mtc_type(m);
    CHECK(from_matching_call);
  }
}

TEST_CASE("extract: leakage and retries") {
  const auto pool = testing::synthetic_corpus(30, 2);
  const auto fs = select_fewshot(pool, 20, 0);
  FlakyClient ok(0, 500);
  CHECK_THROWS_AS(extract(fs.examples[0].dug, PromptStrategy::simple(), fs, ok, quick()), LeakageError);

  const auto dug = evaluation_split(pool, fs).front();
  std::vector<std::chrono::milliseconds> waits;
  auto opts = quick();
  opts.sleep = [&](std::chrono::milliseconds d) { waits.push_back(d); };

  FlakyClient flaky(2, 503);
  auto r = extract(dug, PromptStrategy::simple(), fs, flaky, opts);
  CHECK_FALSE(r.failed);
  CHECK(r.raw_outputs[0].attempts == 3);
  CHECK(waits == std::vector<std::chrono::milliseconds>{std::chrono::milliseconds(1000), std::chrono::milliseconds(2000)});

  FlakyClient dead(10, 500);
  r = extract(dug, PromptStrategy::simple(), fs, dead, opts);
  CHECK(r.failed);
  CHECK(dead.calls == 3);
  CHECK(r.candidates.empty());
  CHECK(r.parsed.empty());
  CHECK_FALSE(r.error.empty());

  FlakyClient limited(1, 429);
  CHECK_FALSE(extract(dug, PromptStrategy::simple(), fs, limited, opts).failed);
}

TEST_CASE("extract_all keeps input order under concurrency") {
  const auto pool = testing::synthetic_corpus(40, 8);
  const auto fs = select_fewshot(pool, 20, 1);
  const auto split = evaluation_split(pool, fs);
  std::atomic<int> in_flight{0}, peak{0};
  ScriptedClient client([&](const std::string& prompt) {
    const int now = ++in_flight;
    int p = peak.load();
    while (now > p && !peak.compare_exchange_weak(p, now)) {}
    std::this_thread::sleep_for(std::chrono::milliseconds(prompt.size() % 7));
    --in_flight;
    return std::string(query_of(prompt).find('1') != std::string::npos ? "3 times day" : "NONE");
  });
  std::vector<std::string> seq, par;
  extract_all(split, PromptStrategy::simple(), fs, client, quick(), 1,
              [&](const ExtractionRecord& r) { seq.push_back(to_json_line(r)); });
  extract_all(split, PromptStrategy::simple(), fs, client, quick(), 4,
              [&](const ExtractionRecord& r) { par.push_back(to_json_line(r)); });
  CHECK(seq == par);
  CHECK(peak.load() <= 4);
  CHECK(seq.size() == split.size());

  ScriptedClient thrower([](const std::string&) -> std::string { throw std::runtime_error("boom"); });
  // Non-service exceptions are retried and then mark the record failed.
  std::size_t failed = 0;
  extract_all(split, PromptStrategy::simple(), fs, thrower, quick(), 3,
              [&](const ExtractionRecord& r) { failed += r.failed; });
  CHECK(failed == split.size());
  CHECK_THROWS_AS(extract_all(pool, PromptStrategy::simple(), fs, thrower, quick(), 3, [](const auto&) {}),
                  LeakageError);
}

TEST_CASE("record JSON round trip") {
  const auto dug = make_dug("r", Source::Fda, "t", {});
  ScriptedClient client([](const std::string& p) {
    return std::string(p.find("MTC type 3)") != std::string::npos ? "4 hours apart; 2 times day" : "NONE");
  });
  const auto r = extract(dug, PromptStrategy{StrategyKind::Specialized, std::nullopt}, FewShotSet{}, client, quick());
  const auto line = to_json_line(r);
  const auto back = record_from_json(line);
  CHECK(to_json_line(back) == line);
  CHECK(back.parsed == r.parsed);
  CHECK(back.candidates.size() == r.candidates.size());
  std::istringstream in(line + "\n\n" + line + "\n");
  CHECK(read_records(in).size() == 2);
}
