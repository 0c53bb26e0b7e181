#include "mtc/icl.hpp"

#include <algorithm>
#include <atomic>
#include <condition_variable>
#include <exception>
#include <fstream>
#include <mutex>
#include <sstream>
#include <thread>
#include <variant>

#include "embedded_data.hpp"
#include "json.hpp"
#include "mtc/text.hpp"

namespace mtc {

using json = nlohmann::ordered_json;

std::string_view to_string(StrategyKind k) {
  switch (k) {
    case StrategyKind::Simple: return "simple";
    case StrategyKind::Guided: return "guided";
    case StrategyKind::Specialized: return "specialized";
  }
  return "?";
}

std::optional<StrategyKind> parse_strategy_kind(std::string_view s) {
  if (s == "simple") return StrategyKind::Simple;
  if (s == "guided") return StrategyKind::Guided;
  if (s == "specialized") return StrategyKind::Specialized;
  return std::nullopt;
}

std::string PromptStrategy::name() const {
  std::string out(to_string(kind));
  if (type) out += "-" + std::to_string(type->value());
  return out;
}

namespace {

PromptStrategy parse_strategy_name(std::string_view s) {
  if (auto k = parse_strategy_kind(s)) return {*k, std::nullopt};
  constexpr std::string_view kPrefix = "specialized-";
  if (s.substr(0, kPrefix.size()) == kPrefix && s.size() == kPrefix.size() + 1)
    return PromptStrategy::specialized(MtcType(s.back() - '0'));
  throw std::invalid_argument("unknown strategy '" + std::string(s) + "'");
}

// Single-pass {placeholder} substitution; unknown names are left verbatim.
std::string render(std::string_view tmpl, const std::map<std::string, std::string>& values) {
  std::string out;
  out.reserve(tmpl.size());
  for (std::size_t i = 0; i < tmpl.size(); ++i) {
    if (tmpl[i] == '{') {
      const auto close = tmpl.find('}', i);
      if (close != std::string_view::npos) {
        auto it = values.find(std::string(tmpl.substr(i + 1, close - i - 1)));
        if (it != values.end()) {
          out += it->second;
          i = close;
          continue;
        }
      }
    }
    out += tmpl[i];
  }
  return out;
}

bool answers_compatible(const PromptStrategy& a, const PromptStrategy& b) {
  const bool a_general = a.kind != StrategyKind::Specialized;
  const bool b_general = b.kind != StrategyKind::Specialized;
  if (a_general || b_general) return a_general == b_general;
  return a.type == b.type;
}

}  // namespace

std::vector<MtcType> default_specialized_types() {
  return {MtcType(1), MtcType(2), MtcType(3), MtcType(4), MtcType(6), MtcType(7)};
}

// ---------------------------------------------------------------------------
// Templates

TemplateLibrary::Sections TemplateLibrary::parse_sections(std::string_view text) {
  Sections sections;
  std::string current;
  std::vector<std::string> lines;
  auto flush = [&] {
    while (!lines.empty() && text::trim(lines.back()).empty()) lines.pop_back();
    while (!lines.empty() && text::trim(lines.front()).empty()) lines.erase(lines.begin());
    if (!current.empty()) sections[current] = text::join(lines, "\n");
    lines.clear();
  };
  for (auto line : text::split_any(text, "\n")) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!line.empty() && line.front() == '#') continue;
    if (line.size() > 2 && line.front() == '[' && line.back() == ']') {
      flush();
      current = line.substr(1, line.size() - 2);
      continue;
    }
    lines.push_back(line);
  }
  flush();
  return sections;
}

const TemplateLibrary& TemplateLibrary::defaults() {
  static const TemplateLibrary lib = [] {
    TemplateLibrary l;
    l.files_[StrategyKind::Simple] = parse_sections(data::prompt_simple());
    l.files_[StrategyKind::Guided] = parse_sections(data::prompt_guided());
    l.files_[StrategyKind::Specialized] = parse_sections(data::prompt_specialized());
    return l;
  }();
  return lib;
}

TemplateLibrary TemplateLibrary::load(const std::filesystem::path& dir) {
  TemplateLibrary lib = defaults();
  for (StrategyKind k : {StrategyKind::Simple, StrategyKind::Guided, StrategyKind::Specialized}) {
    const auto path = dir / (std::string(to_string(k)) + ".txt");
    if (!std::filesystem::exists(path)) continue;
    std::ifstream in(path);
    std::ostringstream ss;
    ss << in.rdbuf();
    lib.files_[k] = parse_sections(ss.str());
  }
  return lib;
}

PromptTemplate TemplateLibrary::get(const PromptStrategy& strategy, const AliasTable& aliases) const {
  if (strategy.kind == StrategyKind::Specialized && !strategy.type)
    throw std::invalid_argument("a template needs a concrete specialized type");
  const auto& sections = files_.at(strategy.kind);
  auto section = [&](const std::string& name) -> std::string {
    auto it = sections.find(name);
    if (it == sections.end())
      throw std::runtime_error(std::string(to_string(strategy.kind)) + " template lacks [" + name + "]");
    return it->second;
  };

  std::map<std::string, std::string> values;
  if (strategy.kind == StrategyKind::Guided) {
    values["terminals"] = describe_terminals();
    values["nonterminals"] = describe_nonterminals();
    auto acts = aliases.canonical_activities();
    acts.push_back("taking medication");
    values["activities"] = text::join(acts, ", ");
  }
  if (strategy.type) {
    const std::string n = std::to_string(strategy.type->value());
    values["type_number"] = n;
    values["type_name"] = std::string(strategy.type->name());
    values["type_description"] = section("description." + n);
    values["format_hint"] = section("format." + n);
  }
  return {strategy, render(section("header"), values), section("example"), section("query")};
}

// ---------------------------------------------------------------------------
// Few-shot selection

bool FewShotSet::contains(const std::string& dug_id) const {
  return std::any_of(examples.begin(), examples.end(),
                     [&](const FewShotExample& e) { return e.dug.id == dug_id; });
}

ExampleCoverage coverage_of(const Dug& dug) {
  ExampleCoverage c;
  for (const auto& m : dug.labels) {
    const int t = mtc_type(m).value();
    if (std::find(c.types.begin(), c.types.end(), t) == c.types.end()) c.types.push_back(t);
  }
  std::sort(c.types.begin(), c.types.end());
  c.empty = dug.labels.empty();
  c.multiple = dug.labels.size() > 1;
  c.difficult = is_difficult(dug);
  return c;
}

std::string answer_for(const Dug& dug, const PromptStrategy& strategy) {
  std::vector<std::string> parts;
  for (const auto& m : dug.labels)
    if (strategy.kind != StrategyKind::Specialized || !strategy.type || mtc_type(m) == *strategy.type)
      parts.push_back(serialize(m));
  return parts.empty() ? "NONE" : text::join(parts, "; ");
}

namespace {

// splitmix64; the standard distributions are not portable across libraries.
struct SplitMix {
  std::uint64_t state;
  std::uint64_t next() {
    std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }
};

std::vector<std::string> strata_of(const ExampleCoverage& c) {
  std::vector<std::string> s;
  for (int t : c.types) s.push_back("type " + std::to_string(t));
  s.emplace_back(c.empty ? "empty" : "non-empty");
  if (!c.empty) s.emplace_back(c.multiple ? "multiple" : "single");
  s.emplace_back(c.difficult ? "difficult" : "simple");
  return s;
}

std::vector<std::string> all_strata() {
  std::vector<std::string> s;
  for (int t = 1; t <= 7; ++t) s.push_back("type " + std::to_string(t));
  for (const char* x : {"empty", "non-empty", "single", "multiple", "simple", "difficult"}) s.emplace_back(x);
  return s;
}

}  // namespace

FewShotSet make_fewshot_set(std::vector<Dug> dugs) {
  FewShotSet set;
  for (auto& d : dugs) {
    FewShotExample e;
    e.coverage = coverage_of(d);
    e.answer = answer_for(d, PromptStrategy::simple());
    e.dug = std::move(d);
    set.examples.push_back(std::move(e));
  }
  return set;
}

FewShotSet select_fewshot(const std::vector<Dug>& pool, std::size_t k, std::uint64_t seed) {
  if (k > pool.size())
    throw InsufficientPool("requested " + std::to_string(k) + " examples from a pool of " +
                           std::to_string(pool.size()));

  std::vector<std::vector<std::string>> strata;
  strata.reserve(pool.size());
  std::set<std::string> available;
  for (const auto& d : pool) {
    strata.push_back(strata_of(coverage_of(d)));
    available.insert(strata.back().begin(), strata.back().end());
  }

  std::vector<std::size_t> order(pool.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  SplitMix rng{seed};
  for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[rng.next() % i]);

  std::set<std::string> uncovered = available;
  std::vector<std::size_t> chosen;
  std::vector<bool> taken(pool.size(), false);
  while (!uncovered.empty() && chosen.size() < k) {
    std::size_t best = pool.size();
    std::size_t best_gain = 0;
    for (std::size_t idx : order) {
      if (taken[idx]) continue;
      std::size_t gain = 0;
      for (const auto& s : strata[idx]) gain += uncovered.count(s);
      if (gain > best_gain) {
        best_gain = gain;
        best = idx;
      }
    }
    if (best == pool.size()) break;
    taken[best] = true;
    chosen.push_back(best);
    for (const auto& s : strata[best]) uncovered.erase(s);
  }
  if (!uncovered.empty())
    throw InsufficientPool("k=" + std::to_string(k) + " is too small to cover stratum '" +
                           *uncovered.begin() + "'");
  for (std::size_t idx : order) {
    if (chosen.size() >= k) break;
    if (!taken[idx]) {
      taken[idx] = true;
      chosen.push_back(idx);
    }
  }

  std::vector<Dug> picked;
  picked.reserve(chosen.size());
  for (std::size_t idx : chosen) picked.push_back(pool[idx]);
  FewShotSet set = make_fewshot_set(std::move(picked));
  for (const auto& s : all_strata())
    if (!available.count(s)) set.gaps.push_back(s);
  return set;
}

FewShotSet with_answers(const FewShotSet& set, const PromptStrategy& strategy) {
  FewShotSet out = set;
  out.answers_for = strategy;
  for (auto& e : out.examples) e.answer = answer_for(e.dug, strategy);
  return out;
}

std::vector<Dug> evaluation_split(const std::vector<Dug>& corpus, const FewShotSet& fewshot) {
  std::vector<Dug> out;
  for (const auto& d : corpus)
    if (!fewshot.contains(d.id)) out.push_back(d);
  return out;
}

std::string build_prompt(const PromptTemplate& tmpl, const FewShotSet& fewshot, const Dug& dug) {
  if (!answers_compatible(tmpl.strategy, fewshot.answers_for))
    throw StrategyMismatch("template strategy " + tmpl.strategy.name() +
                           " does not match few-shot answers for " + fewshot.answers_for.name());
  std::string prompt = tmpl.header;
  prompt += "\n\n";
  for (const auto& e : fewshot.examples) {
    prompt += render(tmpl.example_format, {{"dug", e.dug.text}, {"answer", e.answer}});
    prompt += "\n\n";
  }
  prompt += render(tmpl.query_format, {{"dug", dug.text}});
  return prompt;
}

// ---------------------------------------------------------------------------
// Extraction

namespace {

struct PreparedCall {
  PromptStrategy strategy;
  PromptTemplate tmpl;
  FewShotSet fewshot;
};

std::vector<PreparedCall> prepare(const PromptStrategy& strategy, const FewShotSet& fewshot,
                                  const ExtractOptions& options) {
  std::vector<PromptStrategy> calls;
  if (strategy.kind != StrategyKind::Specialized)
    calls.push_back(strategy);
  else if (strategy.type)
    calls.push_back(strategy);
  else
    for (MtcType t : options.specialized_types) calls.push_back(PromptStrategy::specialized(t));

  std::vector<PreparedCall> out;
  for (const auto& s : calls)
    out.push_back({s, options.templates->get(s, *options.aliases), with_answers(fewshot, s)});
  return out;
}

ExtractionRecord run_extraction(const Dug& dug, const PromptStrategy& strategy,
                                const FewShotSet& fewshot, const std::vector<PreparedCall>& calls,
                                CompletionClient& client, const ExtractOptions& options) {
  if (fewshot.contains(dug.id))
    throw LeakageError("guideline '" + dug.id + "' is a few-shot example");

  ExtractionRecord record;
  record.dug_id = dug.id;
  record.strategy = strategy;

  for (const auto& call : calls) {
    RawCall raw;
    raw.type = call.strategy.type;
    const CompletionRequest request{build_prompt(call.tmpl, call.fewshot, dug), options.decoding};
    raw.prompt_key = prompt_key(request.prompt);

    auto backoff = options.retry.initial_backoff;
    const int attempts = std::max(1, options.retry.attempts);
    for (int attempt = 1; attempt <= attempts; ++attempt) {
      raw.attempts = attempt;
      try {
        raw.text = client.complete(request).text;
        raw.ok = true;
        raw.error.clear();
        break;
      } catch (const ServiceError& e) {
        raw.ok = false;
        raw.error = "status " + std::to_string(e.status()) + " on attempt " +
                    std::to_string(attempt) + ": " + e.what();
        // Client errors other than rate limiting will not change on retry.
        if (e.status() >= 400 && e.status() < 500 && e.status() != 429) break;
      } catch (const std::exception& e) {
        raw.ok = false;
        raw.error = "attempt " + std::to_string(attempt) + ": " + e.what();
      }
      if (attempt < attempts) {
        if (options.sleep)
          options.sleep(backoff);
        else
          std::this_thread::sleep_for(backoff);
        backoff = std::chrono::milliseconds(
            static_cast<std::int64_t>(double(backoff.count()) * options.retry.multiplier));
      }
    }
    if (!raw.ok) {
      record.failed = true;
      if (record.error.empty()) record.error = raw.error;
      record.raw_outputs.push_back(std::move(raw));
      continue;
    }

    const auto norm = normalize_raw_output(RawOutput{raw.text}, *options.aliases);
    for (const auto& text : norm.candidates) {
      Candidate c;
      c.text = text;
      c.requested_type = call.strategy.type;
      auto outcome = try_parse_mtc(text);
      c.valid = outcome.mtc.has_value();
      if (c.valid) {
        c.off_type = call.strategy.type && mtc_type(*outcome.mtc) != *call.strategy.type;
        if (!c.off_type) record.parsed.add(*outcome.mtc);
      }
      record.candidates.push_back(std::move(c));
    }
    record.raw_outputs.push_back(std::move(raw));
  }
  if (record.failed) {
    record.candidates.clear();
    record.parsed = MtcList{};
  }
  return record;
}

}  // namespace

std::vector<PlannedPrompt> plan_prompts(const Dug& dug, const PromptStrategy& strategy, const FewShotSet& fewshot,
                                        const ExtractOptions& options) {
  std::vector<PlannedPrompt> out;
  for (const auto& call : prepare(strategy, fewshot, options))
    out.push_back({call.strategy, build_prompt(call.tmpl, call.fewshot, dug)});
  return out;
}

ExtractionRecord extract(const Dug& dug, const PromptStrategy& strategy, const FewShotSet& fewshot,
                         CompletionClient& client, const ExtractOptions& options) {
  return run_extraction(dug, strategy, fewshot, prepare(strategy, fewshot, options), client, options);
}

void extract_all(const std::vector<Dug>& dugs, const PromptStrategy& strategy,
                 const FewShotSet& fewshot, CompletionClient& client, const ExtractOptions& options,
                 std::size_t parallelism, const std::function<void(const ExtractionRecord&)>& sink) {
  const auto calls = prepare(strategy, fewshot, options);
  if (parallelism <= 1 || dugs.size() <= 1) {
    for (const auto& d : dugs) sink(run_extraction(d, strategy, fewshot, calls, client, options));
    return;
  }

  using Slot = std::variant<std::monostate, ExtractionRecord, std::exception_ptr>;
  std::vector<Slot> slots(dugs.size());
  std::mutex mu;
  std::condition_variable ready;
  std::atomic<std::size_t> next{0};
  std::atomic<bool> stop{false};

  auto worker = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= dugs.size() || stop) return;
      Slot result;
      try {
        result = run_extraction(dugs[i], strategy, fewshot, calls, client, options);
      } catch (...) {
        result = std::current_exception();
      }
      {
        std::lock_guard lock(mu);
        slots[i] = std::move(result);
      }
      ready.notify_all();
    }
  };

  std::vector<std::jthread> workers;
  const std::size_t n = std::min(parallelism, dugs.size());
  for (std::size_t i = 0; i < n; ++i) workers.emplace_back(worker);

  for (std::size_t i = 0; i < dugs.size(); ++i) {
    Slot slot;
    {
      std::unique_lock lock(mu);
      ready.wait(lock, [&] { return !std::holds_alternative<std::monostate>(slots[i]); });
      slot = std::move(slots[i]);
    }
    if (auto* err = std::get_if<std::exception_ptr>(&slot)) {
      stop = true;
      for (auto& w : workers) w.join();
      std::rethrow_exception(*err);
    }
    sink(std::get<ExtractionRecord>(slot));
  }
}

// ---------------------------------------------------------------------------
// Record serialization

std::string to_json_line(const ExtractionRecord& r) {
  json j;
  j["id"] = r.dug_id;
  j["strategy"] = r.strategy.name();
  j["failed"] = r.failed;
  if (r.failed) j["error"] = r.error;
  json raws = json::array();
  for (const auto& raw : r.raw_outputs) {
    json o;
    o["type"] = raw.type ? json(raw.type->value()) : json(nullptr);
    o["prompt_key"] = raw.prompt_key;
    o["text"] = raw.text;
    o["ok"] = raw.ok;
    o["attempts"] = raw.attempts;
    if (!raw.ok) o["error"] = raw.error;
    raws.push_back(std::move(o));
  }
  j["raw_outputs"] = std::move(raws);
  json cands = json::array();
  for (const auto& c : r.candidates) {
    json o;
    o["text"] = c.text;
    o["valid"] = c.valid;
    o["type"] = c.requested_type ? json(c.requested_type->value()) : json(nullptr);
    o["off_type"] = c.off_type;
    cands.push_back(std::move(o));
  }
  j["candidates"] = std::move(cands);
  j["parsed"] = r.parsed.canonical_strings();
  return j.dump();
}

ExtractionRecord record_from_json(std::string_view line) {
  const json j = json::parse(line);
  ExtractionRecord r;
  r.dug_id = j.at("id").get<std::string>();
  r.strategy = parse_strategy_name(j.at("strategy").get<std::string>());
  r.failed = j.at("failed").get<bool>();
  if (j.contains("error")) r.error = j.at("error").get<std::string>();
  auto opt_type = [](const json& v) -> std::optional<MtcType> {
    if (v.is_null()) return std::nullopt;
    return MtcType(v.get<int>());
  };
  for (const auto& o : j.at("raw_outputs")) {
    RawCall raw;
    raw.type = opt_type(o.at("type"));
    raw.prompt_key = o.at("prompt_key").get<std::string>();
    raw.text = o.at("text").get<std::string>();
    raw.ok = o.at("ok").get<bool>();
    raw.attempts = o.at("attempts").get<int>();
    if (o.contains("error")) raw.error = o.at("error").get<std::string>();
    r.raw_outputs.push_back(std::move(raw));
  }
  for (const auto& o : j.at("candidates")) {
    Candidate c;
    c.text = o.at("text").get<std::string>();
    c.valid = o.at("valid").get<bool>();
    c.requested_type = opt_type(o.at("type"));
    c.off_type = o.at("off_type").get<bool>();
    r.candidates.push_back(std::move(c));
  }
  for (const auto& s : j.at("parsed")) r.parsed.add(parse_mtc(s.get<std::string>()));
  return r;
}

std::vector<ExtractionRecord> read_records(std::istream& in) {
  std::vector<ExtractionRecord> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (text::trim(line).empty()) continue;
    try {
      out.push_back(record_from_json(line));
    } catch (const std::exception& e) {
      throw std::runtime_error("prediction line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return out;
}

}  // namespace mtc
