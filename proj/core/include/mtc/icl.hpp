#pragma once

// In-context-learning extraction: prompt strategies, few-shot selection,
// prompt rendering and the per-guideline extraction pipeline.

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "mtc/completion.hpp"
#include "mtc/dataset.hpp"
#include "mtc/grammar.hpp"
#include "mtc/normalize.hpp"

namespace mtc {

enum class StrategyKind { Simple, Guided, Specialized };

struct PromptStrategy {
  StrategyKind kind = StrategyKind::Simple;
  /// Specialized only. Unset means one call per type in
  /// ExtractOptions::specialized_types.
  std::optional<MtcType> type;

  static PromptStrategy simple() { return {StrategyKind::Simple, std::nullopt}; }
  static PromptStrategy guided() { return {StrategyKind::Guided, std::nullopt}; }
  static PromptStrategy specialized(MtcType t) { return {StrategyKind::Specialized, t}; }

  /// "simple", "guided", "specialized" or "specialized-<n>".
  std::string name() const;
  friend bool operator==(const PromptStrategy&, const PromptStrategy&) = default;
};

std::string_view to_string(StrategyKind k);
std::optional<StrategyKind> parse_strategy_kind(std::string_view s);

/// Types prompted by the specialized strategy: all but type 5.
std::vector<MtcType> default_specialized_types();

class StrategyMismatch : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

class InsufficientPool : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class LeakageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct PromptTemplate {
  PromptStrategy strategy;
  std::string header;
  std::string example_format;  // placeholders {dug}, {answer}
  std::string query_format;    // placeholder {dug}
};

/// Prompt templates keyed by strategy kind. Files are `simple.txt`,
/// `guided.txt` and `specialized.txt`, split into `[section]` blocks:
/// header, example, query, and description.N / format.N for specialized.
/// Lines starting with '#' are comments.
class TemplateLibrary {
 public:
  /// Templates shipped in core/data/prompts.
  static const TemplateLibrary& defaults();
  /// Missing files fall back to the shipped templates.
  static TemplateLibrary load(const std::filesystem::path& dir);

  /// Header placeholders are resolved here; per-example ones in build_prompt.
  PromptTemplate get(const PromptStrategy& strategy,
                     const AliasTable& aliases = AliasTable::defaults()) const;

 private:
  using Sections = std::map<std::string, std::string>;
  static Sections parse_sections(std::string_view text);
  std::map<StrategyKind, Sections> files_;
};

struct ExampleCoverage {
  std::vector<int> types;
  bool empty = false;
  bool multiple = false;
  bool difficult = false;
};

struct FewShotExample {
  Dug dug;
  std::string answer;
  ExampleCoverage coverage;
};

struct FewShotSet {
  std::vector<FewShotExample> examples;
  /// Strategy the answers were rendered for. Simple and guided share answers.
  PromptStrategy answers_for = PromptStrategy::simple();
  /// Strata the pool could not supply, e.g. "empty" or "type 5".
  std::vector<std::string> gaps;

  bool contains(const std::string& dug_id) const;
  std::size_t size() const { return examples.size(); }
};

ExampleCoverage coverage_of(const Dug& dug);

/// "NONE" or the matching labels joined with "; ". For specialized
/// strategies only labels of that type are listed.
std::string answer_for(const Dug& dug, const PromptStrategy& strategy);

/// Greedy coverage over type, emptiness, cardinality and difficulty strata,
/// then a seeded random fill. Deterministic for a given seed.
/// Throws InsufficientPool when k exceeds the pool or cannot cover the strata.
FewShotSet select_fewshot(const std::vector<Dug>& pool, std::size_t k, std::uint64_t seed);

/// Rebuilds a set (e.g. loaded from a file) with coverage and answers.
FewShotSet make_fewshot_set(std::vector<Dug> dugs);

FewShotSet with_answers(const FewShotSet& set, const PromptStrategy& strategy);

/// Corpus without the few-shot examples.
std::vector<Dug> evaluation_split(const std::vector<Dug>& corpus, const FewShotSet& fewshot);

/// Header, rendered examples, then the query. Throws StrategyMismatch when
/// the few-shot answers were rendered for an incompatible strategy.
std::string build_prompt(const PromptTemplate& tmpl, const FewShotSet& fewshot, const Dug& dug);

struct RetryPolicy {
  int attempts = 3;
  std::chrono::milliseconds initial_backoff{1000};
  double multiplier = 2.0;
};

struct ExtractOptions {
  DecodingOptions decoding;
  RetryPolicy retry;
  std::vector<MtcType> specialized_types = default_specialized_types();
  const AliasTable* aliases = &AliasTable::defaults();
  const TemplateLibrary* templates = &TemplateLibrary::defaults();
  /// Sleep hook used between retries; tests substitute a no-op.
  std::function<void(std::chrono::milliseconds)> sleep;
};

struct RawCall {
  std::optional<MtcType> type;  // specialized calls only
  std::string prompt_key;
  std::string text;
  bool ok = true;
  int attempts = 0;
  std::string error;
};

struct Candidate {
  std::string text;
  bool valid = false;
  std::optional<MtcType> requested_type;
  /// Valid, but of a different type than the specialized prompt asked for.
  bool off_type = false;
};

struct ExtractionRecord {
  std::string dug_id;
  PromptStrategy strategy;
  std::vector<RawCall> raw_outputs;
  std::vector<Candidate> candidates;
  MtcList parsed;
  bool failed = false;
  std::string error;
};

std::string to_json_line(const ExtractionRecord& record);
ExtractionRecord record_from_json(std::string_view line);
std::vector<ExtractionRecord> read_records(std::istream& in);

struct PlannedPrompt {
  PromptStrategy strategy;  // the concrete call, e.g. specialized-2
  std::string prompt;
};

/// The prompts extract would send for this guideline, in call order.
std::vector<PlannedPrompt> plan_prompts(const Dug& dug, const PromptStrategy& strategy, const FewShotSet& fewshot,
                                        const ExtractOptions& options = {});

/// Runs one guideline through the strategy. Throws LeakageError when the
/// guideline is a few-shot example. Service failures that survive the retry
/// policy mark the record failed.
ExtractionRecord extract(const Dug& dug, const PromptStrategy& strategy, const FewShotSet& fewshot,
                         CompletionClient& client, const ExtractOptions& options = {});

/// Extracts with up to `parallelism` concurrent requests. `sink` receives
/// records in input order.
void extract_all(const std::vector<Dug>& dugs, const PromptStrategy& strategy,
                 const FewShotSet& fewshot, CompletionClient& client, const ExtractOptions& options,
                 std::size_t parallelism, const std::function<void(const ExtractionRecord&)>& sink);

}  // namespace mtc
