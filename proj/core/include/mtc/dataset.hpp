#pragma once

// Labeled guideline corpora: loading, EHR statement extraction via sig
// abbreviations, and corpus statistics.

#include <array>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "mtc/grammar.hpp"
#include "mtc/normalize.hpp"

namespace mtc {

enum class Source { Fda, Medscape, Ehr };

std::string_view to_string(Source s);
std::optional<Source> parse_source(std::string_view s);

/// A drug usage guideline statement with gold labels.
struct Dug {
  std::string id;
  Source source = Source::Fda;
  std::string text;
  MtcList labels;
  /// Whether labeling needed non-trivial normalization; derived from text
  /// and labels when the corpus does not say.
  std::optional<bool> difficult;
};

bool is_difficult(const Dug& dug);

struct CorpusIssue {
  std::size_t line;
  std::string reason;
};

class CorpusFormatError : public std::runtime_error {
 public:
  explicit CorpusFormatError(std::vector<CorpusIssue> issues);
  const std::vector<CorpusIssue>& issues() const { return issues_; }

 private:
  std::vector<CorpusIssue> issues_;
};

/// Reads the corpus line format: one JSON object per line with keys id,
/// source, text, labels (array of strings) and optionally difficult (bool).
/// Blank lines are skipped. Every problem is collected before throwing.
std::vector<Dug> read_dugs(std::istream& in, const AliasTable& aliases = AliasTable::defaults());
std::vector<Dug> load_dugs(const std::filesystem::path& path,
                           const AliasTable& aliases = AliasTable::defaults());

std::string to_json_line(const Dug& dug);
void write_dugs(std::ostream& out, const std::vector<Dug>& dugs);

struct AbbreviationRule {
  std::string abbrev;
  std::string label;
  MtcType type;
};

/// The eight sig abbreviations: b.i.d., q.d., q.h., q.i.d., t.i.d., h.s., p.c., a.c.
const std::vector<AbbreviationRule>& default_abbreviation_rules();

/// Sentence boundaries at '.', '?' or '!' followed by whitespace or end of
/// text. Titles and "e.g."/"i.e." never end a sentence; sig abbreviations
/// and "mg." end one only when the next word is capitalized.
std::vector<std::string> split_sentences(std::string_view text,
                                         const std::vector<AbbreviationRule>& rules);

struct EhrExtractionOptions {
  std::size_t min_tokens = 4;
  std::size_t max_tokens = 60;
  std::string id_prefix = "ehr";
  std::size_t first_index = 1;
};

/// Throws std::invalid_argument when min_tokens > max_tokens.
std::vector<Dug> extract_ehr_statements(std::string_view report_text,
                                        const std::vector<AbbreviationRule>& rules,
                                        const EhrExtractionOptions& options = {});

struct SourceStats {
  std::size_t dugs = 0;
  std::size_t mtcs = 0;
  std::array<std::size_t, 7> type_counts{};
  /// Share of this source's MTCs per type, in percent. All zero when mtcs == 0.
  std::array<double, 7> type_percent{};
};

struct CorpusStats {
  std::size_t total_dugs = 0;
  std::size_t total_mtcs = 0;
  std::map<Source, SourceStats> per_source;  // always holds all three sources
};

CorpusStats dataset_stats(const std::vector<Dug>& dugs);

}  // namespace mtc
