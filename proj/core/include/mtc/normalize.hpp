#pragma once

// Post-processing that aligns free-form model output with the grammar, plus
// the number and activity conventions used when labeling.

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "mtc/grammar.hpp"

namespace mtc {

class NotANumber : public std::invalid_argument {
 public:
  explicit NotANumber(const std::string& token);
};

/// Digits, or the words one..twelve. Throws NotANumber.
std::uint32_t normalize_number(std::string_view token);
std::optional<std::uint32_t> try_normalize_number(std::string_view token);

/// Activity alias table. Text format: `alias<TAB>canonical` per line,
/// '#' starts a comment, blank lines ignored. Keys are stored folded.
class AliasTable {
 public:
  AliasTable() = default;

  /// The table shipped in core/data/activity_aliases.tsv.
  static const AliasTable& defaults();
  /// Throws std::runtime_error naming the offending line.
  static AliasTable parse(std::string_view tsv);
  static AliasTable load(const std::filesystem::path& path);

  void add(std::string_view alias, std::string_view canonical);
  std::optional<std::string> lookup(std::string_view phrase) const;
  const std::map<std::string, std::string>& entries() const { return entries_; }
  std::vector<std::string> canonical_activities() const;

 private:
  std::map<std::string, std::string> entries_;
};

std::string normalize_activity(std::string_view act,
                               const AliasTable& aliases = AliasTable::defaults());

/// Applies the alias table to the activity field, if any.
Mtc normalize_activities(Mtc mtc, const AliasTable& aliases = AliasTable::defaults());

/// Canonical string for a candidate, or nullopt if it does not parse.
std::optional<std::string> canonical_form(std::string_view candidate,
                                          const AliasTable& aliases = AliasTable::defaults());

struct RawOutput {
  std::string text;
};

struct DroppedSegment {
  std::string segment;
  std::string reason;
};

struct NormalizationResult {
  std::vector<std::string> candidates;
  std::vector<DroppedSegment> dropped;
};

/// Trims, strips quotes and bullets, splits on newline and ';', maps "NONE"
/// to nothing, rewrites each segment lexically, and re-serializes segments
/// that parse. Segments that still fail to parse are kept verbatim (after the
/// lexical rewrites) so they count against validity. "OR" is never split.
NormalizationResult normalize_raw_output(const RawOutput& raw,
                                         const AliasTable& aliases = AliasTable::defaults());

}  // namespace mtc
