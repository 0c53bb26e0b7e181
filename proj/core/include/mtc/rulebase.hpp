#pragma once

// Phrase-pattern baseline that detects which MTC types occur in a guideline.

#include <filesystem>
#include <map>
#include <regex>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "mtc/dataset.hpp"
#include "mtc/grammar.hpp"
#include "mtc/metrics.hpp"

namespace mtc {

struct TypeRule {
  MtcType type;
  std::vector<std::string> patterns;
};

/// Rule file: `type<TAB>pattern` per line, '#' comments. Lines sharing a
/// type are merged into one rule, in first-appearance order.
std::vector<TypeRule> parse_type_rules(std::string_view tsv);
std::vector<TypeRule> load_type_rules(const std::filesystem::path& path);
const std::vector<TypeRule>& default_type_rules();

/// Translates the pattern syntax to an ECMAScript regex source. Throws
/// std::invalid_argument on unknown placeholders or unbalanced groups.
std::string compile_pattern(std::string_view pattern);

class TypeClassifier {
 public:
  explicit TypeClassifier(const std::vector<TypeRule>& rules);
  std::set<MtcType> classify(std::string_view text) const;

 private:
  std::vector<std::pair<MtcType, std::regex>> compiled_;
};

std::set<MtcType> classify_types(std::string_view text, const std::vector<TypeRule>& rules);

struct TypePrediction {
  std::string dug_id;
  std::set<MtcType> types;
};

struct TypeClassifierReport {
  std::map<int, BinaryScores> per_type;  // keys 1..7
  /// Types entering the macro average: gold support or at least one prediction.
  std::vector<int> averaged_types;
  PrfTriple macro;
};

std::set<MtcType> gold_types(const Dug& dug);

/// Throws MismatchedIds unless preds cover exactly the gold ids.
TypeClassifierReport evaluate_type_classifier(const std::vector<Dug>& gold,
                                              const std::vector<TypePrediction>& preds);

}  // namespace mtc
