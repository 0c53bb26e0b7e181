#pragma once

// Multilabel evaluation of extractions against gold labels, validity rate,
// and Krippendorff's alpha for nominal annotations.
//
// Conventions:
//  * A label has precision 0 without predicted positives and recall 0
//    without gold positives.
//  * The label-macro average runs over labels with gold support, plus
//    "undefined" when it was predicted at least once. With no such label
//    it is 1.0 if nothing was predicted and 0.0 otherwise.
//  * Example-averaged metrics score a guideline with empty gold and empty
//    prediction as 1.0 on all three metrics.
//  * Positive-class metrics are example averages over guidelines with
//    non-empty gold; they are absent when there is no such guideline.
//  * Validity rate is 1.0 when there are no outputs at all.

#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "mtc/dataset.hpp"
#include "mtc/icl.hpp"
#include "mtc/metrics.hpp"

namespace mtc {

inline constexpr std::string_view kUndefinedLabel = "undefined";

/// Sorted canonical gold labels followed by "undefined".
class LabelSpace {
 public:
  explicit LabelSpace(std::vector<std::string> labels);
  bool contains(std::string_view label) const;
  const std::vector<std::string>& labels() const { return labels_; }
  std::size_t size() const { return labels_.size(); }

 private:
  std::vector<std::string> labels_;
};

LabelSpace build_label_space(const std::vector<Dug>& gold);

/// "undefined" for nonvalid candidates and for valid ones outside the space.
std::string map_to_label(std::string_view candidate, const LabelSpace& space);

/// Predicted label set of one record: mapped parsed constraints, plus
/// "undefined" if any candidate was nonvalid. With `type`, only parsed
/// constraints of that type and nonvalid candidates requested for it count.
std::set<std::string> predicted_labels(const ExtractionRecord& record, const LabelSpace& space,
                                       std::optional<MtcType> type = std::nullopt);

std::set<std::string> gold_labels(const Dug& dug, std::optional<MtcType> type = std::nullopt);

struct LabelScore {
  std::string label;
  BinaryScores counts;
  bool averaged = false;
};

struct EvalReport {
  std::size_t dugs = 0;
  std::vector<LabelScore> per_label;
  PrfTriple label_macro;
  std::size_t labels_averaged = 0;
  PrfTriple example_averaged;
  std::optional<PrfTriple> positive_class;
  std::size_t positive_dugs = 0;
  std::size_t total_outputs = 0;
  std::size_t valid_outputs = 0;
  double validity_rate = 1.0;
  std::size_t undefined_predictions = 0;
  std::size_t failed_records = 0;
  std::optional<MtcType> restricted_to;
};

/// Throws MismatchedIds unless the records cover exactly the gold ids.
EvalReport evaluate(const std::vector<Dug>& gold, const std::vector<ExtractionRecord>& records,
                    const LabelSpace& space, std::optional<MtcType> type = std::nullopt);

/// valid / total, 1.0 for an empty list.
double validity_rate(const std::vector<std::string>& outputs);

/// Stable machine-readable form (single JSON object).
std::string report_json(const EvalReport& report);
/// Aligned human-readable table.
std::string report_table(const EvalReport& report);

/// Units x coders grid of nominal values; empty cells are missing.
class AnnotationMatrix {
 public:
  AnnotationMatrix(std::size_t units, std::size_t coders);
  void set(std::size_t unit, std::size_t coder, std::string value);
  const std::optional<std::string>& at(std::size_t unit, std::size_t coder) const;
  std::size_t units() const { return units_; }
  std::size_t coders() const { return coders_; }

 private:
  std::size_t units_;
  std::size_t coders_;
  std::vector<std::optional<std::string>> cells_;
};

class AlphaUndefined : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Krippendorff's alpha with the nominal metric over pairable values.
/// Throws AlphaUndefined with fewer than two coders or no unit holding two
/// values. Returns 1.0 when every pairable value is identical (no expected
/// disagreement).
double krippendorff_alpha(const AnnotationMatrix& matrix);

}  // namespace mtc
