#include "mtc/eval.hpp"

#include <algorithm>
#include <iomanip>
#include <map>
#include <sstream>

#include "json.hpp"

namespace mtc {

LabelSpace::LabelSpace(std::vector<std::string> labels) {
  std::sort(labels.begin(), labels.end());
  labels.erase(std::unique(labels.begin(), labels.end()), labels.end());
  labels.erase(std::remove(labels.begin(), labels.end(), std::string(kUndefinedLabel)), labels.end());
  labels.emplace_back(kUndefinedLabel);
  labels_ = std::move(labels);
}

bool LabelSpace::contains(std::string_view label) const {
  return std::find(labels_.begin(), labels_.end(), label) != labels_.end();
}

LabelSpace build_label_space(const std::vector<Dug>& gold) {
  std::vector<std::string> labels;
  for (const auto& d : gold)
    for (const auto& s : d.labels.canonical_strings()) labels.push_back(s);
  return LabelSpace(std::move(labels));
}

std::string map_to_label(std::string_view candidate, const LabelSpace& space) {
  auto outcome = try_parse_mtc(candidate);
  if (!outcome.mtc) return std::string(kUndefinedLabel);
  std::string canonical = serialize(*outcome.mtc);
  if (canonical == kUndefinedLabel || !space.contains(canonical)) return std::string(kUndefinedLabel);
  return canonical;
}

std::set<std::string> predicted_labels(const ExtractionRecord& record, const LabelSpace& space,
                                       std::optional<MtcType> type) {
  std::set<std::string> out;
  for (const auto& m : record.parsed)
    if (!type || mtc_type(m) == *type) out.insert(map_to_label(serialize(m), space));
  for (const auto& c : record.candidates)
    if (!c.valid && (!type || c.requested_type == type)) out.insert(std::string(kUndefinedLabel));
  return out;
}

std::set<std::string> gold_labels(const Dug& dug, std::optional<MtcType> type) {
  std::set<std::string> out;
  for (const auto& m : dug.labels)
    if (!type || mtc_type(m) == *type) out.insert(serialize(m));
  return out;
}

namespace {

PrfTriple example_scores(const std::set<std::string>& gold, const std::set<std::string>& pred) {
  if (gold.empty() && pred.empty()) return {1.0, 1.0, 1.0};
  std::size_t hit = 0;
  for (const auto& g : gold) hit += pred.count(g);
  PrfTriple s;
  s.precision = pred.empty() ? 0.0 : double(hit) / double(pred.size());
  s.recall = gold.empty() ? 0.0 : double(hit) / double(gold.size());
  s.f1 = s.precision + s.recall == 0.0 ? 0.0 : 2 * s.precision * s.recall / (s.precision + s.recall);
  return s;
}

void accumulate(PrfTriple& acc, const PrfTriple& s) {
  acc.precision += s.precision;
  acc.recall += s.recall;
  acc.f1 += s.f1;
}

PrfTriple divide(PrfTriple acc, std::size_t n) {
  if (n == 0) return {1.0, 1.0, 1.0};
  acc.precision /= double(n);
  acc.recall /= double(n);
  acc.f1 /= double(n);
  return acc;
}

}  // namespace

EvalReport evaluate(const std::vector<Dug>& gold, const std::vector<ExtractionRecord>& records,
                    const LabelSpace& space, std::optional<MtcType> type) {
  std::map<std::string, const ExtractionRecord*> by_id;
  for (const auto& r : records)
    if (!by_id.emplace(r.dug_id, &r).second)
      throw MismatchedIds("duplicate prediction for '" + r.dug_id + "'");
  if (by_id.size() != gold.size()) throw MismatchedIds("prediction and gold id sets differ in size");

  EvalReport report;
  report.restricted_to = type;
  report.dugs = gold.size();
  std::map<std::string, BinaryScores> counts;
  for (const auto& label : space.labels()) counts[label] = {};

  PrfTriple example_sum;
  PrfTriple positive_sum;
  for (const auto& dug : gold) {
    auto it = by_id.find(dug.id);
    if (it == by_id.end()) throw MismatchedIds("no prediction for gold id '" + dug.id + "'");
    const ExtractionRecord& rec = *it->second;
    if (rec.failed) ++report.failed_records;

    const auto g = gold_labels(dug, type);
    const auto p = predicted_labels(rec, space, type);
    for (const auto& c : rec.candidates) {
      if (type && !(c.requested_type == type || (!c.requested_type && c.valid &&
                                                  mtc_type(parse_mtc(c.text)) == *type)))
        continue;
      ++report.total_outputs;
      if (c.valid) ++report.valid_outputs;
      if (map_to_label(c.text, space) == kUndefinedLabel) ++report.undefined_predictions;
    }
    for (const auto& label : g) {
      if (!counts.count(label)) throw std::invalid_argument("gold label '" + label + "' outside label space");
      if (p.count(label)) ++counts[label].tp;
      else ++counts[label].fn;
    }
    for (const auto& label : p)
      if (!g.count(label)) ++counts[label].fp;

    const auto s = example_scores(g, p);
    accumulate(example_sum, s);
    if (!g.empty()) {
      accumulate(positive_sum, s);
      ++report.positive_dugs;
    }
  }

  PrfTriple macro_sum;
  bool any_predicted = false;
  for (const auto& label : space.labels()) {
    LabelScore ls{label, counts[label], false};
    any_predicted = any_predicted || ls.counts.predicted() > 0;
    ls.averaged = label == kUndefinedLabel ? ls.counts.predicted() > 0 : ls.counts.support() > 0;
    if (ls.averaged) {
      accumulate(macro_sum, {ls.counts.precision(), ls.counts.recall(), ls.counts.f1()});
      ++report.labels_averaged;
    }
    report.per_label.push_back(std::move(ls));
  }
  if (report.labels_averaged == 0)
    report.label_macro = any_predicted ? PrfTriple{} : PrfTriple{1.0, 1.0, 1.0};
  else
    report.label_macro = divide(macro_sum, report.labels_averaged);

  report.example_averaged = divide(example_sum, report.dugs);
  if (report.positive_dugs > 0) report.positive_class = divide(positive_sum, report.positive_dugs);
  report.validity_rate =
      report.total_outputs == 0 ? 1.0 : double(report.valid_outputs) / double(report.total_outputs);
  return report;
}

double validity_rate(const std::vector<std::string>& outputs) {
  if (outputs.empty()) return 1.0;
  const auto valid = std::count_if(outputs.begin(), outputs.end(), [](const std::string& s) { return is_valid(s); });
  return double(valid) / double(outputs.size());
}

std::string report_json(const EvalReport& r) {
  using json = nlohmann::ordered_json;
  auto triple = [](const PrfTriple& t) {
    json o;
    o["precision"] = t.precision;
    o["recall"] = t.recall;
    o["f1"] = t.f1;
    return o;
  };
  json j;
  j["dugs"] = r.dugs;
  j["restricted_to_type"] = r.restricted_to ? json(r.restricted_to->value()) : json(nullptr);
  json macro = triple(r.label_macro);
  macro["labels_averaged"] = r.labels_averaged;
  j["label_macro"] = std::move(macro);
  j["example_averaged"] = triple(r.example_averaged);
  json pos = r.positive_class ? triple(*r.positive_class) : json::object();
  if (!r.positive_class) {
    pos["precision"] = nullptr;
    pos["recall"] = nullptr;
    pos["f1"] = nullptr;
  }
  pos["dugs"] = r.positive_dugs;
  j["positive_class"] = std::move(pos);
  json validity;
  validity["rate"] = r.validity_rate;
  validity["valid"] = r.valid_outputs;
  validity["total"] = r.total_outputs;
  j["validity"] = std::move(validity);
  j["undefined_predictions"] = r.undefined_predictions;
  j["failed_records"] = r.failed_records;
  json labels = json::array();
  for (const auto& l : r.per_label) {
    json o;
    o["label"] = l.label;
    o["support"] = l.counts.support();
    o["tp"] = l.counts.tp;
    o["fp"] = l.counts.fp;
    o["fn"] = l.counts.fn;
    o["precision"] = l.counts.precision();
    o["recall"] = l.counts.recall();
    o["f1"] = l.counts.f1();
    o["averaged"] = l.averaged;
    labels.push_back(std::move(o));
  }
  j["per_label"] = std::move(labels);
  return j.dump();
}

std::string report_table(const EvalReport& r) {
  std::size_t width = 9;
  for (const auto& l : r.per_label) width = std::max(width, l.label.size());
  std::ostringstream out;
  out << std::fixed << std::setprecision(4);
  out << std::left << std::setw(static_cast<int>(width)) << "label" << std::right << std::setw(9)
      << "support" << std::setw(11) << "precision" << std::setw(9) << "recall" << std::setw(9)
      << "f1" << "\n";
  for (const auto& l : r.per_label) {
    if (l.counts.support() == 0 && l.counts.predicted() == 0) continue;
    out << std::left << std::setw(static_cast<int>(width)) << l.label << std::right << std::setw(9)
        << l.counts.support() << std::setw(11) << l.counts.precision() << std::setw(9)
        << l.counts.recall() << std::setw(9) << l.counts.f1() << (l.averaged ? "" : "  (not averaged)")
        << "\n";
  }
  auto row = [&](const std::string& name, const PrfTriple& t) {
    out << std::left << std::setw(static_cast<int>(width)) << name << std::right << std::setw(9) << ""
        << std::setw(11) << t.precision << std::setw(9) << t.recall << std::setw(9) << t.f1 << "\n";
  };
  out << "\n";
  row("label macro", r.label_macro);
  row("example avg", r.example_averaged);
  if (r.positive_class) row("positive", *r.positive_class);
  out << "\nguidelines: " << r.dugs << " (positive " << r.positive_dugs << ", failed "
      << r.failed_records << ")\n";
  out << "validity: " << r.validity_rate << " (" << r.valid_outputs << "/" << r.total_outputs << ")\n";
  out << "undefined predictions: " << r.undefined_predictions << "\n";
  return out.str();
}

// ---------------------------------------------------------------------------
// Krippendorff's alpha

AnnotationMatrix::AnnotationMatrix(std::size_t units, std::size_t coders)
    : units_(units), coders_(coders), cells_(units * coders) {}

void AnnotationMatrix::set(std::size_t unit, std::size_t coder, std::string value) {
  cells_.at(unit * coders_ + coder) = std::move(value);
}

const std::optional<std::string>& AnnotationMatrix::at(std::size_t unit, std::size_t coder) const {
  return cells_.at(unit * coders_ + coder);
}

double krippendorff_alpha(const AnnotationMatrix& matrix) {
  if (matrix.coders() < 2) throw AlphaUndefined("alpha needs at least two coders");

  // Coincidence matrix over value categories.
  std::map<std::string, std::size_t> category;
  std::vector<std::vector<std::size_t>> units;
  for (std::size_t u = 0; u < matrix.units(); ++u) {
    std::vector<std::size_t> values;
    for (std::size_t c = 0; c < matrix.coders(); ++c)
      if (const auto& v = matrix.at(u, c))
        values.push_back(category.emplace(*v, category.size()).first->second);
    if (values.size() >= 2) units.push_back(std::move(values));
  }
  if (units.empty()) throw AlphaUndefined("alpha needs a unit with at least two values");

  const std::size_t k = category.size();
  std::vector<double> coincidence(k * k, 0.0);
  for (const auto& values : units) {
    std::vector<std::size_t> n_u(k, 0);
    for (auto v : values) ++n_u[v];
    const double m = double(values.size());
    for (std::size_t a = 0; a < k; ++a) {
      if (n_u[a] == 0) continue;
      for (std::size_t b = 0; b < k; ++b) {
        const double pairs = a == b ? double(n_u[a]) * double(n_u[a] - 1) : double(n_u[a]) * double(n_u[b]);
        coincidence[a * k + b] += pairs / (m - 1);
      }
    }
  }
  std::vector<double> marginal(k, 0.0);
  double n = 0.0;
  for (std::size_t a = 0; a < k; ++a)
    for (std::size_t b = 0; b < k; ++b) {
      marginal[a] += coincidence[a * k + b];
      n += coincidence[a * k + b];
    }

  double observed = 0.0;
  double expected = 0.0;
  for (std::size_t a = 0; a < k; ++a)
    for (std::size_t b = 0; b < k; ++b)
      if (a != b) {
        observed += coincidence[a * k + b];
        expected += marginal[a] * marginal[b];
      }
  if (expected == 0.0) return 1.0;
  return 1.0 - (n - 1.0) * observed / expected;
}

}  // namespace mtc
