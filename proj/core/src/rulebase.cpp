#include "mtc/rulebase.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "embedded_data.hpp"
#include "mtc/text.hpp"

namespace mtc {

std::vector<TypeRule> parse_type_rules(std::string_view tsv) {
  std::vector<TypeRule> rules;
  std::size_t line_no = 0;
  for (const auto& raw : text::split_any(tsv, "\n")) {
    ++line_no;
    std::string_view line = raw;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    const auto trimmed = text::trim(line);
    if (trimmed.empty() || trimmed.front() == '#') continue;
    const auto tab = line.find('\t');
    const auto where = "rule file line " + std::to_string(line_no);
    if (tab == std::string_view::npos) throw std::invalid_argument(where + ": expected 'type<TAB>pattern'");
    const auto type_field = text::trim(line.substr(0, tab));
    const auto pattern = std::string(text::trim(line.substr(tab + 1)));
    if (type_field.size() != 1 || type_field[0] < '1' || type_field[0] > '7')
      throw std::invalid_argument(where + ": type must be 1..7");
    if (pattern.empty()) throw std::invalid_argument(where + ": empty pattern");
    try {
      compile_pattern(pattern);
    } catch (const std::invalid_argument& e) {
      throw std::invalid_argument(where + ": " + e.what());
    }
    const MtcType type(type_field[0] - '0');
    auto it = std::find_if(rules.begin(), rules.end(), [&](const TypeRule& r) { return r.type == type; });
    if (it == rules.end())
      rules.push_back({type, {pattern}});
    else
      it->patterns.push_back(pattern);
  }
  return rules;
}

std::vector<TypeRule> load_type_rules(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open rule file " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_type_rules(ss.str());
}

const std::vector<TypeRule>& default_type_rules() {
  static const std::vector<TypeRule> rules = parse_type_rules(data::type_rules());
  return rules;
}

std::string compile_pattern(std::string_view pattern) {
  static constexpr std::string_view kNum =
      R"((?:\d+|one|two|three|four|five|six|seven|eight|nine|ten|eleven|twelve))";
  static constexpr std::string_view kClock = R"((?:\d{1,2}(?:[:.]\d{2})?\s*(?:a\.?m\.?|p\.?m\.?)))";

  std::string body;
  int depth = 0;
  bool in_space = false;
  for (std::size_t i = 0; i < pattern.size(); ++i) {
    const char c = pattern[i];
    if (c == ' ' || c == '\t') {
      if (!in_space) body += R"(\s+)";
      in_space = true;
      continue;
    }
    in_space = false;
    switch (c) {
      case '{': {
        const auto close = pattern.find('}', i);
        if (close == std::string_view::npos) throw std::invalid_argument("unterminated placeholder");
        const auto name = pattern.substr(i + 1, close - i - 1);
        if (name == "num")
          body += kNum;
        else if (name == "clock")
          body += kClock;
        else
          throw std::invalid_argument("unknown placeholder {" + std::string(name) + "}");
        i = close;
        break;
      }
      case '(':
        ++depth;
        body += "(?:";
        break;
      case ')':
        if (--depth < 0) throw std::invalid_argument("unbalanced ')'");
        body += ')';
        break;
      case '|':
        if (depth == 0) throw std::invalid_argument("'|' outside a group");
        body += '|';
        break;
      case '?':
        if (body.empty() || body.back() != ')') throw std::invalid_argument("'?' must follow a group");
        body += '?';
        break;
      default:
        if (std::string_view(R"(\^$.*+[]}/)").find(c) != std::string_view::npos) body += '\\';
        body += c;
    }
  }
  if (depth != 0) throw std::invalid_argument("unbalanced '('");
  return "(?:^|[^a-z0-9])" + body + "(?=$|[^a-z0-9])";
}

TypeClassifier::TypeClassifier(const std::vector<TypeRule>& rules) {
  for (const auto& rule : rules)
    for (const auto& p : rule.patterns)
      compiled_.emplace_back(rule.type, std::regex(compile_pattern(p), std::regex::ECMAScript |
                                                                           std::regex::icase |
                                                                           std::regex::optimize));
}

std::set<MtcType> TypeClassifier::classify(std::string_view input) const {
  std::set<MtcType> out;
  const std::string lowered = text::to_lower(input);
  for (const auto& [type, re] : compiled_) {
    if (out.count(type)) continue;
    if (std::regex_search(lowered, re)) out.insert(type);
  }
  return out;
}

std::set<MtcType> classify_types(std::string_view text, const std::vector<TypeRule>& rules) {
  return TypeClassifier(rules).classify(text);
}

std::set<MtcType> gold_types(const Dug& dug) {
  std::set<MtcType> out;
  for (const auto& m : dug.labels) out.insert(mtc_type(m));
  return out;
}

TypeClassifierReport evaluate_type_classifier(const std::vector<Dug>& gold,
                                              const std::vector<TypePrediction>& preds) {
  std::map<std::string, const TypePrediction*> by_id;
  for (const auto& p : preds)
    if (!by_id.emplace(p.dug_id, &p).second)
      throw MismatchedIds("duplicate prediction id '" + p.dug_id + "'");
  if (by_id.size() != gold.size()) throw MismatchedIds("prediction and gold id sets differ in size");

  TypeClassifierReport report;
  for (int t = 1; t <= 7; ++t) report.per_type[t] = {};
  for (const auto& dug : gold) {
    auto it = by_id.find(dug.id);
    if (it == by_id.end()) throw MismatchedIds("no prediction for gold id '" + dug.id + "'");
    const auto truth = gold_types(dug);
    const auto& guess = it->second->types;
    for (int t = 1; t <= 7; ++t) {
      const bool g = truth.count(MtcType(t)) > 0;
      const bool p = guess.count(MtcType(t)) > 0;
      auto& s = report.per_type[t];
      if (g && p) ++s.tp;
      else if (p) ++s.fp;
      else if (g) ++s.fn;
    }
  }
  for (const auto& [t, s] : report.per_type) {
    if (s.support() == 0 && s.predicted() == 0) continue;
    report.averaged_types.push_back(t);
    report.macro.precision += s.precision();
    report.macro.recall += s.recall();
    report.macro.f1 += s.f1();
  }
  if (!report.averaged_types.empty()) {
    const double n = double(report.averaged_types.size());
    report.macro.precision /= n;
    report.macro.recall /= n;
    report.macro.f1 /= n;
  }
  return report;
}

}  // namespace mtc
