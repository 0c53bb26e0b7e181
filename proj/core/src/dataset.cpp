#include "mtc/dataset.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <set>

#include "json.hpp"
#include "mtc/text.hpp"

namespace mtc {

using json = nlohmann::ordered_json;

std::string_view to_string(Source s) {
  switch (s) {
    case Source::Fda: return "fda";
    case Source::Medscape: return "medscape";
    case Source::Ehr: return "ehr";
  }
  return "?";
}

std::optional<Source> parse_source(std::string_view s) {
  if (s == "fda") return Source::Fda;
  if (s == "medscape") return Source::Medscape;
  if (s == "ehr") return Source::Ehr;
  return std::nullopt;
}

bool is_difficult(const Dug& dug) {
  if (dug.difficult) return *dug.difficult;
  const std::string folded = text::fold(dug.text);
  for (const auto& label : dug.labels.canonical_strings())
    if (folded.find(label) == std::string::npos) return true;
  return false;
}

namespace {

std::string describe(const std::vector<CorpusIssue>& issues) {
  std::string msg = "corpus format error";
  for (std::size_t i = 0; i < issues.size() && i < 5; ++i)
    msg += (i ? "; " : ": ") + std::string("line ") + std::to_string(issues[i].line) + ": " +
           issues[i].reason;
  if (issues.size() > 5) msg += "; and " + std::to_string(issues.size() - 5) + " more";
  return msg;
}

}  // namespace

CorpusFormatError::CorpusFormatError(std::vector<CorpusIssue> issues)
    : std::runtime_error(describe(issues)), issues_(std::move(issues)) {}

std::vector<Dug> read_dugs(std::istream& in, const AliasTable& aliases) {
  std::vector<Dug> dugs;
  std::vector<CorpusIssue> issues;
  std::set<std::string> seen;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (text::trim(line).empty()) continue;
    auto fail = [&](std::string reason) { issues.push_back({line_no, std::move(reason)}); };

    json record;
    try {
      record = json::parse(line);
    } catch (const json::parse_error& e) {
      fail(std::string("invalid JSON: ") + e.what());
      continue;
    }
    if (!record.is_object()) {
      fail("record is not an object");
      continue;
    }
    auto str_field = [&](const char* key) -> std::optional<std::string> {
      auto it = record.find(key);
      if (it == record.end() || !it->is_string()) {
        fail(std::string("missing string field '") + key + "'");
        return std::nullopt;
      }
      return it->get<std::string>();
    };
    auto id = str_field("id");
    auto source = str_field("source");
    auto body = str_field("text");
    if (!id || !source || !body) continue;

    Dug dug;
    dug.id = *id;
    dug.text = *body;
    bool ok = true;
    if (id->empty()) {
      fail("empty id");
      ok = false;
    } else if (!seen.insert(*id).second) {
      fail("duplicate id '" + *id + "'");
      ok = false;
    }
    if (auto s = parse_source(*source)) {
      dug.source = *s;
    } else {
      fail("unknown source '" + *source + "'");
      ok = false;
    }
    if (text::trim(*body).empty()) {
      fail("empty text");
      ok = false;
    }
    auto labels = record.find("labels");
    if (labels == record.end() || !labels->is_array()) {
      fail("missing array field 'labels'");
      ok = false;
    } else {
      for (const auto& label : *labels) {
        if (!label.is_string()) {
          fail("label is not a string");
          ok = false;
          continue;
        }
        auto outcome = try_parse_mtc(label.get<std::string>());
        if (!outcome.mtc) {
          fail("gold label '" + label.get<std::string>() + "' is not valid: " + outcome.reason);
          ok = false;
          continue;
        }
        dug.labels.add(normalize_activities(*outcome.mtc, aliases));
      }
    }
    if (auto d = record.find("difficult"); d != record.end()) {
      if (d->is_boolean())
        dug.difficult = d->get<bool>();
      else {
        fail("'difficult' must be a boolean");
        ok = false;
      }
    }
    if (ok) dugs.push_back(std::move(dug));
  }
  if (!issues.empty()) throw CorpusFormatError(std::move(issues));
  return dugs;
}

std::vector<Dug> load_dugs(const std::filesystem::path& path, const AliasTable& aliases) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open corpus " + path.string());
  return read_dugs(in, aliases);
}

std::string to_json_line(const Dug& dug) {
  json j;
  j["id"] = dug.id;
  j["source"] = std::string(to_string(dug.source));
  j["text"] = dug.text;
  j["labels"] = dug.labels.canonical_strings();
  if (dug.difficult) j["difficult"] = *dug.difficult;
  return j.dump();
}

void write_dugs(std::ostream& out, const std::vector<Dug>& dugs) {
  for (const auto& d : dugs) out << to_json_line(d) << '\n';
}

// ---------------------------------------------------------------------------
// EHR extraction

const std::vector<AbbreviationRule>& default_abbreviation_rules() {
  static const std::vector<AbbreviationRule> rules{
      {"b.i.d.", "2 times day", MtcType(2)},  {"q.d.", "1 times day", MtcType(2)},
      {"q.h.", "1 times hour", MtcType(2)},   {"q.i.d.", "4 times day", MtcType(2)},
      {"t.i.d.", "3 times day", MtcType(2)},  {"h.s.", "before sleep", MtcType(4)},
      {"p.c.", "after eating", MtcType(4)},   {"a.c.", "before eating", MtcType(4)},
  };
  return rules;
}

namespace {

bool is_space(char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; }

std::string strip_token(std::string_view tok) {
  while (!tok.empty() && std::string_view("([{\"'").find(tok.front()) != std::string_view::npos)
    tok.remove_prefix(1);
  while (!tok.empty() && std::string_view(",;:)]}\"'").find(tok.back()) != std::string_view::npos)
    tok.remove_suffix(1);
  return text::to_lower(tok);
}

}  // namespace

std::vector<std::string> split_sentences(std::string_view text,
                                         const std::vector<AbbreviationRule>& rules) {
  static const std::set<std::string> kNeverTerminal{"dr.", "mr.", "mrs.", "ms.", "e.g.", "i.e.",
                                                    "vs.", "st."};
  std::set<std::string> soft{"mg."};
  for (const auto& r : rules) soft.insert(text::to_lower(r.abbrev));

  std::vector<std::string> out;
  auto emit = [&](std::size_t from, std::size_t to) {
    auto s = text::trim(text.substr(from, to - from));
    if (!s.empty()) out.emplace_back(s);
  };

  std::size_t start = 0;
  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (c == '\n' && i + 1 < text.size() && text[i + 1] == '\n') {
      emit(start, i);
      start = i + 1;
      continue;
    }
    if (c != '.' && c != '?' && c != '!') continue;
    const bool at_end = i + 1 == text.size();
    if (!at_end && !is_space(text[i + 1])) continue;
    if (c == '.' && !at_end) {
      std::size_t b = i;
      while (b > start && !is_space(text[b - 1])) --b;
      const std::string token = strip_token(text.substr(b, i + 1 - b));
      if (kNeverTerminal.count(token)) continue;
      if (soft.count(token)) {
        std::size_t n = i + 1;
        while (n < text.size() && is_space(text[n])) ++n;
        if (n < text.size() && !std::isupper(static_cast<unsigned char>(text[n]))) continue;
      }
    }
    emit(start, i + 1);
    start = i + 1;
  }
  emit(start, text.size());
  return out;
}

std::vector<Dug> extract_ehr_statements(std::string_view report_text,
                                        const std::vector<AbbreviationRule>& rules,
                                        const EhrExtractionOptions& options) {
  if (options.min_tokens > options.max_tokens)
    throw std::invalid_argument("min_tokens must not exceed max_tokens");

  std::vector<Dug> out;
  std::size_t index = options.first_index;
  for (const auto& sentence : split_sentences(report_text, rules)) {
    const auto tokens = text::split_whitespace(sentence);
    if (tokens.size() < options.min_tokens || tokens.size() > options.max_tokens) continue;

    MtcList labels;
    for (const auto& rule : rules) {
      const std::string abbrev = text::to_lower(rule.abbrev);
      const std::string bare =
          !abbrev.empty() && abbrev.back() == '.' ? abbrev.substr(0, abbrev.size() - 1) : abbrev;
      const bool hit = std::any_of(tokens.begin(), tokens.end(), [&](const std::string& t) {
        const std::string s = strip_token(t);
        return s == abbrev || s == bare;
      });
      if (hit) labels.add(parse_mtc(rule.label));
    }
    if (labels.empty()) continue;

    Dug dug;
    dug.id = options.id_prefix + "-" + std::to_string(index++);
    dug.source = Source::Ehr;
    dug.text = sentence;
    dug.labels = std::move(labels);
    out.push_back(std::move(dug));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Statistics

CorpusStats dataset_stats(const std::vector<Dug>& dugs) {
  CorpusStats stats;
  for (Source s : {Source::Fda, Source::Medscape, Source::Ehr}) stats.per_source[s] = {};
  for (const auto& d : dugs) {
    auto& s = stats.per_source[d.source];
    ++s.dugs;
    ++stats.total_dugs;
    for (const auto& m : d.labels) {
      ++s.type_counts[static_cast<std::size_t>(mtc_type(m).value() - 1)];
      ++s.mtcs;
      ++stats.total_mtcs;
    }
  }
  for (auto& [source, s] : stats.per_source) {
    if (s.mtcs == 0) continue;
    for (std::size_t t = 0; t < 7; ++t)
      s.type_percent[t] = 100.0 * double(s.type_counts[t]) / double(s.mtcs);
  }
  return stats;
}

}  // namespace mtc
