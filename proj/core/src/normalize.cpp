#include "mtc/normalize.hpp"

#include <algorithm>
#include <array>
#include <fstream>
#include <sstream>

#include "embedded_data.hpp"
#include "mtc/text.hpp"

namespace mtc {

NotANumber::NotANumber(const std::string& token)
    : std::invalid_argument("not a number: '" + token + "'") {}

std::optional<std::uint32_t> try_normalize_number(std::string_view token) {
  static constexpr std::array<std::string_view, 12> kWords{
      "one", "two", "three", "four", "five", "six", "seven", "eight", "nine", "ten", "eleven", "twelve"};
  const std::string w = text::to_lower(text::trim(token));
  if (text::is_all_digits(w)) {
    if (w.size() > 9) return std::nullopt;
    return static_cast<std::uint32_t>(std::stoul(w));
  }
  for (std::size_t i = 0; i < kWords.size(); ++i)
    if (kWords[i] == w) return static_cast<std::uint32_t>(i + 1);
  return std::nullopt;
}

std::uint32_t normalize_number(std::string_view token) {
  if (auto n = try_normalize_number(token)) return *n;
  throw NotANumber(std::string(token));
}

// ---------------------------------------------------------------------------
// AliasTable

const AliasTable& AliasTable::defaults() {
  static const AliasTable table = parse(data::activity_aliases());
  return table;
}

AliasTable AliasTable::parse(std::string_view tsv) {
  AliasTable table;
  std::size_t line_no = 0;
  for (const auto& raw : text::split_any(tsv, "\n")) {
    ++line_no;
    std::string_view line = raw;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (text::trim(line).empty() || text::trim(line).front() == '#') continue;
    const auto fields = text::split_any(line, "\t");
    if (fields.size() != 2 || text::trim(fields[0]).empty() || text::trim(fields[1]).empty())
      throw std::runtime_error("alias table line " + std::to_string(line_no) +
                               ": expected 'alias<TAB>canonical'");
    table.add(fields[0], fields[1]);
  }
  return table;
}

AliasTable AliasTable::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open alias table " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse(ss.str());
}

void AliasTable::add(std::string_view alias, std::string_view canonical) {
  entries_[text::fold(alias)] = text::fold(canonical);
}

std::optional<std::string> AliasTable::lookup(std::string_view phrase) const {
  auto it = entries_.find(text::fold(phrase));
  if (it == entries_.end()) return std::nullopt;
  return it->second;
}

std::vector<std::string> AliasTable::canonical_activities() const {
  std::vector<std::string> out;
  for (const auto& [alias, canonical] : entries_)
    if (std::find(out.begin(), out.end(), canonical) == out.end()) out.push_back(canonical);
  std::sort(out.begin(), out.end());
  return out;
}

std::string normalize_activity(std::string_view act, const AliasTable& aliases) {
  if (auto hit = aliases.lookup(act)) return *hit;
  return text::fold(act);
}

Mtc normalize_activities(Mtc mtc, const AliasTable& aliases) {
  auto fix = [&](Activity& a) {
    const std::string name = normalize_activity(a.name(), aliases);
    if (!Activity::check(name)) a = Activity(name);
  };
  if (auto* v1 = std::get_if<DefinitiveDependency>(&mtc.form)) fix(v1->activity);
  if (auto* v4 = std::get_if<ImpreciseDependency>(&mtc.form)) fix(v4->activity);
  return mtc;
}

std::optional<std::string> canonical_form(std::string_view candidate, const AliasTable& aliases) {
  auto outcome = try_parse_mtc(candidate);
  if (!outcome.mtc) return std::nullopt;
  return serialize(normalize_activities(std::move(*outcome.mtc), aliases));
}

// ---------------------------------------------------------------------------
// Raw output pipeline

namespace {

bool is_quote(std::string_view s, std::size_t& width_front, std::size_t& width_back) {
  static constexpr std::array<std::pair<std::string_view, std::string_view>, 5> kPairs{{
      {"\"", "\""}, {"'", "'"}, {"`", "`"}, {"\xE2\x80\x9C", "\xE2\x80\x9D"}, {"\xE2\x80\x98", "\xE2\x80\x99"}}};
  for (const auto& [open, close] : kPairs) {
    if (s.size() >= open.size() + close.size() && s.substr(0, open.size()) == open &&
        s.substr(s.size() - close.size()) == close) {
      width_front = open.size();
      width_back = close.size();
      return true;
    }
  }
  return false;
}

std::string_view strip_quotes(std::string_view s) {
  std::size_t f = 0;
  std::size_t b = 0;
  s = text::trim(s);
  while (is_quote(s, f, b)) s = text::trim(s.substr(f, s.size() - f - b));
  return s;
}

std::string_view strip_bullet(std::string_view s) {
  for (;;) {
    s = text::trim(s);
    if (s.size() >= 2 && (s[0] == '-' || s[0] == '*') && s[1] == ' ') {
      s.remove_prefix(2);
      continue;
    }
    if (s.substr(0, 4) == "\xE2\x80\xA2 ") {  // bullet character
      s.remove_prefix(4);
      continue;
    }
    std::size_t digits = 0;
    while (digits < s.size() && s[digits] >= '0' && s[digits] <= '9') ++digits;
    if (digits > 0 && digits + 1 < s.size() && (s[digits] == '.' || s[digits] == ')') &&
        s[digits + 1] == ' ') {
      s.remove_prefix(digits + 2);
      continue;
    }
    return s;
  }
}

bool is_count_token(std::string_view w) { return text::is_all_digits(w); }

bool is_article(std::string_view w) {
  return w == "a" || w == "an" || w == "per" || w == "each" || w == "every";
}

std::string rewrite_segment(std::string_view segment) {
  auto words = text::split_whitespace(text::to_lower(segment));

  for (auto& w : words) {
    if (w == "a.m." || w == "a.m") w = "am";
    if (w == "p.m." || w == "p.m") w = "pm";
  }
  while (!words.empty()) {
    auto& last = words.back();
    while (!last.empty() && std::string_view(".,!?:").find(last.back()) != std::string_view::npos)
      last.pop_back();
    if (!last.empty()) break;
    words.pop_back();
  }

  // Instruction stubs.
  for (bool again = true; again && !words.empty();) {
    again = false;
    if (words.size() >= 2 && words[0] == "take" && words[1] == "it") {
      words.erase(words.begin(), words.begin() + 2);
      again = true;
    } else if (words[0] == "take" || words[0] == "taken" || words[0] == "use") {
      words.erase(words.begin());
      again = true;
    }
  }

  // Counts only occur at the head of a constraint, so number words elsewhere
  // (inside an activity) are left alone.
  auto count_position = [&](std::size_t i) {
    std::size_t head = 0;
    if (head < words.size() && words[head] == "not") ++head;
    if (i == head) return true;
    return i == head + 1 && (words[head] == "within" || words[head] == "for");
  };

  std::vector<std::string> out;
  out.reserve(words.size() + 2);
  for (std::size_t i = 0; i < words.size(); ++i) {
    const std::string& w = words[i];
    const std::string next = i + 1 < words.size() ? words[i + 1] : std::string();
    if (count_position(i) && (w == "once" || w == "twice" || w == "thrice")) {
      out.push_back(w == "once" ? "1" : w == "twice" ? "2" : "3");
      out.push_back("times");
      continue;
    }
    if (count_position(i) && !text::is_all_digits(w) &&
        (parse_time_unit(next) || next == "times" || next == "time")) {
      if (auto n = try_normalize_number(w)) {
        out.push_back(std::to_string(*n));
        continue;
      }
    }
    if (auto unit = parse_time_unit(w);
        unit && !out.empty() && (is_count_token(out.back()) || is_article(out.back()))) {
      out.emplace_back(to_string(*unit));
      continue;
    }
    if (!out.empty() && out.back() == "times") {
      if (w == "daily") { out.push_back("day"); continue; }
      if (w == "weekly") { out.push_back("week"); continue; }
      if (w == "hourly") { out.push_back("hour"); continue; }
    }
    out.push_back(w);
  }
  return text::join(out, " ");
}

}  // namespace

NormalizationResult normalize_raw_output(const RawOutput& raw, const AliasTable& aliases) {
  NormalizationResult result;
  const std::string_view whole = strip_quotes(raw.text);
  if (text::fold(whole) == "none") {
    result.dropped.push_back({std::string(whole), "NONE answer"});
    return result;
  }
  for (const auto& piece : text::split_any(whole, "\n;")) {
    std::string_view seg = strip_quotes(strip_bullet(strip_quotes(piece)));
    std::string rewritten = rewrite_segment(seg);
    if (rewritten.empty()) {
      if (!text::trim(piece).empty()) result.dropped.push_back({std::string(piece), "empty after cleanup"});
      continue;
    }
    if (rewritten == "none") {
      result.dropped.push_back({std::string(seg), "NONE answer"});
      continue;
    }
    std::string candidate = canonical_form(rewritten, aliases).value_or(rewritten);
    if (std::find(result.candidates.begin(), result.candidates.end(), candidate) ==
        result.candidates.end())
      result.candidates.push_back(std::move(candidate));
  }
  return result;
}

}  // namespace mtc
