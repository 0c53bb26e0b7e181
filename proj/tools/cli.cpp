#include "cli.hpp"

#include <algorithm>
#include <charconv>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"
#include "mtc/adherence.hpp"
#include "mtc/dataset.hpp"
#include "mtc/eval.hpp"
#include "mtc/grammar.hpp"
#include "mtc/icl.hpp"
#include "mtc/normalize.hpp"
#include "mtc/rulebase.hpp"
#include "mtc/text.hpp"

namespace mtc::cli {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

enum class Format { Text, JsonLines };

/// An error from the user's invocation that CLI11 cannot detect.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string number(double v) {
  char buf[32];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

std::string read_all(const std::string& path) {
  if (path == "-") {
    std::ostringstream ss;
    ss << std::cin.rdbuf();
    return ss.str();
  }
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<std::string> read_lines(const std::string& path) {
  std::istringstream in(read_all(path));
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    lines.push_back(line);
  }
  return lines;
}

/// Positional arguments, or the lines of --file.
std::vector<std::string> inputs(const std::vector<std::string>& positional, const std::string& file) {
  if (!positional.empty() && !file.empty()) throw UsageError("give either text arguments or --file, not both");
  if (!file.empty()) return read_lines(file);
  if (positional.empty()) throw UsageError("no input: give text arguments or --file");
  return positional;
}

std::vector<Dug> load_corpus(const std::string& path, const AliasTable& aliases) {
  std::istringstream in(read_all(path));
  return read_dugs(in, aliases);
}

std::unique_ptr<std::ostream> open_output(const std::string& path) {
  auto f = std::make_unique<std::ofstream>(path, std::ios::binary);
  if (!*f) throw std::runtime_error("cannot write '" + path + "'");
  return f;
}

json fields_json(const Mtc& m) {
  json j = json::object();
  std::visit(
      [&](const auto& v) {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, DefinitiveDependency>) {
          j = {{"count", v.count}, {"unit", to_string(v.unit)}, {"prep", to_string(v.prep)},
               {"activity", v.activity.name()}};
        } else if constexpr (std::is_same_v<T, Frequency>) {
          j = {{"count", v.count}, {"unit", to_string(v.unit)}};
        } else if constexpr (std::is_same_v<T, Interval>) {
          j = {{"count", v.count}, {"unit", to_string(v.unit)}, {"prep", to_string(v.prep)}};
        } else if constexpr (std::is_same_v<T, ImpreciseDependency>) {
          j = {{"prep", to_string(v.prep)}, {"activity", v.activity.name()}};
        } else if constexpr (std::is_same_v<T, TimeDependency>) {
          j = {{"prep", to_string(v.prep)}, {"time", serialize(v.time)}};
        } else if constexpr (std::is_same_v<T, Consistency>) {
          const auto* clock = std::get_if<ClockTime>(&v.time);
          j = {{"prep", to_string(v.prep)},
               {"time", clock ? serialize(*clock) : std::string("same time")},
               {"unit", to_string(v.unit)}};
        } else {
          j = {{"prep", to_string(v.prep)}, {"part", to_string(v.part)}};
        }
      },
      m.form);
  return j;
}

std::string fields_text(const json& fields) {
  std::string s;
  for (const auto& [k, v] : fields.items()) {
    s += ' ' + k + '=';
    s += v.is_string() ? v.get<std::string>() : v.dump();
  }
  return s;
}

json types_json(const std::set<MtcType>& types) {
  json a = json::array();
  for (auto t : types) a.push_back(t.value());
  return a;
}

std::string types_text(const std::set<MtcType>& types) {
  std::string s;
  for (auto t : types) s += (s.empty() ? "" : ",") + std::to_string(t.value());
  return s.empty() ? "-" : s;
}

MtcType type_arg(int n) {
  if (n < 1 || n > 7) throw UsageError("--type must be in 1..7");
  return MtcType(n);
}

DayPartWindow day_part_arg(const std::string& s, const char* flag) {
  auto clock = [&](std::string_view t) {
    if (t.size() != 5 || t[2] != ':') throw UsageError(std::string(flag) + " expects HH:MM-HH:MM");
    int h = 0, m = 0;
    std::from_chars(t.data(), t.data() + 2, h);
    std::from_chars(t.data() + 3, t.data() + 5, m);
    if (h > 24 || m > 59) throw UsageError(std::string(flag) + " expects HH:MM-HH:MM");
    return h * 60 + m;
  };
  const auto dash = s.find('-');
  if (dash == std::string::npos) throw UsageError(std::string(flag) + " expects HH:MM-HH:MM");
  return {clock(std::string_view(s).substr(0, dash)), clock(std::string_view(s).substr(dash + 1))};
}

// ---------------------------------------------------------------------------

struct Options {
  Format format = Format::Text;
  std::string aliases;

  std::vector<std::string> texts;
  std::string file;
  std::string corpus;
  std::string out;
  std::string report;

  // extract-ehr
  std::size_t min_tokens = 4;
  std::size_t max_tokens = 60;
  std::string id_prefix = "ehr";

  // rules-classify
  std::string rules;

  // fewshot-select / extract
  std::size_t k = 20;
  std::uint64_t seed = 0;
  std::string fewshot;
  std::string strategy = "simple";
  int type = 0;
  std::string client = "replay";
  std::string fixtures;
  std::string templates;
  std::string emit_prompts;
  std::size_t parallelism = 1;
  double temperature = 0.0;
  int max_new_tokens = 256;
  int retries = 3;
  int backoff_ms = 1000;
  std::string url;
  std::string model;
  std::string api_mode = "prompt";
  std::string response_path;
  int timeout_s = 60;

  // eval
  std::string gold;
  std::string predictions;

  // adhere
  std::string mtc;
  std::string timeline;
  std::string window_start;
  std::string window_end;
  int dependency_tolerance = 10;
  int imprecision_horizon = 120;
  int consistency_tolerance = 60;
  std::string morning = "05:00-12:00";
  std::string noon = "11:00-13:00";
  std::string evening = "17:00-22:00";
};

class Runner {
 public:
  Runner(const Options& o, std::ostream& out, std::ostream& err) : o_(o), out_(out), err_(err) {
    if (!o_.aliases.empty()) {
      owned_aliases_ = AliasTable::load(o_.aliases);
      aliases_ = &owned_aliases_;
    }
  }

  int parse() {
    int status = 0;
    for (const auto& line : inputs(o_.texts, o_.file)) {
      if (text::trim(line).empty()) continue;
      const auto outcome = try_parse_mtc(line);
      if (!outcome.mtc) {
        status = 1;
        err_ << "nonvalid '" << line << "': " << outcome.reason << '\n';
        if (o_.format == Format::JsonLines)
          out_ << json{{"input", line}, {"valid", false}, {"reason", outcome.reason}}.dump() << '\n';
        continue;
      }
      const Mtc m = normalize_activities(*outcome.mtc, *aliases_);
      const auto t = mtc_type(m);
      const auto fields = fields_json(m);
      if (o_.format == Format::JsonLines) {
        out_ << json{{"input", line},          {"valid", true},       {"type", t.value()},
                     {"type_name", t.name()},  {"canonical", serialize(m)}, {"negated", m.negated},
                     {"fields", fields}}
                    .dump()
             << '\n';
      } else {
        out_ << "V" << t.value() << " (" << t.name() << ") " << serialize(m)
             << " negated=" << (m.negated ? "true" : "false") << fields_text(fields) << '\n';
      }
    }
    return status;
  }

  int validate() {
    std::vector<std::string> outputs;
    for (const auto& line : inputs(o_.texts, o_.file))
      if (!text::trim(line).empty()) outputs.push_back(line);
    const double rate = validity_rate(outputs);
    const auto valid = std::count_if(outputs.begin(), outputs.end(), [](const auto& s) { return is_valid(s); });
    if (o_.format == Format::JsonLines)
      out_ << json{{"total", outputs.size()}, {"valid", valid}, {"rate", rate}}.dump() << '\n';
    else
      out_ << number(rate) << '\n';
    return 0;
  }

  int normalize() {
    std::vector<std::string> raws;
    if (!o_.file.empty()) {
      if (!o_.texts.empty()) throw UsageError("give either text arguments or --file, not both");
      raws.push_back(read_all(o_.file));  // the whole file is one model answer
    } else if (!o_.texts.empty()) {
      raws = o_.texts;
    } else {
      throw UsageError("no input: give text arguments or --file");
    }
    for (const auto& raw : raws) {
      const auto r = normalize_raw_output(RawOutput{raw}, *aliases_);
      if (o_.format == Format::JsonLines) {
        json dropped = json::array();
        for (const auto& d : r.dropped) dropped.push_back({{"segment", d.segment}, {"reason", d.reason}});
        json cands = json::array();
        for (const auto& c : r.candidates) cands.push_back({{"text", c}, {"valid", is_valid(c)}});
        out_ << json{{"candidates", cands}, {"dropped", dropped}}.dump() << '\n';
      } else {
        for (const auto& c : r.candidates) out_ << (is_valid(c) ? "valid" : "nonvalid") << '\t' << c << '\n';
      }
    }
    return 0;
  }

  int dataset_stats() {
    const auto stats = mtc::dataset_stats(load_corpus(o_.corpus, *aliases_));
    if (o_.format == Format::JsonLines) {
      json sources = json::object();
      for (const auto& [src, s] : stats.per_source)
        sources[std::string(to_string(src))] = {{"dugs", s.dugs},
                                                {"mtcs", s.mtcs},
                                                {"type_counts", s.type_counts},
                                                {"type_percent", s.type_percent}};
      out_ << json{{"total_dugs", stats.total_dugs}, {"total_mtcs", stats.total_mtcs}, {"sources", sources}}.dump()
           << '\n';
      return 0;
    }
    char buf[160];
    std::snprintf(buf, sizeof buf, "%-9s %6s %6s", "source", "dugs", "mtcs");
    out_ << buf;
    for (int t = 1; t <= 7; ++t) {
      std::snprintf(buf, sizeof buf, " %8s", ("type" + std::to_string(t)).c_str());
      out_ << buf;
    }
    out_ << '\n';
    for (const auto& [src, s] : stats.per_source) {
      std::snprintf(buf, sizeof buf, "%-9s %6zu %6zu", std::string(to_string(src)).c_str(), s.dugs, s.mtcs);
      out_ << buf;
      for (int t = 0; t < 7; ++t) {
        std::snprintf(buf, sizeof buf, " %7.2f%%", s.type_percent[std::size_t(t)]);
        out_ << buf;
      }
      out_ << '\n';
    }
    std::snprintf(buf, sizeof buf, "%-9s %6zu %6zu\n", "total", stats.total_dugs, stats.total_mtcs);
    out_ << buf;
    return 0;
  }

  int extract_ehr() {
    EhrExtractionOptions opts;
    opts.min_tokens = o_.min_tokens;
    opts.max_tokens = o_.max_tokens;
    opts.id_prefix = o_.id_prefix;
    if (opts.min_tokens > opts.max_tokens) throw UsageError("--min-tokens exceeds --max-tokens");
    const auto dugs = extract_ehr_statements(read_all(o_.file), default_abbreviation_rules(), opts);
    for (const auto& d : dugs) {
      if (o_.format == Format::JsonLines) {
        out_ << to_json_line(d) << '\n';
      } else {
        std::string labels;
        for (const auto& l : d.labels.canonical_strings()) labels += (labels.empty() ? "" : "; ") + l;
        out_ << d.id << '\t' << labels << '\t' << d.text << '\n';
      }
    }
    return 0;
  }

  int rules_classify() {
    const auto rules = o_.rules.empty() ? default_type_rules() : load_type_rules(o_.rules);
    const TypeClassifier classifier(rules);
    if (o_.corpus.empty()) {
      for (const auto& line : inputs(o_.texts, o_.file)) {
        const auto types = classifier.classify(line);
        if (o_.format == Format::JsonLines)
          out_ << json{{"text", line}, {"types", types_json(types)}}.dump() << '\n';
        else
          out_ << types_text(types) << '\t' << line << '\n';
      }
      return 0;
    }
    if (!o_.texts.empty() || !o_.file.empty()) throw UsageError("--corpus excludes text arguments and --file");
    const auto dugs = load_corpus(o_.corpus, *aliases_);
    std::vector<TypePrediction> preds;
    for (const auto& d : dugs) {
      preds.push_back({d.id, classifier.classify(d.text)});
      if (o_.format == Format::JsonLines)
        out_ << json{{"id", d.id}, {"types", types_json(preds.back().types)}, {"gold", types_json(gold_types(d))}}
                    .dump()
             << '\n';
      else
        out_ << d.id << '\t' << types_text(preds.back().types) << '\t' << types_text(gold_types(d)) << '\n';
    }
    if (!o_.report.empty()) {
      const auto rep = evaluate_type_classifier(dugs, preds);
      json per = json::object();
      for (const auto& [t, s] : rep.per_type)
        per[std::to_string(t)] = {{"tp", s.tp},          {"fp", s.fp},       {"fn", s.fn},
                                  {"precision", s.precision()}, {"recall", s.recall()}, {"f1", s.f1()}};
      const json j{{"per_type", per},
                   {"averaged_types", rep.averaged_types},
                   {"macro", {{"precision", rep.macro.precision}, {"recall", rep.macro.recall}, {"f1", rep.macro.f1}}}};
      *open_output(o_.report) << j.dump() << '\n';
    }
    return 0;
  }

  int fewshot_select() {
    const auto pool = load_corpus(o_.corpus, *aliases_);
    const auto set = select_fewshot(pool, o_.k, o_.seed);
    for (const auto& g : set.gaps) err_ << "warning: pool has no example for stratum '" << g << "'\n";
    auto sink = o_.out.empty() ? nullptr : open_output(o_.out);
    std::ostream& os = sink ? *sink : out_;
    for (const auto& e : set.examples) os << to_json_line(e.dug) << '\n';
    return 0;
  }

  int extract() {
    const auto corpus = load_corpus(o_.corpus, *aliases_);
    const auto strategy = strategy_arg();

    FewShotSet fewshot;
    if (!o_.fewshot.empty()) {
      fewshot = make_fewshot_set(load_corpus(o_.fewshot, *aliases_));
    } else if (o_.k > 0) {
      fewshot = select_fewshot(corpus, o_.k, o_.seed);
      for (const auto& g : fewshot.gaps) err_ << "warning: pool has no example for stratum '" << g << "'\n";
    }
    const auto split = evaluation_split(corpus, fewshot);

    TemplateLibrary library = o_.templates.empty() ? TemplateLibrary::defaults() : TemplateLibrary::load(o_.templates);
    ExtractOptions opts;
    opts.decoding.temperature = o_.temperature;
    opts.decoding.max_tokens = o_.max_new_tokens;
    opts.retry.attempts = o_.retries;
    opts.retry.initial_backoff = std::chrono::milliseconds(o_.backoff_ms);
    opts.aliases = aliases_;
    opts.templates = &library;

    if (!o_.emit_prompts.empty()) return emit_prompts(split, strategy, fewshot, opts);

    std::unique_ptr<CompletionClient> client;
    if (o_.client == "replay") {
      if (o_.fixtures.empty()) throw UsageError("--client replay requires --fixtures");
      client = std::make_unique<ReplayClient>(o_.fixtures);
    } else {
      if (o_.url.empty() || o_.model.empty()) throw UsageError("--client http requires --url and --model");
      HttpClientConfig cfg;
      cfg.url = o_.url;
      cfg.model = o_.model;
      cfg.mode = o_.api_mode == "messages" ? ApiMode::Messages : ApiMode::Prompt;
      cfg.response_path = o_.response_path;
      cfg.timeout = std::chrono::seconds(o_.timeout_s);
      client = std::make_unique<HttpClient>(cfg);
    }

    auto sink = o_.out.empty() ? nullptr : open_output(o_.out);
    std::ostream& os = sink ? *sink : out_;
    std::size_t done = 0, failed = 0;
    extract_all(split, strategy, fewshot, *client, opts, std::max<std::size_t>(1, o_.parallelism),
                [&](const ExtractionRecord& r) {
                  ++done;
                  if (r.failed) {
                    ++failed;
                    err_ << "failed " << r.dug_id << ": " << r.error << '\n';
                  }
                  if (o_.format == Format::JsonLines || sink) {
                    os << to_json_line(r) << '\n';
                  } else {
                    std::string cands;
                    for (const auto& c : r.candidates) cands += (cands.empty() ? "" : "; ") + c.text;
                    os << r.dug_id << '\t' << (r.failed ? "FAILED" : cands) << '\n';
                  }
                });
    err_ << "extracted " << done << " records, " << failed << " failed\n";
    return failed == 0 ? 0 : 1;
  }

  int eval() {
    const auto gold_all = load_corpus(o_.gold, *aliases_);
    const auto space = build_label_space(gold_all);
    std::vector<Dug> gold = gold_all;
    if (!o_.fewshot.empty()) gold = evaluation_split(gold_all, make_fewshot_set(load_corpus(o_.fewshot, *aliases_)));
    std::istringstream in(read_all(o_.predictions));
    const auto records = read_records(in);
    std::optional<MtcType> type;
    if (o_.type != 0) type = type_arg(o_.type);
    const auto report = evaluate(gold, records, space, type);
    const auto machine = report_json(report);
    out_ << (o_.format == Format::JsonLines ? machine + "\n" : report_table(report));
    if (!o_.report.empty()) *open_output(o_.report) << machine << '\n';
    return 0;
  }

  int adhere() {
    const auto outcome = try_parse_mtc(o_.mtc);
    if (!outcome.mtc) throw NonvalidMtc(o_.mtc, outcome.reason);
    const Mtc m = normalize_activities(*outcome.mtc, *aliases_);
    std::istringstream in(read_all(o_.timeline));
    auto events = read_timeline_events(in);
    Window window = default_window(events);
    if (!o_.window_start.empty()) window.start = parse_timestamp(o_.window_start).time;
    if (!o_.window_end.empty()) window.end = parse_timestamp(o_.window_end).time;
    if (window.end < window.start) throw UsageError("window end precedes window start");
    AdherenceConfig cfg;
    cfg.dependency_tolerance = std::chrono::minutes(o_.dependency_tolerance);
    cfg.imprecision_horizon = std::chrono::minutes(o_.imprecision_horizon);
    cfg.consistency_tolerance = std::chrono::minutes(o_.consistency_tolerance);
    cfg.morning = day_part_arg(o_.morning, "--morning");
    cfg.noon = day_part_arg(o_.noon, "--noon");
    cfg.evening = day_part_arg(o_.evening, "--evening");
    const Timeline timeline(std::move(events), window, *aliases_);
    const auto v = check(m, timeline, cfg);
    if (o_.format == Format::JsonLines)
      out_ << json{{"mtc", serialize(m)}, {"verdict", to_string(v.kind)}, {"explanation", v.explanation}}.dump()
           << '\n';
    else
      out_ << to_string(v.kind) << ": " << v.explanation << '\n';
    return 0;
  }

 private:
  PromptStrategy strategy_arg() const {
    const auto kind = parse_strategy_kind(o_.strategy);
    if (!kind) throw UsageError("unknown strategy '" + o_.strategy + "'");
    if (*kind != StrategyKind::Specialized) {
      if (o_.type != 0) throw UsageError("--type applies to the specialized strategy only");
      return *kind == StrategyKind::Simple ? PromptStrategy::simple() : PromptStrategy::guided();
    }
    PromptStrategy s{StrategyKind::Specialized, std::nullopt};
    if (o_.type != 0) s.type = type_arg(o_.type);
    return s;
  }

  int emit_prompts(const std::vector<Dug>& dugs, const PromptStrategy& strategy, const FewShotSet& fewshot,
                   const ExtractOptions& opts) {
    fs::create_directories(o_.emit_prompts);
    for (const auto& d : dugs) {
      for (const auto& call : plan_prompts(d, strategy, fewshot, opts)) {
        const auto key = prompt_key(call.prompt);
        std::ofstream(fs::path(o_.emit_prompts) / (key + ".prompt"), std::ios::binary) << call.prompt;
        if (o_.format == Format::JsonLines)
          out_ << json{{"id", d.id}, {"strategy", call.strategy.name()}, {"prompt_key", key}}.dump() << '\n';
        else
          out_ << d.id << '\t' << call.strategy.name() << '\t' << key << '\n';
      }
    }
    return 0;
  }

  const Options& o_;
  std::ostream& out_;
  std::ostream& err_;
  AliasTable owned_aliases_;
  const AliasTable* aliases_ = &AliasTable::defaults();
};

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  Options o;
  CLI::App app{"Medication temporal constraint toolkit", "mtc"};
  app.require_subcommand(1);
  app.fallthrough();
  app.set_config("--config", "", "TOML or INI file with option values");
  app.add_option("--format", o.format, "Output format")
      ->transform(CLI::CheckedTransformer(std::map<std::string, Format>{{"text", Format::Text},
                                                                         {"json-lines", Format::JsonLines}}))
      ->default_str("text");
  app.add_option("--aliases", o.aliases, "Activity alias table (alias<TAB>canonical)")->check(CLI::ExistingFile);

  auto text_inputs = [&](CLI::App* sub) {
    sub->add_option("text", o.texts, "Input strings");
    sub->add_option("--file", o.file, "Read inputs from a file, one per line ('-' for stdin)");
  };

  auto* parse = app.add_subcommand("parse", "Parse constraints and print their structure");
  text_inputs(parse);

  auto* validate = app.add_subcommand("validate", "Print the share of inputs that are valid constraints");
  text_inputs(validate);

  auto* normalize = app.add_subcommand("normalize", "Post-process raw model answers into candidates");
  normalize->add_option("text", o.texts, "Raw answers, one per argument");
  normalize->add_option("--file", o.file, "One raw answer read from a file ('-' for stdin)");

  auto* stats = app.add_subcommand("dataset-stats", "Corpus statistics per source and type");
  stats->add_option("--corpus", o.corpus, "Corpus JSONL")->required();

  auto* ehr = app.add_subcommand("extract-ehr", "Extract abbreviation-bearing statements from a report");
  ehr->add_option("--file", o.file, "Report text ('-' for stdin)")->required();
  ehr->add_option("--min-tokens", o.min_tokens, "Minimum statement length")->capture_default_str();
  ehr->add_option("--max-tokens", o.max_tokens, "Maximum statement length")->capture_default_str();
  ehr->add_option("--id-prefix", o.id_prefix, "Id prefix")->capture_default_str();

  auto* rules = app.add_subcommand("rules-classify", "Rule-based type classification");
  text_inputs(rules);
  rules->add_option("--corpus", o.corpus, "Classify every guideline of a corpus");
  rules->add_option("--rules", o.rules, "Rule table (type<TAB>pattern)")->check(CLI::ExistingFile);
  rules->add_option("--report", o.report, "Write the classifier report (JSON) here; needs --corpus");

  auto* select = app.add_subcommand("fewshot-select", "Select few-shot examples from a pool");
  select->add_option("--corpus", o.corpus, "Pool JSONL")->required();
  select->add_option("-k,--k", o.k, "Number of examples")->capture_default_str();
  select->add_option("--seed", o.seed, "Random seed")->capture_default_str();
  select->add_option("--out", o.out, "Output file (default stdout)");

  auto* extract = app.add_subcommand("extract", "Extract constraints with a completion model");
  extract->add_option("--corpus", o.corpus, "Corpus JSONL")->required();
  extract->add_option("--strategy", o.strategy, "Prompt strategy")
      ->check(CLI::IsMember({"simple", "guided", "specialized"}))
      ->capture_default_str();
  extract->add_option("--type", o.type, "Single type for the specialized strategy (1..7)");
  extract->add_option("--client", o.client, "Completion client")
      ->check(CLI::IsMember({"http", "replay"}))
      ->capture_default_str();
  extract->add_option("--fixtures", o.fixtures, "Replay fixture directory")->check(CLI::ExistingDirectory);
  extract->add_option("--fewshot", o.fewshot, "Few-shot examples JSONL (default: select from the corpus)");
  extract->add_option("-k,--k", o.k, "Few-shot size when selecting from the corpus (0 for zero-shot)")
      ->capture_default_str();
  extract->add_option("--seed", o.seed, "Few-shot selection seed")->capture_default_str();
  extract->add_option("--parallelism", o.parallelism, "Concurrent requests")->capture_default_str();
  extract->add_option("--templates", o.templates, "Prompt template directory")->check(CLI::ExistingDirectory);
  extract->add_option("--emit-prompts", o.emit_prompts,
                      "Write <key>.prompt files to this directory and exit without calling a client");
  extract->add_option("--out", o.out, "Prediction JSONL (default stdout)");
  extract->add_option("--temperature", o.temperature, "Sampling temperature")->capture_default_str();
  extract->add_option("--max-new-tokens", o.max_new_tokens, "Completion length limit")->capture_default_str();
  extract->add_option("--retries", o.retries, "Attempts per request")->capture_default_str();
  extract->add_option("--backoff-ms", o.backoff_ms, "Initial retry backoff")->capture_default_str();
  extract->add_option("--url", o.url, "Completion endpoint for --client http");
  extract->add_option("--model", o.model, "Model name for --client http");
  extract->add_option("--api-mode", o.api_mode, "Request shape")
      ->check(CLI::IsMember({"prompt", "messages"}))
      ->capture_default_str();
  extract->add_option("--response-path", o.response_path, "JSON pointer to the completion text");
  extract->add_option("--timeout", o.timeout_s, "Request timeout in seconds")->capture_default_str();

  auto* eval = app.add_subcommand("eval", "Score predictions against gold labels");
  eval->add_option("--gold", o.gold, "Gold corpus JSONL")->required();
  eval->add_option("--predictions", o.predictions, "Prediction JSONL from extract")->required();
  eval->add_option("--fewshot", o.fewshot, "Few-shot examples to exclude from the gold side");
  eval->add_option("--type", o.type, "Restrict to one type (1..7)");
  eval->add_option("--report", o.report, "Also write the JSON report here");

  auto* adhere = app.add_subcommand("adhere", "Check a constraint against a patient timeline");
  adhere->add_option("--mtc", o.mtc, "Constraint")->required();
  adhere->add_option("--timeline", o.timeline, "Timeline JSONL")->required();
  adhere->add_option("--window-start", o.window_start, "ISO-8601 start (default: local midnight of first event)");
  adhere->add_option("--window-end", o.window_end, "ISO-8601 end, exclusive");
  adhere->add_option("--dependency-tolerance", o.dependency_tolerance, "Minutes")->capture_default_str();
  adhere->add_option("--imprecision-horizon", o.imprecision_horizon, "Minutes")->capture_default_str();
  adhere->add_option("--consistency-tolerance", o.consistency_tolerance, "Minutes")->capture_default_str();
  adhere->add_option("--morning", o.morning, "Window HH:MM-HH:MM")->capture_default_str();
  adhere->add_option("--noon", o.noon, "Window HH:MM-HH:MM")->capture_default_str();
  adhere->add_option("--evening", o.evening, "Window HH:MM-HH:MM")->capture_default_str();

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return 2;
  }

  try {
    Runner r(o, out, err);
    if (*parse) return r.parse();
    if (*validate) return r.validate();
    if (*normalize) return r.normalize();
    if (*stats) return r.dataset_stats();
    if (*ehr) return r.extract_ehr();
    if (*rules) return r.rules_classify();
    if (*select) return r.fewshot_select();
    if (*extract) return r.extract();
    if (*eval) return r.eval();
    if (*adhere) return r.adhere();
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << "\nRun with --help for more information.\n";
    return 2;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
  return 2;
}

}  // namespace mtc::cli
