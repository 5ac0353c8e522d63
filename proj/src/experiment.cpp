#include "advtext/experiment.hpp"

#include <algorithm>
#include <cinttypes>
#include <cstdio>
#include <fstream>
#include <map>
#include <memory>
#include <set>
#include <sstream>

#include "advtext/align.hpp"
#include "advtext/attack.hpp"
#include "advtext/corpus.hpp"
#include "advtext/csv.hpp"
#include "advtext/defense.hpp"
#include "advtext/error.hpp"
#include "advtext/generator.hpp"
#include "advtext/metrics.hpp"
#include "advtext/random.hpp"
#include "advtext/remote.hpp"
#include "advtext/report.hpp"
#include "advtext/rules.hpp"
#include "advtext/synthetic.hpp"
#include "advtext/tokenize.hpp"
#include "advtext/victim.hpp"
#include "advtext/vulnerability.hpp"

#ifndef ADVTEXT_VERSION
#define ADVTEXT_VERSION "0.0.0"
#endif

namespace advtext::cli {
namespace {

using json = nlohmann::json;
namespace fs = std::filesystem;

const json kEmpty = json::object();

std::string join_field(std::string_view section, std::string_view key) {
  return section.empty() ? std::string(key) : std::string(section) + "." + std::string(key);
}

template <class T>
T field(const json& obj, std::string_view section, const char* key, T fallback) {
  const auto it = obj.find(key);
  if (it == obj.end() || it->is_null()) return fallback;
  if constexpr (std::is_same_v<T, bool>) {
    if (!it->is_boolean()) throw ConfigError("expected a boolean", join_field(section, key));
  } else if constexpr (std::is_integral_v<T>) {
    if (!it->is_number_integer()) throw ConfigError("expected an integer", join_field(section, key));
    if (it->is_number_unsigned() == false && it->template get<std::int64_t>() < 0)
      throw ConfigError("must be non-negative", join_field(section, key));
  } else if constexpr (std::is_floating_point_v<T>) {
    if (!it->is_number()) throw ConfigError("expected a number", join_field(section, key));
  } else {
    if (!it->is_string()) throw ConfigError("expected a string", join_field(section, key));
  }
  return it->template get<T>();
}

// Object-valued member, empty when absent.
const json& object_field(const json& obj, std::string_view section, const char* key) {
  const auto it = obj.find(key);
  if (it == obj.end() || it->is_null()) return kEmpty;
  if (!it->is_object()) throw ConfigError("expected an object", join_field(section, key));
  return *it;
}

void assign(json& doc, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) throw ConfigError("expected key=value, got '" + assignment + "'", "--set");
  const std::string key = assignment.substr(0, eq);
  const std::string raw = assignment.substr(eq + 1);
  json value = json::parse(raw, nullptr, false);
  if (value.is_discarded()) value = raw;
  std::string pointer;
  std::stringstream parts(key);
  for (std::string part; std::getline(parts, part, '.');) {
    if (part.empty()) throw ConfigError("empty path component in '" + key + "'", "--set");
    pointer += "/" + part;
  }
  try {
    doc[json::json_pointer(pointer)] = std::move(value);
  } catch (const json::exception&) {
    throw ConfigError("cannot assign '" + key + "'", "--set");
  }
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016" PRIx64, v);
  return buf;
}

// Files are registered before they are written; anything registered is
// deleted again unless commit() runs.
class OutputDir {
 public:
  explicit OutputDir(fs::path dir) : dir_(std::move(dir)) {
    created_ = !fs::exists(dir_);
    fs::create_directories(dir_);
    clear_previous();
  }
  OutputDir(const OutputDir&) = delete;
  OutputDir& operator=(const OutputDir&) = delete;

  ~OutputDir() {
    if (committed_) return;
    std::error_code ec;
    for (const auto& f : files_) fs::remove(dir_ / f, ec);
    fs::remove(dir_ / "manifest.json", ec);
    if (created_) fs::remove(dir_, ec);
  }

  fs::path file(const std::string& name) {
    if (std::find(files_.begin(), files_.end(), name) == files_.end()) files_.push_back(name);
    return dir_ / name;
  }

  template <class Fn>
  void write(const std::string& name, Fn&& fn) {
    const fs::path p = file(name);
    std::ofstream out(p, std::ios::binary);
    if (!out) throw DataError("cannot open " + p.string() + " for writing");
    fn(out);
    out.close();
    if (!out) throw DataError("failed writing " + p.string());
  }

  void commit(json manifest) {
    std::vector<std::string> sorted = files_;
    std::sort(sorted.begin(), sorted.end());
    manifest["files"] = sorted;
    std::ofstream out(dir_ / "manifest.json", std::ios::binary);
    out << manifest.dump(2) << '\n';
    out.close();
    if (!out) throw DataError("failed writing manifest in " + dir_.string());
    committed_ = true;
  }

  const fs::path& path() const noexcept { return dir_; }

 private:
  void clear_previous() {
    const fs::path manifest = dir_ / "manifest.json";
    if (!fs::exists(manifest)) return;
    std::ifstream in(manifest);
    const json old = json::parse(in, nullptr, false);
    if (old.is_object() && old.contains("files") && old["files"].is_array()) {
      for (const auto& f : old["files"]) {
        if (f.is_string() && fs::path(f.get<std::string>()).filename() == fs::path(f.get<std::string>()))
          fs::remove(dir_ / f.get<std::string>());
      }
    }
    fs::remove(manifest);
  }

  fs::path dir_;
  std::vector<std::string> files_;
  bool created_ = false;
  bool committed_ = false;
};

struct Context {
  const ExperimentConfig& cfg;
  std::ostream& log;
  OutputDir& out;
};

AttackConfig attack_config(const ExperimentConfig& cfg) {
  const json& s = cfg.section("attack");
  AttackConfig c;
  c.query_budget = field<std::size_t>(s, "attack", "query_budget", c.query_budget);
  c.batch_size = field<std::size_t>(s, "attack", "batch_size", c.batch_size);
  c.edit_budget = field<std::size_t>(s, "attack", "edit_budget", c.edit_budget);
  c.perturbation_threshold = field<double>(s, "attack", "perturbation_threshold", c.perturbation_threshold);
  c.temperature = field<double>(s, "attack", "temperature", c.temperature);
  c.count_initial_check = field<bool>(s, "attack", "count_initial_check", c.count_initial_check);
  c.max_batches = field<std::size_t>(s, "attack", "max_batches", c.max_batches);
  c.seed = cfg.seed();
  try {
    c.validate();
  } catch (const ConfigError& e) {
    throw ConfigError(e.what(), "attack." + e.field());
  }
  return c;
}

OraclePtr victim_from_spec(const ExperimentConfig& cfg, const json& spec, std::string_view section) {
  if (spec.contains("remote")) {
    RemoteOptions options;
    options.timeout = std::chrono::milliseconds(field<std::int64_t>(spec, section, "timeout_ms", 5000));
    options.confidence = field<bool>(spec, section, "confidence", false);
    return bind_remote(field<std::string>(spec, section, "remote", ""), options);
  }
  if (spec.contains("model")) {
    const fs::path p = cfg.resolve(field<std::string>(spec, section, "model", ""));
    if (!fs::exists(p)) throw ConfigError("file not found: " + p.string(), join_field(section, "model"));
    return std::make_shared<const BowClassifier>(load_model(p));
  }
  throw ConfigError("needs either \"model\" or \"remote\"", std::string(section));
}

OraclePtr victim(const ExperimentConfig& cfg) { return victim_from_spec(cfg, cfg.section("victim"), "victim"); }

Dataset dataset(const ExperimentConfig& cfg, std::string_view key = "dataset") {
  std::optional<std::size_t> classes;
  if (cfg.document().contains("num_classes"))
    classes = field<std::size_t>(cfg.document(), "", "num_classes", 0);
  return read_dataset(cfg.path(key), classes);
}

fs::path entry_path(const ExperimentConfig& cfg, const json& spec, std::string_view section, const char* key) {
  if (spec.contains(key)) {
    const fs::path p = cfg.resolve(field<std::string>(spec, section, key, ""));
    if (!fs::exists(p)) throw ConfigError("file not found: " + p.string(), join_field(section, key));
    return p;
  }
  return cfg.path(key);
}

Strategy strategy_from_spec(const ExperimentConfig& cfg, const json& spec, std::string_view section) {
  const std::string name = field<std::string>(spec, section, "strategy", "generator");
  if (name == "generator") {
    auto model = std::make_shared<const GeneratorModel>(load_generator(entry_path(cfg, spec, section, "generator")));
    return GeneratorStrategy{std::make_shared<const RuleSampler>(std::move(model))};
  }
  if (name == "random") return GeneratorStrategy{std::make_shared<const RandomEditGenerator>()};
  if (name == "remote") {
    return GeneratorStrategy{bind_remote_generator(field<std::string>(spec, section, "endpoint", ""))};
  }
  if (name == "greedy") {
    RuleBank bank = load_bank(entry_path(cfg, spec, section, "bank"));
    const std::string level = field<std::string>(spec, section, "level", "all");
    if (level != "all") {
      try {
        bank = restrict_level(bank, parse_rule_level(level));
      } catch (const ConfigError&) {
        throw ConfigError("expected all, word or char", join_field(section, "level"));
      }
    }
    return GreedyRulesStrategy{std::make_shared<const RuleBank>(std::move(bank))};
  }
  throw ConfigError("unknown strategy '" + name + "' (generator, random, remote, greedy)",
                    join_field(section, "strategy"));
}

EvalOptions eval_options(const ExperimentConfig& cfg) {
  EvalOptions o;
  o.workers = cfg.workers();
  return o;
}

void write_rules_csv(std::ostream& out, const RuleBank& bank) {
  csv::write_row(out, {"source", "target", "level", "count", "salience", "tasks"});
  for (const auto& r : bank.rules()) {
    std::set<std::string> tasks;
    for (const auto& p : r.provenance) tasks.insert(p.task);
    std::string joined;
    for (const auto& t : tasks) joined += (joined.empty() ? "" : ";") + t;
    csv::write_row(out, {r.source, r.target, std::string(to_string(r.level)), std::to_string(r.count),
                         csv::format_number(r.salience), joined});
  }
}

void cmd_train_victim(Context& ctx) {
  const json& s = ctx.cfg.section("training");
  BowConfig bc;
  bc.hash_size = field<std::size_t>(s, "training", "hash_size", bc.hash_size);
  bc.epochs = field<std::size_t>(s, "training", "epochs", bc.epochs);
  bc.learning_rate = field<double>(s, "training", "learning_rate", bc.learning_rate);
  bc.use_bigrams = field<bool>(s, "training", "use_bigrams", bc.use_bigrams);
  bc.seed = ctx.cfg.seed();
  if (bc.hash_size < 2) throw ConfigError("must be at least 2", "training.hash_size");
  if (!(bc.learning_rate > 0.0)) throw ConfigError("must be positive", "training.learning_rate");
  const std::string id = field<std::string>(s, "training", "id", "bow");
  const Dataset train = dataset(ctx.cfg, "train");
  std::optional<std::size_t> classes;
  if (train.num_classes > 0) classes = train.num_classes;
  const BowClassifier model = train_bow_classifier(train.examples, bc, classes, id);
  save_model(model, ctx.out.file("model.json"));
  std::optional<double> test_acc;
  if (ctx.cfg.has_path("test")) test_acc = accuracy(model, dataset(ctx.cfg, "test").examples);
  const double train_acc = accuracy(model, train.examples);
  ctx.out.write("training.csv", [&](std::ostream& o) {
    csv::write_row(o, {"metric", "value"});
    csv::write_row(o, {"examples", std::to_string(train.examples.size())});
    csv::write_row(o, {"classes", std::to_string(model.num_classes())});
    csv::write_row(o, {"train_accuracy", csv::format_number(train_acc)});
    csv::write_row(o, {"test_accuracy", csv::format_optional(test_acc)});
  });
  ctx.log << "trained " << id << ": train accuracy " << csv::format_number(train_acc, 4);
  if (test_acc) ctx.log << ", test accuracy " << csv::format_number(*test_acc, 4);
  ctx.log << '\n';
}

void cmd_extract_rules(Context& ctx) {
  const auto lexicon = SynonymLexicon::load(ctx.cfg.path("lexicon"));
  OracleMap oracles;
  const json& os = ctx.cfg.section("oracles");
  for (const auto& [task, spec] : os.items()) {
    if (!spec.is_object()) throw ConfigError("expected a victim object", "oracles." + task);
    oracles.emplace(task, victim_from_spec(ctx.cfg, spec, "oracles." + task));
  }
  ExtractionOptions eo;
  eo.char_edit_max = field<std::size_t>(ctx.cfg.section("extraction"), "extraction", "char_edit_max", 2);
  RuleExtractor extractor(oracles, lexicon, eo);
  for (const auto& p : ctx.cfg.path_list("pairs")) {
    PairReader reader(p, pair_format_for_path(p));
    while (auto pair = reader.next()) extractor.add(*pair);
  }
  const RuleBank bank = extractor.finish();
  save_bank(bank, ctx.out.file("bank.json"));
  ctx.out.write("rules.csv", [&](std::ostream& o) { write_rules_csv(o, bank); });
  ctx.out.write("diagnostics.csv", [&](std::ostream& o) { extractor.diagnostics().write_csv(o); });
  const auto& d = extractor.diagnostics();
  ctx.log << "extracted " << bank.size() << " rules from " << d.pairs_contributing << " of " << d.pairs_total
          << " pairs\n";
}

void cmd_merge_banks(Context& ctx) {
  std::vector<RuleBank> banks;
  const auto inputs = ctx.cfg.path_list("banks");
  for (const auto& p : inputs) banks.push_back(load_bank(p));
  const RuleBank merged = merge_banks(banks);
  save_bank(merged, ctx.out.file("bank.json"));
  ctx.out.write("rules.csv", [&](std::ostream& o) { write_rules_csv(o, merged); });
  ctx.out.write("merge.csv", [&](std::ostream& o) {
    csv::write_row(o, {"input", "rules"});
    for (std::size_t i = 0; i < banks.size(); ++i)
      csv::write_row(o, {inputs[i].filename().string(), std::to_string(banks[i].size())});
    csv::write_row(o, {"merged", std::to_string(merged.size())});
  });
  ctx.log << "merged " << banks.size() << " banks into " << merged.size() << " rules\n";
}

void cmd_fit_generator(Context& ctx) {
  const json& s = ctx.cfg.section("generator");
  const Direction direction = parse_direction(field<std::string>(s, "generator", "direction", "attack"));
  const RuleBank bank = load_bank(ctx.cfg.path("bank"));
  std::vector<AdversarialPair> pairs;
  for (const auto& p : ctx.cfg.path_list("pairs")) {
    auto part = ingest_pairs(p, pair_format_for_path(p));
    pairs.insert(pairs.end(), std::make_move_iterator(part.begin()), std::make_move_iterator(part.end()));
  }
  GeneratorModel model = fit_generator(pairs, bank, direction);
  model.default_temperature = field<double>(s, "generator", "temperature", 1.0);
  if (!(model.default_temperature > 0.0)) throw ConfigError("must be positive", "generator.temperature");
  save_generator(model, ctx.out.file("generator.json"));
  ctx.out.write("weights.csv", [&](std::ostream& o) {
    csv::write_row(o, {"source", "target", "level", "weight"});
    for (const auto& [source, targets] : model.weights)
      for (const auto& t : targets)
        csv::write_row(o, {source, t.token, std::string(to_string(t.level)), csv::format_number(t.weight)});
  });
  ctx.log << "fitted " << to_string(direction) << " generator over " << model.weights.size() << " sources\n";
}

void cmd_attack(Context& ctx) {
  const OraclePtr oracle = victim(ctx.cfg);
  const Dataset data = dataset(ctx.cfg);
  const Strategy strategy = strategy_from_spec(ctx.cfg, ctx.cfg.section("attack"), "attack");
  const EvalReport report = evaluate_attack(oracle, strategy, data.examples, attack_config(ctx.cfg),
                                            eval_options(ctx.cfg));
  ctx.out.write("results.csv", [&](std::ostream& o) { report.write_csv(o); });
  ctx.out.write("summary.csv", [&](std::ostream& o) { report.write_summary_csv(o); });
  ctx.out.write("summary.md", [&](std::ostream& o) { report.write_summary_markdown(o, "attack"); });
  ctx.log << "asr " << csv::format_number(report.asr, 4) << " over " << report.attempted << " examples\n";
}

void cmd_curve(Context& ctx) {
  const OraclePtr oracle = victim(ctx.cfg);
  const Dataset data = dataset(ctx.cfg);
  const Strategy strategy = strategy_from_spec(ctx.cfg, ctx.cfg.section("attack"), "attack");
  const json& s = ctx.cfg.section("curve");
  std::vector<std::size_t> budgets{1, 5, 10, 50, 200};
  if (s.contains("budgets")) {
    if (!s["budgets"].is_array()) throw ConfigError("expected an array", "curve.budgets");
    budgets.clear();
    for (const auto& b : s["budgets"]) {
      if (!b.is_number_integer() || b.get<std::int64_t>() < 0) throw ConfigError("expected non-negative integers", "curve.budgets");
      budgets.push_back(b.get<std::size_t>());
    }
  }
  const auto curve = budget_curve(oracle, strategy, data.examples, budgets, attack_config(ctx.cfg),
                                  eval_options(ctx.cfg));
  ctx.out.write("curve.csv", [&](std::ostream& o) { write_curve_csv(o, curve); });
  for (const auto& p : curve) ctx.log << "budget " << p.budget << ": asr " << csv::format_number(p.asr, 4) << '\n';
}

double top_fraction_setting(const ExperimentConfig& cfg) {
  const double p = field<double>(cfg.section("analysis"), "analysis", "top_fraction", 0.2);
  if (!(p > 0.0 && p <= 1.0)) throw ConfigError("must lie in (0, 1]", "analysis.top_fraction");
  return p;
}

void analyze_jaccard(Context& ctx) {
  const double p = top_fraction_setting(ctx.cfg);
  const OraclePtr a = victim(ctx.cfg);
  const json& other = object_field(ctx.cfg.section("analysis"), "analysis", "other_victim");
  if (other.empty()) throw ConfigError("required for jaccard analysis", "analysis.other_victim");
  const OraclePtr b = victim_from_spec(ctx.cfg, other, "analysis.other_victim");
  const Dataset data = dataset(ctx.cfg);
  std::vector<VulnerabilityProfile> profiles;
  std::vector<std::pair<std::size_t, double>> rows;
  double sum = 0.0;
  for (std::size_t i = 0; i < data.examples.size(); ++i) {
    const auto& ex = data.examples[i];
    const auto tok = tokenize(ex.text);
    if (tok.empty()) continue;
    auto pa = vulnerability_scores(*a, tok, ex.label);
    const auto pb = vulnerability_scores(*b, tok, ex.label);
    const double j = jaccard(top_fraction(pa, p), top_fraction(pb, p));
    rows.emplace_back(i, j);
    sum += j;
    profiles.push_back(std::move(pa));
  }
  if (rows.empty()) throw DataError("no non-empty sentences to analyze");
  const double mean = sum / static_cast<double>(rows.size());
  ctx.out.write("jaccard.csv", [&](std::ostream& o) {
    csv::write_row(o, {"example", "jaccard"});
    for (const auto& [i, j] : rows) csv::write_row(o, {std::to_string(i), csv::format_number(j)});
  });
  ctx.out.write("jaccard_summary.csv", [&](std::ostream& o) {
    csv::write_row(o, {"metric", "value"});
    csv::write_row(o, {"sentences", std::to_string(rows.size())});
    csv::write_row(o, {"top_fraction", csv::format_number(p)});
    csv::write_row(o, {"mean_jaccard", csv::format_number(mean)});
    csv::write_row(o, {"random_baseline", csv::format_number(random_jaccard_baseline(p))});
  });
  ctx.out.write("profiles.csv", [&](std::ostream& o) { write_profiles_csv(o, profiles); });
  ctx.log << "mean jaccard " << csv::format_number(mean, 4) << " (random " << csv::format_number(random_jaccard_baseline(p), 4)
          << ")\n";
}

void analyze_gini(Context& ctx) {
  const RuleBank bank = load_bank(ctx.cfg.path("bank"));
  ctx.out.write("gini.csv", [&](std::ostream& o) {
    csv::write_row(o, {"level", "rules", "gini"});
    csv::write_row(o, {"all", std::to_string(bank.size()), csv::format_number(gini_substitution_preference(bank))});
    for (RuleLevel level : {RuleLevel::Word, RuleLevel::Char}) {
      const std::size_t n = restrict_level(bank, level).size();
      csv::write_row(o, {std::string(to_string(level)), std::to_string(n),
                         n ? csv::format_number(gini_substitution_preference(bank, level)) : std::string()});
    }
  });
  ctx.log << "gini " << csv::format_number(gini_substitution_preference(bank), 4) << '\n';
}

void analyze_heatmap(Context& ctx) {
  const json& s = ctx.cfg.section("analysis");
  const RuleBank bank = load_bank(ctx.cfg.path("bank"));
  const auto sources = field<std::size_t>(s, "analysis", "heatmap_sources", 20);
  const auto targets = field<std::size_t>(s, "analysis", "heatmap_targets", 20);
  const Heatmap h = export_heatmap(bank, sources, targets);
  ctx.out.write("heatmap.csv", [&](std::ostream& o) { h.write_csv(o); });
  ctx.log << "heatmap " << h.row_labels.size() << " x " << h.column_labels.size() << '\n';
}

void analyze_hit_rate(Context& ctx) {
  const double p = top_fraction_setting(ctx.cfg);
  const OraclePtr oracle = victim(ctx.cfg);
  if (!oracle->provides_confidence()) throw ConfigError("hit-rate analysis needs a confidence-mode victim", "victim");
  const Dataset data = dataset(ctx.cfg);
  const Strategy strategy = strategy_from_spec(ctx.cfg, ctx.cfg.section("attack"), "attack");
  const EvalReport report = evaluate_attack(oracle, strategy, data.examples, attack_config(ctx.cfg),
                                            eval_options(ctx.cfg));
  std::size_t replacements = 0;
  std::size_t hits = 0;
  double rate_sum = 0.0;
  for (const auto& r : report.per_example) {
    if (!r.success) continue;
    const auto& ex = data.examples[r.example_index];
    const auto orig = tokenize(ex.text);
    const auto adv = tokenize(*r.adversarial_text);
    const auto script = align_pair(orig, adv);
    const auto vulnerable = top_fraction(vulnerability_scores(*oracle, orig, ex.label), p);
    for (const auto& e : script) {
      if (e.kind != Edit::Kind::Substitute) continue;
      ++replacements;
      if (vulnerable.contains(e.from)) ++hits;
    }
    rate_sum += perturbation_rate(orig.size(), script);
  }
  const std::optional<double> rate =
      replacements ? std::optional<double>(static_cast<double>(hits) / static_cast<double>(replacements)) : std::nullopt;
  const std::optional<double> p_value =
      replacements ? std::optional<double>(binomial_upper_tail(hits, replacements, p)) : std::nullopt;
  const std::optional<double> mean_rate =
      report.successes ? std::optional<double>(rate_sum / static_cast<double>(report.successes)) : std::nullopt;
  ctx.out.write("hit_rate.csv", [&](std::ostream& o) {
    csv::write_row(o, {"metric", "value"});
    csv::write_row(o, {"successes", std::to_string(report.successes)});
    csv::write_row(o, {"replacements", std::to_string(replacements)});
    csv::write_row(o, {"hits", std::to_string(hits)});
    csv::write_row(o, {"hit_rate", csv::format_optional(rate)});
    csv::write_row(o, {"baseline", csv::format_number(p)});
    csv::write_row(o, {"p_value", csv::format_optional(p_value)});
    csv::write_row(o, {"mean_perturbation_rate", csv::format_optional(mean_rate)});
  });
  ctx.log << "hit rate " << csv::format_optional(rate, 4) << " over " << replacements << " replacements\n";
}

void cmd_defend(Context& ctx) {
  const json& s = ctx.cfg.section("defense");
  const std::string source = field<std::string>(s, "defense", "cleaner", "bank");
  Cleaner cleaner;
  if (source == "bank") {
    const TieBreak tb = parse_tie_break(field<std::string>(s, "defense", "tie_break", "highest_count"));
    cleaner = build_cleaner(load_bank(entry_path(ctx.cfg, s, "defense", "bank")), tb);
  } else if (source == "generator") {
    cleaner = cleaner_from_generator(load_generator(entry_path(ctx.cfg, s, "defense", "generator")));
  } else {
    throw ConfigError("expected bank or generator", "defense.cleaner");
  }
  const OraclePtr oracle = victim(ctx.cfg);
  const Dataset data = dataset(ctx.cfg);
  const Strategy strategy = strategy_from_spec(ctx.cfg, ctx.cfg.section("attack"), "attack");
  const DefenseReport report =
      evaluate_defense(oracle, cleaner, strategy, data.examples, attack_config(ctx.cfg), ctx.cfg.workers());
  ctx.out.write("defense.csv", [&](std::ostream& o) { report.write_csv(o); });
  ctx.out.write("cleaner.csv", [&](std::ostream& o) {
    csv::write_row(o, {"perturbed", "restored"});
    for (const auto& [from, to] : cleaner.mapping()) csv::write_row(o, {from, to});
  });
  ctx.log << "asr " << csv::format_number(report.undefended.asr, 4) << " -> "
          << csv::format_number(report.defended.asr, 4) << '\n';
}

void cmd_report(Context& ctx) {
  const json& s = ctx.cfg.section("report");
  const auto it = s.find("methods");
  if (it == s.end() || !it->is_array() || it->empty())
    throw ConfigError("expected a non-empty array of methods", "report.methods");
  const OraclePtr oracle = victim(ctx.cfg);
  const Dataset data = dataset(ctx.cfg);
  const AttackConfig base = attack_config(ctx.cfg);

  std::optional<CharNGramLM> lm;
  if (ctx.cfg.has_path("lm_corpus")) {
    lm.emplace(field<std::size_t>(s, "report", "lm_order", 5));
    std::vector<std::string> corpus;
    for (auto& ex : dataset(ctx.cfg, "lm_corpus").examples) corpus.push_back(std::move(ex.text));
    lm->train(corpus);
  }
  ReportHooks hooks;
  hooks.lm = lm ? &*lm : nullptr;
  if (s.contains("similarity_endpoint"))
    hooks.similarity = bind_remote_scorer(field<std::string>(s, "report", "similarity_endpoint", ""));
  if (s.contains("grammar_endpoint"))
    hooks.grammar = bind_remote_scorer(field<std::string>(s, "report", "grammar_endpoint", ""));

  std::vector<ReportRow> rows;
  std::set<std::string> names;
  for (std::size_t i = 0; i < it->size(); ++i) {
    const json& m = (*it)[i];
    const std::string section = "report.methods[" + std::to_string(i) + "]";
    if (!m.is_object()) throw ConfigError("expected an object", section);
    const std::string name = field<std::string>(m, section, "name", "");
    if (name.empty() || !names.insert(name).second) throw ConfigError("missing or duplicate name", section + ".name");
    const Strategy strategy = strategy_from_spec(ctx.cfg, m, section);
    const EvalReport report = evaluate_attack(oracle, strategy, data.examples, base, eval_options(ctx.cfg));
    rows.push_back(summarize(name, report, data.examples, hooks));
    ctx.log << name << ": asr " << csv::format_number(report.asr, 4) << '\n';
  }
  ctx.out.write("report.csv", [&](std::ostream& o) { write_report_csv(o, rows); });
  ctx.out.write("report.md", [&](std::ostream& o) { write_report_markdown(o, rows); });
}

void cmd_make_demo(Context& ctx) {
  const json& s = ctx.cfg.section("demo");
  synthetic::WorldConfig wc;
  wc.seed = ctx.cfg.seed();
  wc.tasks = field<std::size_t>(s, "demo", "tasks", 4);
  synthetic::SetupOptions so;
  so.train_size = field<std::size_t>(s, "demo", "train_size", so.train_size);
  so.pool_size = field<std::size_t>(s, "demo", "pool_size", so.pool_size);
  so.test_size = field<std::size_t>(s, "demo", "test_size", so.test_size);
  so.victim.hash_size = field<std::size_t>(s, "demo", "hash_size", std::size_t{1} << 16);
  so.toolkit.query_budget = 50;
  if (wc.tasks < 2) throw ConfigError("needs at least 2 tasks", "demo.tasks");
  const auto setup = synthetic::build_setup(wc, so);
  setup.world.lexicon.save(ctx.out.file("lexicon.json"));
  for (std::size_t t = 0; t < setup.world.tasks.size(); ++t) {
    const std::string id = setup.world.tasks[t].id;
    write_dataset(ctx.out.file(id + "_train.jsonl"), setup.train[t]);
    write_dataset(ctx.out.file(id + "_test.jsonl"), setup.test[t]);
  }
  for (std::size_t t = 0; t < setup.pairs.size(); ++t)
    write_pairs_jsonl(ctx.out.file("pairs_" + setup.world.tasks[t].id + ".jsonl"), setup.pairs[t]);
  ctx.log << "demo world with " << setup.world.tasks.size() << " tasks written\n";
}

}  // namespace

ExperimentConfig::ExperimentConfig(nlohmann::json document, std::filesystem::path base_dir, const Overrides& overrides)
    : doc_(std::move(document)), base_dir_(std::move(base_dir)) {
  if (!doc_.is_object()) throw ConfigError("config must be a JSON object");
  for (const auto& a : overrides.assignments) assign(doc_, a);
  if (overrides.seed) doc_["seed"] = *overrides.seed;
  if (overrides.budget) doc_["attack"]["query_budget"] = *overrides.budget;
  if (overrides.temperature) doc_["attack"]["temperature"] = *overrides.temperature;
  if (overrides.workers) doc_["workers"] = *overrides.workers;
  if (overrides.output) doc_["output"] = fs::absolute(*overrides.output).string();

  seed_ = field<std::uint64_t>(doc_, "", "seed", 0);
  doc_["seed"] = seed_;
  workers_ = field<std::size_t>(doc_, "", "workers", 1);
  if (workers_ < 1) throw ConfigError("must be at least 1", "workers");
  const std::string out = field<std::string>(doc_, "", "output", "out");
  output_root_ = fs::path(out).is_absolute() ? fs::path(out) : base_dir_ / out;
  for (const char* name : {"paths", "victim", "attack", "training", "analysis", "defense", "report", "curve",
                           "generator", "extraction", "oracles", "demo"})
    object_field(doc_, "", name);
  const json& paths = section("paths");
  for (const auto& [key, value] : paths.items()) {
    const bool ok = value.is_string() ||
                    (value.is_array() && std::all_of(value.begin(), value.end(), [](const json& v) { return v.is_string(); }));
    if (!ok) throw ConfigError("expected a path or list of paths", "paths." + key);
  }
}

ExperimentConfig ExperimentConfig::load(const std::filesystem::path& file, const Overrides& overrides) {
  std::ifstream in(file);
  if (!in) throw ConfigError("cannot open config file " + file.string(), "--config");
  json doc = json::parse(in, nullptr, false);
  if (doc.is_discarded()) throw ConfigError("config file is not valid JSON", "--config");
  return ExperimentConfig(std::move(doc), fs::absolute(file).parent_path(), overrides);
}

std::string ExperimentConfig::hash() const {
  json canonical = doc_;
  canonical.erase("output");
  canonical.erase("workers");
  return "fnv1a64:" + hex64(fnv1a64(canonical.dump()));
}

const nlohmann::json& ExperimentConfig::section(std::string_view name) const {
  const auto it = doc_.find(std::string(name));
  if (it == doc_.end() || !it->is_object()) return kEmpty;
  return *it;
}

std::filesystem::path ExperimentConfig::resolve(const std::string& raw) const {
  std::string s = raw;
  const std::string token = "${output}";
  for (auto pos = s.find(token); pos != std::string::npos; pos = s.find(token, pos))
    s.replace(pos, token.size(), output_root_.string());
  fs::path p(s);
  return (p.is_absolute() ? p : base_dir_ / p).lexically_normal();
}

bool ExperimentConfig::has_path(std::string_view key) const { return section("paths").contains(std::string(key)); }

std::filesystem::path ExperimentConfig::path(std::string_view key, bool must_exist) const {
  const auto list = path_list(key, must_exist);
  if (list.size() != 1) throw ConfigError("expected a single path", "paths." + std::string(key));
  return list.front();
}

std::vector<std::filesystem::path> ExperimentConfig::path_list(std::string_view key, bool must_exist) const {
  const std::string field_name = "paths." + std::string(key);
  const json& paths = section("paths");
  const auto it = paths.find(std::string(key));
  if (it == paths.end()) throw ConfigError("required by this command", field_name);
  std::vector<fs::path> out;
  if (it->is_string()) {
    out.push_back(resolve(it->get<std::string>()));
  } else {
    for (const auto& v : *it) out.push_back(resolve(v.get<std::string>()));
  }
  if (out.empty()) throw ConfigError("list is empty", field_name);
  if (must_exist) {
    for (const auto& p : out)
      if (!fs::exists(p)) throw ConfigError("file not found: " + p.string(), field_name);
  }
  return out;
}

const std::vector<std::string>& command_names() {
  static const std::vector<std::string> names{"train-victim", "extract-rules", "merge-banks", "fit-generator",
                                              "attack",       "curve",         "analyze",     "defend",
                                              "report",       "make-demo"};
  return names;
}

const std::vector<std::string>& analysis_kinds() {
  static const std::vector<std::string> kinds{"jaccard", "gini", "heatmap", "hit-rate"};
  return kinds;
}

std::filesystem::path run(std::string_view command, const ExperimentConfig& config, std::ostream& log,
                          std::string_view analysis_kind) {
  const auto& names = command_names();
  if (std::find(names.begin(), names.end(), command) == names.end())
    throw ConfigError("unknown command '" + std::string(command) + "'", "command");
  std::string dir_name(command);
  if (command == "analyze") {
    const auto& kinds = analysis_kinds();
    if (std::find(kinds.begin(), kinds.end(), analysis_kind) == kinds.end())
      throw ConfigError("expected one of jaccard, gini, heatmap, hit-rate", "analyze");
    dir_name += "-" + std::string(analysis_kind);
  }
  const fs::path dir = command == "make-demo" ? config.output_root() : config.output_root() / dir_name;
  OutputDir out(dir);
  Context ctx{config, log, out};

  if (command == "train-victim") cmd_train_victim(ctx);
  else if (command == "extract-rules") cmd_extract_rules(ctx);
  else if (command == "merge-banks") cmd_merge_banks(ctx);
  else if (command == "fit-generator") cmd_fit_generator(ctx);
  else if (command == "attack") cmd_attack(ctx);
  else if (command == "curve") cmd_curve(ctx);
  else if (command == "defend") cmd_defend(ctx);
  else if (command == "report") cmd_report(ctx);
  else if (command == "make-demo") cmd_make_demo(ctx);
  else if (analysis_kind == "jaccard") analyze_jaccard(ctx);
  else if (analysis_kind == "gini") analyze_gini(ctx);
  else if (analysis_kind == "heatmap") analyze_heatmap(ctx);
  else analyze_hit_rate(ctx);

  json manifest{{"command", std::string(command)},
                {"config_hash", config.hash()},
                {"seed", config.seed()},
                {"version", ADVTEXT_VERSION}};
  if (command == "analyze") manifest["analysis"] = std::string(analysis_kind);
  out.commit(std::move(manifest));
  return dir;
}

int report_failure(std::ostream& err) {
  try {
    throw;
  } catch (const ConfigError& e) {
    err << "configuration error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const RemoteError& e) {
    err << "remote oracle failure: " << e.what() << '\n';
    return kExitRemote;
  } catch (const DataError& e) {
    err << "data error: " << e.what() << '\n';
    return kExitData;
  } catch (const nlohmann::json::exception& e) {
    err << "data error: " << e.what() << '\n';
    return kExitData;
  } catch (const std::filesystem::filesystem_error& e) {
    err << "data error: " << e.what() << '\n';
    return kExitData;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitData;
  }
}

}  // namespace advtext::cli
