#include "advtext/attack.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <numeric>
#include <thread>
#include <unordered_set>

#include "advtext/csv.hpp"
#include "advtext/error.hpp"
#include "advtext/metrics.hpp"
#include "advtext/random.hpp"
#include "advtext/tokenize.hpp"

namespace advtext {
namespace {

struct Ranked {
  std::size_t position;
  const SubstitutionRule* rule;
};

const SubstitutionRule* best_rule(std::span<const SubstitutionRule> rules) {
  const SubstitutionRule* best = nullptr;
  for (const auto& r : rules) {
    if (!best || r.salience > best->salience || (r.salience == best->salience && r.count > best->count)) best = &r;
  }
  return best;
}

AttackResult attack_greedy(const VictimOracle& oracle, const RuleBank& bank, const LabeledExample& example,
                           const AttackConfig& config) {
  AttackResult result;
  result.strategy = StrategyKind::GreedyRules;
  const auto tok = tokenize(example.text, false);
  std::vector<Ranked> ranked;
  for (std::size_t i = 0; i < tok.size(); ++i) {
    if (const auto* r = best_rule(bank.rules_for(ascii_lower(tok.tokens[i])))) ranked.push_back({i, r});
  }
  std::stable_sort(ranked.begin(), ranked.end(),
                   [](const Ranked& a, const Ranked& b) { return a.rule->salience > b.rule->salience; });
  const auto max_subs = static_cast<std::size_t>(
      std::floor(config.perturbation_threshold * static_cast<double>(tok.size()) + 1e-9));
  std::vector<std::pair<std::size_t, std::string>> applied;
  for (const auto& r : ranked) {
    if (applied.size() >= max_subs || result.queries_used >= config.query_budget) break;
    applied.emplace_back(r.position, r.rule->target);
    std::string candidate = replace_tokens(tok, applied);
    ++result.queries_used;
    if (oracle.predict(candidate).label != example.label) {
      result.success = true;
      result.adversarial_text = std::move(candidate);
      break;
    }
  }
  return result;
}

AttackResult attack_with_generator(const VictimOracle& oracle, const CandidateGenerator& generator,
                                   const LabeledExample& example, const AttackConfig& config) {
  AttackResult result;
  result.strategy = StrategyKind::Generator;
  std::unordered_set<std::string> tried;
  std::size_t barren_batches = 0;
  for (std::size_t batch = 0; batch < config.max_batches && result.queries_used < config.query_budget; ++batch) {
    GenerateParams params{config.temperature, config.batch_size, config.edit_budget, mix_seed(config.seed, batch)};
    std::vector<std::string> candidates;
    try {
      candidates = generator.generate(example.text, params);
    } catch (const NoApplicableRules&) {
      break;
    }
    bool fresh = false;
    for (auto& c : candidates) {
      if (result.queries_used >= config.query_budget) break;
      if (!tried.insert(c).second) continue;
      fresh = true;
      ++result.queries_used;
      if (oracle.predict(c).label != example.label) {
        result.success = true;
        result.adversarial_text = std::move(c);
        return result;
      }
    }
    barren_batches = fresh ? 0 : barren_batches + 1;
    if (barren_batches >= 3) break;
  }
  return result;
}

}  // namespace

void AttackConfig::validate() const {
  if (batch_size < 1) throw ConfigError("must be at least 1", "batch_size");
  if (edit_budget < 1) throw ConfigError("must be at least 1", "edit_budget");
  if (!(perturbation_threshold > 0.0 && perturbation_threshold <= 1.0))
    throw ConfigError("must lie in (0, 1]", "perturbation_threshold");
  if (!(temperature > 0.0) || !std::isfinite(temperature)) throw ConfigError("must be positive", "temperature");
  if (max_batches < 1) throw ConfigError("must be at least 1", "max_batches");
}

std::string_view to_string(StrategyKind kind) noexcept {
  return kind == StrategyKind::Generator ? "generator" : "greedy_rules";
}

StrategyKind kind_of(const Strategy& strategy) noexcept {
  return std::holds_alternative<GeneratorStrategy>(strategy) ? StrategyKind::Generator : StrategyKind::GreedyRules;
}

AttackResult attack_example(const OraclePtr& oracle, const Strategy& strategy, const LabeledExample& example,
                            const AttackConfig& config) {
  config.validate();
  QueryLedger ledger;
  const OraclePtr metered = with_ledger(oracle, ledger);
  AttackResult result;
  if (config.query_budget == 0) {
    result.strategy = kind_of(strategy);
  } else if (const auto* g = std::get_if<GeneratorStrategy>(&strategy)) {
    if (!g->generator) throw ConfigError("generator strategy without a generator", "strategy");
    result = attack_with_generator(*metered, *g->generator, example, config);
  } else {
    const auto& greedy = std::get<GreedyRulesStrategy>(strategy);
    if (!greedy.bank) throw ConfigError("greedy strategy without a rule bank", "strategy");
    result = attack_greedy(*metered, *greedy.bank, example, config);
  }
  result.queries_used = static_cast<std::size_t>(ledger.count());
  if (result.success) result.edit_distance = token_levenshtein(example.text, *result.adversarial_text);
  return result;
}

EvalReport evaluate_attack(const OraclePtr& oracle, const Strategy& strategy, std::span<const LabeledExample> dataset,
                           const AttackConfig& config, const EvalOptions& options) {
  config.validate();
  if (dataset.empty()) throw DataError("cannot evaluate an attack on an empty dataset");
  const OraclePtr& precheck = options.precheck_oracle ? options.precheck_oracle : oracle;

  std::vector<std::optional<AttackResult>> slots(dataset.size());
  std::atomic<std::size_t> next{0};
  auto run_range = [&] {
    for (std::size_t i = next++; i < dataset.size(); i = next++) {
      const auto& ex = dataset[i];
      if (precheck->predict(ex.text).label != ex.label) continue;
      AttackConfig cfg = config;
      cfg.seed = mix_seed(config.seed, i);
      std::size_t extra = 0;
      if (cfg.count_initial_check && cfg.query_budget > 0) {
        cfg.query_budget -= 1;
        extra = 1;
      }
      AttackResult r = attack_example(oracle, strategy, ex, cfg);
      r.queries_used += extra;
      r.example_index = i;
      slots[i] = std::move(r);
    }
  };
  std::mutex error_mutex;
  std::exception_ptr error;
  auto work = [&] {
    try {
      run_range();
    } catch (...) {
      std::lock_guard lock(error_mutex);
      if (!error) error = std::current_exception();
      next = dataset.size();
    }
  };
  const std::size_t workers = std::clamp<std::size_t>(options.workers, 1, dataset.size());
  if (workers == 1) {
    work();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(work);
  }
  if (error) std::rethrow_exception(error);

  EvalReport report;
  double queries_success = 0.0;
  double queries_all = 0.0;
  for (auto& slot : slots) {
    if (!slot) {
      ++report.skipped;
      continue;
    }
    ++report.attempted;
    queries_all += static_cast<double>(slot->queries_used);
    if (slot->success) {
      ++report.successes;
      queries_success += static_cast<double>(slot->queries_used);
    }
    report.per_example.push_back(std::move(*slot));
  }
  if (report.attempted == 0) throw DataError("every example is misclassified before the attack; nothing to attack");
  report.asr = static_cast<double>(report.successes) / static_cast<double>(report.attempted);
  report.mean_queries_all = queries_all / static_cast<double>(report.attempted);
  if (report.successes > 0) report.mean_queries_success = queries_success / static_cast<double>(report.successes);
  return report;
}

std::vector<BudgetPoint> budget_curve(const OraclePtr& oracle, const Strategy& strategy,
                                      std::span<const LabeledExample> dataset, std::span<const std::size_t> budgets,
                                      const AttackConfig& config, const EvalOptions& options) {
  if (budgets.empty()) throw ConfigError("budget list is empty", "budgets");
  for (std::size_t i = 1; i < budgets.size(); ++i) {
    if (budgets[i] <= budgets[i - 1]) throw ConfigError("budgets must be strictly ascending", "budgets");
  }
  std::vector<BudgetPoint> curve;
  for (std::size_t b : budgets) {
    AttackConfig cfg = config;
    cfg.query_budget = b;
    curve.push_back({b, evaluate_attack(oracle, strategy, dataset, cfg, options).asr});
  }
  return curve;
}

void EvalReport::write_csv(std::ostream& out) const {
  csv::write_row(out, {"example", "strategy", "success", "queries_used", "edit_distance", "adversarial_text"});
  for (const auto& r : per_example) {
    csv::write_row(out, {std::to_string(r.example_index), std::string(to_string(r.strategy)), r.success ? "1" : "0",
                         std::to_string(r.queries_used), std::to_string(r.edit_distance),
                         r.adversarial_text.value_or("")});
  }
}

void EvalReport::write_summary_csv(std::ostream& out) const {
  csv::write_row(out, {"metric", "value"});
  csv::write_row(out, {"attempted", std::to_string(attempted)});
  csv::write_row(out, {"skipped", std::to_string(skipped)});
  csv::write_row(out, {"successes", std::to_string(successes)});
  csv::write_row(out, {"asr", csv::format_number(asr)});
  csv::write_row(out, {"mean_queries_success", csv::format_optional(mean_queries_success)});
  csv::write_row(out, {"mean_queries_all", csv::format_number(mean_queries_all)});
}

void EvalReport::write_summary_markdown(std::ostream& out, std::string_view title) const {
  out << "## " << title << "\n\n";
  out << "| attempted | skipped | successes | ASR | mean queries (successes) | mean queries (all) |\n";
  out << "|---|---|---|---|---|---|\n";
  out << "| " << attempted << " | " << skipped << " | " << successes << " | " << csv::format_number(asr, 4) << " | "
      << (mean_queries_success ? csv::format_number(*mean_queries_success, 2) : std::string("-")) << " | "
      << csv::format_number(mean_queries_all, 2) << " |\n";
}

void write_curve_csv(std::ostream& out, std::span<const BudgetPoint> curve) {
  csv::write_row(out, {"budget", "asr"});
  for (const auto& p : curve) csv::write_row(out, {std::to_string(p.budget), csv::format_number(p.asr)});
}

}  // namespace advtext
