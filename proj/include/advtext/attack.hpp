#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "advtext/corpus.hpp"
#include "advtext/generator.hpp"
#include "advtext/rules.hpp"
#include "advtext/victim.hpp"

namespace advtext {

struct AttackConfig {
  std::size_t query_budget = 100;
  std::size_t batch_size = 8;
  std::size_t edit_budget = 3;
  double perturbation_threshold = 0.25;
  double temperature = 1.0;
  std::uint64_t seed = 0;
  /// Charge the clean-example correctness check against the budget.
  bool count_initial_check = false;
  /// Upper bound on generator batches per example.
  std::size_t max_batches = 256;

  /// Throws ConfigError naming the offending field.
  void validate() const;
};

enum class StrategyKind { Generator, GreedyRules };

std::string_view to_string(StrategyKind kind) noexcept;

/// Feedback-free candidates, queried in order until the label flips.
struct GeneratorStrategy {
  GeneratorPtr generator;
};

/// Substitutes tokens one at a time in descending best-rule salience.
struct GreedyRulesStrategy {
  std::shared_ptr<const RuleBank> bank;
};

using Strategy = std::variant<GeneratorStrategy, GreedyRulesStrategy>;

StrategyKind kind_of(const Strategy& strategy) noexcept;

struct AttackResult {
  std::size_t example_index = 0;
  bool success = false;
  std::size_t queries_used = 0;
  std::optional<std::string> adversarial_text;
  /// Token-level Levenshtein between the original and adversarial text; 0 on failure.
  std::size_t edit_distance = 0;
  StrategyKind strategy = StrategyKind::Generator;
};

struct EvalReport {
  std::size_t attempted = 0;
  std::size_t skipped = 0;
  std::size_t successes = 0;
  double asr = 0.0;
  /// Mean over successful examples; absent when nothing succeeded.
  std::optional<double> mean_queries_success;
  double mean_queries_all = 0.0;
  /// Attempted examples in dataset order.
  std::vector<AttackResult> per_example;

  void write_csv(std::ostream& out) const;
  void write_summary_csv(std::ostream& out) const;
  void write_summary_markdown(std::ostream& out, std::string_view title) const;
};

/// Runs one attack. The caller guarantees the example is classified correctly;
/// queries_used counts only the calls this function makes.
AttackResult attack_example(const OraclePtr& oracle, const Strategy& strategy, const LabeledExample& example,
                            const AttackConfig& config);

struct EvalOptions {
  std::size_t workers = 1;
  /// Oracle used for the uncounted correctness check; defaults to the attacked oracle.
  OraclePtr precheck_oracle;
};

/// Examples the oracle already gets wrong are skipped. Example i is attacked
/// with seed mix_seed(config.seed, i), so results do not depend on workers.
EvalReport evaluate_attack(const OraclePtr& oracle, const Strategy& strategy, std::span<const LabeledExample> dataset,
                           const AttackConfig& config, const EvalOptions& options = {});

struct BudgetPoint {
  std::size_t budget;
  double asr;
};

std::vector<BudgetPoint> budget_curve(const OraclePtr& oracle, const Strategy& strategy,
                                      std::span<const LabeledExample> dataset, std::span<const std::size_t> budgets,
                                      const AttackConfig& config, const EvalOptions& options = {});

void write_curve_csv(std::ostream& out, std::span<const BudgetPoint> curve);

}  // namespace advtext
