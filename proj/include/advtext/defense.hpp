#pragma once

#include <map>
#include <ostream>
#include <string>
#include <string_view>

#include "advtext/attack.hpp"
#include "advtext/generator.hpp"
#include "advtext/rules.hpp"
#include "advtext/victim.hpp"

namespace advtext {

enum class TieBreak { HighestCount, HighestSalience };

TieBreak parse_tie_break(std::string_view name);

/// Token-level map from perturbed form back to its most plausible source.
class Cleaner {
 public:
  using Mapping = std::map<std::string, std::string, std::less<>>;

  Cleaner() = default;
  explicit Cleaner(Mapping mapping) : mapping_(std::move(mapping)) {}

  /// One left-to-right pass; each mapped token is replaced once, never re-mapped.
  std::string clean(std::string_view text) const;

  const Mapping& mapping() const noexcept { return mapping_; }

 private:
  Mapping mapping_;
};

/// Inverts every rule. Among sources sharing a target the winner has the
/// highest count (or salience); remaining ties go to the smaller source.
Cleaner build_cleaner(const RuleBank& bank, TieBreak tie_break = TieBreak::HighestCount);

/// Uses the argmax target of a defense-direction generator for each source.
Cleaner cleaner_from_generator(const GeneratorModel& model);

inline std::string clean(const Cleaner& cleaner, std::string_view text) { return cleaner.clean(text); }

/// Classifies clean(text) with the inner oracle.
OraclePtr defended_oracle(OraclePtr inner, Cleaner cleaner);

struct DefenseReport {
  EvalReport undefended;
  EvalReport defended;

  /// Rows of (metric, undefended, defended, relative change).
  void write_csv(std::ostream& out) const;
};

/// Both arms share seeds and the undefended correctness check, so they attempt
/// the same examples.
DefenseReport evaluate_defense(const OraclePtr& oracle, const Cleaner& cleaner, const Strategy& strategy,
                               std::span<const LabeledExample> dataset, const AttackConfig& config,
                               std::size_t workers = 1);

}  // namespace advtext
