#include "advtext/defense.hpp"

#include <cmath>

#include "advtext/csv.hpp"
#include "advtext/error.hpp"
#include "advtext/tokenize.hpp"

namespace advtext {
namespace {

class CleaningOracle final : public VictimOracle {
 public:
  CleaningOracle(OraclePtr inner, Cleaner cleaner) : inner_(std::move(inner)), cleaner_(std::move(cleaner)) {}

  Prediction predict(std::string_view text) const override { return inner_->predict(cleaner_.clean(text)); }
  bool provides_confidence() const noexcept override { return inner_->provides_confidence(); }

 private:
  OraclePtr inner_;
  Cleaner cleaner_;
};

}  // namespace

TieBreak parse_tie_break(std::string_view name) {
  if (name == "highest_count") return TieBreak::HighestCount;
  if (name == "highest_salience") return TieBreak::HighestSalience;
  throw ConfigError("unknown tie break '" + std::string(name) + "'", "tie_break");
}

std::string Cleaner::clean(std::string_view text) const {
  const auto tok = tokenize(text, false);
  std::vector<std::pair<std::size_t, std::string>> replacements;
  for (std::size_t i = 0; i < tok.size(); ++i) {
    auto it = mapping_.find(ascii_lower(tok.tokens[i]));
    if (it != mapping_.end()) replacements.emplace_back(i, it->second);
  }
  if (replacements.empty()) return std::string(text);
  return replace_tokens(tok, replacements);
}

Cleaner build_cleaner(const RuleBank& bank, TieBreak tie_break) {
  if (bank.empty()) throw DataError("cannot build a cleaner from an empty rule bank");
  std::map<std::string, const SubstitutionRule*, std::less<>> best;
  auto better = [&](const SubstitutionRule& a, const SubstitutionRule& b) {
    if (tie_break == TieBreak::HighestCount) {
      if (a.count != b.count) return a.count > b.count;
    } else if (a.salience != b.salience) {
      return a.salience > b.salience;
    }
    return a.source < b.source;
  };
  for (const auto& r : bank.rules()) {
    auto [it, inserted] = best.try_emplace(r.target, &r);
    if (!inserted && better(r, *it->second)) it->second = &r;
  }
  Cleaner::Mapping mapping;
  for (const auto& [target, rule] : best) mapping.emplace(target, rule->source);
  return Cleaner(std::move(mapping));
}

Cleaner cleaner_from_generator(const GeneratorModel& model) {
  if (model.direction != Direction::Defense) throw ConfigError("generator is not fitted in the defense direction", "direction");
  Cleaner::Mapping mapping;
  for (const auto& [source, targets] : model.weights) {
    const GeneratorModel::Target* best = nullptr;
    for (const auto& t : targets) {
      if (!best || t.weight > best->weight) best = &t;
    }
    if (best) mapping.emplace(source, best->token);
  }
  return Cleaner(std::move(mapping));
}

OraclePtr defended_oracle(OraclePtr inner, Cleaner cleaner) {
  return std::make_shared<CleaningOracle>(std::move(inner), std::move(cleaner));
}

DefenseReport evaluate_defense(const OraclePtr& oracle, const Cleaner& cleaner, const Strategy& strategy,
                               std::span<const LabeledExample> dataset, const AttackConfig& config,
                               std::size_t workers) {
  DefenseReport report;
  report.undefended = evaluate_attack(oracle, strategy, dataset, config, {.workers = workers, .precheck_oracle = oracle});
  report.defended = evaluate_attack(defended_oracle(oracle, cleaner), strategy, dataset, config,
                                    {.workers = workers, .precheck_oracle = oracle});
  return report;
}

void DefenseReport::write_csv(std::ostream& out) const {
  csv::write_row(out, {"metric", "undefended", "defended", "relative_change"});
  auto row = [&](const char* name, std::optional<double> u, std::optional<double> d) {
    std::optional<double> rel;
    if (u && d && *u != 0.0) rel = (*d - *u) / *u;
    csv::write_row(out, {name, csv::format_optional(u), csv::format_optional(d), csv::format_optional(rel)});
  };
  row("asr", undefended.asr, defended.asr);
  row("mean_queries_success", undefended.mean_queries_success, defended.mean_queries_success);
  row("mean_queries_all", undefended.mean_queries_all, defended.mean_queries_all);
  row("attempted", static_cast<double>(undefended.attempted), static_cast<double>(defended.attempted));
  row("skipped", static_cast<double>(undefended.skipped), static_cast<double>(defended.skipped));
}

}  // namespace advtext
