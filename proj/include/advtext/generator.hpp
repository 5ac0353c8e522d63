#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "advtext/corpus.hpp"
#include "advtext/rules.hpp"

namespace advtext {

enum class Direction { Attack, Defense };

std::string_view to_string(Direction direction) noexcept;
Direction parse_direction(std::string_view name);

/// Per-source replacement probabilities fitted by maximum likelihood under a
/// per-token independence model. The mass left after summing a source's
/// target weights is the probability of leaving the token unchanged.
struct GeneratorModel {
  struct Target {
    std::string token;
    double weight = 0.0;
    RuleLevel level = RuleLevel::Word;

    friend bool operator==(const Target&, const Target&) = default;
  };

  RuleBank bank;
  /// Keyed by lowercased source token; targets sorted by token, all weights > 0.
  std::map<std::string, std::vector<Target>, std::less<>> weights;
  Direction direction = Direction::Attack;
  double default_temperature = 1.0;

  std::span<const Target> targets_for(std::string_view source) const;
  double weight(std::string_view source, std::string_view target) const;
  double keep_probability(std::string_view source) const;

  friend bool operator==(const GeneratorModel&, const GeneratorModel&) = default;
};

/// weight(w -> w_hat) = #(w replaced by w_hat) / #(w in sources), counted over
/// successful pairs and substitutions backed by a bank rule. The defense
/// direction swaps the roles of original and perturbed text.
GeneratorModel fit_generator(std::span<const AdversarialPair> pairs, const RuleBank& bank, Direction direction);

void save_generator(const GeneratorModel& model, const std::filesystem::path& path);
GeneratorModel load_generator(const std::filesystem::path& path);

struct GenerateParams {
  double temperature = 1.0;
  std::size_t n_candidates = 8;
  std::size_t edit_budget = 1;
  std::uint64_t seed = 0;
};

/// Victim-free candidate source shared by the rule sampler, the random-edit
/// baseline and remote sequence models.
class CandidateGenerator {
 public:
  virtual ~CandidateGenerator() = default;
  /// Throws NoApplicableRules when nothing can be proposed.
  virtual std::vector<std::string> generate(std::string_view text, const GenerateParams& params) const = 0;
};

using GeneratorPtr = std::shared_ptr<const CandidateGenerator>;

/// Samples edit sets with tempered probabilities p'(w_hat | w) ∝ p(w_hat | w)^(1/T)
/// (keep-unchanged mass included). Positions are drawn without replacement in
/// proportion to their tempered replacement mass; candidates come back
/// deduplicated, ordered by untempered model log-probability.
std::vector<std::string> generate(const GeneratorModel& model, std::string_view text, const GenerateParams& params);

class RuleSampler final : public CandidateGenerator {
 public:
  explicit RuleSampler(std::shared_ptr<const GeneratorModel> model) : model_(std::move(model)) {}

  std::vector<std::string> generate(std::string_view text, const GenerateParams& params) const override {
    return advtext::generate(*model_, text, params);
  }
  const GeneratorModel& model() const noexcept { return *model_; }

 private:
  std::shared_ptr<const GeneratorModel> model_;
};

/// Baseline: edit_budget random word positions, each hit by one random
/// character substitution.
class RandomEditGenerator final : public CandidateGenerator {
 public:
  std::vector<std::string> generate(std::string_view text, const GenerateParams& params) const override;
};

}  // namespace advtext
