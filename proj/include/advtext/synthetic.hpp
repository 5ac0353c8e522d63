#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "advtext/attack.hpp"
#include "advtext/corpus.hpp"
#include "advtext/rules.hpp"
#include "advtext/victim.hpp"

/// Toy sentiment tasks over a shared pseudo-word vocabulary. Each task owns a
/// random subset of the polar words, so vocabularies overlap across tasks.
/// Perturbations (synonyms from the lexicon and digit-swap character
/// variants) are never seen in training.
namespace advtext::synthetic {

struct WorldConfig {
  std::uint64_t seed = 1;
  std::size_t polar_words = 24;       ///< per polarity
  std::size_t task_polar_words = 12;  ///< per polarity and task
  std::size_t filler_words = 60;
  std::size_t tasks = 4;
  std::size_t min_length = 10;
  std::size_t max_length = 14;
};

struct Task {
  std::string id;
  std::vector<std::string> negative;  ///< label 0
  std::vector<std::string> positive;  ///< label 1
};

struct World {
  WorldConfig config;
  std::vector<std::string> negative;
  std::vector<std::string> positive;
  std::vector<std::string> filler;
  std::vector<Task> tasks;
  SynonymLexicon lexicon;
  /// Every known perturbation of every vocabulary word (count 1, salience 0).
  RuleBank catalogue;
};

World make_world(const WorldConfig& config);

/// Balanced labels; a label-y sentence holds 2-3 polar words of polarity y,
/// at most one of the other polarity, and filler.
Dataset sample_dataset(const World& world, const Task& task, std::size_t n, std::uint64_t seed);

/// The "attack toolkit": catalogue rules rescored by their mean single-edit
/// confidence drop against a confidence-mode oracle.
RuleBank score_catalogue(const RuleBank& catalogue, const VictimOracle& oracle,
                         std::span<const LabeledExample> examples);

/// Greedy attack with `bank`; successful outcomes become pairs with stored
/// clean/adversarial confidences from `oracle`.
std::vector<AdversarialPair> attack_pairs(const OraclePtr& oracle, const RuleBank& bank,
                                          std::span<const LabeledExample> examples, const AttackConfig& config,
                                          const std::string& attack_name, const std::string& model_id);

struct SetupOptions {
  std::size_t train_size = 600;
  std::size_t pool_size = 400;  ///< sentences attacked to produce pairs
  std::size_t test_size = 200;
  BowConfig victim;
  AttackConfig toolkit;
};

/// Full cross-task setup: a victim, train/pool/test splits per task, plus
/// pair corpora and extracted banks for every task but the last (held out).
struct Setup {
  World world;
  std::vector<Dataset> train;
  std::vector<Dataset> pool;
  std::vector<Dataset> test;
  std::vector<std::shared_ptr<const BowClassifier>> victims;
  std::vector<std::vector<AdversarialPair>> pairs;
  std::vector<RuleBank> banks;
};

Setup build_setup(const WorldConfig& world_config, const SetupOptions& options);

}  // namespace advtext::synthetic
