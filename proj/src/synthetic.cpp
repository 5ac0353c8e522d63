#include "advtext/synthetic.hpp"

#include <algorithm>
#include <array>
#include <map>
#include <set>

#include "advtext/error.hpp"
#include "advtext/random.hpp"
#include "advtext/tokenize.hpp"

namespace advtext::synthetic {
namespace {

constexpr std::string_view kConsonants = "bdfgklmnprstvz";
constexpr std::string_view kVowels = "aeiou";

std::string pseudo_word(Rng& rng) {
  std::string word;
  const std::size_t syllables = 2 + rng.below(2);
  for (std::size_t s = 0; s < syllables; ++s) {
    word += kConsonants[rng.below(kConsonants.size())];
    word += kVowels[rng.below(kVowels.size())];
  }
  return word;
}

std::vector<std::string> fresh_words(Rng& rng, std::size_t n, std::set<std::string>& used) {
  std::vector<std::string> words;
  while (words.size() < n) {
    auto w = pseudo_word(rng);
    if (used.insert(w).second) words.push_back(std::move(w));
  }
  return words;
}

char digit_for(char c) {
  switch (c) {
    case 'a': return '4';
    case 'e': return '3';
    case 'i': return '1';
    case 'o': return '0';
    case 's': return '5';
    case 't': return '7';
    case 'b': return '8';
    case 'g': return '9';
    default: return 0;
  }
}

// Interior digit swaps first, then a doubled letter; all within two edits.
std::vector<std::string> char_variants(const std::string& word, std::size_t n, const std::set<std::string>& used) {
  std::vector<std::string> out;
  auto offer = [&](std::string v) {
    if (out.size() < n && v != word && !used.contains(v) && std::find(out.begin(), out.end(), v) == out.end())
      out.push_back(std::move(v));
  };
  for (std::size_t i = 1; i + 1 < word.size(); ++i) {
    if (char d = digit_for(word[i])) {
      std::string v = word;
      v[i] = d;
      offer(std::move(v));
    }
  }
  for (std::size_t i = 1; i < word.size(); ++i) {
    std::string v = word;
    v.insert(i, 1, word[i]);
    offer(std::move(v));
  }
  return out;
}

std::vector<std::string> pick(Rng& rng, const std::vector<std::string>& from, std::size_t k) {
  std::vector<std::string> copy = from;
  rng.shuffle(copy.begin(), copy.end());
  copy.resize(std::min(k, copy.size()));
  std::sort(copy.begin(), copy.end());
  return copy;
}

}  // namespace

World make_world(const WorldConfig& config) {
  if (config.polar_words == 0 || config.task_polar_words == 0 || config.task_polar_words > config.polar_words)
    throw ConfigError("task_polar_words must be in [1, polar_words]", "task_polar_words");
  if (config.tasks == 0) throw ConfigError("at least one task is required", "tasks");
  if (config.min_length < 4 || config.max_length < config.min_length)
    throw ConfigError("sentence length range is invalid", "min_length");

  World world;
  world.config = config;
  Rng rng(mix_seed(config.seed, 0x776f726c64ULL));
  std::set<std::string> used;
  world.negative = fresh_words(rng, config.polar_words, used);
  world.positive = fresh_words(rng, config.polar_words, used);
  world.filler = fresh_words(rng, config.filler_words, used);

  SynonymLexicon::Entries entries;
  std::vector<SubstitutionRule> rules;
  std::vector<std::string> vocabulary;
  for (const auto* group : {&world.negative, &world.positive, &world.filler})
    vocabulary.insert(vocabulary.end(), group->begin(), group->end());
  for (const auto& word : vocabulary) {
    auto synonyms = fresh_words(rng, 2, used);
    auto& own = entries[word];
    for (const auto& s : synonyms) {
      own.insert(s);
      entries[s].insert(word);
      for (const auto& other : synonyms)
        if (other != s) entries[s].insert(other);
      rules.push_back({word, s, RuleLevel::Word, 1, 0.0, {}});
    }
  }
  for (const auto& word : vocabulary) {
    for (auto& v : char_variants(word, 2, used)) {
      used.insert(v);
      rules.push_back({word, std::move(v), RuleLevel::Char, 1, 0.0, {}});
    }
  }
  world.lexicon = SynonymLexicon(std::move(entries));
  world.catalogue = RuleBank(world.lexicon.id(), std::move(rules));

  for (std::size_t t = 0; t < config.tasks; ++t) {
    Rng task_rng(mix_seed(config.seed, 0x7461736bULL + t));
    Task task;
    task.id = "task" + std::to_string(t + 1);
    task.negative = pick(task_rng, world.negative, config.task_polar_words);
    task.positive = pick(task_rng, world.positive, config.task_polar_words);
    world.tasks.push_back(std::move(task));
  }
  return world;
}

Dataset sample_dataset(const World& world, const Task& task, std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  Dataset dataset;
  dataset.id = task.id;
  dataset.num_classes = 2;
  const auto& cfg = world.config;
  for (std::size_t i = 0; i < n; ++i) {
    const ClassIndex label = i % 2;
    const auto& own = label == 1 ? task.positive : task.negative;
    const auto& other = label == 1 ? task.negative : task.positive;
    const std::size_t length = cfg.min_length + rng.below(cfg.max_length - cfg.min_length + 1);
    const std::size_t n_own = 2 + rng.below(2);
    const std::size_t n_other = rng.below(2);
    std::vector<std::string> tokens;
    for (std::size_t k = 0; k < n_own; ++k) tokens.push_back(own[rng.below(own.size())]);
    for (std::size_t k = 0; k < n_other; ++k) tokens.push_back(other[rng.below(other.size())]);
    while (tokens.size() < length) tokens.push_back(world.filler[rng.below(world.filler.size())]);
    rng.shuffle(tokens.begin(), tokens.end());
    dataset.examples.push_back({join_tokens(tokens), label, task.id, task.id});
  }
  return dataset;
}

RuleBank score_catalogue(const RuleBank& catalogue, const VictimOracle& oracle,
                         std::span<const LabeledExample> examples) {
  std::map<const SubstitutionRule*, std::uint64_t> counts;
  std::map<const SubstitutionRule*, double> totals;
  for (const auto& ex : examples) {
    const auto tok = tokenize(ex.text);
    const double base = confidence_of(oracle, ex.text, ex.label);
    for (std::size_t i = 0; i < tok.tokens.size(); ++i) {
      for (const auto& rule : catalogue.rules_for(tok.tokens[i])) {
        const auto edited = replace_tokens(tok, {{i, rule.target}});
        totals[&rule] += base - confidence_of(oracle, edited, ex.label);
        ++counts[&rule];
      }
    }
  }
  std::vector<SubstitutionRule> rules;
  for (const auto& rule : catalogue.rules()) {
    SubstitutionRule r = rule;
    if (auto it = counts.find(&rule); it != counts.end()) r.salience = totals[&rule] / static_cast<double>(it->second);
    rules.push_back(std::move(r));
  }
  return RuleBank(catalogue.lexicon_id(), std::move(rules));
}

std::vector<AdversarialPair> attack_pairs(const OraclePtr& oracle, const RuleBank& bank,
                                          std::span<const LabeledExample> examples, const AttackConfig& config,
                                          const std::string& attack_name, const std::string& model_id) {
  const Strategy strategy = GreedyRulesStrategy{std::make_shared<const RuleBank>(bank)};
  const auto report = evaluate_attack(oracle, strategy, examples, config);
  std::vector<AdversarialPair> pairs;
  for (const auto& r : report.per_example) {
    if (!r.success) continue;
    const auto& ex = examples[r.example_index];
    AdversarialPair p;
    p.original = ex;
    p.perturbed = *r.adversarial_text;
    p.attack_method = attack_name;
    p.victim_model_id = model_id;
    p.success = true;
    p.orig_conf = confidence_of(*oracle, ex.text, ex.label);
    p.adv_conf = confidence_of(*oracle, p.perturbed, ex.label);
    pairs.push_back(std::move(p));
  }
  return pairs;
}

Setup build_setup(const WorldConfig& world_config, const SetupOptions& options) {
  Setup setup;
  setup.world = make_world(world_config);
  const auto& world = setup.world;
  for (std::size_t t = 0; t < world.tasks.size(); ++t) {
    const auto& task = world.tasks[t];
    const std::uint64_t base = mix_seed(world_config.seed, 1000 + t);
    setup.train.push_back(sample_dataset(world, task, options.train_size, mix_seed(base, 1)));
    setup.pool.push_back(sample_dataset(world, task, options.pool_size, mix_seed(base, 2)));
    setup.test.push_back(sample_dataset(world, task, options.test_size, mix_seed(base, 3)));
    BowConfig vc = options.victim;
    vc.seed = mix_seed(base, 4);
    setup.victims.push_back(std::make_shared<const BowClassifier>(
        train_bow_classifier(setup.train.back().examples, vc, 2, "bow-" + task.id)));
  }
  for (std::size_t t = 0; t + 1 < world.tasks.size(); ++t) {
    const auto& task = world.tasks[t];
    const auto& victim = setup.victims[t];
    const auto scored = score_catalogue(world.catalogue, *victim, setup.pool[t].examples);
    AttackConfig toolkit = options.toolkit;
    toolkit.seed = mix_seed(world_config.seed, 2000 + t);
    setup.pairs.push_back(attack_pairs(victim, scored, setup.pool[t].examples, toolkit, "toolkit", victim->id()));
    OracleMap oracles{{task.id, victim}};
    setup.banks.push_back(extract_rules(setup.pairs.back(), oracles, world.lexicon));
  }
  return setup;
}

}  // namespace advtext::synthetic
