#include "advtext/generator.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <set>
#include <unordered_set>

#include "advtext/align.hpp"
#include "advtext/error.hpp"
#include "advtext/random.hpp"
#include "advtext/tokenize.hpp"
#include "json.hpp"
#include "json_io.hpp"

namespace advtext {
namespace {

using nlohmann::json;

constexpr int kGeneratorFormatVersion = 1;
constexpr double kNegInf = -std::numeric_limits<double>::infinity();
constexpr double kScoreFloor = 1e-12;

double log_sum_exp(std::span<const double> xs) {
  double m = kNegInf;
  for (double x : xs) m = std::max(m, x);
  if (m == kNegInf) return kNegInf;
  double s = 0.0;
  for (double x : xs) s += std::exp(x - m);
  return m + std::log(s);
}

const SubstitutionRule* find_any_level(const RuleBank& bank, std::string_view source, std::string_view target) {
  const SubstitutionRule* best = nullptr;
  for (const auto& r : bank.rules_for(source)) {
    if (r.target == target && (!best || r.count > best->count)) best = &r;
  }
  return best;
}

struct Position {
  std::size_t index;
  std::span<const GeneratorModel::Target> targets;
  std::vector<double> log_q;  // tempered, targets only
  double log_mass;            // tempered log(1 - q_keep)
  double log_keep;            // untempered, floored
};

}  // namespace

std::string_view to_string(Direction direction) noexcept {
  return direction == Direction::Attack ? "attack" : "defense";
}

Direction parse_direction(std::string_view name) {
  if (name == "attack") return Direction::Attack;
  if (name == "defense") return Direction::Defense;
  throw ConfigError("unknown direction '" + std::string(name) + "' (expected attack or defense)", "direction");
}

std::span<const GeneratorModel::Target> GeneratorModel::targets_for(std::string_view source) const {
  auto it = weights.find(source);
  if (it == weights.end()) return {};
  return it->second;
}

double GeneratorModel::weight(std::string_view source, std::string_view target) const {
  for (const auto& t : targets_for(source)) {
    if (t.token == target) return t.weight;
  }
  return 0.0;
}

double GeneratorModel::keep_probability(std::string_view source) const {
  double mass = 0.0;
  for (const auto& t : targets_for(source)) mass += t.weight;
  return std::max(0.0, 1.0 - mass);
}

GeneratorModel fit_generator(std::span<const AdversarialPair> pairs, const RuleBank& bank, Direction direction) {
  if (pairs.empty()) throw DataError("cannot fit a generator on an empty pair stream");
  std::map<std::string, std::uint64_t> appearances;
  std::map<std::string, std::map<std::string, std::pair<std::uint64_t, RuleLevel>>> replaced;
  for (const auto& pair : pairs) {
    if (!pair.success) continue;
    const auto original = tokenize(pair.original.text, true);
    const auto perturbed = tokenize(pair.perturbed, true);
    const auto& sources = direction == Direction::Attack ? original : perturbed;
    for (const auto& t : sources.tokens) ++appearances[t];
    for (const Edit& e : align_pair(original, perturbed)) {
      if (e.kind != Edit::Kind::Substitute) continue;
      const SubstitutionRule* rule = find_any_level(bank, e.from, e.to);
      if (!rule) continue;
      auto& slot = direction == Direction::Attack ? replaced[e.from][e.to] : replaced[e.to][e.from];
      ++slot.first;
      slot.second = rule->level;
    }
  }
  GeneratorModel model;
  model.bank = bank;
  model.direction = direction;
  for (const auto& [source, targets] : replaced) {
    const double total = static_cast<double>(appearances[source]);
    auto& out = model.weights[source];
    for (const auto& [target, entry] : targets) {
      out.push_back({target, static_cast<double>(entry.first) / total, entry.second});
    }
  }
  return model;
}

void save_generator(const GeneratorModel& model, const std::filesystem::path& path) {
  json weights = json::array();
  for (const auto& [source, targets] : model.weights) {
    for (const auto& t : targets)
      weights.push_back({{"source", source},
                         {"target", t.token},
                         {"level", std::string(to_string(t.level))},
                         {"weight", t.weight}});
  }
  json doc = {{"version", kGeneratorFormatVersion},
              {"direction", std::string(to_string(model.direction))},
              {"default_temperature", model.default_temperature},
              {"bank", detail::bank_to_json(model.bank)},
              {"weights", weights}};
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write generator '" + path.string() + "'");
  out << doc.dump(1) << '\n';
}

GeneratorModel load_generator(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open generator '" + path.string() + "'");
  try {
    const json doc = json::parse(in);
    if (doc.at("version").get<int>() != kGeneratorFormatVersion)
      throw DataError("unsupported generator version " + doc.at("version").dump());
    GeneratorModel model;
    model.direction = parse_direction(doc.at("direction").get<std::string>());
    model.default_temperature = doc.at("default_temperature").get<double>();
    model.bank = detail::bank_from_json(doc.at("bank"));
    for (const auto& jw : doc.at("weights")) {
      const double w = jw.at("weight").get<double>();
      if (!(w > 0.0 && w <= 1.0)) throw DataError("generator weight outside (0, 1]");
      model.weights[jw.at("source").get<std::string>()].push_back(
          {jw.at("target").get<std::string>(), w, parse_rule_level(jw.at("level").get<std::string>())});
    }
    for (auto& [source, targets] : model.weights) {
      std::sort(targets.begin(), targets.end(), [](const auto& a, const auto& b) { return a.token < b.token; });
      double mass = 0.0;
      for (const auto& t : targets) mass += t.weight;
      if (mass > 1.0 + 1e-9) throw DataError("weights for source '" + source + "' sum above 1");
    }
    return model;
  } catch (const json::exception& e) {
    throw DataError("malformed generator file '" + path.string() + "': " + e.what());
  }
}

std::vector<std::string> generate(const GeneratorModel& model, std::string_view text, const GenerateParams& params) {
  if (!(params.temperature > 0.0) || !std::isfinite(params.temperature))
    throw ConfigError("temperature must be positive", "temperature");
  if (params.n_candidates < 1) throw ConfigError("must be at least 1", "n_candidates");
  if (params.edit_budget < 1) throw ConfigError("must be at least 1", "edit_budget");

  const auto tok = tokenize(text, false);
  const double inv_t = 1.0 / params.temperature;
  std::vector<Position> positions;
  for (std::size_t i = 0; i < tok.size(); ++i) {
    const std::string key = ascii_lower(tok.tokens[i]);
    auto targets = model.targets_for(key);
    if (targets.empty()) continue;
    const double keep = model.keep_probability(key);
    std::vector<double> a;
    a.reserve(targets.size() + 1);
    for (const auto& t : targets) a.push_back(std::log(t.weight) * inv_t);
    const double lse_targets = log_sum_exp(a);
    a.push_back(keep > 0.0 ? std::log(keep) * inv_t : kNegInf);
    const double lse_all = log_sum_exp(a);
    a.pop_back();
    Position p{i, targets, {}, lse_targets - lse_all, std::log(std::max(keep, kScoreFloor))};
    for (double x : a) p.log_q.push_back(x - lse_all);
    positions.push_back(std::move(p));
  }
  if (positions.empty()) throw NoApplicableRules();

  const std::size_t k = std::min(params.edit_budget, positions.size());
  const std::size_t max_draws = std::max<std::size_t>(64, 16 * params.n_candidates);
  Rng rng(params.seed);

  struct Candidate {
    std::string text;
    double log_prob;
    std::size_t order;
  };
  std::vector<Candidate> candidates;
  std::set<std::vector<std::pair<std::size_t, std::size_t>>> seen_sets;
  std::unordered_set<std::string> seen_texts;
  std::vector<std::pair<double, std::size_t>> keys(positions.size());

  for (std::size_t draw = 0; draw < max_draws && candidates.size() < params.n_candidates; ++draw) {
    // Gumbel-top-k: sampling positions without replacement by tempered mass.
    for (std::size_t p = 0; p < positions.size(); ++p) keys[p] = {positions[p].log_mass + rng.gumbel(), p};
    std::partial_sort(keys.begin(), keys.begin() + static_cast<std::ptrdiff_t>(k), keys.end(),
                      [](const auto& a, const auto& b) { return a.first > b.first; });
    std::vector<std::pair<std::size_t, std::size_t>> edit_set;
    for (std::size_t e = 0; e < k; ++e) {
      const Position& pos = positions[keys[e].second];
      std::size_t best = 0;
      double best_key = kNegInf;
      for (std::size_t t = 0; t < pos.log_q.size(); ++t) {
        const double g = pos.log_q[t] + rng.gumbel();
        if (g > best_key) {
          best_key = g;
          best = t;
        }
      }
      edit_set.emplace_back(keys[e].second, best);
    }
    std::sort(edit_set.begin(), edit_set.end());
    if (!seen_sets.insert(edit_set).second) continue;

    std::vector<std::pair<std::size_t, std::string>> replacements;
    std::vector<bool> edited(positions.size(), false);
    double log_prob = 0.0;
    for (const auto& [p, t] : edit_set) {
      const Position& pos = positions[p];
      replacements.emplace_back(pos.index, pos.targets[t].token);
      log_prob += std::log(std::max(pos.targets[t].weight, kScoreFloor));
      edited[p] = true;
    }
    for (std::size_t p = 0; p < positions.size(); ++p) {
      if (!edited[p]) log_prob += positions[p].log_keep;
    }
    std::string out = replace_tokens(tok, replacements);
    if (out == tok.raw || !seen_texts.insert(out).second) continue;
    candidates.push_back({std::move(out), log_prob, candidates.size()});
  }
  if (candidates.empty()) throw NoApplicableRules();

  std::stable_sort(candidates.begin(), candidates.end(),
                   [](const Candidate& a, const Candidate& b) { return a.log_prob > b.log_prob; });
  std::vector<std::string> texts;
  texts.reserve(candidates.size());
  for (auto& c : candidates) texts.push_back(std::move(c.text));
  return texts;
}

std::vector<std::string> RandomEditGenerator::generate(std::string_view text, const GenerateParams& params) const {
  if (params.n_candidates < 1) throw ConfigError("must be at least 1", "n_candidates");
  if (params.edit_budget < 1) throw ConfigError("must be at least 1", "edit_budget");
  static constexpr std::string_view kAlphabet = "abcdefghijklmnopqrstuvwxyz0123456789";
  const auto tok = tokenize(text, false);
  std::vector<std::size_t> words;
  for (std::size_t i = 0; i < tok.size(); ++i) {
    const auto cps = utf8_decode(tok.tokens[i]);
    if (!(cps.size() == 1 && is_peelable_punct(cps[0]))) words.push_back(i);
  }
  if (words.empty()) throw NoApplicableRules();
  const std::size_t k = std::min(params.edit_budget, words.size());
  Rng rng(params.seed);
  std::vector<std::string> out;
  std::unordered_set<std::string> seen;
  const std::size_t max_draws = std::max<std::size_t>(64, 16 * params.n_candidates);
  for (std::size_t draw = 0; draw < max_draws && out.size() < params.n_candidates; ++draw) {
    std::vector<std::size_t> chosen = words;
    rng.shuffle(chosen.begin(), chosen.end());
    chosen.resize(k);
    std::vector<std::pair<std::size_t, std::string>> replacements;
    for (std::size_t idx : chosen) {
      std::u32string cps = utf8_decode(tok.tokens[idx]);
      const auto at = static_cast<std::size_t>(rng.below(cps.size()));
      char32_t c;
      do {
        c = static_cast<char32_t>(kAlphabet[rng.below(kAlphabet.size())]);
      } while (c == cps[at]);
      cps[at] = c;
      replacements.emplace_back(idx, utf8_encode(cps));
    }
    std::string candidate = replace_tokens(tok, replacements);
    if (seen.insert(candidate).second) out.push_back(std::move(candidate));
  }
  return out;
}

}  // namespace advtext
