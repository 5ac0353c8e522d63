#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <functional>
#include <map>
#include <set>
#include <string>
#include <string_view>
#include <tuple>
#include <vector>

#include "advtext/corpus.hpp"
#include "advtext/random.hpp"
#include "advtext/rules.hpp"
#include "advtext/tokenize.hpp"
#include "advtext/victim.hpp"

namespace testing_support {

/// Oracle backed by an arbitrary text -> probability-vector function.
class FunctionOracle final : public advtext::VictimOracle {
 public:
  using Fn = std::function<Eigen::VectorXd(std::string_view)>;
  explicit FunctionOracle(Fn fn, bool confidence = true) : fn_(std::move(fn)), confidence_(confidence) {}

  advtext::Prediction predict(std::string_view text) const override {
    auto p = advtext::Prediction::from_confidence(fn_(text));
    if (!confidence_) p.confidence.reset();
    return p;
  }
  bool provides_confidence() const noexcept override { return confidence_; }

 private:
  Fn fn_;
  bool confidence_;
};

inline Eigen::VectorXd binary(double p1) {
  Eigen::VectorXd v(2);
  v << 1.0 - p1, p1;
  return v;
}

/// Positive-class probability rises with each occurrence of `trigger`.
inline advtext::OraclePtr keyword_oracle(std::string trigger, double per_hit = 0.4, double base = 0.1) {
  return std::make_shared<FunctionOracle>([trigger, per_hit, base](std::string_view text) {
    const auto tok = advtext::tokenize(text);
    double p = base;
    for (const auto& t : tok.tokens)
      if (t == trigger) p += per_hit;
    return binary(std::min(p, 0.99));
  });
}

/// Full-matrix edit distance, written independently of the library.
template <class Seq>
std::size_t reference_levenshtein(const Seq& a, const Seq& b) {
  std::vector<std::vector<std::size_t>> d(a.size() + 1, std::vector<std::size_t>(b.size() + 1));
  for (std::size_t i = 0; i <= a.size(); ++i) d[i][0] = i;
  for (std::size_t j = 0; j <= b.size(); ++j) d[0][j] = j;
  for (std::size_t i = 1; i <= a.size(); ++i)
    for (std::size_t j = 1; j <= b.size(); ++j)
      d[i][j] = std::min({d[i - 1][j] + 1, d[i][j - 1] + 1, d[i - 1][j - 1] + (a[i - 1] == b[j - 1] ? 0u : 1u)});
  return d[a.size()][b.size()];
}

/// Exponential recursion without memoization; only for tiny inputs.
inline std::size_t naive_levenshtein(std::string_view a, std::string_view b) {
  if (a.empty()) return b.size();
  if (b.empty()) return a.size();
  const std::size_t sub = naive_levenshtein(a.substr(1), b.substr(1)) + (a[0] == b[0] ? 0 : 1);
  return std::min({sub, naive_levenshtein(a.substr(1), b) + 1, naive_levenshtein(a, b.substr(1)) + 1});
}

/// Pairwise-difference Gini.
inline double reference_gini(const std::vector<double>& x) {
  if (x.empty()) return 0.0;
  double sum = 0.0;
  double diff = 0.0;
  for (double a : x) {
    sum += a;
    for (double b : x) diff += std::abs(a - b);
  }
  if (sum == 0.0) return 0.0;
  const double n = static_cast<double>(x.size());
  return diff / (2.0 * n * n * (sum / n));
}

struct ReferenceRule {
  std::string source;
  std::string target;
  advtext::RuleLevel level;
  std::uint64_t count = 0;
  double delta_sum = 0.0;
};

/// Nested-loop rule extraction over equal-length (substitution-only) pairs.
/// Pairs with stored confidences use them; the others query `oracles`.
inline std::vector<ReferenceRule> reference_extract(const std::vector<advtext::AdversarialPair>& pairs,
                                                   const advtext::OracleMap& oracles,
                                                   const advtext::SynonymLexicon& lexicon, std::size_t char_edit_max) {
  std::vector<ReferenceRule> out;
  for (const auto& pair : pairs) {
    const auto a = advtext::tokenize(pair.original.text, true).tokens;
    const auto b = advtext::tokenize(pair.perturbed, true).tokens;
    if (a.size() != b.size()) continue;
    double before = 0.0;
    double after = 0.0;
    if (pair.orig_conf && pair.adv_conf) {
      if (!pair.success) continue;
      before = *pair.orig_conf;
      after = *pair.adv_conf;
    } else {
      const auto& oracle = *oracles.at(pair.original.task_id);
      const auto clean = oracle.predict(pair.original.text);
      const auto adv = oracle.predict(pair.perturbed);
      if (adv.label == pair.original.label) continue;
      before = (*clean.confidence)[static_cast<Eigen::Index>(pair.original.label)];
      after = (*adv.confidence)[static_cast<Eigen::Index>(pair.original.label)];
    }
    for (std::size_t i = 0; i < a.size(); ++i) {
      if (a[i] == b[i]) continue;
      const auto& syn_w = lexicon.synonyms(a[i]);
      std::set<std::string> widened = lexicon.synonyms(b[i]);
      widened.insert(b[i]);
      bool word = false;
      for (const auto& s : widened)
        if (syn_w.count(s)) word = true;
      advtext::RuleLevel level = advtext::RuleLevel::Word;
      if (!word) {
        const auto ca = advtext::utf8_decode(a[i]);
        const auto cb = advtext::utf8_decode(b[i]);
        if (reference_levenshtein(ca, cb) > char_edit_max) continue;
        level = advtext::RuleLevel::Char;
      }
      bool found = false;
      for (auto& r : out) {
        if (r.source == a[i] && r.target == b[i] && r.level == level) {
          r.count += 1;
          r.delta_sum += before - after;
          found = true;
        }
      }
      if (!found) out.push_back({a[i], b[i], level, 1, before - after});
    }
  }
  return out;
}

inline std::string random_word(advtext::Rng& rng, std::string_view alphabet, std::size_t min_len,
                               std::size_t max_len) {
  const std::size_t len = min_len + rng.below(max_len - min_len + 1);
  std::string s;
  for (std::size_t i = 0; i < len; ++i) s += alphabet[rng.below(alphabet.size())];
  return s;
}

}  // namespace testing_support
