#pragma once

#include <ostream>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "advtext/align.hpp"
#include "advtext/corpus.hpp"
#include "advtext/tokenize.hpp"
#include "advtext/victim.hpp"

namespace advtext {

struct VulnerabilityProfile {
  std::vector<std::string> tokens;
  /// conf(y | x) - conf(y | x with token i masked); may be negative.
  std::vector<double> scores;
  ClassIndex y_true = 0;
};

/// Masks each token in turn with kMaskToken. Makes exactly size() + 1 oracle
/// calls. Requires a confidence-mode oracle.
VulnerabilityProfile vulnerability_scores(const VictimOracle& oracle, const TokenizedText& text, ClassIndex y_true);

/// Token strings of the ceil(p * n) highest-scoring positions; ties go to the
/// earlier position.
std::set<std::string> top_fraction(const VulnerabilityProfile& profile, double p);

double jaccard(const std::set<std::string>& a, const std::set<std::string>& b);

/// Fraction of replaced occurrences whose token lies in `vulnerable`.
double hit_rate(std::span<const std::string> replaced, const std::set<std::string>& vulnerable);

/// Edited token positions over original token count.
double perturbation_rate(const TokenizedText& original, const TokenizedText& perturbed);
double perturbation_rate(std::size_t original_tokens, const EditScript& script);

/// Closed-form mean Jaccard of two independent uniformly random p-fraction
/// subsets in the large-vocabulary limit: p / (2 - p).
double random_jaccard_baseline(double p) noexcept;

/// P(X >= k) for X ~ Binomial(n, p).
double binomial_upper_tail(std::size_t k, std::size_t n, double p);

/// One row per token: sentence_id, position, token, score.
void write_profiles_csv(std::ostream& out, std::span<const VulnerabilityProfile> profiles);

}  // namespace advtext
