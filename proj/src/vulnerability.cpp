#include "advtext/vulnerability.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "advtext/csv.hpp"
#include "advtext/error.hpp"

namespace advtext {

VulnerabilityProfile vulnerability_scores(const VictimOracle& oracle, const TokenizedText& text, ClassIndex y_true) {
  if (!oracle.provides_confidence()) throw DataError("vulnerability scoring requires a confidence-mode oracle");
  VulnerabilityProfile profile;
  profile.tokens = text.tokens;
  profile.y_true = y_true;
  const double base = confidence_of(oracle, text.raw, y_true);
  profile.scores.reserve(text.size());
  for (std::size_t i = 0; i < text.size(); ++i) {
    const std::string masked = replace_tokens(text, {{i, std::string(kMaskToken)}});
    profile.scores.push_back(base - confidence_of(oracle, masked, y_true));
  }
  return profile;
}

std::set<std::string> top_fraction(const VulnerabilityProfile& profile, double p) {
  const std::size_t n = profile.scores.size();
  if (n == 0) throw DataError("top_fraction of an empty profile");
  if (!(p > 0.0 && p <= 1.0)) throw DataError("fraction must lie in (0, 1]");
  // Guard against p * n landing a hair above an integer.
  const auto k = std::min(n, static_cast<std::size_t>(std::ceil(p * static_cast<double>(n) - 1e-9)));
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return profile.scores[a] > profile.scores[b]; });
  std::set<std::string> out;
  for (std::size_t i = 0; i < k; ++i) out.insert(profile.tokens[order[i]]);
  return out;
}

double jaccard(const std::set<std::string>& a, const std::set<std::string>& b) {
  if (a.empty() && b.empty()) throw DataError("jaccard of two empty sets is undefined");
  std::size_t inter = 0;
  for (const auto& s : a) inter += b.contains(s);
  const std::size_t uni = a.size() + b.size() - inter;
  return static_cast<double>(inter) / static_cast<double>(uni);
}

double hit_rate(std::span<const std::string> replaced, const std::set<std::string>& vulnerable) {
  if (replaced.empty()) throw DataError("hit_rate needs at least one replaced token");
  std::size_t hits = 0;
  for (const auto& t : replaced) hits += vulnerable.contains(t);
  return static_cast<double>(hits) / static_cast<double>(replaced.size());
}

double perturbation_rate(std::size_t original_tokens, const EditScript& script) {
  if (original_tokens == 0) throw DataError("perturbation rate of an empty original is undefined");
  return static_cast<double>(script.size()) / static_cast<double>(original_tokens);
}

double perturbation_rate(const TokenizedText& original, const TokenizedText& perturbed) {
  return perturbation_rate(original.size(), align_pair(original, perturbed));
}

double random_jaccard_baseline(double p) noexcept { return p / (2.0 - p); }

void write_profiles_csv(std::ostream& out, std::span<const VulnerabilityProfile> profiles) {
  csv::write_row(out, {"sentence_id", "position", "token", "score"});
  for (std::size_t s = 0; s < profiles.size(); ++s) {
    const auto& p = profiles[s];
    for (std::size_t i = 0; i < p.tokens.size(); ++i)
      csv::write_row(out, {std::to_string(s), std::to_string(i), p.tokens[i], csv::format_number(p.scores[i])});
  }
}

double binomial_upper_tail(std::size_t k, std::size_t n, double p) {
  if (!(p >= 0.0 && p <= 1.0)) throw DataError("binomial probability must lie in [0, 1]");
  if (k == 0) return 1.0;
  if (k > n) return 0.0;
  if (p == 0.0) return 0.0;
  if (p == 1.0) return 1.0;
  const double lp = std::log(p);
  const double lq = std::log1p(-p);
  const double ln = std::lgamma(static_cast<double>(n) + 1.0);
  double tail = 0.0;
  for (std::size_t i = k; i <= n; ++i) {
    const double di = static_cast<double>(i);
    const double lc = ln - std::lgamma(di + 1.0) - std::lgamma(static_cast<double>(n - i) + 1.0);
    tail += std::exp(lc + di * lp + static_cast<double>(n - i) * lq);
  }
  return std::min(tail, 1.0);
}

}  // namespace advtext
