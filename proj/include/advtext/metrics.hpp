#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace advtext {

/// Unit-cost edit distance over any random-access sequence.
template <class Seq>
std::size_t levenshtein(const Seq& a, const Seq& b) {
  const std::size_t n = a.size();
  const std::size_t m = b.size();
  std::vector<std::size_t> prev(m + 1);
  std::vector<std::size_t> curr(m + 1);
  for (std::size_t j = 0; j <= m; ++j) prev[j] = j;
  for (std::size_t i = 1; i <= n; ++i) {
    curr[0] = i;
    for (std::size_t j = 1; j <= m; ++j) {
      const std::size_t sub = prev[j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1);
      curr[j] = std::min({sub, prev[j] + 1, curr[j - 1] + 1});
    }
    std::swap(prev, curr);
  }
  return prev[m];
}

/// Levenshtein over Unicode code points.
std::size_t char_levenshtein(std::string_view a, std::string_view b);

/// Levenshtein over tokenize() output (case preserved).
std::size_t token_levenshtein(std::string_view a, std::string_view b);

/// Character n-gram model with add-one smoothing. Characters never seen in
/// training share one unknown symbol, so every context's next-symbol
/// distribution sums to 1 over (seen characters + unknown).
class CharNGramLM {
 public:
  explicit CharNGramLM(std::size_t order = 5);

  void train(std::span<const std::string> corpus);

  /// P(next | context) where context holds the preceding (order - 1) symbols.
  double probability(std::u32string_view context, char32_t next) const;

  /// exp of the mean negative log-probability per character.
  double perplexity(std::string_view text) const;

  std::size_t order() const noexcept { return order_; }
  std::size_t vocabulary_size() const noexcept { return vocab_.size() + 1; }
  const std::string& corpus_id() const noexcept { return corpus_id_; }

 private:
  std::uint32_t symbol(char32_t c) const;
  std::u32string to_symbols(std::string_view text) const;

  std::size_t order_;
  std::unordered_map<char32_t, std::uint32_t> vocab_;
  std::unordered_map<std::u32string, std::uint64_t> context_counts_;
  std::unordered_map<std::u32string, std::uint64_t> ngram_counts_;
  std::string corpus_id_;
};

/// (PPL(perturbed) - PPL(original)) / PPL(original)
double ppl_increase(const CharNGramLM& lm, std::string_view original, std::string_view perturbed);

/// Cosine of lowercased token-count vectors.
double similarity(std::string_view original, std::string_view perturbed);

/// External scorer slot: (original, perturbed) -> value.
using ScoreHook = std::function<double(std::string_view original, std::string_view perturbed)>;

}  // namespace advtext
