#include "advtext/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "advtext/error.hpp"
#include "advtext/random.hpp"
#include "advtext/tokenize.hpp"

namespace advtext {
namespace {

// Symbol 0 marks sentence start padding; 1 is the unknown character.
constexpr char32_t kBos = 0;
constexpr char32_t kUnk = 1;

}  // namespace

std::size_t char_levenshtein(std::string_view a, std::string_view b) {
  return levenshtein(utf8_decode(a), utf8_decode(b));
}

std::size_t token_levenshtein(std::string_view a, std::string_view b) {
  return levenshtein(tokenize(a).tokens, tokenize(b).tokens);
}

CharNGramLM::CharNGramLM(std::size_t order) : order_(order) {
  if (order_ < 1) throw ConfigError("n-gram order must be at least 1", "order");
}

std::uint32_t CharNGramLM::symbol(char32_t c) const {
  auto it = vocab_.find(c);
  return it == vocab_.end() ? kUnk : it->second;
}

std::u32string CharNGramLM::to_symbols(std::string_view text) const {
  std::u32string out;
  for (char32_t c : utf8_decode(text)) out.push_back(symbol(c));
  return out;
}

void CharNGramLM::train(std::span<const std::string> corpus) {
  vocab_.clear();
  context_counts_.clear();
  ngram_counts_.clear();
  std::uint64_t h = 0xCBF29CE484222325ULL;
  for (const auto& line : corpus) {
    for (char32_t c : utf8_decode(line)) {
      if (!vocab_.contains(c)) vocab_.emplace(c, static_cast<std::uint32_t>(vocab_.size() + 2));
    }
    h = fnv1a64(line, fnv1a64("\n", h));
  }
  char buf[32];
  std::snprintf(buf, sizeof buf, "fnv1a64:%016llx", static_cast<unsigned long long>(h));
  corpus_id_ = buf;

  const std::size_t ctx_len = order_ - 1;
  for (const auto& line : corpus) {
    std::u32string padded(ctx_len, kBos);
    padded += to_symbols(line);
    for (std::size_t i = ctx_len; i < padded.size(); ++i) {
      std::u32string gram = padded.substr(i - ctx_len, order_);
      ++ngram_counts_[gram];
      gram.pop_back();
      ++context_counts_[gram];
    }
  }
}

double CharNGramLM::probability(std::u32string_view context, char32_t next) const {
  std::u32string ctx(context);
  const std::size_t ctx_len = order_ - 1;
  if (ctx.size() > ctx_len) ctx.erase(0, ctx.size() - ctx_len);
  if (ctx.size() < ctx_len) ctx.insert(0, ctx_len - ctx.size(), kBos);
  for (char32_t& c : ctx) {
    if (c != kBos) c = symbol(c);
  }
  const char32_t sym = symbol(next);
  auto cit = context_counts_.find(ctx);
  const double ctx_count = cit == context_counts_.end() ? 0.0 : static_cast<double>(cit->second);
  ctx.push_back(sym);
  auto git = ngram_counts_.find(ctx);
  const double gram_count = git == ngram_counts_.end() ? 0.0 : static_cast<double>(git->second);
  return (gram_count + 1.0) / (ctx_count + static_cast<double>(vocabulary_size()));
}

double CharNGramLM::perplexity(std::string_view text) const {
  const std::u32string chars = utf8_decode(text);
  if (chars.empty()) throw DataError("perplexity of empty text is undefined");
  const std::size_t ctx_len = order_ - 1;
  std::u32string padded(ctx_len, kBos);
  padded += to_symbols(text);
  const double v = static_cast<double>(vocabulary_size());
  double nll = 0.0;
  for (std::size_t i = ctx_len; i < padded.size(); ++i) {
    std::u32string gram = padded.substr(i - ctx_len, order_);
    auto git = ngram_counts_.find(gram);
    const double gram_count = git == ngram_counts_.end() ? 0.0 : static_cast<double>(git->second);
    gram.pop_back();
    auto cit = context_counts_.find(gram);
    const double ctx_count = cit == context_counts_.end() ? 0.0 : static_cast<double>(cit->second);
    nll -= std::log((gram_count + 1.0) / (ctx_count + v));
  }
  return std::exp(nll / static_cast<double>(chars.size()));
}

double ppl_increase(const CharNGramLM& lm, std::string_view original, std::string_view perturbed) {
  if (original.empty() || perturbed.empty()) throw DataError("ppl_increase requires non-empty texts");
  const double base = lm.perplexity(original);
  return (lm.perplexity(perturbed) - base) / base;
}

double similarity(std::string_view original, std::string_view perturbed) {
  const auto a = tokenize(original, true);
  const auto b = tokenize(perturbed, true);
  if (a.empty() || b.empty()) throw DataError("similarity requires non-empty texts");
  std::map<std::string_view, std::pair<double, double>> counts;
  for (const auto& t : a.tokens) counts[t].first += 1.0;
  for (const auto& t : b.tokens) counts[t].second += 1.0;
  double dot = 0.0;
  double na = 0.0;
  double nb = 0.0;
  for (const auto& [tok, c] : counts) {
    dot += c.first * c.second;
    na += c.first * c.first;
    nb += c.second * c.second;
  }
  return std::clamp(dot / std::sqrt(na * nb), 0.0, 1.0);
}

}  // namespace advtext
