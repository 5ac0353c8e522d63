#include <gtest/gtest.h>

#include <algorithm>
#include <numeric>
#include <sstream>

#include "advtext/error.hpp"
#include "advtext/random.hpp"
#include "advtext/victim.hpp"
#include "advtext/vulnerability.hpp"
#include "testing/oracles.hpp"

using namespace advtext;
using testing_support::FunctionOracle;

namespace {

// Confidence of class 1 is 0.9, or 0.6 once the third token is masked.
OraclePtr masked_third() {
  return std::make_shared<FunctionOracle>([](std::string_view text) {
    const auto t = tokenize(text);
    return testing_support::binary(t.size() > 2 && t.tokens[2] == kMaskToken ? 0.6 : 0.9);
  });
}

VulnerabilityProfile profile(std::vector<std::string> tokens, std::vector<double> scores) {
  return {std::move(tokens), std::move(scores), 0};
}

}  // namespace

TEST(VulnerabilityScores, MaskingDrop) {
  QueryLedger ledger;
  const auto oracle = with_ledger(masked_third(), ledger);
  const auto p = vulnerability_scores(*oracle, tokenize("a b c d e f g"), 1);
  EXPECT_EQ(ledger.count(), 8u);
  ASSERT_EQ(p.scores.size(), 7u);
  EXPECT_NEAR(p.scores[2], 0.3, 1e-12);
  EXPECT_DOUBLE_EQ(p.scores[0], 0.0);
}

TEST(VulnerabilityScores, NeedsConfidence) {
  EXPECT_THROW(vulnerability_scores(*decision_only(masked_third()), tokenize("a b c"), 1), DataError);
}

TEST(TopFraction, SizeTiesAndDuplicates) {
  std::vector<std::string> toks;
  std::vector<double> scores;
  for (int i = 0; i < 10; ++i) {
    toks.push_back("t" + std::to_string(i));
    scores.push_back(i * 0.1);
  }
  EXPECT_EQ(top_fraction(profile(toks, scores), 0.2), (std::set<std::string>{"t9", "t8"}));
  EXPECT_EQ(top_fraction(profile(toks, scores), 1.0).size(), 10u);
  // Positions 1 and 3 tie at the boundary; position 1 wins.
  EXPECT_EQ(top_fraction(profile({"a", "b", "c", "d", "e"}, {0.9, 0.5, 0.1, 0.5, 0.0}), 0.4),
            (std::set<std::string>{"a", "b"}));
  // Duplicate strings collapse.
  EXPECT_EQ(top_fraction(profile({"x", "x", "y"}, {0.5, 0.4, 0.1}), 0.5), (std::set<std::string>{"x"}));
}

TEST(Jaccard, Values) {
  EXPECT_DOUBLE_EQ(jaccard({"a", "b"}, {"a", "b"}), 1.0);
  EXPECT_DOUBLE_EQ(jaccard({"a"}, {"b"}), 0.0);
  EXPECT_DOUBLE_EQ(jaccard({"a", "b", "c"}, {"b", "c", "d"}), 0.5);
  EXPECT_THROW(jaccard({}, {}), DataError);
}

TEST(JaccardProperty, SymmetricBounded) {
  Rng rng(1);
  for (int trial = 0; trial < 500; ++trial) {
    std::set<std::string> a;
    std::set<std::string> b;
    for (std::size_t i = 0; i < 1 + rng.below(6); ++i) a.insert(std::string(1, static_cast<char>('a' + rng.below(8))));
    for (std::size_t i = 0; i < rng.below(6); ++i) b.insert(std::string(1, static_cast<char>('a' + rng.below(8))));
    const double j = jaccard(a, b);
    EXPECT_DOUBLE_EQ(j, jaccard(b, a));
    EXPECT_GE(j, 0.0);
    EXPECT_LE(j, 1.0);
    EXPECT_DOUBLE_EQ(jaccard(a, a), 1.0);
  }
}

TEST(HitRate, Values) {
  const std::vector<std::string> ab{"a", "b"};
  EXPECT_DOUBLE_EQ(hit_rate(ab, {"a", "c"}), 0.5);
  EXPECT_DOUBLE_EQ(hit_rate(ab, {"a", "b", "z"}), 1.0);
  EXPECT_DOUBLE_EQ(hit_rate(ab, {"q"}), 0.0);
  EXPECT_THROW(hit_rate(std::vector<std::string>{}, {"a"}), DataError);
}

TEST(PerturbationRate, Values) {
  EXPECT_DOUBLE_EQ(perturbation_rate(tokenize("a b c d e f g h i j"), tokenize("x b c d y f g h i j")), 0.2);
  EXPECT_DOUBLE_EQ(perturbation_rate(tokenize("a b"), tokenize("a b")), 0.0);
  EXPECT_DOUBLE_EQ(perturbation_rate(tokenize("a b c d"), tokenize("a b d")), 0.25);
  EXPECT_THROW(perturbation_rate(tokenize(""), tokenize("a")), DataError);
}

TEST(RandomBaseline, ClosedFormAndSimulation) {
  EXPECT_NEAR(random_jaccard_baseline(0.2), 0.2 / 1.8, 1e-15);
  Rng rng(77);
  std::vector<int> ids(500);
  std::iota(ids.begin(), ids.end(), 0);
  double sum = 0.0;
  const int trials = 2000;
  for (int t = 0; t < trials; ++t) {
    std::set<int> a;
    std::set<int> b;
    rng.shuffle(ids.begin(), ids.end());
    a.insert(ids.begin(), ids.begin() + 100);
    rng.shuffle(ids.begin(), ids.end());
    b.insert(ids.begin(), ids.begin() + 100);
    std::size_t inter = 0;
    for (int x : a) inter += b.count(x);
    sum += static_cast<double>(inter) / static_cast<double>(200 - inter);
  }
  EXPECT_NEAR(sum / trials, random_jaccard_baseline(0.2), 0.01);
}

TEST(VulnerabilityProperty, OrderInvariantForUnigramVictim) {
  std::vector<LabeledExample> data;
  Rng rng(4);
  const std::vector<std::string> words{"red", "blue", "bad", "good", "cat", "dog", "sun", "rain"};
  for (int i = 0; i < 120; ++i) {
    std::vector<std::string> t;
    for (int k = 0; k < 6; ++k) t.push_back(words[rng.below(words.size())]);
    const bool pos = std::count(t.begin(), t.end(), "good") > std::count(t.begin(), t.end(), "bad");
    data.push_back({join_tokens(t), pos ? 1u : 0u, "t", "d"});
  }
  BowConfig cfg;
  cfg.hash_size = 1 << 12;
  cfg.use_bigrams = false;
  const auto model = train_bow_classifier(data, cfg, 2);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<std::string> t;
    for (int k = 0; k < 7; ++k) t.push_back(words[rng.below(words.size())]);
    std::vector<std::size_t> perm(t.size());
    std::iota(perm.begin(), perm.end(), 0);
    rng.shuffle(perm.begin(), perm.end());
    std::vector<std::string> shuffled;
    for (auto i : perm) shuffled.push_back(t[i]);
    const auto a = vulnerability_scores(model, tokenize(join_tokens(t)), 1);
    const auto b = vulnerability_scores(model, tokenize(join_tokens(shuffled)), 1);
    for (std::size_t k = 0; k < perm.size(); ++k) EXPECT_NEAR(b.scores[k], a.scores[perm[k]], 1e-12);
  }
}

TEST(BinomialTail, SmallCases) {
  EXPECT_DOUBLE_EQ(binomial_upper_tail(0, 5, 0.3), 1.0);
  EXPECT_NEAR(binomial_upper_tail(2, 2, 0.5), 0.25, 1e-12);
  EXPECT_NEAR(binomial_upper_tail(1, 3, 0.2), 1 - 0.8 * 0.8 * 0.8, 1e-12);
  EXPECT_EQ(binomial_upper_tail(4, 3, 0.2), 0.0);
}

TEST(ProfilesCsv, Rows) {
  std::ostringstream out;
  const std::vector<VulnerabilityProfile> ps{profile({"a", "b"}, {0.5, -0.25})};
  write_profiles_csv(out, ps);
  EXPECT_EQ(out.str(), "sentence_id,position,token,score\n0,0,a,0.500000\n0,1,b,-0.250000\n");
}
