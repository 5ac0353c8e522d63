#include <gtest/gtest.h>

#include <functional>
#include <optional>

#include "advtext/align.hpp"
#include "advtext/random.hpp"
#include "testing/oracles.hpp"

using namespace advtext;
using Tokens = std::vector<std::string>;

namespace {

// Move codes in tie-break order: substitute < delete < insert < match.
enum Move : int { kSub = 0, kDel = 1, kIns = 2, kMatch = 3 };

struct Path {
  EditScript script;
  std::vector<int> moves;
};

// Every alignment path from (i, j) to the end, matches only on equal tokens.
void enumerate(const Tokens& a, const Tokens& b, std::size_t i, std::size_t j, Path& current,
               std::vector<Path>& out) {
  if (i == a.size() && j == b.size()) {
    out.push_back(current);
    return;
  }
  auto step = [&](int move, std::optional<Edit> edit, std::size_t ni, std::size_t nj) {
    current.moves.push_back(move);
    if (edit) current.script.push_back(*edit);
    enumerate(a, b, ni, nj, current, out);
    if (edit) current.script.pop_back();
    current.moves.pop_back();
  };
  if (i < a.size() && j < b.size()) {
    if (a[i] == b[j]) {
      step(kMatch, std::nullopt, i + 1, j + 1);
    } else {
      step(kSub, Edit::substitute(i, a[i], b[j]), i + 1, j + 1);
    }
  }
  if (i < a.size()) step(kDel, Edit::erase(i, a[i]), i + 1, j);
  if (j < b.size()) step(kIns, Edit::insert(i, b[j]), i, j + 1);
}

Tokens random_tokens(Rng& rng, std::size_t max_len) {
  Tokens t(rng.below(max_len + 1));
  for (auto& s : t) s = std::string(1, static_cast<char>('a' + rng.below(4)));
  return t;
}

}  // namespace

TEST(Align, SingleSubstitution) {
  EXPECT_EQ(align_tokens({"good", "movie"}, {"g00d", "movie"}), (EditScript{Edit::substitute(0, "good", "g00d")}));
}

TEST(Align, IdenticalIsEmpty) { EXPECT_TRUE(align_tokens({"a", "b"}, {"a", "b"}).empty()); }

TEST(Align, Deletion) { EXPECT_EQ(align_tokens({"a", "b", "c"}, {"a", "c"}), (EditScript{Edit::erase(1, "b")})); }

TEST(Align, Insertion) {
  EXPECT_EQ(align_tokens({"a", "c"}, {"a", "b", "c"}), (EditScript{Edit::insert(1, "b")}));
  EXPECT_EQ(align_tokens({}, {"x"}), (EditScript{Edit::insert(0, "x")}));
}

TEST(Align, PrefersSubstitutionOverInsertDelete) {
  // {sub} and {del, ins} both reach ["b"] from ["a"], but only sub is minimal.
  // At equal edit count, ["a","b"] -> ["b","c"] can be two subs or del+ins.
  const auto s = align_tokens({"a", "b"}, {"b", "c"});
  EXPECT_EQ(s, (EditScript{Edit::substitute(0, "a", "b"), Edit::substitute(1, "b", "c")}));
}

TEST(Align, LeftmostAmongEqualScripts) {
  // Deleting either "a" yields ["a"]; the first one goes.
  EXPECT_EQ(align_tokens({"a", "a"}, {"a"}), (EditScript{Edit::erase(0, "a")}));
}

TEST(Align, EarlySubstitutionBeatsEarlyInsertion) {
  EXPECT_EQ(align_tokens({"x"}, {"y", "z"}), (EditScript{Edit::substitute(0, "x", "y"), Edit::insert(1, "z")}));
}

TEST(AlignProperty, RoundTripMinimalAndTieBroken) {
  Rng rng(5);
  for (int trial = 0; trial < 3000; ++trial) {
    const Tokens a = random_tokens(rng, trial < 2000 ? 6 : 10);
    const Tokens b = random_tokens(rng, trial < 2000 ? 6 : 10);
    const EditScript s = align_tokens(a, b);
    ASSERT_EQ(apply_script(a, s), b);
    ASSERT_EQ(s.size(), testing_support::reference_levenshtein(a, b));
    if (a.size() > 6 || b.size() > 6) continue;

    std::vector<Path> all;
    Path cur;
    enumerate(a, b, 0, 0, cur, all);
    std::size_t best_edits = SIZE_MAX;
    for (const auto& c : all) best_edits = std::min(best_edits, c.script.size());
    std::size_t best_subs = 0;
    for (const auto& c : all)
      if (c.script.size() == best_edits) best_subs = std::max(best_subs, substitution_count(c.script));
    const Path* chosen = nullptr;
    for (const auto& c : all) {
      if (c.script.size() != best_edits || substitution_count(c.script) != best_subs) continue;
      if (!chosen || c.moves < chosen->moves) chosen = &c;
    }
    ASSERT_NE(chosen, nullptr);
    ASSERT_EQ(s, chosen->script);
    ASSERT_EQ(substitution_count(s), best_subs);
  }
}
