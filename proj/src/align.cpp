#include "advtext/align.hpp"

#include <limits>
#include <stdexcept>

namespace advtext {
namespace {

// Lexicographic objective: fewer edits first, then more substitutions.
struct Cost {
  std::size_t edits = 0;
  std::size_t subs = 0;

  bool better_than(const Cost& o) const noexcept {
    return edits != o.edits ? edits < o.edits : subs > o.subs;
  }
  bool operator==(const Cost&) const = default;
};

}  // namespace

EditScript align_tokens(const std::vector<std::string>& a, const std::vector<std::string>& b) {
  const std::size_t n = a.size();
  const std::size_t m = b.size();
  // best[i][j]: optimal cost of aligning the suffixes a[i:] and b[j:].
  std::vector<Cost> best((n + 1) * (m + 1));
  auto at = [&](std::size_t i, std::size_t j) -> Cost& { return best[i * (m + 1) + j]; };

  for (std::size_t i = n + 1; i-- > 0;) {
    for (std::size_t j = m + 1; j-- > 0;) {
      if (i == n && j == m) continue;
      Cost c{std::numeric_limits<std::size_t>::max(), 0};
      auto consider = [&](Cost cand) {
        if (cand.better_than(c)) c = cand;
      };
      if (i < n && j < m) {
        const Cost next = at(i + 1, j + 1);
        if (a[i] == b[j]) {
          consider(next);
        } else {
          consider({next.edits + 1, next.subs + 1});
        }
      }
      if (i < n) {
        const Cost next = at(i + 1, j);
        consider({next.edits + 1, next.subs});
      }
      if (j < m) {
        const Cost next = at(i, j + 1);
        consider({next.edits + 1, next.subs});
      }
      at(i, j) = c;
    }
  }

  // Forward trace, taking an optimal edit move as early as possible.
  EditScript script;
  std::size_t i = 0;
  std::size_t j = 0;
  while (i < n || j < m) {
    const Cost here = at(i, j);
    if (i < n && j < m && a[i] != b[j]) {
      const Cost next = at(i + 1, j + 1);
      if (Cost{next.edits + 1, next.subs + 1} == here) {
        script.push_back(Edit::substitute(i, a[i], b[j]));
        ++i;
        ++j;
        continue;
      }
    }
    if (i < n) {
      const Cost next = at(i + 1, j);
      if (Cost{next.edits + 1, next.subs} == here) {
        script.push_back(Edit::erase(i, a[i]));
        ++i;
        continue;
      }
    }
    if (j < m) {
      const Cost next = at(i, j + 1);
      if (Cost{next.edits + 1, next.subs} == here) {
        script.push_back(Edit::insert(i, b[j]));
        ++j;
        continue;
      }
    }
    // Only a match can remain optimal here.
    ++i;
    ++j;
  }
  return script;
}

std::vector<std::string> apply_script(const std::vector<std::string>& original, const EditScript& script) {
  std::vector<std::string> out;
  out.reserve(original.size() + script.size());
  std::size_t k = 0;
  for (std::size_t i = 0; i <= original.size(); ++i) {
    bool consumed = false;
    while (k < script.size() && script[k].index == i) {
      const Edit& e = script[k++];
      if (e.kind == Edit::Kind::Insert) {
        out.push_back(e.to);
        continue;
      }
      if (i == original.size() || consumed) throw std::invalid_argument("edit script out of range");
      consumed = true;
      if (e.kind == Edit::Kind::Substitute) out.push_back(e.to);
    }
    if (k < script.size() && script[k].index < i) throw std::invalid_argument("edit script not ordered");
    if (!consumed && i < original.size()) out.push_back(original[i]);
  }
  return out;
}

std::size_t substitution_count(const EditScript& script) noexcept {
  std::size_t n = 0;
  for (const auto& e : script) n += e.kind == Edit::Kind::Substitute;
  return n;
}

}  // namespace advtext
