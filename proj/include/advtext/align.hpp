#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "advtext/tokenize.hpp"

namespace advtext {

struct Edit {
  enum class Kind { Substitute, Insert, Delete };

  Kind kind;
  /// Position in the original token sequence. Inserts go before this index
  /// (which may equal the original length).
  std::size_t index;
  /// Original token; empty for inserts.
  std::string from;
  /// Replacement token; empty for deletes.
  std::string to;

  static Edit substitute(std::size_t i, std::string w, std::string w_hat) {
    return {Kind::Substitute, i, std::move(w), std::move(w_hat)};
  }
  static Edit insert(std::size_t i, std::string w_hat) { return {Kind::Insert, i, {}, std::move(w_hat)}; }
  static Edit erase(std::size_t i, std::string w) { return {Kind::Delete, i, std::move(w), {}}; }

  friend bool operator==(const Edit&, const Edit&) = default;
};

using EditScript = std::vector<Edit>;

/// Minimum unit-cost token edit script. Among minimal scripts the one with the
/// most substitutions wins. Remaining ties are settled left to right: at the
/// first point where two alignments differ, a substitution beats a deletion,
/// which beats an insertion, which beats a match.
EditScript align_tokens(const std::vector<std::string>& original, const std::vector<std::string>& perturbed);

inline EditScript align_pair(const TokenizedText& original, const TokenizedText& perturbed) {
  return align_tokens(original.tokens, perturbed.tokens);
}

/// Applies a script produced by align_tokens (edits ordered by index, inserts
/// before the substitute/delete at the same index).
std::vector<std::string> apply_script(const std::vector<std::string>& original, const EditScript& script);

std::size_t substitution_count(const EditScript& script) noexcept;

}  // namespace advtext
