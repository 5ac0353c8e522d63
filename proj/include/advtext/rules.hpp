#pragma once

#include <Eigen/Dense>

#include <compare>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "advtext/corpus.hpp"
#include "advtext/victim.hpp"

namespace advtext {

enum class RuleLevel { Word, Char };

std::string_view to_string(RuleLevel level) noexcept;
RuleLevel parse_rule_level(std::string_view name);

struct Provenance {
  std::string task;
  std::string dataset;
  std::string attack;

  auto operator<=>(const Provenance&) const = default;
};

struct SubstitutionRule {
  std::string source;
  std::string target;
  RuleLevel level = RuleLevel::Word;
  std::uint64_t count = 0;
  /// Mean drop of the true-class confidence over contributing occurrences.
  double salience = 0.0;
  std::set<Provenance> provenance;

  friend bool operator==(const SubstitutionRule&, const SubstitutionRule&) = default;
};

class SynonymLexicon {
 public:
  using Entries = std::map<std::string, std::set<std::string>, std::less<>>;

  SynonymLexicon() : SynonymLexicon(Entries{}) {}
  explicit SynonymLexicon(Entries entries);

  /// Empty set for unknown tokens.
  const std::set<std::string>& synonyms(std::string_view token) const;

  /// (synonym(w_hat) ∪ {w_hat}) ∩ synonym(w) ≠ ∅
  bool related(std::string_view w, std::string_view w_hat) const;

  /// Content hash of the canonical entry list, e.g. "fnv1a64:0123abcd...".
  const std::string& id() const noexcept { return id_; }
  const Entries& entries() const noexcept { return entries_; }

  /// JSON object mapping token to an array of synonyms.
  static SynonymLexicon load(const std::filesystem::path& path);
  void save(const std::filesystem::path& path) const;

 private:
  Entries entries_;
  std::string id_;
};

/// Immutable collection of rules, at most one per (source, target, level),
/// stored sorted so all rules sharing a source are contiguous.
class RuleBank {
 public:
  RuleBank() = default;
  RuleBank(std::string lexicon_id, std::vector<SubstitutionRule> rules);

  std::span<const SubstitutionRule> rules() const noexcept { return rules_; }
  std::span<const SubstitutionRule> rules_for(std::string_view source) const;
  const SubstitutionRule* find(std::string_view source, std::string_view target, RuleLevel level) const;

  const std::string& lexicon_id() const noexcept { return lexicon_id_; }
  std::size_t size() const noexcept { return rules_.size(); }
  bool empty() const noexcept { return rules_.empty(); }

  friend bool operator==(const RuleBank&, const RuleBank&) = default;

 private:
  std::string lexicon_id_;
  std::vector<SubstitutionRule> rules_;
};

using OracleMap = std::map<std::string, OraclePtr, std::less<>>;

struct ExtractionOptions {
  std::size_t char_edit_max = 2;
  /// Rule keys are built from lowercased tokens.
  bool lowercase = true;
};

struct ExtractionDiagnostics {
  std::size_t pairs_total = 0;
  std::size_t pairs_contributing = 0;
  std::size_t pairs_not_misclassified = 0;
  std::size_t pairs_skipped = 0;
  std::size_t word_substitutions = 0;
  std::size_t char_substitutions = 0;
  std::size_t dropped_substitutions = 0;
  std::size_t insertions = 0;
  std::size_t deletions = 0;
  /// "pair <index>: <reason>" for every skipped pair.
  std::vector<std::string> skipped;

  void write_csv(std::ostream& out) const;
};

/// Incremental rule extraction. Pairs carrying both stored confidences are
/// scored without querying; otherwise the oracle registered for the pair's
/// task is queried for the clean and perturbed texts.
class RuleExtractor {
 public:
  RuleExtractor(const OracleMap& oracles, const SynonymLexicon& lexicon, ExtractionOptions options = {});

  void add(const AdversarialPair& pair);
  RuleBank finish() const;
  const ExtractionDiagnostics& diagnostics() const noexcept { return diagnostics_; }

 private:
  struct Accumulator {
    std::uint64_t count = 0;
    double delta_sum = 0.0;
    std::set<Provenance> provenance;
  };
  using Key = std::tuple<std::string, std::string, RuleLevel>;

  const OracleMap& oracles_;
  const SynonymLexicon& lexicon_;
  ExtractionOptions options_;
  std::map<Key, Accumulator> acc_;
  ExtractionDiagnostics diagnostics_;
};

RuleBank extract_rules(std::span<const AdversarialPair> pairs, const OracleMap& oracles, const SynonymLexicon& lexicon,
                       std::size_t char_edit_max = 2, ExtractionDiagnostics* diagnostics = nullptr);

/// Count-weighted union. All banks must share a lexicon id.
RuleBank merge_banks(std::span<const RuleBank> banks);

/// Keeps only rules of the given level.
RuleBank restrict_level(const RuleBank& bank, RuleLevel level);

/// Gini coefficient Σ_i Σ_j |x_i - x_j| / (2 n² x̄); 0 for empty or all-zero input.
double gini(std::span<const double> values);

/// Count-weighted mean over sources of the Gini over each source's target
/// counts (single-target sources contribute 0).
double gini_substitution_preference(const RuleBank& bank, std::optional<RuleLevel> level = std::nullopt);

/// Salience matrix over the most frequent sources (rows) and targets
/// (columns). Absent rules are NaN and render as empty cells.
struct Heatmap {
  std::vector<std::string> row_labels;
  std::vector<std::string> column_labels;
  Eigen::MatrixXd values;

  void write_csv(std::ostream& out) const;
};

Heatmap export_heatmap(const RuleBank& bank, std::size_t top_sources, std::size_t top_targets);

inline constexpr int kBankFormatVersion = 1;

void save_bank(const RuleBank& bank, const std::filesystem::path& path);
RuleBank load_bank(const std::filesystem::path& path);

}  // namespace advtext
