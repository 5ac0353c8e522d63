#pragma once

#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "advtext/attack.hpp"
#include "advtext/corpus.hpp"
#include "advtext/metrics.hpp"

namespace advtext {

/// Per-pair scorers. Without an LM the perplexity column stays empty; without
/// a similarity hook the built-in token cosine is used.
struct ReportHooks {
  const CharNGramLM* lm = nullptr;
  ScoreHook similarity;
  /// Optional extra column (e.g. grammar-error delta), emitted only when set.
  ScoreHook grammar;
};

struct ReportRow {
  std::string method;
  double asr = 0.0;
  std::optional<double> mean_queries_success;
  std::optional<double> mean_levenshtein;
  std::optional<double> mean_perturbation_rate;
  std::optional<double> mean_ppl_increase;
  std::optional<double> mean_similarity;
  std::optional<double> mean_grammar;
};

/// Means over successful examples; `dataset` is the one the report was run on.
ReportRow summarize(std::string method, const EvalReport& report, std::span<const LabeledExample> dataset,
                    const ReportHooks& hooks = {});

void write_report_csv(std::ostream& out, std::span<const ReportRow> rows);
void write_report_markdown(std::ostream& out, std::span<const ReportRow> rows);

}  // namespace advtext
