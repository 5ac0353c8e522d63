#include "advtext/report.hpp"

#include <algorithm>

#include "advtext/align.hpp"
#include "advtext/csv.hpp"
#include "advtext/error.hpp"
#include "advtext/tokenize.hpp"
#include "advtext/vulnerability.hpp"

namespace advtext {
namespace {

struct Mean {
  double sum = 0.0;
  std::size_t n = 0;
  void add(double v) {
    sum += v;
    ++n;
  }
  std::optional<double> value() const {
    if (n == 0) return std::nullopt;
    return sum / static_cast<double>(n);
  }
};

bool has_grammar(std::span<const ReportRow> rows) {
  return std::any_of(rows.begin(), rows.end(), [](const ReportRow& r) { return r.mean_grammar.has_value(); });
}

std::vector<std::string> cells(const ReportRow& r, bool grammar) {
  std::vector<std::string> c{r.method,
                             csv::format_number(r.asr),
                             csv::format_optional(r.mean_queries_success),
                             csv::format_optional(r.mean_levenshtein),
                             csv::format_optional(r.mean_perturbation_rate),
                             csv::format_optional(r.mean_ppl_increase),
                             csv::format_optional(r.mean_similarity)};
  if (grammar) c.push_back(csv::format_optional(r.mean_grammar));
  return c;
}

std::vector<std::string> header(bool grammar) {
  std::vector<std::string> h{"method",          "asr",
                             "mean_queries_success", "mean_levenshtein",
                             "mean_perturbation_rate", "mean_ppl_increase",
                             "mean_similarity"};
  if (grammar) h.push_back("mean_grammar");
  return h;
}

}  // namespace

ReportRow summarize(std::string method, const EvalReport& report, std::span<const LabeledExample> dataset,
                    const ReportHooks& hooks) {
  if (report.attempted == 0) throw DataError("report has no attempted examples");
  ReportRow row;
  row.method = std::move(method);
  row.asr = report.asr;
  row.mean_queries_success = report.mean_queries_success;
  Mean lev, rate, ppl, sim, gram;
  for (const auto& r : report.per_example) {
    if (!r.success || !r.adversarial_text) continue;
    if (r.example_index >= dataset.size()) throw DataError("report refers to an example outside the dataset");
    const std::string& orig = dataset[r.example_index].text;
    const std::string& adv = *r.adversarial_text;
    const auto a = tokenize(orig);
    const auto b = tokenize(adv);
    lev.add(static_cast<double>(r.edit_distance));
    rate.add(perturbation_rate(a, b));
    if (hooks.lm) ppl.add(ppl_increase(*hooks.lm, orig, adv));
    sim.add(hooks.similarity ? hooks.similarity(orig, adv) : similarity(orig, adv));
    if (hooks.grammar) gram.add(hooks.grammar(orig, adv));
  }
  row.mean_levenshtein = lev.value();
  row.mean_perturbation_rate = rate.value();
  row.mean_ppl_increase = ppl.value();
  row.mean_similarity = sim.value();
  row.mean_grammar = gram.value();
  return row;
}

void write_report_csv(std::ostream& out, std::span<const ReportRow> rows) {
  const bool grammar = has_grammar(rows);
  csv::write_row(out, header(grammar));
  for (const auto& r : rows) csv::write_row(out, cells(r, grammar));
}

void write_report_markdown(std::ostream& out, std::span<const ReportRow> rows) {
  const bool grammar = has_grammar(rows);
  const auto h = header(grammar);
  auto line = [&out](const std::vector<std::string>& c) {
    out << '|';
    for (const auto& v : c) out << ' ' << v << " |";
    out << '\n';
  };
  line(h);
  out << '|';
  for (std::size_t i = 0; i < h.size(); ++i) out << (i == 0 ? " --- |" : " ---: |");
  out << '\n';
  for (const auto& r : rows) line(cells(r, grammar));
}

}  // namespace advtext
