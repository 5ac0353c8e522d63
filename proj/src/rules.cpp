#include "advtext/rules.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <unordered_map>

#include "advtext/align.hpp"
#include "advtext/csv.hpp"
#include "advtext/error.hpp"
#include "advtext/metrics.hpp"
#include "advtext/random.hpp"
#include "advtext/tokenize.hpp"
#include "json.hpp"
#include "json_io.hpp"

namespace advtext {
namespace {

using nlohmann::json;

bool rule_less(const SubstitutionRule& a, const SubstitutionRule& b) {
  return std::tie(a.source, a.target, a.level) < std::tie(b.source, b.target, b.level);
}

std::string hex_id(std::uint64_t h) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "fnv1a64:%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace

std::string_view to_string(RuleLevel level) noexcept { return level == RuleLevel::Word ? "word" : "char"; }

RuleLevel parse_rule_level(std::string_view name) {
  if (name == "word") return RuleLevel::Word;
  if (name == "char") return RuleLevel::Char;
  throw DataError("unknown rule level '" + std::string(name) + "'");
}

// ---------------------------------------------------------------------------
// SynonymLexicon

SynonymLexicon::SynonymLexicon(Entries entries) : entries_(std::move(entries)) {
  std::uint64_t h = fnv1a64("lexicon");
  for (const auto& [token, syns] : entries_) {
    h = fnv1a64(token, fnv1a64("\x1e", h));
    for (const auto& s : syns) h = fnv1a64(s, fnv1a64("\x1f", h));
  }
  id_ = hex_id(h);
}

const std::set<std::string>& SynonymLexicon::synonyms(std::string_view token) const {
  static const std::set<std::string> kEmpty;
  auto it = entries_.find(token);
  return it == entries_.end() ? kEmpty : it->second;
}

bool SynonymLexicon::related(std::string_view w, std::string_view w_hat) const {
  const auto& syn_w = synonyms(w);
  if (syn_w.empty()) return false;
  if (syn_w.contains(std::string(w_hat))) return true;
  for (const auto& s : synonyms(w_hat)) {
    if (syn_w.contains(s)) return true;
  }
  return false;
}

SynonymLexicon SynonymLexicon::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open lexicon '" + path.string() + "'");
  try {
    const json doc = json::parse(in);
    if (!doc.is_object()) throw DataError("lexicon must be a JSON object");
    Entries entries;
    for (const auto& [token, syns] : doc.items()) {
      if (!syns.is_array()) throw DataError("lexicon entry '" + token + "' is not an array");
      auto& set = entries[token];
      for (const auto& s : syns) set.insert(s.get<std::string>());
    }
    return SynonymLexicon(std::move(entries));
  } catch (const json::exception& e) {
    throw DataError("malformed lexicon '" + path.string() + "': " + e.what());
  }
}

void SynonymLexicon::save(const std::filesystem::path& path) const {
  json doc = json::object();
  for (const auto& [token, syns] : entries_) doc[token] = json(std::vector<std::string>(syns.begin(), syns.end()));
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write lexicon '" + path.string() + "'");
  out << doc.dump(1) << '\n';
}

// ---------------------------------------------------------------------------
// RuleBank

RuleBank::RuleBank(std::string lexicon_id, std::vector<SubstitutionRule> rules)
    : lexicon_id_(std::move(lexicon_id)), rules_(std::move(rules)) {
  std::sort(rules_.begin(), rules_.end(), rule_less);
  for (std::size_t i = 0; i < rules_.size(); ++i) {
    const auto& r = rules_[i];
    if (r.count < 1) throw DataError("rule " + r.source + " -> " + r.target + " has count 0");
    if (!std::isfinite(r.salience)) throw DataError("rule " + r.source + " -> " + r.target + " has non-finite salience");
    if (i > 0 && !rule_less(rules_[i - 1], r))
      throw DataError("duplicate rule " + r.source + " -> " + r.target + " (" + std::string(to_string(r.level)) + ")");
  }
}

std::span<const SubstitutionRule> RuleBank::rules_for(std::string_view source) const {
  auto lo = std::lower_bound(rules_.begin(), rules_.end(), source,
                             [](const SubstitutionRule& r, std::string_view s) { return r.source < s; });
  auto hi = std::upper_bound(lo, rules_.end(), source,
                             [](std::string_view s, const SubstitutionRule& r) { return s < r.source; });
  return {lo, hi};
}

const SubstitutionRule* RuleBank::find(std::string_view source, std::string_view target, RuleLevel level) const {
  for (const auto& r : rules_for(source)) {
    if (r.target == target && r.level == level) return &r;
  }
  return nullptr;
}

// ---------------------------------------------------------------------------
// Extraction

void ExtractionDiagnostics::write_csv(std::ostream& out) const {
  csv::write_row(out, {"metric", "value"});
  auto row = [&](const char* name, std::size_t v) { csv::write_row(out, {name, std::to_string(v)}); };
  row("pairs_total", pairs_total);
  row("pairs_contributing", pairs_contributing);
  row("pairs_not_misclassified", pairs_not_misclassified);
  row("pairs_skipped", pairs_skipped);
  row("word_substitutions", word_substitutions);
  row("char_substitutions", char_substitutions);
  row("dropped_substitutions", dropped_substitutions);
  row("insertions", insertions);
  row("deletions", deletions);
  for (const auto& s : skipped) csv::write_row(out, {"skipped", s});
}

RuleExtractor::RuleExtractor(const OracleMap& oracles, const SynonymLexicon& lexicon, ExtractionOptions options)
    : oracles_(oracles), lexicon_(lexicon), options_(options) {}

void RuleExtractor::add(const AdversarialPair& pair) {
  const std::size_t index = diagnostics_.pairs_total++;
  const ClassIndex y = pair.original.label;

  bool misclassified = false;
  double delta = 0.0;
  if (pair.orig_conf && pair.adv_conf) {
    misclassified = pair.success;
    delta = *pair.orig_conf - *pair.adv_conf;
  } else {
    auto it = oracles_.find(pair.original.task_id);
    if (it == oracles_.end() || !it->second) {
      ++diagnostics_.pairs_skipped;
      diagnostics_.skipped.push_back("pair " + std::to_string(index) + ": no oracle for task '" +
                                     pair.original.task_id + "' and no stored confidences");
      return;
    }
    const VictimOracle& oracle = *it->second;
    const Prediction adv = oracle.predict(pair.perturbed);
    misclassified = adv.label != y;
    if (misclassified) {
      if (!adv.confidence) {
        ++diagnostics_.pairs_skipped;
        diagnostics_.skipped.push_back("pair " + std::to_string(index) + ": oracle for task '" +
                                       pair.original.task_id + "' does not expose confidence");
        return;
      }
      if (y >= static_cast<std::size_t>(adv.confidence->size())) {
        ++diagnostics_.pairs_skipped;
        diagnostics_.skipped.push_back("pair " + std::to_string(index) + ": label outside oracle class range");
        return;
      }
      delta = confidence_of(oracle, pair.original.text, y) - (*adv.confidence)[static_cast<Eigen::Index>(y)];
    }
  }
  if (!misclassified) {
    ++diagnostics_.pairs_not_misclassified;
    return;
  }

  const auto original = tokenize(pair.original.text, options_.lowercase);
  const auto perturbed = tokenize(pair.perturbed, options_.lowercase);
  const EditScript script = align_pair(original, perturbed);
  bool contributed = false;
  for (const Edit& e : script) {
    if (e.kind == Edit::Kind::Insert) {
      ++diagnostics_.insertions;
      continue;
    }
    if (e.kind == Edit::Kind::Delete) {
      ++diagnostics_.deletions;
      continue;
    }
    RuleLevel level;
    if (lexicon_.related(e.from, e.to)) {
      level = RuleLevel::Word;
      ++diagnostics_.word_substitutions;
    } else if (char_levenshtein(e.from, e.to) <= options_.char_edit_max) {
      level = RuleLevel::Char;
      ++diagnostics_.char_substitutions;
    } else {
      ++diagnostics_.dropped_substitutions;
      continue;
    }
    auto& a = acc_[Key{e.from, e.to, level}];
    a.count += 1;
    a.delta_sum += delta;
    a.provenance.insert({pair.original.task_id, pair.original.dataset_id, pair.attack_method});
    contributed = true;
  }
  diagnostics_.pairs_contributing += contributed;
}

RuleBank RuleExtractor::finish() const {
  std::vector<SubstitutionRule> rules;
  rules.reserve(acc_.size());
  for (const auto& [key, a] : acc_) {
    SubstitutionRule r;
    std::tie(r.source, r.target, r.level) = key;
    r.count = a.count;
    r.salience = a.delta_sum / static_cast<double>(a.count);
    r.provenance = a.provenance;
    rules.push_back(std::move(r));
  }
  return RuleBank(lexicon_.id(), std::move(rules));
}

RuleBank extract_rules(std::span<const AdversarialPair> pairs, const OracleMap& oracles, const SynonymLexicon& lexicon,
                       std::size_t char_edit_max, ExtractionDiagnostics* diagnostics) {
  RuleExtractor extractor(oracles, lexicon, {.char_edit_max = char_edit_max});
  for (const auto& p : pairs) extractor.add(p);
  if (diagnostics) *diagnostics = extractor.diagnostics();
  return extractor.finish();
}

// ---------------------------------------------------------------------------
// Merging and filtering

RuleBank merge_banks(std::span<const RuleBank> banks) {
  if (banks.empty()) throw DataError("merge_banks needs at least one bank");
  const std::string& lexicon_id = banks.front().lexicon_id();
  struct Sum {
    std::uint64_t count = 0;
    double weighted = 0.0;
    std::set<Provenance> provenance;
  };
  std::map<std::tuple<std::string, std::string, RuleLevel>, Sum> sums;
  for (const auto& bank : banks) {
    if (bank.lexicon_id() != lexicon_id)
      throw DataError("cannot merge banks built with different lexicons ('" + lexicon_id + "' vs '" +
                      bank.lexicon_id() + "')");
    for (const auto& r : bank.rules()) {
      auto& s = sums[{r.source, r.target, r.level}];
      s.count += r.count;
      s.weighted += static_cast<double>(r.count) * r.salience;
      s.provenance.insert(r.provenance.begin(), r.provenance.end());
    }
  }
  if (banks.size() == 1) return banks.front();
  std::vector<SubstitutionRule> rules;
  rules.reserve(sums.size());
  for (auto& [key, s] : sums) {
    SubstitutionRule r;
    std::tie(r.source, r.target, r.level) = key;
    r.count = s.count;
    r.salience = s.weighted / static_cast<double>(s.count);
    r.provenance = std::move(s.provenance);
    rules.push_back(std::move(r));
  }
  return RuleBank(lexicon_id, std::move(rules));
}

RuleBank restrict_level(const RuleBank& bank, RuleLevel level) {
  std::vector<SubstitutionRule> kept;
  for (const auto& r : bank.rules()) {
    if (r.level == level) kept.push_back(r);
  }
  return RuleBank(bank.lexicon_id(), std::move(kept));
}

// ---------------------------------------------------------------------------
// Substitution preference

double gini(std::span<const double> values) {
  const std::size_t n = values.size();
  if (n == 0) return 0.0;
  const double total = std::accumulate(values.begin(), values.end(), 0.0);
  if (total <= 0.0) return 0.0;
  // Sorted form of Σ_i Σ_j |x_i - x_j|: 2 Σ_k (2k - n + 1) x_(k), k from 0.
  std::vector<double> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end());
  double pairwise = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    pairwise += (2.0 * static_cast<double>(k) - static_cast<double>(n) + 1.0) * sorted[k];
  }
  pairwise *= 2.0;
  const double mean = total / static_cast<double>(n);
  return pairwise / (2.0 * static_cast<double>(n) * static_cast<double>(n) * mean);
}

double gini_substitution_preference(const RuleBank& bank, std::optional<RuleLevel> level) {
  if (bank.empty()) throw DataError("gini of an empty rule bank is undefined");
  double weighted = 0.0;
  double total = 0.0;
  const auto rules = bank.rules();
  for (std::size_t i = 0; i < rules.size();) {
    std::size_t j = i;
    std::vector<double> counts;
    while (j < rules.size() && rules[j].source == rules[i].source) {
      if (!level || rules[j].level == *level) counts.push_back(static_cast<double>(rules[j].count));
      ++j;
    }
    const double source_total = std::accumulate(counts.begin(), counts.end(), 0.0);
    if (counts.size() >= 2) weighted += source_total * gini(counts);
    total += source_total;
    i = j;
  }
  if (total == 0.0) throw DataError("no rules of the requested level");
  return weighted / total;
}

// ---------------------------------------------------------------------------
// Heatmap

void Heatmap::write_csv(std::ostream& out) const {
  std::vector<std::string> header{"source"};
  header.insert(header.end(), column_labels.begin(), column_labels.end());
  csv::write_row(out, header);
  for (std::size_t r = 0; r < row_labels.size(); ++r) {
    std::vector<std::string> row{row_labels[r]};
    for (std::size_t c = 0; c < column_labels.size(); ++c) {
      const double v = values(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c));
      row.push_back(std::isnan(v) ? std::string{} : csv::format_number(v));
    }
    csv::write_row(out, row);
  }
}

Heatmap export_heatmap(const RuleBank& bank, std::size_t top_sources, std::size_t top_targets) {
  if (bank.empty()) throw DataError("cannot export a heatmap of an empty rule bank");
  std::map<std::string, std::uint64_t> source_totals;
  std::map<std::string, std::uint64_t> target_totals;
  for (const auto& r : bank.rules()) {
    source_totals[r.source] += r.count;
    target_totals[r.target] += r.count;
  }
  auto top = [](const std::map<std::string, std::uint64_t>& totals, std::size_t k) {
    std::vector<std::pair<std::string, std::uint64_t>> v(totals.begin(), totals.end());
    std::stable_sort(v.begin(), v.end(), [](const auto& a, const auto& b) { return a.second > b.second; });
    if (v.size() > k) v.resize(k);
    std::vector<std::string> labels;
    for (auto& [label, count] : v) labels.push_back(label);
    return labels;
  };
  Heatmap h;
  h.row_labels = top(source_totals, top_sources);
  h.column_labels = top(target_totals, top_targets);
  h.values = Eigen::MatrixXd::Constant(static_cast<Eigen::Index>(h.row_labels.size()),
                                       static_cast<Eigen::Index>(h.column_labels.size()),
                                       std::numeric_limits<double>::quiet_NaN());
  std::unordered_map<std::string, Eigen::Index> column_of;
  for (std::size_t c = 0; c < h.column_labels.size(); ++c) column_of[h.column_labels[c]] = static_cast<Eigen::Index>(c);
  for (std::size_t r = 0; r < h.row_labels.size(); ++r) {
    std::unordered_map<Eigen::Index, std::uint64_t> cell_count;
    for (const auto& rule : bank.rules_for(h.row_labels[r])) {
      auto it = column_of.find(rule.target);
      if (it == column_of.end()) continue;
      double& cell = h.values(static_cast<Eigen::Index>(r), it->second);
      // Same (source, target) at both levels: the more frequent rule wins.
      auto& best = cell_count[it->second];
      if (std::isnan(cell) || rule.count > best) {
        cell = rule.salience;
        best = rule.count;
      }
    }
  }
  return h;
}

// ---------------------------------------------------------------------------
// Persistence

}  // namespace advtext

namespace advtext::detail {

nlohmann::json bank_to_json(const RuleBank& bank) {
  json rules = json::array();
  for (const auto& r : bank.rules()) {
    json prov = json::array();
    for (const auto& p : r.provenance) prov.push_back({{"task", p.task}, {"dataset", p.dataset}, {"attack", p.attack}});
    rules.push_back({{"source", r.source},
                     {"target", r.target},
                     {"level", std::string(to_string(r.level))},
                     {"count", r.count},
                     {"salience", r.salience},
                     {"provenance", prov}});
  }
  return {{"version", kBankFormatVersion}, {"lexicon_id", bank.lexicon_id()}, {"rules", rules}};
}

RuleBank bank_from_json(const nlohmann::json& doc) {
  if (!doc.is_object() || !doc.contains("version")) throw DataError("bank file has no version tag");
  if (!doc["version"].is_number_integer() || doc["version"].get<int>() != kBankFormatVersion)
    throw DataError("unsupported bank version " + doc["version"].dump() + " (expected " +
                    std::to_string(kBankFormatVersion) + ")");
  std::vector<SubstitutionRule> rules;
  for (const auto& jr : doc.at("rules")) {
    SubstitutionRule r;
    r.source = jr.at("source").get<std::string>();
    r.target = jr.at("target").get<std::string>();
    r.level = parse_rule_level(jr.at("level").get<std::string>());
    r.count = jr.at("count").get<std::uint64_t>();
    r.salience = jr.at("salience").get<double>();
    for (const auto& p : jr.at("provenance"))
      r.provenance.insert(
          {p.at("task").get<std::string>(), p.at("dataset").get<std::string>(), p.at("attack").get<std::string>()});
    rules.push_back(std::move(r));
  }
  return RuleBank(doc.at("lexicon_id").get<std::string>(), std::move(rules));
}

}  // namespace advtext::detail

namespace advtext {

void save_bank(const RuleBank& bank, const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write bank '" + path.string() + "'");
  out << detail::bank_to_json(bank).dump(1) << '\n';
}

RuleBank load_bank(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open bank '" + path.string() + "'");
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw DataError("malformed bank file '" + path.string() + "': " + e.what());
  }
  try {
    return detail::bank_from_json(doc);
  } catch (const json::exception& e) {
    throw DataError("malformed bank file '" + path.string() + "': " + e.what());
  }
}

}  // namespace advtext
