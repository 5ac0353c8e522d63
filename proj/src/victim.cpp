#include "advtext/victim.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <set>

#include "advtext/error.hpp"
#include "advtext/random.hpp"
#include "advtext/tokenize.hpp"
#include "json.hpp"

namespace advtext {
namespace {

constexpr int kModelFormatVersion = 1;

class LedgeredOracle final : public VictimOracle {
 public:
  LedgeredOracle(OraclePtr inner, QueryLedger& ledger) : inner_(std::move(inner)), ledger_(&ledger) {}

  Prediction predict(std::string_view text) const override {
    ledger_->record();
    return inner_->predict(text);
  }
  bool provides_confidence() const noexcept override { return inner_->provides_confidence(); }

 private:
  OraclePtr inner_;
  QueryLedger* ledger_;
};

class DecisionOnlyOracle final : public VictimOracle {
 public:
  explicit DecisionOnlyOracle(OraclePtr inner) : inner_(std::move(inner)) {}

  Prediction predict(std::string_view text) const override {
    Prediction p = inner_->predict(text);
    p.confidence.reset();
    return p;
  }
  bool provides_confidence() const noexcept override { return false; }

 private:
  OraclePtr inner_;
};

Eigen::VectorXd softmax(const Eigen::VectorXd& z) {
  const double m = z.maxCoeff();
  Eigen::VectorXd e = (z.array() - m).exp();
  return e / e.sum();
}

}  // namespace

Prediction Prediction::from_confidence(Eigen::VectorXd probabilities) {
  Prediction p;
  Eigen::Index best = 0;
  for (Eigen::Index i = 1; i < probabilities.size(); ++i) {
    if (probabilities[i] > probabilities[best]) best = i;
  }
  p.label = static_cast<ClassIndex>(best);
  p.confidence = std::move(probabilities);
  return p;
}

double confidence_of(const VictimOracle& oracle, std::string_view text, ClassIndex label) {
  const Prediction p = oracle.predict(text);
  if (!p.confidence) throw DataError("oracle does not expose confidence scores");
  if (label >= static_cast<std::size_t>(p.confidence->size()))
    throw DataError("label " + std::to_string(label) + " outside the oracle's class range");
  return (*p.confidence)[static_cast<Eigen::Index>(label)];
}

OraclePtr with_ledger(OraclePtr inner, QueryLedger& ledger) {
  return std::make_shared<LedgeredOracle>(std::move(inner), ledger);
}

OraclePtr decision_only(OraclePtr inner) { return std::make_shared<DecisionOnlyOracle>(std::move(inner)); }

BowClassifier::BowClassifier(std::size_t hash_size, std::size_t num_classes, bool use_bigrams, std::string id)
    : weights_(Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(num_classes), static_cast<Eigen::Index>(hash_size))),
      bias_(Eigen::VectorXd::Zero(static_cast<Eigen::Index>(num_classes))),
      use_bigrams_(use_bigrams),
      id_(std::move(id)) {
  if (hash_size < 2) throw ConfigError("hash size must be at least 2", "hash_size");
  if (num_classes < 2) throw ConfigError("at least two classes are required", "num_classes");
}

BowClassifier::SparseFeatures BowClassifier::features(std::string_view text) const {
  const auto tok = tokenize(text, /*lowercase=*/true);
  const auto buckets = static_cast<std::uint64_t>(hash_size() - 1);
  std::vector<std::uint32_t> ids;
  ids.reserve(tok.size() * 2);
  auto bucket = [&](std::string_view kind, std::string_view a, std::string_view b) -> std::uint32_t {
    if (a == kMaskToken || b == kMaskToken) return 0;
    std::uint64_t h = fnv1a64(kind);
    h = fnv1a64(a, h);
    if (!b.empty()) h = fnv1a64(b, fnv1a64("\x1f", h));
    return static_cast<std::uint32_t>(1 + splitmix64(h) % buckets);
  };
  for (std::size_t i = 0; i < tok.size(); ++i) {
    ids.push_back(bucket("u:", tok.tokens[i], {}));
    if (use_bigrams_ && i + 1 < tok.size()) ids.push_back(bucket("b:", tok.tokens[i], tok.tokens[i + 1]));
  }
  std::sort(ids.begin(), ids.end());
  SparseFeatures out;
  for (std::uint32_t id : ids) {
    if (id == 0) continue;
    if (!out.empty() && out.back().first == id) {
      out.back().second += 1.0;
    } else {
      out.emplace_back(id, 1.0);
    }
  }
  return out;
}

Eigen::VectorXd BowClassifier::logits(const SparseFeatures& features) const {
  Eigen::VectorXd z = bias_;
  for (const auto& [id, value] : features) z.noalias() += value * weights_.col(id);
  return z;
}

Eigen::VectorXd BowClassifier::probabilities(std::string_view text) const { return softmax(logits(features(text))); }

Prediction BowClassifier::predict(std::string_view text) const { return Prediction::from_confidence(probabilities(text)); }

BowClassifier train_bow_classifier(std::span<const LabeledExample> examples, const BowConfig& config,
                                   std::optional<std::size_t> num_classes, std::string id) {
  if (examples.empty()) throw DataError("cannot train a classifier on an empty example list");
  std::set<ClassIndex> labels;
  ClassIndex max_label = 0;
  for (const auto& ex : examples) {
    labels.insert(ex.label);
    max_label = std::max(max_label, ex.label);
  }
  if (labels.size() < 2) throw DataError("training data contains a single class");
  const std::size_t classes = num_classes.value_or(max_label + 1);
  if (max_label >= classes) throw DataError("label " + std::to_string(max_label) + " exceeds the class count");
  if (config.learning_rate <= 0 || !std::isfinite(config.learning_rate))
    throw ConfigError("must be positive", "learning_rate");

  BowClassifier model(config.hash_size, classes, config.use_bigrams, std::move(id));
  std::vector<BowClassifier::SparseFeatures> feats;
  feats.reserve(examples.size());
  for (const auto& ex : examples) feats.push_back(model.features(ex.text));

  std::vector<std::size_t> order(examples.size());
  std::iota(order.begin(), order.end(), 0);
  Rng rng(config.seed);
  Eigen::MatrixXd& w = model.weights();
  Eigen::VectorXd& b = model.bias();
  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    rng.shuffle(order.begin(), order.end());
    const double lr = config.learning_rate / (1.0 + 0.5 * static_cast<double>(epoch));
    for (std::size_t idx : order) {
      Eigen::VectorXd grad = softmax(model.logits(feats[idx]));
      grad[static_cast<Eigen::Index>(examples[idx].label)] -= 1.0;
      for (const auto& [f, value] : feats[idx]) w.col(f).noalias() -= (lr * value) * grad;
      b.noalias() -= lr * grad;
    }
  }
  return model;
}

void save_model(const BowClassifier& model, const std::filesystem::path& path) {
  using nlohmann::json;
  json columns = json::array();
  const auto& w = model.weights();
  for (Eigen::Index f = 0; f < w.cols(); ++f) {
    if (w.col(f).isZero(0.0)) continue;
    json col = json::array();
    for (Eigen::Index c = 0; c < w.rows(); ++c) col.push_back(w(c, f));
    columns.push_back(json::array({f, col}));
  }
  json bias = json::array();
  for (Eigen::Index c = 0; c < model.bias().size(); ++c) bias.push_back(model.bias()[c]);
  json doc = {{"version", kModelFormatVersion}, {"kind", "bow-logreg"},         {"id", model.id()},
              {"hash_size", model.hash_size()}, {"num_classes", model.num_classes()}, {"use_bigrams", model.use_bigrams()},
              {"bias", bias},                   {"weights", columns}};
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write model '" + path.string() + "'");
  out << doc.dump() << '\n';
}

BowClassifier load_model(const std::filesystem::path& path) {
  using nlohmann::json;
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open model '" + path.string() + "'");
  json doc;
  try {
    doc = json::parse(in);
    if (doc.at("version").get<int>() != kModelFormatVersion)
      throw DataError("unsupported model version " + doc.at("version").dump());
    if (doc.at("kind").get<std::string>() != "bow-logreg") throw DataError("unknown model kind");
    BowClassifier model(doc.at("hash_size").get<std::size_t>(), doc.at("num_classes").get<std::size_t>(),
                        doc.at("use_bigrams").get<bool>(), doc.at("id").get<std::string>());
    const auto& bias = doc.at("bias");
    if (bias.size() != model.num_classes()) throw DataError("bias length does not match class count");
    for (std::size_t c = 0; c < bias.size(); ++c) model.bias()[static_cast<Eigen::Index>(c)] = bias[c].get<double>();
    for (const auto& entry : doc.at("weights")) {
      const auto f = entry.at(0).get<std::size_t>();
      const auto& col = entry.at(1);
      if (f >= model.hash_size() || col.size() != model.num_classes()) throw DataError("weight column out of range");
      for (std::size_t c = 0; c < col.size(); ++c)
        model.weights()(static_cast<Eigen::Index>(c), static_cast<Eigen::Index>(f)) = col[c].get<double>();
    }
    return model;
  } catch (const json::exception& e) {
    throw DataError("malformed model file '" + path.string() + "': " + e.what());
  }
}

double accuracy(const VictimOracle& oracle, std::span<const LabeledExample> examples) {
  if (examples.empty()) return 0.0;
  std::size_t correct = 0;
  for (const auto& ex : examples) correct += oracle.predict(ex.text).label == ex.label;
  return static_cast<double>(correct) / static_cast<double>(examples.size());
}

}  // namespace advtext
