#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "advtext/corpus.hpp"

namespace advtext {

/// Reserved mask token (U+2588). The built-in classifier routes every feature
/// that contains it to bucket 0, which never carries weight.
inline constexpr std::string_view kMaskToken = "\xE2\x96\x88";

struct Prediction {
  ClassIndex label = 0;
  /// Per-class probabilities; absent for decision-only oracles.
  std::optional<Eigen::VectorXd> confidence;

  /// Label is the argmax (lowest index on ties).
  static Prediction from_confidence(Eigen::VectorXd probabilities);
};

/// Anything that classifies text. Implementations must tolerate concurrent
/// const calls.
class VictimOracle {
 public:
  virtual ~VictimOracle() = default;
  virtual Prediction predict(std::string_view text) const = 0;
  virtual bool provides_confidence() const noexcept = 0;
};

using OraclePtr = std::shared_ptr<const VictimOracle>;

inline Prediction predict(const VictimOracle& oracle, std::string_view text) { return oracle.predict(text); }

/// Probability of `label` under a confidence-mode oracle; throws DataError
/// when the oracle does not expose confidences.
double confidence_of(const VictimOracle& oracle, std::string_view text, ClassIndex label);

class QueryLedger {
 public:
  std::uint64_t count() const noexcept { return count_; }
  void record() noexcept { ++count_; }

 private:
  std::uint64_t count_ = 0;
};

/// Counts every predict call on `inner` into `ledger`. The ledger must
/// outlive the returned oracle and belongs to one worker at a time.
OraclePtr with_ledger(OraclePtr inner, QueryLedger& ledger);

/// Hides the confidence vector, leaving only the label.
OraclePtr decision_only(OraclePtr inner);

struct BowConfig {
  std::size_t hash_size = std::size_t{1} << 18;
  std::size_t epochs = 5;
  double learning_rate = 0.5;
  std::uint64_t seed = 0;
  bool use_bigrams = true;
};

/// Multinomial logistic regression over hashed unigram and bigram counts.
class BowClassifier final : public VictimOracle {
 public:
  using SparseFeatures = std::vector<std::pair<std::uint32_t, double>>;

  BowClassifier(std::size_t hash_size, std::size_t num_classes, bool use_bigrams = true, std::string id = "bow");

  Prediction predict(std::string_view text) const override;
  bool provides_confidence() const noexcept override { return true; }

  Eigen::VectorXd probabilities(std::string_view text) const;
  Eigen::VectorXd logits(const SparseFeatures& features) const;

  /// Sorted, deduplicated feature buckets with counts.
  SparseFeatures features(std::string_view text) const;

  std::size_t hash_size() const noexcept { return static_cast<std::size_t>(weights_.cols()); }
  std::size_t num_classes() const noexcept { return static_cast<std::size_t>(weights_.rows()); }
  bool use_bigrams() const noexcept { return use_bigrams_; }
  const std::string& id() const noexcept { return id_; }

  /// num_classes x hash_size; column f holds the per-class weights of bucket f.
  const Eigen::MatrixXd& weights() const noexcept { return weights_; }
  Eigen::MatrixXd& weights() noexcept { return weights_; }
  const Eigen::VectorXd& bias() const noexcept { return bias_; }
  Eigen::VectorXd& bias() noexcept { return bias_; }

 private:
  Eigen::MatrixXd weights_;
  Eigen::VectorXd bias_;
  bool use_bigrams_;
  std::string id_;
};

BowClassifier train_bow_classifier(std::span<const LabeledExample> examples, const BowConfig& config,
                                   std::optional<std::size_t> num_classes = std::nullopt,
                                   std::string id = "bow");

void save_model(const BowClassifier& model, const std::filesystem::path& path);
BowClassifier load_model(const std::filesystem::path& path);

/// Fraction of examples whose predicted label matches.
double accuracy(const VictimOracle& oracle, std::span<const LabeledExample> examples);

}  // namespace advtext
