#pragma once

#include <cstddef>
#include <filesystem>
#include <fstream>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace advtext {

using ClassIndex = std::size_t;

struct LabeledExample {
  std::string text;
  ClassIndex label = 0;
  std::string task_id;
  std::string dataset_id;

  friend bool operator==(const LabeledExample&, const LabeledExample&) = default;
};

struct AdversarialPair {
  LabeledExample original;
  std::string perturbed;
  std::string attack_method;
  std::string victim_model_id;
  bool success = false;
  std::optional<double> orig_conf;
  std::optional<double> adv_conf;

  friend bool operator==(const AdversarialPair&, const AdversarialPair&) = default;
};

/// A labeled dataset. `num_classes` is either declared by the caller or
/// inferred as max label + 1.
struct Dataset {
  std::string id;
  std::size_t num_classes = 0;
  std::vector<LabeledExample> examples;
};

enum class PairFormat { Jsonl, Csv };

/// "jsonl" or "csv"; anything else is a ConfigError.
PairFormat parse_pair_format(std::string_view name);
PairFormat pair_format_for_path(const std::filesystem::path& path);

/// Streams adversarial pairs from a JSONL or CSV file in record order.
/// Malformed records raise DataError with the 1-based line and field name.
class PairReader {
 public:
  PairReader(const std::filesystem::path& path, PairFormat format);

  std::optional<AdversarialPair> next();
  std::size_t line() const noexcept { return line_; }

 private:
  std::optional<AdversarialPair> next_jsonl();
  std::optional<AdversarialPair> next_csv();

  std::ifstream in_;
  PairFormat format_;
  std::size_t line_ = 0;
  std::vector<std::string> header_;
};

std::vector<AdversarialPair> ingest_pairs(const std::filesystem::path& path, PairFormat format);

void write_pairs_jsonl(const std::filesystem::path& path, std::span<const AdversarialPair> pairs);
void write_pairs_csv(const std::filesystem::path& path, std::span<const AdversarialPair> pairs);

/// JSONL with one {"text", "label", "task", "dataset"} object per line.
Dataset read_dataset(const std::filesystem::path& path, std::optional<std::size_t> num_classes = std::nullopt);
void write_dataset(const std::filesystem::path& path, const Dataset& dataset);

/// Checks label < num_classes for every example.
void validate_dataset(const Dataset& dataset);

}  // namespace advtext
