#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

namespace advtext::cli {

/// Command-line overrides applied on top of the config file.
struct Overrides {
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> workers;
  std::optional<std::size_t> budget;
  std::optional<double> temperature;
  std::optional<std::string> output;
  /// "dotted.key=<json value>"; a value that is not valid JSON is taken as a string.
  std::vector<std::string> assignments;
};

/// One declarative experiment. Relative paths resolve against the config
/// file's directory; "${output}" expands to the output root.
class ExperimentConfig {
 public:
  ExperimentConfig(nlohmann::json document, std::filesystem::path base_dir, const Overrides& overrides = {});

  static ExperimentConfig load(const std::filesystem::path& file, const Overrides& overrides = {});

  const nlohmann::json& document() const noexcept { return doc_; }
  std::uint64_t seed() const noexcept { return seed_; }
  std::size_t workers() const noexcept { return workers_; }
  const std::filesystem::path& output_root() const noexcept { return output_root_; }

  /// Hash of the canonical document minus "output" and "workers", neither of
  /// which affects results.
  std::string hash() const;

  /// Section lookup returning an empty object when absent.
  const nlohmann::json& section(std::string_view name) const;

  /// Resolved "paths.<key>"; throws ConfigError when absent (or missing on disk
  /// when must_exist).
  std::filesystem::path path(std::string_view key, bool must_exist = true) const;
  std::vector<std::filesystem::path> path_list(std::string_view key, bool must_exist = true) const;
  bool has_path(std::string_view key) const;

  std::filesystem::path resolve(const std::string& raw) const;

 private:
  nlohmann::json doc_;
  std::filesystem::path base_dir_;
  std::filesystem::path output_root_;
  std::uint64_t seed_ = 0;
  std::size_t workers_ = 1;
};

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitData = 2;
inline constexpr int kExitRemote = 3;

/// Commands accepted by run(); "analyze" takes a kind.
const std::vector<std::string>& command_names();
const std::vector<std::string>& analysis_kinds();

/// Executes one command, writing artifacts plus manifest.json to
/// <output root>/<command>. Everything written is removed if it throws.
/// Returns the output directory.
std::filesystem::path run(std::string_view command, const ExperimentConfig& config, std::ostream& log,
                          std::string_view analysis_kind = {});

/// Maps the in-flight exception to an exit code and prints it to `err`.
int report_failure(std::ostream& err);

}  // namespace advtext::cli
