#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "advtext/experiment.hpp"

namespace {

struct Flags {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> workers;
  std::optional<std::size_t> budget;
  std::optional<double> temperature;
  std::optional<std::string> output;
  std::vector<std::string> assignments;
  std::string kind;
};

void add_common(CLI::App* cmd, Flags& f, bool config_required) {
  auto* c = cmd->add_option("--config", f.config, "experiment config (JSON)");
  if (config_required) c->required()->check(CLI::ExistingFile);
  cmd->add_option("--seed", f.seed, "override the experiment seed");
  cmd->add_option("--workers", f.workers, "worker threads")->check(CLI::PositiveNumber);
  cmd->add_option("--budget", f.budget, "override attack.query_budget");
  cmd->add_option("--temperature", f.temperature, "override attack.temperature")->check(CLI::PositiveNumber);
  cmd->add_option("--output", f.output, "output root directory");
  cmd->add_option("--set", f.assignments, "override any field: dotted.key=value");
}

}  // namespace

int main(int argc, char** argv) {
  namespace cli = advtext::cli;
  CLI::App app{"Cross-task adversarial text toolkit"};
  app.set_version_flag("--version", std::string(ADVTEXT_VERSION));
  app.require_subcommand(1);
  Flags flags;
  for (const auto& name : cli::command_names()) {
    auto* cmd = app.add_subcommand(name);
    add_common(cmd, flags, name != "make-demo");
    if (name == "analyze")
      cmd->add_option("kind", flags.kind, "jaccard | gini | heatmap | hit-rate")
          ->required()
          ->check(CLI::IsMember(cli::analysis_kinds()));
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? cli::kExitOk : cli::kExitUsage;
  }
  const std::string command = app.get_subcommands().front()->get_name();
  try {
    cli::Overrides o{flags.seed, flags.workers, flags.budget, flags.temperature, flags.output, flags.assignments};
    const auto config = flags.config.empty()
                            ? cli::ExperimentConfig(nlohmann::json::object(), std::filesystem::current_path(), o)
                            : cli::ExperimentConfig::load(flags.config, o);
    const auto dir = cli::run(command, config, std::cout, flags.kind);
    std::cout << "wrote " << dir.string() << '\n';
    return cli::kExitOk;
  } catch (...) {
    return cli::report_failure(std::cerr);
  }
}
