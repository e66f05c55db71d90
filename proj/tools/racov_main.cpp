// racov: coverage of transparent-model features in LLM rationales.
// Pipeline stages run over a shared run directory:
//   racov train    --config cfg.json --run RUN
//   racov annotate --run RUN [--config cfg.json] [--offline]
//   racov evaluate --run RUN [--config cfg.json]
//   racov report   --run RUN
//   racov all      --config cfg.json --run RUN

#include <filesystem>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "racov/error.hpp"
#include "racov/pipeline.hpp"

namespace {

racov::RunConfig resolve_config(const std::string& config_path,
                                const std::filesystem::path& run_dir,
                                bool force_offline) {
  racov::RunConfig cfg = !config_path.empty()
                             ? racov::load_run_config(config_path)
                             : racov::run_dir_config(run_dir);
  if (force_offline) cfg.offline = true;
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"coverage metrics for LLM rationales against a transparent reference model"};
  app.require_subcommand(1);

  std::string config_path;
  std::string run_dir;
  bool offline = false;

  auto add_common = [&](CLI::App* cmd, bool config_required) {
    auto* copt = cmd->add_option("--config", config_path, "run config file (json)");
    if (config_required) copt->required();
    cmd->add_option("--run", run_dir, "run directory")->required();
    cmd->add_flag("--offline", offline, "never touch the network");
  };

  CLI::App* train = app.add_subcommand("train", "split data, fit the reference model");
  add_common(train, true);
  CLI::App* annotate =
      app.add_subcommand("annotate", "collect LLM labels and rationales");
  add_common(annotate, false);
  CLI::App* evaluate =
      app.add_subcommand("evaluate", "match features, compute coverage and statistics");
  add_common(evaluate, false);
  CLI::App* report = app.add_subcommand("report", "render tables and figures");
  report->add_option("--run", run_dir, "run directory")->required();
  CLI::App* all = app.add_subcommand("all", "train, annotate, evaluate, report");
  add_common(all, true);

  CLI11_PARSE(app, argc, argv);

  try {
    if (train->parsed())
      racov::cmd_train(resolve_config(config_path, run_dir, offline), run_dir, std::cout);
    else if (annotate->parsed())
      racov::cmd_annotate(resolve_config(config_path, run_dir, offline), run_dir,
                          std::cout);
    else if (evaluate->parsed())
      racov::cmd_evaluate(resolve_config(config_path, run_dir, offline), run_dir,
                          std::cout);
    else if (report->parsed())
      racov::cmd_report(run_dir, std::cout);
    else if (all->parsed())
      racov::cmd_all(resolve_config(config_path, run_dir, offline), run_dir, std::cout);
  } catch (const racov::Error& e) {
    std::cerr << "error [" << racov::error_kind_name(e.kind()) << "]: " << e.what()
              << "\n";
    return racov::error_exit_code(e.kind());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
