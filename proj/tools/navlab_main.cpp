#include <string>
#include <utility>
#include <vector>

#include <CLI11.hpp>

#include "navlab/cli.hpp"
#include "navlab/types.hpp"

namespace {

void add_common(CLI::App* sub, navlab::cli::CommonOpts& opts) {
  sub->add_option("--config", opts.config_path, "experiment config file (JSON)")
      ->required();
  sub->add_option_function<std::uint64_t>(
      "--seed", [&opts](std::uint64_t s) { opts.seed = s; },
      "override the config seed");
  sub->add_option_function<std::string>(
      "--out", [&opts](const std::string& dir) { opts.out_dir = dir; },
      "output directory (overrides NAVLAB_OUT and the config)");
  sub->add_option("--workers", opts.workers, "concurrency cap; never affects results")
      ->check(CLI::PositiveNumber);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"goal-directed graph-navigation RL lab"};
  app.set_version_flag("--version", std::string(navlab::kArtifactVersion));
  app.require_subcommand(1);

  navlab::cli::CommonOpts gen_opts;
  CLI::App* gen = app.add_subcommand("gen-env", "generate graphs and episode splits");
  add_common(gen, gen_opts);

  navlab::cli::CommonOpts train_opts;
  std::string train_env;
  CLI::App* train = app.add_subcommand("train", "run SFT warm-up plus RL training");
  add_common(train, train_opts);
  train->add_option("--env", train_env, "env bundle path")->required();

  navlab::cli::CommonOpts eval_opts;
  std::string eval_env;
  std::vector<std::string> checkpoint_args;
  CLI::App* eval = app.add_subcommand("eval", "robustness evaluation of checkpoints");
  add_common(eval, eval_opts);
  eval->add_option("--env", eval_env, "env bundle path")->required();
  eval->add_option("--checkpoint", checkpoint_args,
                   "checkpoint path, optionally label=path; repeatable")
      ->required();

  std::string summary_path;
  CLI::App* report = app.add_subcommand("report", "print a robustness summary table");
  report->add_option("--summary", summary_path, "robustness summary JSON")->required();

  CLI11_PARSE(app, argc, argv);

  if (gen->parsed()) return navlab::cli::cmd_gen_env(gen_opts);
  if (train->parsed()) return navlab::cli::cmd_train(train_opts, train_env);
  if (eval->parsed()) {
    std::vector<std::pair<std::string, std::string>> checkpoints;
    for (const auto& arg : checkpoint_args) {
      const auto sep = arg.find('=');
      if (sep == std::string::npos)
        checkpoints.emplace_back("", arg);
      else
        checkpoints.emplace_back(arg.substr(0, sep), arg.substr(sep + 1));
    }
    return navlab::cli::cmd_eval(eval_opts, eval_env, checkpoints);
  }
  if (report->parsed()) return navlab::cli::cmd_report(summary_path);
  return 1;
}
