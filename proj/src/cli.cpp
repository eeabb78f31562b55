#include "navlab/cli.hpp"

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "navlab/config.hpp"
#include "navlab/serialize.hpp"
#include "navlab/train.hpp"

namespace navlab::cli {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

config::ExperimentConfig load_config(const CommonOpts& opts) {
  if (opts.config_path.empty())
    throw std::invalid_argument("missing --config");
  config::ExperimentConfig cfg = config::load_file(opts.config_path);
  if (opts.seed) cfg.seed = *opts.seed;
  return cfg;
}

fs::path resolve_out_dir(const CommonOpts& opts, const config::ExperimentConfig& cfg) {
  std::string dir = cfg.output_dir;
  if (const char* env = std::getenv(kOutputDirEnvVar); env && *env) dir = env;
  if (opts.out_dir) dir = *opts.out_dir;
  fs::path path(dir);
  fs::create_directories(path);
  return path;
}

train::TrainConfig build_train_config(const config::ExperimentConfig& cfg, int workers) {
  train::TrainConfig tc;
  tc.batch_size = cfg.train.batch_size;
  tc.group_size = cfg.train.group_size;
  tc.warmup_steps = cfg.train.warmup_steps;
  tc.rl_steps = cfg.train.rl_steps;
  tc.hard_buffer_trigger = cfg.train.hard_buffer_trigger;
  tc.lr_sft = cfg.train.lr_sft;
  tc.lr_rl = cfg.optim.lr;
  tc.reward_cfg = cfg.reward;
  tc.optim_cfg = cfg.optim;
  tc.seed = cfg.seed;
  tc.workers = workers;
  return tc;
}

}  // namespace

serialize::EnvBundle build_bundle(const config::ExperimentConfig& cfg) {
  serialize::EnvBundle bundle;
  bundle.n_train_graphs = cfg.env.train_graphs;
  const int total_graphs = cfg.env.train_graphs + cfg.env.val_graphs;
  int next_episode_id = 0;
  for (int g = 0; g < total_graphs; ++g) {
    const std::uint64_t graph_seed =
        splitmix64(cfg.seed ^ splitmix64(stream::kGraph + static_cast<std::uint64_t>(g)));
    auto graph = std::make_unique<envgraph::NavGraph>(envgraph::generate_graph(
        cfg.env.n_nodes, cfg.env.area_side, cfg.env.connect_radius, graph_seed));
    const std::uint64_t episode_seed =
        splitmix64(cfg.seed ^ splitmix64(stream::kEpisodes + static_cast<std::uint64_t>(g)));
    auto episodes = envgraph::sample_episodes(
        *graph, cfg.env.episodes_per_graph, {cfg.env.l_lo, cfg.env.l_hi},
        cfg.env.noise_sigma, cfg.env.epsilon, episode_seed);
    for (auto& ep : episodes) {
      ep.graph_id = g;
      ep.id = next_episode_id++;
    }
    auto& split = g < cfg.env.train_graphs ? bundle.train_episodes : bundle.val_episodes;
    split.insert(split.end(), episodes.begin(), episodes.end());
    bundle.graphs.push_back(std::move(graph));
  }
  return bundle;
}

namespace {

std::vector<eval::PerturbSpec> build_perturb_grid(const config::ExperimentConfig& cfg) {
  std::vector<eval::PerturbSpec> specs;
  specs.push_back(eval::PerturbSpec::none());
  for (double p : cfg.eval.global_probs)
    if (p > 0.0) specs.push_back(eval::PerturbSpec::global(p));
  for (int n : cfg.eval.early_steps) specs.push_back(eval::PerturbSpec::early(n));
  return specs;
}

std::vector<std::uint64_t> eval_seeds(const config::ExperimentConfig& cfg) {
  std::vector<std::uint64_t> seeds;
  for (int s = 0; s < cfg.eval.seeds; ++s)
    seeds.push_back(cfg.seed + static_cast<std::uint64_t>(s));
  return seeds;
}

int guarded(const char* what, const std::function<void()>& body) {
  try {
    body();
    return 0;
  } catch (const std::exception& e) {
    std::cerr << what << ": error: " << e.what() << "\n";
    return 1;
  }
}

}  // namespace

int cmd_gen_env(const CommonOpts& opts) {
  return guarded("gen-env", [&] {
    const config::ExperimentConfig cfg = load_config(opts);
    const fs::path out = resolve_out_dir(opts, cfg);
    const serialize::EnvBundle bundle = build_bundle(cfg);
    const fs::path path = out / kEnvBundleFile;
    serialize::write_env_bundle(path.string(), bundle, config::to_json(cfg));
    std::cout << "wrote " << path.string() << " (" << bundle.train_episodes.size()
              << " train / " << bundle.val_episodes.size() << " val episodes)\n";
  });
}

int cmd_train(const CommonOpts& opts, const std::string& env_path) {
  return guarded("train", [&] {
    const config::ExperimentConfig cfg = load_config(opts);
    const fs::path out = resolve_out_dir(opts, cfg);
    const serialize::EnvBundle bundle = serialize::load_env_bundle(env_path);
    const train::TrainConfig tc = build_train_config(cfg, opts.workers);

    const train::TrainResult result = train::train(tc, bundle.train_episodes);
    const json echo = config::to_json(cfg);
    serialize::write_checkpoint((out / kPostSftCheckpointFile).string(),
                                {result.post_sft, result.reference, "post_sft"}, echo);
    serialize::write_checkpoint((out / kFinalCheckpointFile).string(),
                                {result.final_params, result.reference, "final"}, echo);
    serialize::write_train_log((out / kTrainLogFile).string(), result.log, echo);
    if (result.aborted)
      throw std::runtime_error("training aborted (" + result.abort_reason +
                               "); last checkpoint retained");
    std::cout << "wrote " << (out / kFinalCheckpointFile).string() << " and "
              << (out / kTrainLogFile).string() << "\n";
  });
}

int cmd_eval(const CommonOpts& opts, const std::string& env_path,
             const std::vector<std::pair<std::string, std::string>>& checkpoints) {
  return guarded("eval", [&] {
    if (checkpoints.empty()) throw std::invalid_argument("missing --checkpoint");
    const config::ExperimentConfig cfg = load_config(opts);
    const fs::path out = resolve_out_dir(opts, cfg);
    const serialize::EnvBundle bundle = serialize::load_env_bundle(env_path);

    std::vector<eval::Method> methods;
    for (const auto& [label, path] : checkpoints) {
      const serialize::Checkpoint c = serialize::load_checkpoint(path);
      methods.push_back({label.empty() ? c.phase : label, c.params});
    }

    const auto specs = build_perturb_grid(cfg);
    const auto seeds = eval_seeds(cfg);
    const eval::RobustnessTable table =
        eval::robustness_table(methods, bundle.val_episodes, specs, seeds, opts.workers);

    const json echo = config::to_json(cfg);
    serialize::write_robustness_csv((out / kRobustnessCsvFile).string(), table, echo);
    serialize::write_robustness_summary((out / kRobustnessSummaryFile).string(), table,
                                        seeds, echo);
    std::cout << "wrote " << (out / kRobustnessCsvFile).string() << " and "
              << (out / kRobustnessSummaryFile).string() << "\n";
  });
}

int cmd_report(const std::string& summary_path) {
  return guarded("report", [&] {
    std::ifstream in(summary_path);
    if (!in) throw std::runtime_error("cannot open: " + summary_path);
    json j;
    in >> j;

    std::printf("%-12s %-14s %8s %8s %8s %8s %8s\n", "method", "perturbation", "OSR",
                "NE", "SR", "SPL", "dSPL");
    for (const auto& row : j.at("rows")) {
      const std::string kind = row.at("perturb_kind").get<std::string>();
      const double param = row.at("perturb_param").get<double>();
      char label[32];
      if (kind == "global")
        std::snprintf(label, sizeof label, "global p=%.2g", param);
      else if (kind == "early")
        std::snprintf(label, sizeof label, "early N=%d", static_cast<int>(param));
      else
        std::snprintf(label, sizeof label, "none");
      std::printf("%-12s %-14s %8.2f %8.2f %8.2f %8.2f %8.2f\n",
                  row.at("method").get<std::string>().c_str(), label,
                  row.at("OSR").get<double>(), row.at("NE").get<double>(),
                  row.at("SR").get<double>(), row.at("SPL").get<double>(),
                  row.at("dSPL").get<double>());
    }
  });
}

}  // namespace navlab::cli
