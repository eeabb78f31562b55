#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "navlab/config.hpp"
#include "navlab/serialize.hpp"

namespace navlab::cli {

inline constexpr const char* kEnvBundleFile = "env_bundle.json";
inline constexpr const char* kTrainLogFile = "train_log.csv";
inline constexpr const char* kPostSftCheckpointFile = "checkpoint_post_sft.json";
inline constexpr const char* kFinalCheckpointFile = "checkpoint_final.json";
inline constexpr const char* kRobustnessCsvFile = "robustness.csv";
inline constexpr const char* kRobustnessSummaryFile = "robustness_summary.json";

/// Output-dir override environment variable (flag > env var > config).
inline constexpr const char* kOutputDirEnvVar = "NAVLAB_OUT";

struct CommonOpts {
  std::string config_path;
  std::optional<std::uint64_t> seed;  // overrides the config seed
  std::optional<std::string> out_dir; // overrides env var and config
  int workers = 1;
};

/// Generates the graphs and train/val-unseen episode split for a config.
/// Graph and episode seeds are keyed by (config seed, graph index), so the
/// val split always comes from graphs the training split never saw.
serialize::EnvBundle build_bundle(const config::ExperimentConfig& cfg);

/// Writes the env bundle (graphs + train/val-unseen episode split).
int cmd_gen_env(const CommonOpts& opts);

/// Runs the training pipeline against a bundle; writes checkpoints + log.
int cmd_train(const CommonOpts& opts, const std::string& env_path);

/// Evaluates checkpoints over the config's perturbation grid on the
/// val-unseen split; writes the robustness CSV and JSON summary.
/// Checkpoints are (label, path) pairs; an empty label uses the stored phase.
int cmd_eval(const CommonOpts& opts, const std::string& env_path,
             const std::vector<std::pair<std::string, std::string>>& checkpoints);

/// Prints a robustness summary JSON as an aligned table.
int cmd_report(const std::string& summary_path);

}  // namespace navlab::cli
