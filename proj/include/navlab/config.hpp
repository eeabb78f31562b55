#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "navlab/optim.hpp"
#include "navlab/reward.hpp"

namespace navlab::config {

struct EnvConfig {
  int n_nodes = 60;
  double area_side = 30.0;
  double connect_radius = 6.0;
  int train_graphs = 6;
  int val_graphs = 20;
  int episodes_per_graph = 3;
  double l_lo = 8.0;
  double l_hi = 20.0;
  double noise_sigma = 3.0;
  double epsilon = 3.0;
};

struct TrainSection {
  int batch_size = 8;
  int group_size = 8;
  int warmup_steps = 300;
  int rl_steps = 400;
  std::uint64_t hard_buffer_trigger = 200;  // UINT64_MAX encodes "inf"
  double lr_sft = 0.5;
};

struct EvalSection {
  std::vector<double> global_probs = {0.0, 0.2, 0.4, 0.8};
  std::vector<int> early_steps = {1, 2, 3};
  int seeds = 3;
};

struct ExperimentConfig {
  std::uint64_t seed = 7;
  std::string output_dir = "out";
  EnvConfig env;
  reward::RewardConfig reward;
  optim::OptimConfig optim;
  TrainSection train;
  EvalSection eval;
};

/// Parses and validates a config file. Unknown keys and out-of-range values
/// are rejected with field-level messages.
ExperimentConfig load_file(const std::string& path);
ExperimentConfig from_json(const nlohmann::json& j);

/// Canonical serialization of the effective config; embedded as the echo in
/// every output file.
nlohmann::json to_json(const ExperimentConfig& cfg);

}  // namespace navlab::config
