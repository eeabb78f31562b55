#pragma once

#include <memory>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "navlab/envgraph.hpp"
#include "navlab/eval.hpp"
#include "navlab/policy.hpp"
#include "navlab/train.hpp"

namespace navlab::serialize {

/// Graphs plus the train / val-unseen episode split. Graphs are heap-owned
/// so episode pointers stay valid when the bundle moves.
struct EnvBundle {
  std::vector<std::unique_ptr<envgraph::NavGraph>> graphs;
  int n_train_graphs = 0;
  std::vector<envgraph::EpisodeSpec> train_episodes;
  std::vector<envgraph::EpisodeSpec> val_episodes;
};

std::string env_bundle_to_string(const EnvBundle& bundle, const nlohmann::json& config_echo);
void write_env_bundle(const std::string& path, const EnvBundle& bundle,
                      const nlohmann::json& config_echo);
EnvBundle load_env_bundle(const std::string& path);

struct Checkpoint {
  policy::PolicyParams params;
  policy::PolicyParams reference;
  std::string phase;  // "post_sft" | "final"
};

void write_checkpoint(const std::string& path, const Checkpoint& checkpoint,
                      const nlohmann::json& config_echo);
Checkpoint load_checkpoint(const std::string& path);

/// CSV schema: iteration,mean_reward,success_frac,mean_kl,buffer_size,wall_ms
/// preceded by comment lines carrying the artifact version and config echo.
void write_train_log(const std::string& path, const std::vector<train::LogRow>& log,
                     const nlohmann::json& config_echo);

/// CSV schema: method,perturb_kind,perturb_param,seed,OSR,NE,SR,SPL,dSPL
/// (one row per method x perturbation x seed).
void write_robustness_csv(const std::string& path, const eval::RobustnessTable& table,
                          const nlohmann::json& config_echo);

/// Seed-aggregated table plus config echo, for the `report` subcommand.
void write_robustness_summary(const std::string& path, const eval::RobustnessTable& table,
                              const std::vector<std::uint64_t>& seeds,
                              const nlohmann::json& config_echo);

}  // namespace navlab::serialize
