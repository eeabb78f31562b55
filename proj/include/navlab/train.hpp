#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "navlab/envgraph.hpp"
#include "navlab/optim.hpp"
#include "navlab/policy.hpp"
#include "navlab/reward.hpp"
#include "navlab/rng.hpp"

namespace navlab::train {

/// Sentinel for a disabled hard-case flush ("M = inf").
inline constexpr std::uint64_t kNoFlush = UINT64_MAX;

struct TrainConfig {
  int batch_size = 8;  // B episodes per iteration
  int group_size = 8;  // K rollouts per episode
  int warmup_steps = 300;
  int rl_steps = 400;
  std::uint64_t hard_buffer_trigger = 200;  // M; kNoFlush disables the flush
  double lr_sft = 0.5;
  double lr_rl = 0.05;
  reward::RewardConfig reward_cfg;
  optim::OptimConfig optim_cfg;
  std::uint64_t seed = 7;
  int workers = 1;
};

/// Episode ids whose most recent group had zero successes; cleared on flush.
struct HardCaseBuffer {
  std::vector<int> episode_ids;
  std::uint64_t trigger = 200;

  bool should_flush() const {
    return trigger != kNoFlush && episode_ids.size() >= trigger;
  }
};

struct LogRow {
  int iteration = 0;
  double mean_reward = 0.0;
  double success_frac = 0.0;
  double mean_kl = 0.0;
  std::uint64_t buffer_size = 0;
  double wall_ms = 0.0;
};

struct TrainResult {
  policy::PolicyParams post_sft;
  policy::PolicyParams final_params;
  policy::PolicyParams reference;  // pi_ref, frozen when RL begins
  std::vector<LogRow> log;
  bool aborted = false;
  std::string abort_reason;
};

/// One gradient-ascent step on the mean (over episodes) of the summed
/// log-likelihood of expert actions, teacher-forced along the shortest path.
policy::PolicyParams sft_update(const std::vector<const envgraph::EpisodeSpec*>& episodes,
                                const policy::PolicyParams& params, double lr);

/// K stochastic rollouts for one episode plus their rewards. Advantages are
/// left to the optimizer.
optim::RolloutGroup rollout_group(const envgraph::EpisodeSpec& episode,
                                  const policy::PolicyParams& params, int k,
                                  const reward::RewardConfig& reward_cfg, Rng& rng);

/// True iff every trajectory in the group missed the goal (d_final >= eps).
bool hard_case_check(const optim::RolloutGroup& group, double epsilon);

/// Full pipeline: SFT warm-up, reference snapshot, RL iterations with
/// group sampling and hard-case replay.
TrainResult train(const TrainConfig& cfg,
                  const std::vector<envgraph::EpisodeSpec>& episodes);

}  // namespace navlab::train
