#include "navlab/train.hpp"

#include <chrono>
#include <cmath>
#include <stdexcept>

#include "navlab/parallel.hpp"
#include "navlab/rollout.hpp"

namespace navlab::train {

namespace {

using Clock = std::chrono::steady_clock;

double elapsed_ms(Clock::time_point start) {
  return std::chrono::duration<double, std::milli>(Clock::now() - start).count();
}

std::vector<int> sample_batch_indices(int n_episodes, int batch_size, Rng& rng) {
  std::vector<int> indices(static_cast<std::size_t>(batch_size));
  for (int& idx : indices) idx = rng.below(n_episodes);
  return indices;
}

}  // namespace

policy::PolicyParams sft_update(const std::vector<const envgraph::EpisodeSpec*>& episodes,
                                const policy::PolicyParams& params, double lr) {
  if (episodes.empty())
    throw std::invalid_argument("sft_update: empty episode batch");

  FeatureVector grad = FeatureVector::Zero();
  for (const envgraph::EpisodeSpec* episode : episodes) {
    envgraph::AgentState state = envgraph::initial_state(*episode);
    bool terminated = false;
    while (!terminated) {
      const auto cands = envgraph::candidates(state, *episode);
      const FeatureMatrix features = envgraph::feature_matrix(cands);
      const int expert = envgraph::expert_action(state, *episode);
      grad += policy::grad_logprob(features, expert, params);
      std::tie(state, terminated) = envgraph::step(state, cands[expert], *episode);
    }
  }
  grad /= static_cast<double>(episodes.size());
  return optim::apply_update(params, grad, lr);
}

optim::RolloutGroup rollout_group(const envgraph::EpisodeSpec& episode,
                                  const policy::PolicyParams& params, int k,
                                  const reward::RewardConfig& reward_cfg, Rng& rng) {
  if (k < 2) throw std::invalid_argument("rollout_group: group size must be >= 2");

  optim::RolloutGroup group;
  group.episode = &episode;
  group.trajectories.reserve(static_cast<std::size_t>(k));
  group.rewards.resize(k);
  const auto sample_picker = [](const policy::ActionDistribution& dist, int, Rng& r) {
    return policy::select(dist, policy::SelectMode::Sample, r);
  };
  for (int i = 0; i < k; ++i) {
    optim::TrajectoryRecord traj = rollout_episode(params, episode, sample_picker, rng);
    traj.reward = reward::trajectory_reward(traj.d_final, traj.length,
                                            episode.l_star, reward_cfg);
    group.rewards[i] = traj.reward;
    group.trajectories.push_back(std::move(traj));
  }
  return group;
}

bool hard_case_check(const optim::RolloutGroup& group, double epsilon) {
  for (const auto& traj : group.trajectories)
    if (traj.d_final < epsilon) return false;
  return true;
}

TrainResult train(const TrainConfig& cfg,
                  const std::vector<envgraph::EpisodeSpec>& episodes) {
  if (episodes.empty()) throw std::invalid_argument("train: no episodes");
  if (cfg.batch_size < 1) throw std::invalid_argument("train: batch_size must be >= 1");
  if (cfg.group_size < 2) throw std::invalid_argument("train: group_size must be >= 2");
  if (cfg.hard_buffer_trigger < 1)
    throw std::invalid_argument("train: hard-case trigger must be >= 1");

  const int n_episodes = static_cast<int>(episodes.size());
  TrainResult result;
  policy::PolicyParams params;  // zero-initialized weights

  // SFT warm-up on expert trajectories.
  for (int iter = 0; iter < cfg.warmup_steps; ++iter) {
    Rng batch_rng = make_rng(cfg.seed, {stream::kSftBatch, static_cast<std::uint64_t>(iter)});
    const auto indices = sample_batch_indices(n_episodes, cfg.batch_size, batch_rng);
    std::vector<const envgraph::EpisodeSpec*> batch;
    batch.reserve(indices.size());
    for (int idx : indices) batch.push_back(&episodes[idx]);
    params = sft_update(batch, params, cfg.lr_sft);
  }
  result.post_sft = params;

  // pi_ref is the fixed policy before RL training begins; in RL-only mode
  // that is the random initialization.
  result.reference = params;
  const policy::PolicyParams& ref = result.reference;

  HardCaseBuffer buffer;
  buffer.trigger = cfg.hard_buffer_trigger;
  double reward_sum_seen = 0.0;
  std::int64_t reward_count_seen = 0;

  for (int iter = 0; iter < cfg.rl_steps; ++iter) {
    const auto iter_start = Clock::now();
    Rng batch_rng = make_rng(cfg.seed, {stream::kRlBatch, static_cast<std::uint64_t>(iter)});
    const auto indices = sample_batch_indices(n_episodes, cfg.batch_size, batch_rng);

    // Group rollouts run against an immutable snapshot; substreams are keyed
    // by (seed, episode id, iteration) so scheduling cannot affect results.
    const policy::PolicyParams behavior = params;
    std::vector<optim::RolloutGroup> groups(indices.size());
    parallel_for(static_cast<int>(indices.size()), cfg.workers, [&](int b) {
      const envgraph::EpisodeSpec& ep = episodes[indices[static_cast<std::size_t>(b)]];
      Rng rng = make_rng(cfg.seed, {stream::kRollout, static_cast<std::uint64_t>(ep.id),
                                    static_cast<std::uint64_t>(iter)});
      groups[static_cast<std::size_t>(b)] =
          rollout_group(ep, behavior, cfg.group_size, cfg.reward_cfg, rng);
    });

    double batch_reward_sum = 0.0;
    int batch_traj_count = 0;
    int batch_success_count = 0;
    for (const auto& group : groups) {
      batch_reward_sum += group.rewards.sum();
      batch_traj_count += static_cast<int>(group.trajectories.size());
      for (const auto& traj : group.trajectories)
        if (traj.d_final < group.episode->epsilon) ++batch_success_count;
    }

    // Running mean over every trajectory reward seen before this batch's
    // update, including this batch (the no-group baseline).
    reward_sum_seen += batch_reward_sum;
    reward_count_seen += batch_traj_count;
    const double running_mean = reward_sum_seen / static_cast<double>(reward_count_seen);
    for (auto& group : groups) optim::populate_advantages(group, cfg.optim_cfg, running_mean);

    double mean_kl = 0.0;
    bool aborted = false;
    for (int epoch = 0; epoch < cfg.optim_cfg.inner_epochs && !aborted; ++epoch) {
      std::vector<optim::ObjectiveResult> parts(groups.size());
      const policy::PolicyParams current = params;
      parallel_for(static_cast<int>(groups.size()), cfg.workers, [&](int b) {
        parts[static_cast<std::size_t>(b)] = optim::objective_and_gradient(
            groups[static_cast<std::size_t>(b)], current, ref, cfg.optim_cfg,
            cfg.reward_cfg);
      });
      double objective = 0.0;
      FeatureVector grad = FeatureVector::Zero();
      double kl = 0.0;
      for (const auto& part : parts) {
        objective += part.objective;
        grad += part.grad;
        kl += part.mean_kl;
      }
      const double inv_b = 1.0 / static_cast<double>(parts.size());
      objective *= inv_b;
      grad *= inv_b;
      kl *= inv_b;
      if (epoch == 0) mean_kl = kl;

      if (!std::isfinite(objective) || !grad.allFinite()) {
        result.aborted = true;
        result.abort_reason = "non-finite objective at iteration " + std::to_string(iter);
        aborted = true;
        break;
      }
      params = optim::apply_update(params, grad, cfg.lr_rl);
    }
    if (result.aborted) break;

    for (std::size_t b = 0; b < groups.size(); ++b) {
      if (hard_case_check(groups[b], groups[b].episode->epsilon))
        buffer.episode_ids.push_back(groups[b].episode->id);
    }
    if (buffer.should_flush()) {
      std::vector<const envgraph::EpisodeSpec*> hard_batch;
      hard_batch.reserve(buffer.episode_ids.size());
      for (int id : buffer.episode_ids) {
        for (const auto& ep : episodes) {
          if (ep.id == id) {
            hard_batch.push_back(&ep);
            break;
          }
        }
      }
      params = sft_update(hard_batch, params, cfg.lr_sft);
      buffer.episode_ids.clear();
    }

    LogRow row;
    row.iteration = iter + 1;
    row.mean_reward = batch_reward_sum / static_cast<double>(batch_traj_count);
    row.success_frac =
        static_cast<double>(batch_success_count) / static_cast<double>(batch_traj_count);
    row.mean_kl = mean_kl;
    row.buffer_size = buffer.episode_ids.size();
    row.wall_ms = elapsed_ms(iter_start);
    result.log.push_back(row);
  }

  result.final_params = params;
  return result;
}

}  // namespace navlab::train
