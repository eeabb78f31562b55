#pragma once

#include <utility>

#include "navlab/envgraph.hpp"
#include "navlab/optim.hpp"
#include "navlab/policy.hpp"
#include "navlab/rng.hpp"

namespace navlab {

/// Rolls out one episode under `params`, delegating action choice to
/// `pick(dist, step_index, rng)` -> (candidate index, log-prob). Records the
/// per-step candidate features, chosen index, behavior log-prob, post-step
/// goal distance and edge length. The reward field is left to the caller.
template <typename Picker>
optim::TrajectoryRecord rollout_episode(const policy::PolicyParams& params,
                                        const envgraph::EpisodeSpec& episode,
                                        Picker&& pick, Rng& rng) {
  optim::TrajectoryRecord record;
  envgraph::AgentState state = envgraph::initial_state(episode);
  record.d_start = state.d_t;
  record.path.push_back(state.node);

  bool terminated = false;
  int step_index = 0;
  while (!terminated) {
    const auto cands = envgraph::candidates(state, episode);
    const FeatureMatrix features = envgraph::feature_matrix(cands);
    const policy::ActionDistribution dist = policy::action_distribution(features, params);
    const auto [chosen, logprob] = pick(dist, step_index, rng);

    const auto [next_state, done] = envgraph::step(state, cands[chosen], episode);
    optim::StepRecord step;
    step.features = features;
    step.chosen = chosen;
    step.logp_old = logprob;
    step.d_t = next_state.d_t;
    step.edge_len = cands[chosen].kind == envgraph::ActionKind::Move
                        ? episode.graph->edge_length(state.node, cands[chosen].target)
                        : 0.0;
    record.steps.push_back(std::move(step));
    if (cands[chosen].kind == envgraph::ActionKind::Move)
      record.path.push_back(next_state.node);

    state = next_state;
    terminated = done;
    ++step_index;
  }

  record.d_final = state.d_t;
  record.length = state.path_len;
  return record;
}

}  // namespace navlab
