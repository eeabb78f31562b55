#pragma once

#include <string>
#include <vector>

#include "navlab/envgraph.hpp"
#include "navlab/policy.hpp"
#include "navlab/reward.hpp"
#include "navlab/types.hpp"

namespace navlab::optim {

struct StepRecord {
  FeatureMatrix features;  // one column per candidate at this decision point
  int chosen = 0;
  double logp_old = 0.0;  // behavior log-prob stored at sampling time
  double d_t = 0.0;       // goal distance after the step
  double edge_len = 0.0;  // 0 for stop
};

struct TrajectoryRecord {
  std::vector<StepRecord> steps;
  std::vector<int> path;  // node sequence including the start node
  double d_start = 0.0;
  double d_final = 0.0;
  double length = 0.0;  // accumulated path length L_k
  double reward = 0.0;  // r_k
};

/// K trajectories sampled for one episode under one behavior snapshot.
struct RolloutGroup {
  const envgraph::EpisodeSpec* episode = nullptr;
  std::vector<TrajectoryRecord> trajectories;
  Eigen::VectorXd rewards;
  Eigen::VectorXd advantages;
};

enum class Variant { DrGrpo, Grpo, Gspo, Gmpo, ReinforceNoGroup };

std::string variant_name(Variant v);
Variant variant_from_name(const std::string& name);

struct OptimConfig {
  Variant variant = Variant::DrGrpo;
  double delta = 0.2;      // token-level ratio clip width
  double beta = 0.01;      // KL penalty weight
  int inner_epochs = 1;    // updates per sampled batch; 1 keeps ratios at 1
  double gspo_delta = 0.1; // sequence-level clip width
  double gmpo_eps = 0.4;   // log-space token clip half-width
  double std_floor = 1e-6;
  double lr = 0.05;
};

/// Debiased advantage: r_k - mean(r). Requires K >= 2.
Eigen::VectorXd advantage_drgrpo(const Eigen::VectorXd& rewards);

/// Variance-normalized advantage: (r_k - mean) / max(pop std, floor).
Eigen::VectorXd advantage_grpo(const Eigen::VectorXd& rewards, double std_floor);

/// No-group baseline: r_k - baseline (running batch mean, caller-maintained).
Eigen::VectorXd advantage_reinforce(const Eigen::VectorXd& rewards, double baseline);

/// Populates group.advantages for the given variant. The reinforce variant
/// needs the cross-group running baseline.
void populate_advantages(RolloutGroup& group, const OptimConfig& cfg,
                         double reinforce_baseline = 0.0);

/// Importance ratio exp(logp_new - logp_old).
double ratio(double logp_new, double logp_old);

/// Clipped surrogate term min(g*a*rho, g*a*clip(rho, 1-delta, 1+delta)).
double clipped_term(double gamma, double adv, double rho, double delta);

struct ObjectiveResult {
  double objective = 0.0;
  FeatureVector grad = FeatureVector::Zero();
  double mean_kl = 0.0;  // mean per-step KL vs the reference, for logging
};

/// Objective value and exact analytic gradient for the configured variant.
/// Advantages and progress coefficients are treated as constants
/// (score-function estimator); clipped branches contribute zero gradient.
ObjectiveResult objective_and_gradient(const RolloutGroup& group,
                                       const policy::PolicyParams& params,
                                       const policy::PolicyParams& ref,
                                       const OptimConfig& cfg,
                                       const reward::RewardConfig& reward_cfg);

/// Gradient-ascent step: w <- w + lr * grad, version incremented.
/// Throws on non-finite gradients.
policy::PolicyParams apply_update(const policy::PolicyParams& params,
                                  const FeatureVector& grad, double lr);

}  // namespace navlab::optim
