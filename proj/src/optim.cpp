#include "navlab/optim.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace navlab::optim {

namespace {

double population_std(const Eigen::VectorXd& v) {
  const double mean = v.mean();
  return std::sqrt((v.array() - mean).square().mean());
}

void require(bool cond, const char* message) {
  if (!cond) throw std::invalid_argument(message);
}

// Advantages must match the variant's estimator; a mismatch means the caller
// mixed estimators between sampling and update. Skipped for K = 1, where no
// relative signal is definable and tests drive the objective directly.
void check_advantages(const RolloutGroup& group, const OptimConfig& cfg) {
  const Eigen::Index k = group.rewards.size();
  if (k < 2) return;
  constexpr double tol = 1e-9;
  switch (cfg.variant) {
    case Variant::DrGrpo: {
      const Eigen::VectorXd expect = advantage_drgrpo(group.rewards);
      require((group.advantages - expect).lpNorm<Eigen::Infinity>() < tol,
              "objective_and_gradient: advantages do not match drgrpo estimator");
      break;
    }
    case Variant::Grpo:
    case Variant::Gspo:
    case Variant::Gmpo: {
      const Eigen::VectorXd expect = advantage_grpo(group.rewards, cfg.std_floor);
      require((group.advantages - expect).lpNorm<Eigen::Infinity>() < tol,
              "objective_and_gradient: advantages do not match grpo estimator");
      break;
    }
    case Variant::ReinforceNoGroup: {
      const Eigen::VectorXd shift = group.advantages - group.rewards;
      require((shift.array() - shift[0]).abs().maxCoeff() < tol,
              "objective_and_gradient: advantages do not match reinforce baseline");
      break;
    }
  }
}

}  // namespace

std::string variant_name(Variant v) {
  switch (v) {
    case Variant::DrGrpo: return "drgrpo";
    case Variant::Grpo: return "grpo";
    case Variant::Gspo: return "gspo";
    case Variant::Gmpo: return "gmpo";
    case Variant::ReinforceNoGroup: return "reinforce_nogroup";
  }
  return "unknown";
}

Variant variant_from_name(const std::string& name) {
  if (name == "drgrpo") return Variant::DrGrpo;
  if (name == "grpo") return Variant::Grpo;
  if (name == "gspo") return Variant::Gspo;
  if (name == "gmpo") return Variant::Gmpo;
  if (name == "reinforce_nogroup") return Variant::ReinforceNoGroup;
  throw std::invalid_argument("unknown optimizer variant: " + name);
}

Eigen::VectorXd advantage_drgrpo(const Eigen::VectorXd& rewards) {
  if (rewards.size() < 2)
    throw std::invalid_argument("advantage_drgrpo: group size must be >= 2");
  if (rewards.maxCoeff() == rewards.minCoeff())
    return Eigen::VectorXd::Zero(rewards.size());
  return rewards.array() - rewards.mean();
}

Eigen::VectorXd advantage_grpo(const Eigen::VectorXd& rewards, double std_floor) {
  if (rewards.size() < 2)
    throw std::invalid_argument("advantage_grpo: group size must be >= 2");
  if (rewards.maxCoeff() == rewards.minCoeff())
    return Eigen::VectorXd::Zero(rewards.size());
  const double scale = std::max(population_std(rewards), std_floor);
  return (rewards.array() - rewards.mean()) / scale;
}

Eigen::VectorXd advantage_reinforce(const Eigen::VectorXd& rewards, double baseline) {
  return rewards.array() - baseline;
}

void populate_advantages(RolloutGroup& group, const OptimConfig& cfg,
                         double reinforce_baseline) {
  switch (cfg.variant) {
    case Variant::DrGrpo:
      group.advantages = advantage_drgrpo(group.rewards);
      break;
    case Variant::Grpo:
    case Variant::Gspo:
    case Variant::Gmpo:
      group.advantages = advantage_grpo(group.rewards, cfg.std_floor);
      break;
    case Variant::ReinforceNoGroup:
      group.advantages = advantage_reinforce(group.rewards, reinforce_baseline);
      break;
  }
}

double ratio(double logp_new, double logp_old) { return std::exp(logp_new - logp_old); }

double clipped_term(double gamma, double adv, double rho, double delta) {
  const double ga = gamma * adv;
  return std::min(ga * rho, ga * std::clamp(rho, 1.0 - delta, 1.0 + delta));
}

ObjectiveResult objective_and_gradient(const RolloutGroup& group,
                                       const policy::PolicyParams& params,
                                       const policy::PolicyParams& ref,
                                       const OptimConfig& cfg,
                                       const reward::RewardConfig& /*reward_cfg*/) {
  const std::size_t k_count = group.trajectories.size();
  require(k_count >= 1, "objective_and_gradient: empty group");
  require(group.rewards.size() == static_cast<Eigen::Index>(k_count),
          "objective_and_gradient: rewards size mismatch");
  require(group.advantages.size() == static_cast<Eigen::Index>(k_count),
          "objective_and_gradient: advantages size mismatch");
  require(group.rewards.allFinite() && group.advantages.allFinite(),
          "objective_and_gradient: non-finite rewards or advantages");
  require(group.episode != nullptr, "objective_and_gradient: missing episode");
  for (const TrajectoryRecord& traj : group.trajectories)
    require(!traj.steps.empty(), "objective_and_gradient: empty trajectory");
  check_advantages(group, cfg);

  const double l_star = group.episode->l_star;
  const double inv_k = 1.0 / static_cast<double>(k_count);

  ObjectiveResult result;
  double kl_sum = 0.0;
  std::size_t step_count = 0;

  for (std::size_t k = 0; k < k_count; ++k) {
    const TrajectoryRecord& traj = group.trajectories[k];
    const double adv = group.advantages[static_cast<Eigen::Index>(k)];
    const int adv_sign = reward::sign_of(adv);
    const double inv_len = 1.0 / static_cast<double>(traj.steps.size());

    double traj_obj = 0.0;
    FeatureVector traj_grad = FeatureVector::Zero();
    // gspo/gmpo aggregate across steps before their nonlinearity
    double log_ratio_sum = 0.0;
    double gmpo_log_sum = 0.0;
    FeatureVector glp_sum = FeatureVector::Zero();
    FeatureVector gmpo_glp_sum = FeatureVector::Zero();

    double d_prev = traj.d_start;
    for (const StepRecord& step : traj.steps) {
      const policy::ActionDistribution dist_theta =
          policy::action_distribution(step.features, params);
      const policy::ActionDistribution dist_ref =
          policy::action_distribution(step.features, ref);
      const double logp_new = dist_theta.logprobs[step.chosen];
      const double log_ratio = logp_new - step.logp_old;
      const double rho = std::exp(log_ratio);
      const FeatureVector glp = policy::grad_logprob(step.features, step.chosen, dist_theta);
      const double kl = policy::kl_divergence(dist_theta, dist_ref);
      kl_sum += kl;
      ++step_count;

      switch (cfg.variant) {
        case Variant::DrGrpo:
        case Variant::Grpo: {
          const double gamma =
              cfg.variant == Variant::DrGrpo
                  ? reward::progress_coefficient(d_prev, step.d_t, l_star, adv_sign)
                  : 1.0;
          const double ga = gamma * adv;
          const double clipped = std::clamp(rho, 1.0 - cfg.delta, 1.0 + cfg.delta);
          const double unclipped_val = ga * rho;
          const double clipped_val = ga * clipped;
          traj_obj += std::min(unclipped_val, clipped_val) - cfg.beta * kl;
          if (unclipped_val <= clipped_val) traj_grad += ga * rho * glp;
          traj_grad -= cfg.beta * policy::grad_kl(step.features, dist_theta, dist_ref);
          break;
        }
        case Variant::Gspo: {
          log_ratio_sum += log_ratio;
          glp_sum += glp;
          break;
        }
        case Variant::Gmpo: {
          const double clipped_lr = std::clamp(log_ratio, -cfg.gmpo_eps, cfg.gmpo_eps);
          gmpo_log_sum += clipped_lr;
          if (log_ratio > -cfg.gmpo_eps && log_ratio < cfg.gmpo_eps)
            gmpo_glp_sum += glp;
          break;
        }
        case Variant::ReinforceNoGroup: {
          traj_obj += adv * logp_new;
          traj_grad += adv * glp;
          break;
        }
      }
      d_prev = step.d_t;
    }

    switch (cfg.variant) {
      case Variant::DrGrpo:
      case Variant::ReinforceNoGroup:
        break;
      case Variant::Grpo:
        traj_obj *= inv_len;
        traj_grad *= inv_len;
        break;
      case Variant::Gspo: {
        const double seq_ratio = std::exp(log_ratio_sum * inv_len);
        const double clipped =
            std::clamp(seq_ratio, 1.0 - cfg.gspo_delta, 1.0 + cfg.gspo_delta);
        const double unclipped_val = seq_ratio * adv;
        const double clipped_val = clipped * adv;
        traj_obj = std::min(unclipped_val, clipped_val);
        if (unclipped_val <= clipped_val)
          traj_grad = adv * seq_ratio * inv_len * glp_sum;
        break;
      }
      case Variant::Gmpo: {
        if (adv != 0.0) {
          const double geo_mean =
              std::exp((gmpo_log_sum + static_cast<double>(traj.steps.size()) *
                                           std::log(std::abs(adv))) *
                       inv_len);
          traj_obj = adv_sign * geo_mean;
          traj_grad = adv_sign * geo_mean * inv_len * gmpo_glp_sum;
        }
        break;
      }
    }

    result.objective += inv_k * traj_obj;
    result.grad += inv_k * traj_grad;
  }

  result.mean_kl = step_count > 0 ? kl_sum / static_cast<double>(step_count) : 0.0;
  return result;
}

policy::PolicyParams apply_update(const policy::PolicyParams& params,
                                  const FeatureVector& grad, double lr) {
  if (!grad.allFinite())
    throw std::runtime_error("apply_update: non-finite gradient");
  policy::PolicyParams next;
  next.w = params.w + lr * grad;
  next.version = params.version + 1;
  return next;
}

}  // namespace navlab::optim
