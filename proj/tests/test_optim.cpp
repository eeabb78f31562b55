#include <doctest.h>

#include <cmath>
#include <memory>

#include "navlab/optim.hpp"
#include "navlab/rng.hpp"
#include "oracles.hpp"

using namespace navlab;
using namespace navlab::optim;

namespace {

const reward::RewardConfig kRewardCfg{3.0, 0.25};

Eigen::VectorXd vec(std::initializer_list<double> values) {
  Eigen::VectorXd v(static_cast<Eigen::Index>(values.size()));
  Eigen::Index i = 0;
  for (double x : values) v[i++] = x;
  return v;
}

FeatureMatrix random_features(int n, Rng& rng) {
  FeatureMatrix f(kFeatureDim, n);
  for (int c = 0; c < n; ++c)
    for (int r = 0; r < kFeatureDim; ++r) f(r, c) = rng.uniform() * 2.0 - 1.0;
  f.row(kFeatureDim - 1).setOnes();
  return f;
}

/// Trajectory of n identical steps with constant goal distance (progress
/// coefficient 1) whose stored log-prob is taken under `behavior`.
TrajectoryRecord constant_trajectory(int n_steps, double d_val, double step_len,
                                     const FeatureMatrix& features, int chosen,
                                     const policy::PolicyParams& behavior) {
  TrajectoryRecord traj;
  traj.d_start = d_val;
  const double logp = policy::action_distribution(features, behavior).logprobs[chosen];
  for (int t = 0; t < n_steps; ++t) {
    StepRecord step;
    step.features = features;
    step.chosen = chosen;
    step.logp_old = logp;
    step.d_t = d_val;
    step.edge_len = step_len;
    traj.steps.push_back(step);
  }
  traj.path = {0};
  traj.d_final = d_val;
  traj.length = n_steps * step_len;
  return traj;
}

struct SyntheticGroup {
  std::unique_ptr<envgraph::EpisodeSpec> episode;
  RolloutGroup group;
};

SyntheticGroup make_synthetic(std::vector<TrajectoryRecord> trajectories,
                              double l_star = 10.0) {
  SyntheticGroup s;
  s.episode = std::make_unique<envgraph::EpisodeSpec>();
  s.episode->l_star = l_star;
  s.episode->epsilon = kRewardCfg.epsilon;
  s.group.episode = s.episode.get();
  s.group.rewards.resize(static_cast<Eigen::Index>(trajectories.size()));
  for (std::size_t k = 0; k < trajectories.size(); ++k) {
    trajectories[k].reward = reward::trajectory_reward(
        trajectories[k].d_final, trajectories[k].length, l_star, kRewardCfg);
    s.group.rewards[static_cast<Eigen::Index>(k)] = trajectories[k].reward;
  }
  s.group.trajectories = std::move(trajectories);
  return s;
}

double reinforce_baseline(const RolloutGroup& group) { return group.rewards.mean(); }

/// Rejects (group, params) pairs whose ratios sit within margin of a clip
/// boundary, where finite differences straddle the kink.
bool kink_safe(const RolloutGroup& group, const policy::PolicyParams& params,
               const OptimConfig& cfg, double margin = 1e-4) {
  for (std::size_t k = 0; k < group.trajectories.size(); ++k) {
    const auto& traj = group.trajectories[k];
    const double adv = group.advantages[static_cast<Eigen::Index>(k)];
    double log_ratio_sum = 0.0;
    for (const auto& step : traj.steps) {
      const auto dist = policy::action_distribution(step.features, params);
      const double log_ratio = dist.logprobs[step.chosen] - step.logp_old;
      const double rho = std::exp(log_ratio);
      log_ratio_sum += log_ratio;
      switch (cfg.variant) {
        case Variant::DrGrpo:
        case Variant::Grpo:
          if (std::abs(rho - (1.0 - cfg.delta)) < margin) return false;
          if (std::abs(rho - (1.0 + cfg.delta)) < margin) return false;
          break;
        case Variant::Gmpo:
          if (adv != 0.0 && (std::abs(log_ratio - cfg.gmpo_eps) < margin ||
                             std::abs(log_ratio + cfg.gmpo_eps) < margin))
            return false;
          break;
        default:
          break;
      }
    }
    if (cfg.variant == Variant::Gspo) {
      const double s = std::exp(log_ratio_sum / static_cast<double>(traj.steps.size()));
      if (std::abs(s - (1.0 - cfg.gspo_delta)) < margin) return false;
      if (std::abs(s - (1.0 + cfg.gspo_delta)) < margin) return false;
    }
  }
  return true;
}

}  // namespace

TEST_CASE("advantage estimators") {
  SUBCASE("drgrpo subtracts the group mean") {
    const Eigen::VectorXd a = advantage_drgrpo(vec({1.0, 0.0, 0.5, 0.5}));
    CHECK((a - vec({0.5, -0.5, 0.0, 0.0})).lpNorm<Eigen::Infinity>() < 1e-12);
    CHECK(std::abs(advantage_drgrpo(vec({0.3, 0.3, 0.3})).sum()) < 1e-12);
    Rng rng(1);
    for (int i = 0; i < 20; ++i) {
      Eigen::VectorXd r(6);
      for (int j = 0; j < 6; ++j) r[j] = rng.normal();
      CHECK(std::abs(advantage_drgrpo(r).sum()) < 1e-12);
    }
  }
  SUBCASE("grpo normalizes by the population std") {
    const Eigen::VectorXd a = advantage_grpo(vec({1.0, 0.0}), 1e-6);
    CHECK(a[0] == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(a[1] == doctest::Approx(-1.0).epsilon(1e-12));
    const Eigen::VectorXd zeros = advantage_grpo(vec({0.7, 0.7, 0.7}), 1e-6);
    CHECK(zeros.lpNorm<Eigen::Infinity>() == 0.0);
  }
  SUBCASE("unit-std groups make grpo and drgrpo agree") {
    const Eigen::VectorXd r = vec({1.0, -1.0});  // population std exactly 1
    CHECK((advantage_grpo(r, 1e-6) - advantage_drgrpo(r)).lpNorm<Eigen::Infinity>() <
          1e-12);
  }
  SUBCASE("grpo moments: zero mean, unit population std above the floor") {
    Rng rng(2);
    for (int i = 0; i < 20; ++i) {
      Eigen::VectorXd r(8);
      for (int j = 0; j < 8; ++j) r[j] = rng.normal() * 3.0;
      const Eigen::VectorXd a = advantage_grpo(r, 1e-6);
      CHECK(std::abs(a.mean()) < 1e-12);
      const double std = std::sqrt((a.array() - a.mean()).square().mean());
      CHECK(std == doctest::Approx(1.0).epsilon(1e-9));
    }
  }
  SUBCASE("groups below two are rejected") {
    CHECK_THROWS_AS(advantage_drgrpo(vec({1.0})), std::invalid_argument);
    CHECK_THROWS_AS(advantage_grpo(vec({1.0}), 1e-6), std::invalid_argument);
  }
}

TEST_CASE("ratio and clipped term") {
  CHECK(ratio(-0.3, -0.3) == 1.0);
  CHECK(ratio(-0.5, -0.7) == doctest::Approx(1.221403).epsilon(1e-6));
  CHECK(ratio(-0.2, -0.7) > ratio(-0.5, -0.7));  // monotone in logp_new

  CHECK(clipped_term(1.0, 0.5, 1.0, 0.2) == 0.5);
  CHECK(clipped_term(1.0, 0.5, 1.2214, 0.2) == doctest::Approx(0.6).epsilon(1e-12));
  CHECK(clipped_term(1.0, -0.5, 0.7, 0.2) == doctest::Approx(-0.4).epsilon(1e-12));
  // gamma scales the whole term
  CHECK(clipped_term(1.2, 0.5, 1.0, 0.2) == doctest::Approx(0.6).epsilon(1e-12));
}

TEST_CASE("objective collapses for a single on-policy trajectory") {
  Rng rng(3);
  const FeatureMatrix f = random_features(4, rng);
  policy::PolicyParams params;
  for (int i = 0; i < kFeatureDim; ++i) params.w[i] = rng.normal() * 0.5;

  auto s = make_synthetic({constant_trajectory(5, 4.0, 1.0, f, 1, params)});
  s.group.advantages = vec({0.37});  // single-trajectory group, advantage given

  OptimConfig cfg;
  cfg.variant = Variant::DrGrpo;
  cfg.beta = 0.0;
  const auto res = objective_and_gradient(s.group, params, params, cfg, kRewardCfg);
  CHECK(res.objective == doctest::Approx(0.37 * 5).epsilon(1e-12));
}

TEST_CASE("kl term vanishes when the policy equals the reference") {
  auto fx = oracles::make_random_group(100, 4, kRewardCfg);
  OptimConfig cfg;
  cfg.variant = Variant::DrGrpo;
  cfg.beta = 0.01;
  populate_advantages(fx.group, cfg);

  const auto with_kl =
      objective_and_gradient(fx.group, fx.behavior, fx.behavior, cfg, kRewardCfg);
  OptimConfig no_kl = cfg;
  no_kl.beta = 0.0;
  const auto without_kl =
      objective_and_gradient(fx.group, fx.behavior, fx.behavior, no_kl, kRewardCfg);
  CHECK(with_kl.objective == doctest::Approx(without_kl.objective).epsilon(1e-12));
  CHECK((with_kl.grad - without_kl.grad).lpNorm<Eigen::Infinity>() < 1e-12);
  CHECK(with_kl.mean_kl == 0.0);
}

TEST_CASE("analytic gradients match finite differences for every variant") {
  const OptimConfig base;
  for (Variant variant :
       {Variant::DrGrpo, Variant::Grpo, Variant::Gspo, Variant::Gmpo,
        Variant::ReinforceNoGroup}) {
    CAPTURE(variant_name(variant));
    OptimConfig cfg = base;
    cfg.variant = variant;
    std::uint64_t seed = 1000;
    int checked = 0;
    while (checked < 15) {
      auto fx = oracles::make_random_group(seed, 4, kRewardCfg);
      ++seed;
      populate_advantages(fx.group, cfg, reinforce_baseline(fx.group));

      policy::PolicyParams eval = fx.behavior;
      Rng prng = make_rng(seed, {0x99});
      for (int i = 0; i < kFeatureDim; ++i) eval.w[i] += prng.normal() * 0.1;
      if (!kink_safe(fx.group, eval, cfg)) continue;

      policy::PolicyParams ref = fx.behavior;
      ref.w[1] += 0.3;
      ref.w[4] -= 0.2;

      const auto res = objective_and_gradient(fx.group, eval, ref, cfg, kRewardCfg);
      const FeatureVector fd = oracles::finite_difference_gradient(
          [&](const policy::PolicyParams& q) {
            return objective_and_gradient(fx.group, q, ref, cfg, kRewardCfg).objective;
          },
          eval);
      CHECK(oracles::relative_error(res.grad, fd) < 1e-5);
      ++checked;
    }
  }
}

TEST_CASE("on-policy drgrpo gradient is the progress-weighted score minus the kl grad") {
  auto fx = oracles::make_random_group(200, 4, kRewardCfg);
  OptimConfig cfg;
  cfg.variant = Variant::DrGrpo;
  cfg.beta = 0.01;
  populate_advantages(fx.group, cfg);

  policy::PolicyParams ref = fx.behavior;
  ref.w[0] += 0.4;
  const auto res = objective_and_gradient(fx.group, fx.behavior, ref, cfg, kRewardCfg);

  FeatureVector expect = FeatureVector::Zero();
  const double inv_k = 1.0 / static_cast<double>(fx.group.trajectories.size());
  for (std::size_t k = 0; k < fx.group.trajectories.size(); ++k) {
    const auto& traj = fx.group.trajectories[k];
    const double adv = fx.group.advantages[static_cast<Eigen::Index>(k)];
    double d_prev = traj.d_start;
    for (const auto& step : traj.steps) {
      const auto dist = policy::action_distribution(step.features, fx.behavior);
      const auto dist_ref = policy::action_distribution(step.features, ref);
      // sampled under the same params, so rho = 1 and the clip is inactive
      CHECK(std::abs(std::exp(dist.logprobs[step.chosen] - step.logp_old) - 1.0) <
            1e-12);
      const double gamma = reward::progress_coefficient(d_prev, step.d_t,
                                                        fx.episode->l_star,
                                                        reward::sign_of(adv));
      expect += inv_k * (gamma * adv *
                             policy::grad_logprob(step.features, step.chosen, dist) -
                         cfg.beta * policy::grad_kl(step.features, dist, dist_ref));
      d_prev = step.d_t;
    }
  }
  CHECK((res.grad - expect).lpNorm<Eigen::Infinity>() < 1e-12);
}

TEST_CASE("adding a constant to group rewards changes nothing") {
  for (Variant variant :
       {Variant::DrGrpo, Variant::Grpo, Variant::Gspo, Variant::Gmpo,
        Variant::ReinforceNoGroup}) {
    CAPTURE(variant_name(variant));
    OptimConfig cfg;
    cfg.variant = variant;
    auto fx = oracles::make_random_group(300, 5, kRewardCfg);
    policy::PolicyParams eval = fx.behavior;
    eval.w[2] += 0.05;
    policy::PolicyParams ref = fx.behavior;
    ref.w[3] -= 0.15;

    populate_advantages(fx.group, cfg, reinforce_baseline(fx.group));
    const auto before = objective_and_gradient(fx.group, eval, ref, cfg, kRewardCfg);

    RolloutGroup shifted = fx.group;
    shifted.rewards.array() += 3.7;
    populate_advantages(shifted, cfg, reinforce_baseline(shifted));
    const auto after = objective_and_gradient(shifted, eval, ref, cfg, kRewardCfg);

    CHECK(std::abs(before.objective - after.objective) < 1e-10);
    CHECK((before.grad - after.grad).lpNorm<Eigen::Infinity>() < 1e-10);
  }
}

TEST_CASE("variant reductions on length-1 trajectories") {
  Rng rng(7);
  const FeatureMatrix f = random_features(3, rng);
  policy::PolicyParams behavior;
  for (int i = 0; i < kFeatureDim; ++i) behavior.w[i] = rng.normal() * 0.4;

  // rewards {1, -1}: d=0 with L <= L* vs d=5 with L = 5 L* (alpha 0.25)
  auto s = make_synthetic({constant_trajectory(1, 0.0, 10.0, f, 1, behavior),
                           constant_trajectory(1, 5.0, 50.0, f, 2, behavior)});
  REQUIRE(s.group.rewards[0] == 1.0);
  REQUIRE(s.group.rewards[1] == -1.0);

  policy::PolicyParams eval = behavior;
  eval.w[0] += 0.07;
  policy::PolicyParams ref = behavior;
  ref.w[1] -= 0.2;

  SUBCASE("grpo equals drgrpo when std is 1 and lengths are 1") {
    OptimConfig dr;
    dr.variant = Variant::DrGrpo;
    OptimConfig gr;
    gr.variant = Variant::Grpo;
    RolloutGroup g1 = s.group;
    populate_advantages(g1, dr);
    RolloutGroup g2 = s.group;
    populate_advantages(g2, gr);
    const auto r1 = objective_and_gradient(g1, eval, ref, dr, kRewardCfg);
    const auto r2 = objective_and_gradient(g2, eval, ref, gr, kRewardCfg);
    CHECK(std::abs(r1.objective - r2.objective) < 1e-10);
    CHECK((r1.grad - r2.grad).lpNorm<Eigen::Infinity>() < 1e-10);
  }
  SUBCASE("gspo sequence ratio equals the token ratio") {
    OptimConfig gs;
    gs.variant = Variant::Gspo;
    RolloutGroup g = s.group;
    populate_advantages(g, gs);
    const auto res = objective_and_gradient(g, eval, ref, gs, kRewardCfg);
    double expect = 0.0;
    for (int k = 0; k < 2; ++k) {
      const auto& step = g.trajectories[static_cast<std::size_t>(k)].steps[0];
      const double rho = std::exp(
          policy::action_distribution(step.features, eval).logprobs[step.chosen] -
          step.logp_old);
      expect += 0.5 * clipped_term(1.0, g.advantages[k], rho, gs.gspo_delta);
    }
    CHECK(res.objective == doctest::Approx(expect).epsilon(1e-12));
  }
  SUBCASE("gmpo reduces to sign(adv) |rho adv|") {
    OptimConfig gm;
    gm.variant = Variant::Gmpo;
    RolloutGroup g = s.group;
    populate_advantages(g, gm);
    const auto res = objective_and_gradient(g, eval, ref, gm, kRewardCfg);
    double expect = 0.0;
    for (int k = 0; k < 2; ++k) {
      const auto& step = g.trajectories[static_cast<std::size_t>(k)].steps[0];
      const double log_ratio =
          policy::action_distribution(step.features, eval).logprobs[step.chosen] -
          step.logp_old;
      const double rho = std::exp(std::clamp(log_ratio, -gm.gmpo_eps, gm.gmpo_eps));
      expect += 0.5 * reward::sign_of(g.advantages[k]) * std::abs(rho * g.advantages[k]);
    }
    CHECK(res.objective == doctest::Approx(expect).epsilon(1e-12));
  }
}

TEST_CASE("length normalization bias: doubling length doubles drgrpo, not grpo") {
  Rng rng(8);
  const FeatureMatrix f = random_features(3, rng);
  policy::PolicyParams behavior;
  for (int i = 0; i < kFeatureDim; ++i) behavior.w[i] = rng.normal() * 0.4;

  const int n = 4;
  // trajectories A and B share reward and per-step terms but differ in length;
  // C drags the mean down so A and B get equal positive advantages
  auto sA = make_synthetic({constant_trajectory(n, 1.0, 2.0, f, 0, behavior),
                            constant_trajectory(2 * n, 1.0, 1.0, f, 0, behavior),
                            constant_trajectory(n, 5.0, 2.0, f, 0, behavior)});
  REQUIRE(sA.group.rewards[0] == sA.group.rewards[1]);

  const auto contribution = [&](Variant variant, int which) {
    OptimConfig cfg;
    cfg.variant = variant;
    cfg.beta = 0.0;
    RolloutGroup g = sA.group;
    populate_advantages(g, cfg);
    // isolate trajectory `which` by zeroing the other advantages; gamma is 1
    // (constant d) and rho is 1 (on-policy), so terms reduce to the advantage
    const double adv = g.advantages[which];
    const double scaled = variant == Variant::DrGrpo
        ? adv * static_cast<double>(g.trajectories[static_cast<std::size_t>(which)].steps.size())
        : adv;
    return scaled;
  };

  const double dr_a = contribution(Variant::DrGrpo, 0);
  const double dr_b = contribution(Variant::DrGrpo, 1);
  CHECK(dr_b == doctest::Approx(2.0 * dr_a).epsilon(1e-12));

  const double gr_a = contribution(Variant::Grpo, 0);
  const double gr_b = contribution(Variant::Grpo, 1);
  CHECK(gr_a == doctest::Approx(gr_b).epsilon(1e-12));

  // the same holds measured through the objective itself
  OptimConfig dr;
  dr.variant = Variant::DrGrpo;
  dr.beta = 0.0;
  RolloutGroup g = sA.group;
  populate_advantages(g, dr);
  const auto whole = objective_and_gradient(g, behavior, behavior, dr, kRewardCfg);
  const double by_hand =
      (g.advantages[0] * n + g.advantages[1] * 2 * n + g.advantages[2] * n) / 3.0;
  CHECK(whole.objective == doctest::Approx(by_hand).epsilon(1e-12));
}

TEST_CASE("advantage mismatch is rejected") {
  auto fx = oracles::make_random_group(400, 4, kRewardCfg);
  OptimConfig cfg;
  cfg.variant = Variant::DrGrpo;
  populate_advantages(fx.group, cfg);
  fx.group.advantages[0] += 0.25;  // break the estimator relation
  CHECK_THROWS_AS(
      objective_and_gradient(fx.group, fx.behavior, fx.behavior, cfg, kRewardCfg),
      std::invalid_argument);
}

TEST_CASE("apply_update") {
  policy::PolicyParams p;
  p.w << 1, 2, 3, 4, 5, 6;
  p.version = 9;
  FeatureVector g;
  g << 0.1, -0.2, 0.3, 0.0, 0.5, -0.6;

  SUBCASE("zero learning rate only bumps the version") {
    const auto q = apply_update(p, g, 0.0);
    CHECK(q.w == p.w);
    CHECK(q.version == 10);
  }
  SUBCASE("unit learning rate adds the gradient exactly") {
    const auto q = apply_update(p, g, 1.0);
    CHECK((q.w - (p.w + g)).lpNorm<Eigen::Infinity>() == 0.0);
  }
  SUBCASE("sequential updates equal one update of the summed gradient") {
    FeatureVector g2;
    g2 << -0.3, 0.1, 0.0, 0.2, -0.1, 0.4;
    const auto two = apply_update(apply_update(p, g, 0.5), g2, 0.5);
    const auto one = apply_update(p, FeatureVector(g + g2), 0.5);
    CHECK((two.w - one.w).lpNorm<Eigen::Infinity>() < 1e-15);
  }
  SUBCASE("non-finite gradients abort") {
    FeatureVector bad = g;
    bad[2] = std::numeric_limits<double>::quiet_NaN();
    CHECK_THROWS_AS(apply_update(p, bad, 0.1), std::runtime_error);
  }
}
