#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "navlab/envgraph.hpp"
#include "navlab/rng.hpp"
#include "navlab/types.hpp"

namespace navlab::policy {

/// Softmax-linear policy weights. Snapshots are immutable values; updates
/// produce a new version under a single-writer discipline.
struct PolicyParams {
  FeatureVector w = FeatureVector::Zero();
  std::int64_t version = 0;
};

struct ActionDistribution {
  Eigen::VectorXd probs;
  Eigen::VectorXd logprobs;
};

enum class SelectMode { Sample, Greedy, LeastProbable };

/// Numerically stable log-softmax (max subtraction).
template <typename Derived>
Eigen::VectorXd log_softmax(const Eigen::MatrixBase<Derived>& logits) {
  const double shift = logits.maxCoeff();
  const Eigen::VectorXd centered = logits.derived().array() - shift;
  return centered.array() - std::log(centered.array().exp().sum());
}

ActionDistribution action_distribution(const FeatureMatrix& features,
                                       const PolicyParams& params);
ActionDistribution action_distribution(const std::vector<envgraph::ActionCandidate>& cands,
                                       const PolicyParams& params);

/// Draws (sample) or picks (greedy / least_probable) a candidate index; ties
/// break to the lowest index. Returns the index and its log-probability.
std::pair<int, double> select(const ActionDistribution& dist, SelectMode mode, Rng& rng);

/// Gradient of log pi(chosen) w.r.t. w: features[chosen] - E_p[features].
FeatureVector grad_logprob(const FeatureMatrix& features, int chosen,
                           const ActionDistribution& dist);
FeatureVector grad_logprob(const FeatureMatrix& features, int chosen,
                           const PolicyParams& params);

/// Exact discrete KL(theta || ref) over one candidate set.
double kl_divergence(const ActionDistribution& dist_theta,
                     const ActionDistribution& dist_ref);

/// Exact gradient of kl_divergence w.r.t. the theta-side weights.
FeatureVector grad_kl(const FeatureMatrix& features,
                      const ActionDistribution& dist_theta,
                      const ActionDistribution& dist_ref);

}  // namespace navlab::policy
