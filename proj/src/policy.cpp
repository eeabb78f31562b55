#include "navlab/policy.hpp"

#include <stdexcept>

namespace navlab::policy {

ActionDistribution action_distribution(const FeatureMatrix& features,
                                       const PolicyParams& params) {
  if (features.cols() == 0)
    throw std::invalid_argument("action_distribution: empty candidate list");
  ActionDistribution dist;
  dist.logprobs = log_softmax(features.transpose() * params.w);
  dist.probs = dist.logprobs.array().exp();
  return dist;
}

ActionDistribution action_distribution(const std::vector<envgraph::ActionCandidate>& cands,
                                       const PolicyParams& params) {
  return action_distribution(envgraph::feature_matrix(cands), params);
}

std::pair<int, double> select(const ActionDistribution& dist, SelectMode mode, Rng& rng) {
  const Eigen::Index n = dist.probs.size();
  int index = 0;
  switch (mode) {
    case SelectMode::Sample: {
      const double u = rng.uniform();
      double cdf = 0.0;
      index = static_cast<int>(n) - 1;  // guards against cdf rounding below 1
      for (Eigen::Index i = 0; i < n; ++i) {
        cdf += dist.probs[i];
        if (u < cdf) {
          index = static_cast<int>(i);
          break;
        }
      }
      break;
    }
    case SelectMode::Greedy: {
      for (Eigen::Index i = 1; i < n; ++i)
        if (dist.probs[i] > dist.probs[index]) index = static_cast<int>(i);
      break;
    }
    case SelectMode::LeastProbable: {
      for (Eigen::Index i = 1; i < n; ++i)
        if (dist.probs[i] < dist.probs[index]) index = static_cast<int>(i);
      break;
    }
  }
  return {index, dist.logprobs[index]};
}

FeatureVector grad_logprob(const FeatureMatrix& features, int chosen,
                           const ActionDistribution& dist) {
  return features.col(chosen) - features * dist.probs;
}

FeatureVector grad_logprob(const FeatureMatrix& features, int chosen,
                           const PolicyParams& params) {
  return grad_logprob(features, chosen, action_distribution(features, params));
}

double kl_divergence(const ActionDistribution& dist_theta,
                     const ActionDistribution& dist_ref) {
  if (dist_theta.probs.size() != dist_ref.probs.size())
    throw std::invalid_argument("kl_divergence: candidate sets differ in size");
  return dist_theta.probs.dot(dist_theta.logprobs - dist_ref.logprobs);
}

FeatureVector grad_kl(const FeatureMatrix& features,
                      const ActionDistribution& dist_theta,
                      const ActionDistribution& dist_ref) {
  // d/dw sum_i p_i (log p_i - log q_i) with p = softmax(F^T w):
  // sum_i p_i (f_i - fbar) (log p_i - log q_i), fbar = F p.
  const Eigen::VectorXd log_ratio = dist_theta.logprobs - dist_ref.logprobs;
  const Eigen::VectorXd weighted = dist_theta.probs.cwiseProduct(log_ratio);
  const FeatureVector mean_feature = features * dist_theta.probs;
  return features * weighted - mean_feature * weighted.sum();
}

}  // namespace navlab::policy
