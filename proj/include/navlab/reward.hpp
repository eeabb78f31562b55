#pragma once

#include <algorithm>
#include <cmath>

namespace navlab::reward {

struct RewardConfig {
  double epsilon = 3.0;  // success threshold, meters
  double alpha = 0.25;   // path-efficiency weight
};

/// Gaussian success reward gated by a strict indicator at the threshold:
/// exp(-d^2 / (2 eps^2)) for d < eps, otherwise 0.
inline double nav_success_reward(double d, double epsilon) {
  return d < epsilon ? std::exp(-(d * d) / (2.0 * epsilon * epsilon)) : 0.0;
}

/// Penalizes only the excess over the shortest path: -max(L - L*, 0) / L*.
inline double path_efficiency_reward(double length, double l_star) {
  return -std::max(length - l_star, 0.0) / l_star;
}

inline double trajectory_reward(double d, double length, double l_star,
                                const RewardConfig& cfg) {
  return nav_success_reward(d, cfg.epsilon) +
         cfg.alpha * path_efficiency_reward(length, l_star);
}

inline int sign_of(double x) { return x > 0.0 ? 1 : (x < 0.0 ? -1 : 0); }

/// Step-level progress coefficient: 1 + sign(adv) * (d_prev - d_curr) / L*.
/// Goal-approaching steps amplify the advantage signal, goal-departing steps
/// attenuate it; a zero advantage sign leaves it at 1.
inline double progress_coefficient(double d_prev, double d_curr, double l_star,
                                   int advantage_sign) {
  return 1.0 + advantage_sign * (d_prev - d_curr) / l_star;
}

}  // namespace navlab::reward
