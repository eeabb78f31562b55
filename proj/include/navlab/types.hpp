#pragma once

#include <Eigen/Dense>

namespace navlab {

/// Fixed width of candidate feature vectors:
/// [is_stop, bearing_cos, norm_edge_len, revisit_flag, proximity_signal, bias].
inline constexpr int kFeatureDim = 6;

using FeatureVector = Eigen::Matrix<double, kFeatureDim, 1>;
using FeatureMatrix = Eigen::Matrix<double, kFeatureDim, Eigen::Dynamic>;
using Vec2 = Eigen::Vector2d;

inline constexpr const char* kArtifactVersion = "navlab 0.1.0";

}  // namespace navlab
