#pragma once

#include <Eigen/Core>

#include "optw/instance.hpp"

namespace optw {

// Per-node model inputs. Column contracts are fixed so checkpoints stay
// portable:
//   static  (n x 7): x_hat, y_hat, duration/t_max, open/t_max, close/t_max,
//                    score/score_upper, t_end/t_max
//   dynamic (n x 8): (open-t)/t_max, (close-t)/t_max,
//                    (t-t_start)/span, (t_end-t)/span,
//                    then the same four at t' = t + travel(current, i)
// Coordinates are min-max scaled over this instance's nodes into [-1,1];
// a degenerate axis maps to 0. Time-left features are signed, not clamped.
inline constexpr int kStaticFeatureCount = 7;
inline constexpr int kDynamicFeatureCount = 8;

Eigen::MatrixXd static_features(const Instance& inst);

// Throws DegenerateBudget when t_end == t_start.
Eigen::MatrixXd dynamic_features(const Instance& inst, const RouteState& state);

struct FeatureTensors {
  Eigen::MatrixXd static_m;
  Eigen::MatrixXd dynamic_m;
  AdjacencyMask mask;
};

}  // namespace optw
