#include "optw/features.hpp"

#include <algorithm>

#include "optw/error.hpp"

namespace optw {

Eigen::MatrixXd static_features(const Instance& inst) {
  const int n = inst.n();
  Eigen::MatrixXd f(n, kStaticFeatureCount);

  double min_x = inst.nodes[0].x, max_x = inst.nodes[0].x;
  double min_y = inst.nodes[0].y, max_y = inst.nodes[0].y;
  for (const Node& node : inst.nodes) {
    min_x = std::min(min_x, node.x);
    max_x = std::max(max_x, node.x);
    min_y = std::min(min_y, node.y);
    max_y = std::max(max_y, node.y);
  }
  const double ext_x = max_x - min_x;
  const double ext_y = max_y - min_y;

  for (int i = 0; i < n; ++i) {
    const Node& node = inst.nodes[i];
    f(i, 0) = ext_x > 0.0 ? 2.0 * (node.x - min_x) / ext_x - 1.0 : 0.0;
    f(i, 1) = ext_y > 0.0 ? 2.0 * (node.y - min_y) / ext_y - 1.0 : 0.0;
    f(i, 2) = node.duration / inst.t_max;
    f(i, 3) = node.open / inst.t_max;
    f(i, 4) = node.close / inst.t_max;
    f(i, 5) = node.score / inst.score_upper;
    f(i, 6) = inst.t_end / inst.t_max;
  }
  return f;
}

Eigen::MatrixXd dynamic_features(const Instance& inst, const RouteState& state) {
  const double span = inst.t_end - inst.t_start;
  if (span <= 0.0) {
    raise(ErrorCode::DegenerateBudget, "t_end must exceed t_start");
  }
  const int n = inst.n();
  const double t = state.current_time;
  Eigen::MatrixXd f(n, kDynamicFeatureCount);
  for (int i = 0; i < n; ++i) {
    const Node& node = inst.nodes[i];
    const double t_arr = t + travel_time(inst, state.current_node, i);
    f(i, 0) = (node.open - t) / inst.t_max;
    f(i, 1) = (node.close - t) / inst.t_max;
    f(i, 2) = (t - inst.t_start) / span;
    f(i, 3) = (inst.t_end - t) / span;
    f(i, 4) = (node.open - t_arr) / inst.t_max;
    f(i, 5) = (node.close - t_arr) / inst.t_max;
    f(i, 6) = (t_arr - inst.t_start) / span;
    f(i, 7) = (inst.t_end - t_arr) / span;
  }
  return f;
}

}  // namespace optw
