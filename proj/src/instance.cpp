#include "optw/instance.hpp"

#include <algorithm>
#include <cmath>

#include "optw/error.hpp"

namespace optw {

const char* group_tag_name(GroupTag tag) {
  switch (tag) {
    case GroupTag::Solomon: return "solomon";
    case GroupTag::Cordeau: return "cordeau";
    case GroupTag::Gavalas: return "gavalas";
    case GroupTag::Custom: return "custom";
  }
  return "custom";
}

std::optional<GroupTag> group_tag_from_name(const std::string& name) {
  if (name == "solomon") return GroupTag::Solomon;
  if (name == "cordeau") return GroupTag::Cordeau;
  if (name == "gavalas") return GroupTag::Gavalas;
  if (name == "custom") return GroupTag::Custom;
  return std::nullopt;
}

double round_half_up(double x, int decimals) {
  const double p = std::pow(10.0, decimals);
  return std::floor(x * p + 0.5) / p;
}

void Instance::finalize() {
  const std::size_t n = nodes.size();
  travel_.assign(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const double dx = nodes[i].x - nodes[j].x;
      const double dy = nodes[i].y - nodes[j].y;
      const double d = round_half_up(std::sqrt(dx * dx + dy * dy),
                                     rounding_decimals);
      travel_[i * n + j] = d;
      travel_[j * n + i] = d;
    }
  }
}

double travel_time(const Instance& inst, int i, int j) {
  if (inst.finalized()) return inst.travel(i, j);
  const double dx = inst.nodes[i].x - inst.nodes[j].x;
  const double dy = inst.nodes[i].y - inst.nodes[j].y;
  return round_half_up(std::sqrt(dx * dx + dy * dy), inst.rounding_decimals);
}

RouteState RouteState::initial(const Instance& inst) {
  RouteState s;
  s.route = {inst.start_index};
  s.current_node = inst.start_index;
  s.current_time = inst.t_start;
  s.visited.assign(inst.nodes.size(), 0);
  s.visited[inst.start_index] = 1;
  return s;
}

// Feasibility comparisons carry a tolerance far below the benchmarks' 0.1
// time quantum; it absorbs float noise at decimal boundary equalities
// (arrival exactly at close counts as feasible).
constexpr double kTimeEps = 1e-6;

bool is_feasible_next(const Instance& inst, const RouteState& state, int j) {
  if (j < 0 || j >= inst.n()) return false;
  if (state.terminal(inst)) return false;
  if (state.visited[j] && j != inst.end_index) return false;

  const Node& node = inst.nodes[j];
  const double arrival = state.current_time + travel_time(inst, state.current_node, j);
  const double wait = std::max(0.0, node.open - arrival);
  if (arrival + wait > node.close + kTimeEps) return false;
  const double to_end = (j == inst.end_index) ? 0.0 : travel_time(inst, j, inst.end_index);
  return arrival + wait + node.duration + to_end <= inst.t_end + kTimeEps;
}

RouteState advance(const Instance& inst, const RouteState& state, int j) {
  if (!is_feasible_next(inst, state, j)) {
    raise(ErrorCode::InfeasibleMove,
          "node " + std::to_string(j) + " is not feasible from node " +
              std::to_string(state.current_node) + " at t=" +
              std::to_string(state.current_time));
  }
  const Node& node = inst.nodes[j];
  const double arrival = state.current_time + travel_time(inst, state.current_node, j);
  const double wait = std::max(0.0, node.open - arrival);

  RouteState next = state;
  next.route.push_back(j);
  next.current_node = j;
  next.current_time = arrival + wait + node.duration;
  next.visited[j] = 1;
  return next;
}

std::vector<std::uint8_t> admissible_set(const Instance& inst,
                                         const RouteState& state) {
  std::vector<std::uint8_t> adm(inst.nodes.size(), 0);
  if (state.terminal(inst)) return adm;
  for (int j = 0; j < inst.n(); ++j) {
    if (is_feasible_next(inst, state, j)) adm[j] = 1;
  }
  return adm;
}

AdjacencyMask lookahead_adjacency(const Instance& inst, const RouteState& state,
                                  GraphMaskMode mode) {
  AdjacencyMask mask;
  mask.n = inst.n();
  mask.admissible = admissible_set(inst, state);
  mask.matrix.assign(static_cast<std::size_t>(mask.n) * mask.n, 0);

  if (mode == GraphMaskMode::CompleteGraph) {
    for (int i = 0; i < mask.n; ++i) {
      if (!mask.admissible[i]) continue;
      for (int j = 0; j < mask.n; ++j) {
        if (i != j && mask.admissible[j]) mask.set_edge(i, j);
      }
    }
    return mask;
  }

  for (int i = 0; i < mask.n; ++i) {
    if (!mask.admissible[i] || i == inst.end_index) continue;
    const RouteState after = advance(inst, state, i);
    for (int j = 0; j < mask.n; ++j) {
      // Edges are kept inside the admissible set so the lookahead graph is
      // always a sub-mask of the complete-graph mask.
      if (j == i || !mask.admissible[j]) continue;
      if (is_feasible_next(inst, after, j)) mask.set_edge(i, j);
    }
  }
  return mask;
}

double route_score(const Instance& inst, const std::vector<int>& route) {
  if (route.empty() || route.front() != inst.start_index) {
    raise(ErrorCode::InfeasibleRoute, "route must begin at the start depot", 0);
  }
  RouteState state = RouteState::initial(inst);
  double total = inst.nodes[inst.start_index].score;
  for (std::size_t l = 1; l < route.size(); ++l) {
    if (!is_feasible_next(inst, state, route[l])) {
      raise(ErrorCode::InfeasibleRoute,
            "step " + std::to_string(l) + " (node " + std::to_string(route[l]) +
                ") violates the time constraints",
            static_cast<long>(l));
    }
    state = advance(inst, state, route[l]);
    total += inst.nodes[route[l]].score;
  }
  if (state.current_node != inst.end_index) {
    raise(ErrorCode::InfeasibleRoute, "route must terminate at the end depot",
          static_cast<long>(route.size()));
  }
  return total;
}

DayNormalization day_normalization(const Instance& inst) {
  DayNormalization norm;
  double max_close = inst.t_end;
  for (const Node& node : inst.nodes) max_close = std::max(max_close, node.close);
  norm.t_day = max_close;
  norm.t_max = std::max(norm.t_day, inst.t_end + 4.0 * norm.t_day / 24.0);
  return norm;
}

void apply_region_normalization(Instance& inst) {
  inst.t_max = day_normalization(inst).t_max;
  double max_score = 0.0;
  for (const Node& node : inst.nodes) max_score = std::max(max_score, node.score);
  inst.score_upper = 1.1 * max_score;
}

}  // namespace optw
