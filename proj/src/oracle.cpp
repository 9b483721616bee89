#include "optw/oracle.hpp"

#include <string>

#include "optw/error.hpp"

namespace optw {

namespace {

void check_cap(const Instance& inst, int node_cap) {
  int pois = 0;
  for (int i = 0; i < inst.n(); ++i) {
    if (i != inst.start_index && i != inst.end_index) ++pois;
  }
  if (pois > node_cap) {
    raise(ErrorCode::OracleCapExceeded,
          std::to_string(pois) + " non-depot nodes exceed cap " +
              std::to_string(node_cap));
  }
}

void dfs(const Instance& inst, const RouteState& state, double score,
         const std::function<void(const std::vector<int>&, double)>& visit) {
  for (int j = 0; j < inst.n(); ++j) {
    if (!is_feasible_next(inst, state, j)) continue;
    const RouteState after = advance(inst, state, j);
    const double after_score = score + inst.nodes[j].score;
    if (j == inst.end_index) {
      visit(after.route, after_score);
    } else {
      dfs(inst, after, after_score, visit);
    }
  }
}

}  // namespace

void for_each_feasible_route(
    const Instance& inst, int node_cap,
    const std::function<void(const std::vector<int>&, double)>& visit) {
  check_cap(inst, node_cap);
  const RouteState root = RouteState::initial(inst);
  dfs(inst, root, inst.nodes[inst.start_index].score, visit);
}

OracleResult brute_force_optimum(const Instance& inst, int node_cap) {
  OracleResult best;
  best.score = -1.0;
  for_each_feasible_route(inst, node_cap,
                          [&](const std::vector<int>& route, double score) {
                            if (score > best.score) {
                              best.score = score;
                              best.route = route;
                            }
                          });
  return best;
}

}  // namespace optw
