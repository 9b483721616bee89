#pragma once

#include <functional>
#include <vector>

#include "optw/instance.hpp"

namespace optw {

struct OracleResult {
  std::vector<int> route;
  double score = 0.0;
};

// Exhaustive depth-first search over admissible extensions. Children are
// explored in ascending node id, and the incumbent is replaced only on a
// strict improvement, so the returned route is the lexicographically
// smallest maximum-score route. Throws OracleCapExceeded when the instance
// has more than `node_cap` non-depot nodes.
OracleResult brute_force_optimum(const Instance& inst, int node_cap = 12);

// Visits every feasible complete route (start ... end) exactly once, in
// lexicographic order. Subject to the same node cap as the oracle.
void for_each_feasible_route(
    const Instance& inst, int node_cap,
    const std::function<void(const std::vector<int>&, double score)>& visit);

}  // namespace optw
