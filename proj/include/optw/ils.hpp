#pragma once

#include <cstdint>

#include "optw/inference.hpp"
#include "optw/instance.hpp"

namespace optw {

// Insert/shake iterated local search. Construction inserts the unrouted
// node with the best score^2/time-shift ratio at its cheapest feasible
// position, using wait / max-shift bookkeeping for O(1) feasibility per
// position. The shake step removes a sliding block of consecutive visits.
// Fully deterministic; the seed only tags the report.
struct IlsConfig {
  int max_no_improve = 150;
  std::uint64_t seed = 0;
};

SolutionReport ils_solve(const Instance& inst, const IlsConfig& cfg = {});

}  // namespace optw
