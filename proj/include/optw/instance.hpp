#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace optw {

enum class GroupTag { Solomon, Cordeau, Gavalas, Custom };

const char* group_tag_name(GroupTag tag);
std::optional<GroupTag> group_tag_from_name(const std::string& name);

// A point of interest (or depot). Times are in raw instance units; `open`
// and `close` bound the latest/earliest time a visit may *start*.
struct Node {
  double x = 0.0;
  double y = 0.0;
  double score = 0.0;
  double open = 0.0;
  double close = 0.0;
  double duration = 0.0;
};

// One tourist visiting one region. Start and end depots are stored as two
// separate nodes even when co-located, so route/visited bookkeeping never
// special-cases a shared depot id.
struct Instance {
  std::string name;
  GroupTag group_tag = GroupTag::Custom;
  std::vector<Node> nodes;
  int start_index = 0;
  int end_index = 0;
  double t_start = 0.0;
  double t_end = 0.0;
  int rounding_decimals = 1;  // 1 for Solomon, 2 for Cordeau/Gavalas
  double t_max = 0.0;         // region time-normalization bound
  double score_upper = 0.0;   // 1.1 x max benchmark score, region constant

  int n() const { return static_cast<int>(nodes.size()); }

  // Travel times are Euclidean distances rounded half-up to
  // `rounding_decimals`, computed once and cached. Immutable afterwards;
  // safe to share across threads.
  void finalize();
  bool finalized() const { return !travel_.empty(); }

  double travel(int i, int j) const {
    return travel_[static_cast<std::size_t>(i) * nodes.size() + j];
  }

 private:
  std::vector<double> travel_;
};

// Markov state of sequential route construction. `advance` returns a new
// value; states are never mutated in place, which keeps beam branching and
// concurrent rollouts trivially safe.
struct RouteState {
  std::vector<int> route;
  int current_node = 0;
  double current_time = 0.0;
  std::vector<std::uint8_t> visited;

  static RouteState initial(const Instance& inst);
  bool terminal(const Instance& inst) const {
    return current_node == inst.end_index && route.size() > 1;
  }
};

enum class GraphMaskMode { Lookahead, CompleteGraph };

// Admissibility vector plus the one-step lookahead graph over it.
struct AdjacencyMask {
  int n = 0;
  std::vector<std::uint8_t> admissible;  // length n
  std::vector<std::uint8_t> matrix;      // n*n, row-major

  bool edge(int i, int j) const {
    return matrix[static_cast<std::size_t>(i) * n + j] != 0;
  }
  void set_edge(int i, int j) {
    matrix[static_cast<std::size_t>(i) * n + j] = 1;
  }
};

double round_half_up(double x, int decimals);

// Rounded travel time between nodes i and j (identical to the cached
// matrix; exposed as a function for tests and callers without an Instance).
double travel_time(const Instance& inst, int i, int j);

// Time-window and budget feasibility of visiting j next. Returns false for
// already-visited non-end nodes and for terminal states; never throws.
bool is_feasible_next(const Instance& inst, const RouteState& state, int j);

// Extend the route by j. Throws InfeasibleMove when j fails the checks.
RouteState advance(const Instance& inst, const RouteState& state, int j);

// Entry j is true iff j is unvisited and feasible next. All false for
// terminal states.
std::vector<std::uint8_t> admissible_set(const Instance& inst,
                                         const RouteState& state);

// Lookahead mode: edge (i,j) iff visiting i then j (then closing at the end
// depot) is feasible from the current state, restricted to currently
// admissible nodes. CompleteGraph mode: all admissible pairs, no diagonal.
AdjacencyMask lookahead_adjacency(const Instance& inst, const RouteState& state,
                                  GraphMaskMode mode = GraphMaskMode::Lookahead);

// Validates the route step by step (start/end anchoring, no repeats,
// feasibility at every extension) and returns the score sum. Throws
// InfeasibleRoute with the first violated step index in `detail`.
double route_score(const Instance& inst, const std::vector<int>& route);

// Region day length and feature-normalization bound:
//   t_day = max(t_end, max_i close_i)
//   t_max = max(t_day, t_end + 4 * t_day / 24)
struct DayNormalization {
  double t_day = 0.0;
  double t_max = 0.0;
};
DayNormalization day_normalization(const Instance& inst);

// Fills t_max and score_upper from the instance's own data (used after
// parsing a benchmark file; generated tourists inherit the base's values).
void apply_region_normalization(Instance& inst);

}  // namespace optw
