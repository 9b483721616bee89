#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "optw/instance.hpp"
#include "optw/model.hpp"

namespace optw {

struct SolutionReport {
  std::vector<int> route;
  double score = 0.0;
  std::vector<double> step_probs;  // probability of each chosen step
  double log_prob = 0.0;
  double wall_seconds = 0.0;
  std::string strategy;
  int beams = 0;
  int as_epochs = 0;
  std::uint64_t seed = 0;
  std::vector<double> progress;  // best-so-far per iteration (ILS, active search)
};

std::string report_to_json(const SolutionReport& report);
void write_report(const SolutionReport& report, const std::string& path);

// Deterministic argmax rollout; ties broken by lowest node id.
SolutionReport greedy(PointerModel<float>& model, const Instance& inst);

// One stochastic rollout from the policy.
SolutionReport sample(PointerModel<float>& model, const Instance& inst,
                      std::uint64_t seed);

// Pool beam search: each step expands every live beam over its admissible
// nodes, ranks live expansions together with already-finished beams by
// accumulated log probability, and keeps the top n_b. Finished beams do
// not expand; the search ends when the whole pool is finished and the
// highest-score finished beam wins. beam_search(1) is exactly greedy.
SolutionReport beam_search(PointerModel<float>& model, const Instance& inst,
                           int n_b = 128);

struct Strategy {
  enum class Kind { Greedy, Sample, Beam, ActiveSearch };
  Kind kind = Kind::Greedy;
  int beams = 128;
  int as_epochs = 128;
  std::uint64_t seed = 0;

  static Strategy parse(const std::string& name, int beams, int as_epochs,
                        std::uint64_t seed);
  std::string name() const;
};

// Dispatches to one of the four construction strategies and stamps the
// report with wall-clock time (the solve only, excluding parsing and
// checkpoint load) and strategy metadata.
SolutionReport solve(PointerModel<float>& model, const Instance& inst,
                     const Strategy& strategy);

}  // namespace optw
