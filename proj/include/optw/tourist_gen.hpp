#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "optw/instance.hpp"
#include "optw/rng.hpp"

namespace optw {

enum class ScoreScheme { UniformScores, CorrelatedScores };

// Samples new tourists for a benchmark instance-region: fresh start/end
// location, start and end times, and per-node scores. Region parameters
// (POI coordinates, windows, durations) and the normalization constants
// t_max / score_upper are shared by every tourist of one region.
struct TouristSampler {
  const Instance* base = nullptr;
  ScoreScheme scheme = ScoreScheme::UniformScores;
  std::uint64_t seed = 0;

  TouristSampler(const Instance& base_instance, ScoreScheme score_scheme,
                 std::uint64_t rng_seed)
      : base(&base_instance), scheme(score_scheme), seed(rng_seed) {}

  // Tourist `index` of this sampler's stream. Same (seed, index) always
  // yields the same instance.
  Instance generate(std::uint64_t index) const;
};

// Uniform start/end location over the group's sampling square:
// [0,100]^2 for Solomon and Gavalas, [-100,100]^2 for Cordeau.
void sample_start_location(Rng& rng, GroupTag group, double& x, double& y);

// Start/end times in day-normalized units (day = 24):
//   T_start ~ U(Tb_start - 4, min{15, Tb_end + 4})
//   T_end   ~ U(max{12, T_start + 4}, Tb_end + 4)
// then rescaled by t_day/24 and rounded half-up to integer time units.
// The pre-rounding span is always >= 4 normalized hours.
void sample_times(Rng& rng, const Instance& base, double& t_start_g,
                  double& t_end_g);

// Raw (unrounded, normalized) bounds used by sample_times; exposed for
// conformance tests.
struct TimeSampleBounds {
  double start_lo, start_hi;
  double end_lo_min;  // 12, before the +4h floor against the drawn start
  double end_hi;
};
TimeSampleBounds time_sample_bounds(const Instance& base);

// Per-node scores, depots fixed at 0.
std::vector<double> sample_scores_uniform(Rng& rng, const Instance& base);
// s_i ~ N(S_max * d_i / d_max, sigma^2), clipped to [1, 1.1 * S_max].
// Throws DegenerateDurations when every duration is zero.
std::vector<double> sample_scores_correlated(Rng& rng, const Instance& base,
                                             double sigma = 10.0);

Instance generate_tourist(Rng& rng, const Instance& base, ScoreScheme scheme);

// Deterministic fixed validation set; files land in
// <out_dir>/<base.name>/validation/<idx>.json when out_dir is non-empty.
std::vector<Instance> build_validation_set(const Instance& base, int count,
                                           std::uint64_t seed,
                                           ScoreScheme scheme,
                                           const std::string& out_dir = "");

}  // namespace optw
