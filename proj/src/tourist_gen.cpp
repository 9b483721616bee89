#include "optw/tourist_gen.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>

#include "optw/error.hpp"
#include "optw/instance_io.hpp"

namespace optw {

void sample_start_location(Rng& rng, GroupTag group, double& x, double& y) {
  const double lo = (group == GroupTag::Cordeau) ? -100.0 : 0.0;
  x = rng.uniform(lo, 100.0);
  y = rng.uniform(lo, 100.0);
}

TimeSampleBounds time_sample_bounds(const Instance& base) {
  const DayNormalization day = day_normalization(base);
  const double scale = day.t_day / 24.0;
  TimeSampleBounds b;
  b.start_lo = base.t_start / scale - 4.0;
  b.start_hi = std::min(15.0, base.t_end / scale + 4.0);
  b.end_lo_min = 12.0;
  b.end_hi = base.t_end / scale + 4.0;
  return b;
}

void sample_times(Rng& rng, const Instance& base, double& t_start_g,
                  double& t_end_g) {
  const DayNormalization day = day_normalization(base);
  const double scale = day.t_day / 24.0;
  const TimeSampleBounds b = time_sample_bounds(base);

  // The end-time interval can be empty when the drawn start leaves less
  // than 4 normalized hours before end_hi; resample the start in that case.
  double start_n = 0.0, end_lo = 0.0;
  for (;;) {
    start_n = rng.uniform(b.start_lo, b.start_hi);
    end_lo = std::max(b.end_lo_min, start_n + 4.0);
    if (end_lo <= b.end_hi) break;
  }
  const double end_n = rng.uniform(end_lo, b.end_hi);

  t_start_g = round_half_up(start_n * scale, 0);
  t_end_g = round_half_up(end_n * scale, 0);
}

std::vector<double> sample_scores_uniform(Rng& rng, const Instance& base) {
  double s_max = 0.0;
  for (const Node& n : base.nodes) s_max = std::max(s_max, n.score);
  std::vector<double> scores(base.nodes.size(), 0.0);
  for (int i = 0; i < base.n(); ++i) {
    if (i == base.start_index || i == base.end_index) continue;
    scores[i] = rng.uniform(1.0, 1.1 * s_max);
  }
  return scores;
}

std::vector<double> sample_scores_correlated(Rng& rng, const Instance& base,
                                             double sigma) {
  double s_max = 0.0, d_max = 0.0;
  for (int i = 0; i < base.n(); ++i) {
    if (i == base.start_index || i == base.end_index) continue;
    s_max = std::max(s_max, base.nodes[i].score);
    d_max = std::max(d_max, base.nodes[i].duration);
  }
  if (d_max <= 0.0) {
    raise(ErrorCode::DegenerateDurations,
          "correlated scores need at least one positive visit duration");
  }
  std::vector<double> scores(base.nodes.size(), 0.0);
  for (int i = 0; i < base.n(); ++i) {
    if (i == base.start_index || i == base.end_index) continue;
    const double mean = s_max * base.nodes[i].duration / d_max;
    const double s = rng.normal(mean, sigma);
    scores[i] = std::clamp(s, 1.0, 1.1 * s_max);
  }
  return scores;
}

Instance generate_tourist(Rng& rng, const Instance& base, ScoreScheme scheme) {
  Instance inst;
  inst.name = base.name;
  inst.group_tag = base.group_tag;
  inst.rounding_decimals = base.rounding_decimals;
  inst.t_max = base.t_max;
  inst.score_upper = base.score_upper;

  double x = 0.0, y = 0.0;
  sample_start_location(rng, base.group_tag, x, y);
  sample_times(rng, base, inst.t_start, inst.t_end);

  const std::vector<double> scores =
      scheme == ScoreScheme::UniformScores
          ? sample_scores_uniform(rng, base)
          : sample_scores_correlated(rng, base);

  // Depots carry the tour window itself, which is never binding: time is
  // monotone from t_start, and the end node's Eq. 1 coincides with the
  // budget constraint when duration is 0.
  Node depot;
  depot.x = x;
  depot.y = y;
  depot.score = 0.0;
  depot.open = inst.t_start;
  depot.close = inst.t_end;
  depot.duration = 0.0;

  inst.nodes.push_back(depot);
  for (int i = 0; i < base.n(); ++i) {
    if (i == base.start_index || i == base.end_index) continue;
    Node n = base.nodes[i];  // region parameters stay bit-identical
    n.score = scores[i];
    inst.nodes.push_back(n);
  }
  inst.nodes.push_back(depot);
  inst.start_index = 0;
  inst.end_index = inst.n() - 1;
  inst.finalize();
  return inst;
}

Instance TouristSampler::generate(std::uint64_t index) const {
  Rng rng = Rng::substream(seed, index);
  Instance inst = generate_tourist(rng, *base, scheme);
  inst.name = base->name + "_g" + std::to_string(index);
  return inst;
}

std::vector<Instance> build_validation_set(const Instance& base, int count,
                                           std::uint64_t seed,
                                           ScoreScheme scheme,
                                           const std::string& out_dir) {
  TouristSampler sampler(base, scheme, seed);
  std::vector<Instance> set;
  set.reserve(count);
  for (int i = 0; i < count; ++i) {
    set.push_back(sampler.generate(static_cast<std::uint64_t>(i)));
  }
  if (!out_dir.empty()) {
    namespace fs = std::filesystem;
    const fs::path dir = fs::path(out_dir) / base.name / "validation";
    fs::create_directories(dir);
    for (int i = 0; i < count; ++i) {
      write_canonical(set[i], (dir / (std::to_string(i) + ".json")).string());
    }
  }
  return set;
}

}  // namespace optw
