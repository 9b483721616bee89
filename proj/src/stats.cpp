#include "optw/stats.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "optw/error.hpp"
#include "optw/rng.hpp"

namespace optw {

double gap_percent(double baseline, double model) {
  if (baseline <= 0.0) {
    raise(ErrorCode::DegenerateBaseline, "gap needs a positive baseline score");
  }
  return (baseline - model) / baseline * 100.0;
}

namespace {

double quantile_sorted(const std::vector<double>& sorted, double q) {
  const double pos = q * static_cast<double>(sorted.size() - 1);
  const std::size_t lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = static_cast<std::size_t>(std::ceil(pos));
  const double frac = pos - static_cast<double>(lo);
  return sorted[lo] * (1.0 - frac) + sorted[hi] * frac;
}

}  // namespace

std::pair<double, double> bootstrap_ci(const std::vector<double>& values,
                                       int resamples, double level,
                                       std::uint64_t seed) {
  if (values.empty()) {
    raise(ErrorCode::EmptySample, "bootstrap needs at least one value");
  }
  Rng rng(seed);
  const std::size_t n = values.size();
  std::vector<double> means(resamples);
  for (int r = 0; r < resamples; ++r) {
    double total = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
      total += values[rng.next_below(n)];
    }
    means[r] = total / static_cast<double>(n);
  }
  std::sort(means.begin(), means.end());
  const double alpha = (1.0 - level) / 2.0;
  return {quantile_sorted(means, alpha), quantile_sorted(means, 1.0 - alpha)};
}

double wilcoxon_one_sided(const std::vector<double>& a,
                          const std::vector<double>& b, int exact_cutoff) {
  if (a.size() != b.size()) {
    raise(ErrorCode::ShapeError, "wilcoxon needs paired samples");
  }
  std::vector<double> diffs;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    if (d != 0.0) diffs.push_back(d);
  }
  const std::size_t n = diffs.size();
  if (n < 5) {
    raise(ErrorCode::TooFewPairs,
          "need at least 5 non-zero differences, have " + std::to_string(n));
  }

  // Average ranks of |d|, doubled so ties stay integral.
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) {
    return std::abs(diffs[x]) < std::abs(diffs[y]);
  });
  std::vector<long> rank2(n, 0);
  double tie_correction = 0.0;
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j + 1 < n &&
           std::abs(diffs[order[j + 1]]) == std::abs(diffs[order[i]])) {
      ++j;
    }
    // Positions i..j share the average rank ((i+1) + (j+1)) / 2.
    const long sum2 = static_cast<long>(i + j + 2);
    for (std::size_t k = i; k <= j; ++k) rank2[order[k]] = sum2;
    const double t = static_cast<double>(j - i + 1);
    tie_correction += (t * t * t - t);
    i = j + 1;
  }

  long w2_obs = 0;  // 2 * W+
  for (std::size_t k = 0; k < n; ++k) {
    if (diffs[k] > 0.0) w2_obs += rank2[k];
  }

  if (static_cast<int>(n) <= exact_cutoff) {
    // Exact: every sign pattern equally likely under H0.
    const std::uint64_t patterns = 1ULL << n;
    std::uint64_t count = 0;
    for (std::uint64_t p = 0; p < patterns; ++p) {
      long w2 = 0;
      for (std::size_t k = 0; k < n; ++k) {
        if (p & (1ULL << k)) w2 += rank2[k];
      }
      if (w2 >= w2_obs) ++count;
    }
    return static_cast<double>(count) / static_cast<double>(patterns);
  }

  const double nn = static_cast<double>(n);
  const double mu = nn * (nn + 1.0) / 4.0;
  const double var = nn * (nn + 1.0) * (2.0 * nn + 1.0) / 24.0 -
                     tie_correction / 48.0;
  const double w = static_cast<double>(w2_obs) / 2.0;
  const double z = (w - mu - 0.5) / std::sqrt(var);
  return 0.5 * std::erfc(z / std::sqrt(2.0));
}

}  // namespace optw
