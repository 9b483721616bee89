#pragma once

#include <cstdint>
#include <utility>
#include <vector>

namespace optw {

// (baseline - model) / baseline * 100; negative favors the model.
// Throws DegenerateBaseline for baseline <= 0.
double gap_percent(double baseline, double model);

// Percentile bootstrap interval for the mean: resample with replacement,
// take the (1-level)/2 and (1+level)/2 quantiles of the resampled means.
// Deterministic under a fixed seed. Throws EmptySample.
std::pair<double, double> bootstrap_ci(const std::vector<double>& values,
                                       int resamples = 10000,
                                       double level = 0.95,
                                       std::uint64_t seed = 0);

// One-sided Wilcoxon signed-rank test of H1: median(a-b) > 0. Zero
// differences are dropped; ties get average ranks. Exact enumeration of
// all sign patterns up to `exact_cutoff` non-zero pairs (default 20),
// normal approximation with tie and continuity correction above; pass 0 to
// force the approximation. Throws TooFewPairs below 5 non-zero
// differences.
double wilcoxon_one_sided(const std::vector<double>& a,
                          const std::vector<double>& b, int exact_cutoff = 20);

}  // namespace optw
