#pragma once

#include <optional>
#include <string>
#include <vector>

#include "optw/inference.hpp"
#include "optw/instance.hpp"

namespace optw {

struct BenchConfig {
  std::string ckpt_dir;    // per-region checkpoints named <region>.ckpt
  std::string ckpt_path;   // or one checkpoint for every region
  std::string regions_dir; // instance files; <dir>/<name>/validation/*.json
  std::string sidecar_path;
  std::string out_dir;
  Strategy strategy;
  std::uint64_t seed = 0;
  int resamples = 10000;
  double level = 0.95;
  int threads = 1;  // worker pool size (OPTW_THREADS caps it in the CLI)
  int ils_max_no_improve = 150;
  bool include_generated = true;
};

struct BenchRow {
  std::string name;
  bool generated = false;  // mean over the region's validation tourists
  std::optional<double> best_known;  // sidecar, benchmark rows only
  std::optional<double> paper_ils;   // sidecar (reporting only)
  std::optional<double> ils_score;   // local reimplementation
  std::optional<double> model_score;
  std::optional<double> gap_to_ils;
  std::optional<double> gap_to_bk;
  double time_s = 0.0;  // mean wall-clock of solve() per instance
  std::string error;
};

struct BenchAggregate {
  int count = 0;
  double mean_model_score = 0.0;
  double mean_ils_score = 0.0;
  double mean_gap_to_ils = 0.0;
  std::pair<double, double> gap_to_ils_ci{0.0, 0.0};
  std::optional<double> mean_gap_to_bk;
  std::optional<std::pair<double, double>> gap_to_bk_ci;
};

struct BenchReport {
  std::vector<BenchRow> rows;  // order-stable by (name, generated)
  BenchAggregate benchmark;
  BenchAggregate generated;
  std::string strategy;
  std::uint64_t seed = 0;
};

// Evaluates the strategy and the local ILS on every region instance (and
// its fixed validation tourists when present), then aggregates mean
// per-instance gaps with bootstrap confidence intervals. Rows that fail
// (missing checkpoint, parse error) carry an error note; the run
// continues.
BenchReport run_benchmark(const BenchConfig& cfg);

// report.csv, report.json and plotdata/*.csv under out_dir.
void write_bench_outputs(const BenchReport& report, const std::string& out_dir);

std::string bench_report_csv(const BenchReport& report);
std::string bench_report_json(const BenchReport& report);

}  // namespace optw
