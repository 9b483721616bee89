#include "optw/bench.hpp"

#include <algorithm>
#include <atomic>
#include <filesystem>
#include <fstream>
#include <map>
#include <numeric>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "optw/error.hpp"
#include "optw/ils.hpp"
#include "optw/instance_io.hpp"
#include "optw/stats.hpp"

namespace optw {

namespace fs = std::filesystem;

namespace {

struct RegionTask {
  std::string name;
  std::string instance_path;
  std::string checkpoint_path;
  std::vector<std::string> validation_paths;
};

std::vector<RegionTask> collect_tasks(const BenchConfig& cfg) {
  std::vector<RegionTask> tasks;
  if (!fs::is_directory(cfg.regions_dir)) {
    raise(ErrorCode::IoError, cfg.regions_dir + " is not a directory");
  }
  for (const auto& entry : fs::directory_iterator(cfg.regions_dir)) {
    if (!entry.is_regular_file()) continue;
    RegionTask task;
    task.instance_path = entry.path().string();
    task.name = entry.path().stem().string();
    task.checkpoint_path =
        !cfg.ckpt_dir.empty()
            ? (fs::path(cfg.ckpt_dir) / (task.name + ".ckpt")).string()
            : cfg.ckpt_path;
    const fs::path val_dir =
        fs::path(cfg.regions_dir) / task.name / "validation";
    if (cfg.include_generated && fs::is_directory(val_dir)) {
      for (const auto& v : fs::directory_iterator(val_dir)) {
        if (v.is_regular_file()) task.validation_paths.push_back(v.path().string());
      }
      std::sort(task.validation_paths.begin(), task.validation_paths.end());
    }
    tasks.push_back(std::move(task));
  }
  std::sort(tasks.begin(), tasks.end(),
            [](const RegionTask& a, const RegionTask& b) { return a.name < b.name; });
  return tasks;
}

struct EvalOutcome {
  double model_score = 0.0;
  double ils_score = 0.0;
  double time_s = 0.0;
};

EvalOutcome evaluate_one(PointerModel<float>& model, const Instance& inst,
                         const BenchConfig& cfg) {
  EvalOutcome out;
  SolutionReport model_report = solve(model, inst, cfg.strategy);
  out.model_score = model_report.score;
  out.time_s = model_report.wall_seconds;
  IlsConfig ils_cfg;
  ils_cfg.max_no_improve = cfg.ils_max_no_improve;
  ils_cfg.seed = cfg.seed;
  out.ils_score = ils_solve(inst, ils_cfg).score;
  return out;
}

void fill_gaps(BenchRow& row) {
  if (row.ils_score && row.model_score && *row.ils_score > 0.0) {
    row.gap_to_ils = gap_percent(*row.ils_score, *row.model_score);
  }
  if (row.best_known && row.model_score && *row.best_known > 0.0) {
    row.gap_to_bk = gap_percent(*row.best_known, *row.model_score);
  }
}

BenchAggregate aggregate_rows(const std::vector<const BenchRow*>& rows,
                              const BenchConfig& cfg, std::uint64_t seed_salt) {
  BenchAggregate agg;
  std::vector<double> gaps_ils, gaps_bk;
  for (const BenchRow* row : rows) {
    if (!row->error.empty() || !row->model_score || !row->ils_score) continue;
    agg.count += 1;
    agg.mean_model_score += *row->model_score;
    agg.mean_ils_score += *row->ils_score;
    if (row->gap_to_ils) gaps_ils.push_back(*row->gap_to_ils);
    if (row->gap_to_bk) gaps_bk.push_back(*row->gap_to_bk);
  }
  if (agg.count == 0) return agg;
  agg.mean_model_score /= agg.count;
  agg.mean_ils_score /= agg.count;
  if (!gaps_ils.empty()) {
    agg.mean_gap_to_ils =
        std::accumulate(gaps_ils.begin(), gaps_ils.end(), 0.0) / gaps_ils.size();
    agg.gap_to_ils_ci = bootstrap_ci(gaps_ils, cfg.resamples, cfg.level,
                                     cfg.seed ^ seed_salt);
  }
  if (!gaps_bk.empty()) {
    agg.mean_gap_to_bk =
        std::accumulate(gaps_bk.begin(), gaps_bk.end(), 0.0) / gaps_bk.size();
    agg.gap_to_bk_ci = bootstrap_ci(gaps_bk, cfg.resamples, cfg.level,
                                    cfg.seed ^ seed_salt ^ 0xb4ULL);
  }
  return agg;
}

std::string format_double(double v) {
  std::ostringstream ss;
  ss.precision(10);
  ss << v;
  return ss.str();
}

}  // namespace

BenchReport run_benchmark(const BenchConfig& cfg) {
  const auto tasks = collect_tasks(cfg);
  BenchReport report;
  report.strategy = cfg.strategy.name();
  report.seed = cfg.seed;

  // Two slots per region (benchmark row, generated row), filled by the pool.
  std::vector<BenchRow> rows(tasks.size() * 2);
  std::atomic<std::size_t> next{0};

  auto worker = [&]() {
    for (;;) {
      const std::size_t t = next.fetch_add(1);
      if (t >= tasks.size()) return;
      const RegionTask& task = tasks[t];
      BenchRow& bench_row = rows[2 * t];
      BenchRow& gen_row = rows[2 * t + 1];
      bench_row.name = task.name;
      gen_row.name = task.name;
      gen_row.generated = true;
      try {
        const Instance inst = parse_benchmark(task.instance_path);
        PointerModel<float> model = load_checkpoint<float>(task.checkpoint_path);
        const EvalOutcome outcome = evaluate_one(model, inst, cfg);
        bench_row.model_score = outcome.model_score;
        bench_row.ils_score = outcome.ils_score;
        bench_row.time_s = outcome.time_s;

        if (!task.validation_paths.empty()) {
          double model_total = 0.0, ils_total = 0.0, time_total = 0.0;
          for (const auto& path : task.validation_paths) {
            const Instance tourist = read_canonical(path);
            const EvalOutcome o = evaluate_one(model, tourist, cfg);
            model_total += o.model_score;
            ils_total += o.ils_score;
            time_total += o.time_s;
          }
          const double k = static_cast<double>(task.validation_paths.size());
          gen_row.model_score = model_total / k;
          gen_row.ils_score = ils_total / k;
          gen_row.time_s = time_total / k;
        } else {
          gen_row.error = "no validation set";
        }
      } catch (const std::exception& e) {
        bench_row.error = e.what();
        gen_row.error = bench_row.error.empty() ? e.what() : "skipped";
      }
    }
  };

  const int workers = std::max(1, cfg.threads);
  if (workers == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }

  // Sidecar scores attach after the solves; reporting only.
  std::map<std::string, SidecarScores> sidecar;
  if (!cfg.sidecar_path.empty()) sidecar = load_sidecar(cfg.sidecar_path);
  for (BenchRow& row : rows) {
    if (!row.generated) {
      auto it = sidecar.find(row.name);
      if (it != sidecar.end()) {
        row.best_known = it->second.best_known;
        row.paper_ils = it->second.ils;
      }
    }
    fill_gaps(row);
  }

  std::vector<const BenchRow*> bench_rows, gen_rows;
  for (const BenchRow& row : rows) {
    if (row.generated) gen_rows.push_back(&row);
    else bench_rows.push_back(&row);
  }
  report.benchmark = aggregate_rows(bench_rows, cfg, 0x62ULL);
  report.generated = aggregate_rows(gen_rows, cfg, 0x67ULL);
  report.rows = std::move(rows);
  return report;
}

std::string bench_report_csv(const BenchReport& report) {
  std::ostringstream out;
  out << "name,generated,best_known,paper_ils,ils,model,gap_to_ils,gap_to_bk,"
         "time_s,error\n";
  for (const BenchRow& row : report.rows) {
    out << row.name << ',' << (row.generated ? 1 : 0) << ',';
    if (row.best_known) out << format_double(*row.best_known);
    out << ',';
    if (row.paper_ils) out << format_double(*row.paper_ils);
    out << ',';
    if (row.ils_score) out << format_double(*row.ils_score);
    out << ',';
    if (row.model_score) out << format_double(*row.model_score);
    out << ',';
    if (row.gap_to_ils) out << format_double(*row.gap_to_ils);
    out << ',';
    if (row.gap_to_bk) out << format_double(*row.gap_to_bk);
    out << ',' << format_double(row.time_s) << ',' << row.error << '\n';
  }
  return out.str();
}

namespace {

nlohmann::ordered_json aggregate_json(const BenchAggregate& agg) {
  nlohmann::ordered_json j;
  j["count"] = agg.count;
  j["mean_model_score"] = agg.mean_model_score;
  j["mean_ils_score"] = agg.mean_ils_score;
  j["mean_gap_to_ils"] = agg.mean_gap_to_ils;
  j["gap_to_ils_ci"] = {agg.gap_to_ils_ci.first, agg.gap_to_ils_ci.second};
  if (agg.mean_gap_to_bk) {
    j["mean_gap_to_bk"] = *agg.mean_gap_to_bk;
    j["gap_to_bk_ci"] = {agg.gap_to_bk_ci->first, agg.gap_to_bk_ci->second};
  }
  return j;
}

}  // namespace

std::string bench_report_json(const BenchReport& report) {
  nlohmann::ordered_json j;
  j["strategy"] = report.strategy;
  j["seed"] = report.seed;
  j["benchmark"] = aggregate_json(report.benchmark);
  j["generated"] = aggregate_json(report.generated);
  nlohmann::ordered_json rows = nlohmann::ordered_json::array();
  for (const BenchRow& row : report.rows) {
    nlohmann::ordered_json r;
    r["name"] = row.name;
    r["generated"] = row.generated;
    if (row.best_known) r["best_known"] = *row.best_known;
    if (row.paper_ils) r["paper_ils"] = *row.paper_ils;
    if (row.ils_score) r["ils"] = *row.ils_score;
    if (row.model_score) r["model"] = *row.model_score;
    if (row.gap_to_ils) r["gap_to_ils"] = *row.gap_to_ils;
    if (row.gap_to_bk) r["gap_to_bk"] = *row.gap_to_bk;
    r["time_s"] = row.time_s;
    if (!row.error.empty()) r["error"] = row.error;
    rows.push_back(r);
  }
  j["rows"] = rows;
  return j.dump(2) + "\n";
}

void write_bench_outputs(const BenchReport& report, const std::string& out_dir) {
  fs::create_directories(fs::path(out_dir) / "plotdata");

  std::ofstream csv(fs::path(out_dir) / "report.csv");
  if (!csv) raise(ErrorCode::IoError, "cannot write report.csv");
  csv << bench_report_csv(report);

  std::ofstream json_out(fs::path(out_dir) / "report.json");
  if (!json_out) raise(ErrorCode::IoError, "cannot write report.json");
  json_out << bench_report_json(report);

  std::ofstream tvs(fs::path(out_dir) / "plotdata" / "time_vs_score.csv");
  tvs << "name,generated,time_s,model_score\n";
  for (const BenchRow& row : report.rows) {
    if (!row.model_score) continue;
    tvs << row.name << ',' << (row.generated ? 1 : 0) << ','
        << format_double(row.time_s) << ',' << format_double(*row.model_score)
        << '\n';
  }

  std::ofstream gpr(fs::path(out_dir) / "plotdata" / "gap_per_region.csv");
  gpr << "name,generated,gap_to_ils,gap_to_bk\n";
  for (const BenchRow& row : report.rows) {
    if (!row.gap_to_ils && !row.gap_to_bk) continue;
    gpr << row.name << ',' << (row.generated ? 1 : 0) << ',';
    if (row.gap_to_ils) gpr << format_double(*row.gap_to_ils);
    gpr << ',';
    if (row.gap_to_bk) gpr << format_double(*row.gap_to_bk);
    gpr << '\n';
  }
}

}  // namespace optw
