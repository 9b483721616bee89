#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "optw/bench.hpp"
#include "optw/ils.hpp"
#include "optw/inference.hpp"
#include "optw/instance_io.hpp"
#include "optw/oracle.hpp"
#include "optw/trainer.hpp"

namespace fs = std::filesystem;

namespace {

int env_threads(int flag_value) {
  if (flag_value > 0) return flag_value;
  if (const char* env = std::getenv("OPTW_THREADS")) {
    const int v = std::atoi(env);
    if (v > 0) return v;
  }
  return 1;
}

optw::Instance load_instance(const std::string& path, const std::string& format) {
  if (format.empty() || format == "auto") return optw::parse_benchmark(path);
  if (format == "solomon") {
    return optw::parse_benchmark(path, optw::FileFormat::SolomonOPTW);
  }
  if (format == "cordeau") {
    return optw::parse_benchmark(path, optw::FileFormat::CordeauOPTW);
  }
  if (format == "gavalas") {
    return optw::parse_benchmark(path, optw::FileFormat::GavalasOPTW);
  }
  if (format == "canonical") return optw::read_canonical(path);
  throw CLI::ValidationError("--format", "unknown format " + format);
}

std::vector<optw::Instance> load_regions(const std::string& path) {
  std::vector<optw::Instance> regions;
  if (fs::is_directory(path)) {
    std::vector<std::string> files;
    for (const auto& e : fs::directory_iterator(path)) {
      if (e.is_regular_file()) files.push_back(e.path().string());
    }
    std::sort(files.begin(), files.end());
    for (const auto& f : files) regions.push_back(optw::parse_benchmark(f));
  } else {
    regions.push_back(optw::parse_benchmark(path));
  }
  return regions;
}

optw::ModelConfig model_config_from_flags(bool desk) {
  return desk ? optw::ModelConfig::desk() : optw::ModelConfig{};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"OPTW solver toolkit: pointer-network policy with RL training, "
               "beam-search inference and an ILS baseline"};
  app.require_subcommand(1);

  // ---- convert ----
  std::string conv_in, conv_out, conv_format = "auto";
  auto* conv = app.add_subcommand("convert", "convert a benchmark file to canonical JSON");
  conv->add_option("--in", conv_in, "input instance")->required();
  conv->add_option("--out", conv_out, "output canonical JSON")->required();
  conv->add_option("--format", conv_format, "solomon|cordeau|gavalas|canonical|auto");

  // ---- validate ----
  std::string val_in, val_format = "auto";
  auto* val = app.add_subcommand("validate", "check instance invariants");
  val->add_option("--instance", val_in, "instance file")->required();
  val->add_option("--format", val_format, "input format");

  // ---- gen ----
  std::string gen_base, gen_out_dir, gen_scheme = "auto", gen_format = "auto";
  int gen_count = 64;
  std::uint64_t gen_seed = 0;
  auto* gen = app.add_subcommand("gen", "generate tourist validation sets");
  gen->add_option("--base", gen_base, "base benchmark instance")->required();
  gen->add_option("--count", gen_count, "tourists to generate");
  gen->add_option("--seed", gen_seed, "rng seed");
  gen->add_option("--scheme", gen_scheme, "uniform|correlated|auto");
  gen->add_option("--out-dir", gen_out_dir, "output directory")->required();
  gen->add_option("--format", gen_format, "input format");

  // ---- train ----
  std::string train_region, train_scheme = "scratch", train_out, train_log;
  std::string train_init_ckpt;
  std::vector<std::string> train_leave_out;
  long train_epochs = 500000;
  std::uint64_t train_seed = 0;
  long train_monitor = 1000;
  int train_threads = 0;
  bool train_desk = false;
  auto* tr = app.add_subcommand("train", "train a policy with REINFORCE");
  tr->add_option("--region", train_region, "region file or directory")->required();
  tr->add_option("--scheme", train_scheme, "scratch|global|transfer");
  tr->add_option("--leave-out", train_leave_out, "region names to exclude");
  tr->add_option("--epochs", train_epochs, "training epochs (batch updates)");
  tr->add_option("--seed", train_seed, "rng seed");
  tr->add_option("--out", train_out, "output checkpoint")->required();
  tr->add_option("--log", train_log, "TrainLog CSV path");
  tr->add_option("--monitor-every", train_monitor, "validation cadence");
  tr->add_option("--threads", train_threads, "rollout workers (or OPTW_THREADS)");
  tr->add_flag("--desk", train_desk, "desk-scale model dimensions");

  // ---- tune (fine-tune a checkpoint on one region) ----
  std::string tune_ckpt, tune_region, tune_out, tune_log;
  long tune_epochs = 50000;
  std::uint64_t tune_seed = 0;
  long tune_monitor = 1000;
  int tune_threads = 0;
  auto* tu = app.add_subcommand("tune", "fine-tune a checkpoint (fixed lr 1e-5)");
  tu->add_option("--ckpt", tune_ckpt, "starting checkpoint")->required();
  tu->add_option("--region", tune_region, "region file")->required();
  tu->add_option("--epochs", tune_epochs, "fine-tuning epochs");
  tu->add_option("--seed", tune_seed, "rng seed");
  tu->add_option("--out", tune_out, "output checkpoint")->required();
  tu->add_option("--log", tune_log, "TrainLog CSV path");
  tu->add_option("--monitor-every", tune_monitor, "validation cadence");
  tu->add_option("--threads", tune_threads, "rollout workers");

  // ---- infer ----
  std::string inf_ckpt, inf_instance, inf_strategy = "beam", inf_out, inf_format = "auto";
  int inf_beams = 128, inf_as_epochs = 128;
  std::uint64_t inf_seed = 0;
  auto* inf = app.add_subcommand("infer", "solve one instance from a checkpoint");
  inf->add_option("--ckpt", inf_ckpt, "checkpoint")->required();
  inf->add_option("--instance", inf_instance, "instance file")->required();
  inf->add_option("--strategy", inf_strategy, "greedy|sample|beam|active");
  inf->add_option("--beams", inf_beams, "beam width");
  inf->add_option("--as-epochs", inf_as_epochs, "active-search epochs");
  inf->add_option("--seed", inf_seed, "rng seed");
  inf->add_option("--out", inf_out, "report JSON path");
  inf->add_option("--format", inf_format, "input format");

  // ---- ils ----
  std::string ils_instance, ils_out, ils_format = "auto";
  std::uint64_t ils_seed = 0;
  int ils_iters = 150;
  auto* ic = app.add_subcommand("ils", "iterated local search baseline");
  ic->add_option("--instance", ils_instance, "instance file")->required();
  ic->add_option("--seed", ils_seed, "seed (tagging only; ILS is deterministic)");
  ic->add_option("--max-no-improve", ils_iters, "stop after this many non-improving shakes");
  ic->add_option("--out", ils_out, "report JSON path");
  ic->add_option("--format", ils_format, "input format");

  // ---- oracle ----
  std::string ora_instance, ora_format = "auto";
  int ora_cap = 12;
  auto* ora = app.add_subcommand("oracle", "exact brute-force optimum (small instances)");
  ora->add_option("--instance", ora_instance, "instance file")->required();
  ora->add_option("--cap", ora_cap, "max non-depot nodes");
  ora->add_option("--format", ora_format, "input format");

  // ---- bench ----
  std::string bench_ckpt_dir, bench_ckpt, bench_regions, bench_out, bench_sidecar;
  std::string bench_strategy = "beam";
  int bench_beams = 128, bench_as_epochs = 128, bench_threads = 0, bench_ils_iters = 150;
  std::uint64_t bench_seed = 0;
  auto* be = app.add_subcommand("bench", "benchmark a checkpoint against ILS");
  be->add_option("--ckpt-dir", bench_ckpt_dir, "directory of <region>.ckpt files");
  be->add_option("--ckpt", bench_ckpt, "single checkpoint for all regions");
  be->add_option("--regions", bench_regions, "directory of region instances")->required();
  be->add_option("--strategy", bench_strategy, "greedy|sample|beam|active");
  be->add_option("--beams", bench_beams, "beam width");
  be->add_option("--as-epochs", bench_as_epochs, "active-search epochs");
  be->add_option("--seed", bench_seed, "rng seed");
  be->add_option("--sidecar", bench_sidecar, "published-score table (JSON)");
  be->add_option("--out-dir", bench_out, "output directory")->required();
  be->add_option("--threads", bench_threads, "worker pool size");
  be->add_option("--max-no-improve", bench_ils_iters, "ILS stopping patience");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*conv) {
      optw::write_canonical(load_instance(conv_in, conv_format), conv_out);
      std::cout << "wrote " << conv_out << "\n";
    } else if (*val) {
      const auto inst = load_instance(val_in, val_format);
      const auto violations = optw::validate_instance(inst);
      for (const auto& v : violations) {
        std::cout << v.rule;
        if (v.node >= 0) std::cout << " (node " << v.node << ")";
        std::cout << "\n";
      }
      std::cout << (violations.empty() ? "ok" : "invalid") << "\n";
      return violations.empty() ? 0 : 1;
    } else if (*gen) {
      const auto base = load_instance(gen_base, gen_format);
      optw::ScoreScheme scheme = optw::default_score_scheme(base);
      if (gen_scheme == "uniform") scheme = optw::ScoreScheme::UniformScores;
      else if (gen_scheme == "correlated") scheme = optw::ScoreScheme::CorrelatedScores;
      optw::build_validation_set(base, gen_count, gen_seed, scheme, gen_out_dir);
      std::cout << "wrote " << gen_count << " tourists under " << gen_out_dir
                << "/" << base.name << "/validation\n";
    } else if (*tr) {
      optw::TrainConfig cfg;
      cfg.epochs = train_epochs;
      cfg.seed = train_seed;
      cfg.monitor_every = train_monitor;
      cfg.threads = env_threads(train_threads);
      cfg.out_checkpoint = train_out;
      cfg.log_path = train_log;
      cfg.leave_out = train_leave_out;
      cfg.model = model_config_from_flags(train_desk);
      if (train_scheme == "scratch") cfg.scheme = optw::TrainScheme::Scratch;
      else if (train_scheme == "global") cfg.scheme = optw::TrainScheme::Global;
      else if (train_scheme == "transfer") cfg.scheme = optw::TrainScheme::TransferLeaveOut;
      else throw CLI::ValidationError("--scheme", "unknown scheme " + train_scheme);
      const auto regions = load_regions(train_region);
      const auto result = optw::train(regions, cfg);
      std::cout << "checkpoint: " << result.checkpoint_path << "\n";
    } else if (*tu) {
      optw::TrainConfig cfg;
      cfg.scheme = optw::TrainScheme::FineTune;
      cfg.init_checkpoint = tune_ckpt;
      cfg.epochs = tune_epochs;
      cfg.seed = tune_seed;
      cfg.monitor_every = tune_monitor;
      cfg.threads = env_threads(tune_threads);
      cfg.out_checkpoint = tune_out;
      cfg.log_path = tune_log;
      const auto regions = load_regions(tune_region);
      const auto result = optw::train(regions, cfg);
      std::cout << "checkpoint: " << result.checkpoint_path << "\n";
    } else if (*inf) {
      auto model = optw::load_checkpoint<float>(inf_ckpt);
      const auto inst = load_instance(inf_instance, inf_format);
      const auto strategy =
          optw::Strategy::parse(inf_strategy, inf_beams, inf_as_epochs, inf_seed);
      const auto report = optw::solve(model, inst, strategy);
      if (!inf_out.empty()) optw::write_report(report, inf_out);
      std::cout << "score " << report.score << " in " << report.wall_seconds
                << "s, route size " << report.route.size() << "\n";
    } else if (*ic) {
      const auto inst = load_instance(ils_instance, ils_format);
      optw::IlsConfig cfg;
      cfg.seed = ils_seed;
      cfg.max_no_improve = ils_iters;
      const auto report = optw::ils_solve(inst, cfg);
      if (!ils_out.empty()) optw::write_report(report, ils_out);
      std::cout << "score " << report.score << " in " << report.wall_seconds
                << "s, route size " << report.route.size() << "\n";
    } else if (*ora) {
      const auto inst = load_instance(ora_instance, ora_format);
      const auto best = optw::brute_force_optimum(inst, ora_cap);
      std::cout << "optimum " << best.score << ", route size "
                << best.route.size() << "\n";
    } else if (*be) {
      optw::BenchConfig cfg;
      cfg.ckpt_dir = bench_ckpt_dir;
      cfg.ckpt_path = bench_ckpt;
      cfg.regions_dir = bench_regions;
      cfg.sidecar_path = bench_sidecar;
      cfg.out_dir = bench_out;
      cfg.strategy = optw::Strategy::parse(bench_strategy, bench_beams,
                                           bench_as_epochs, bench_seed);
      cfg.seed = bench_seed;
      cfg.threads = env_threads(bench_threads);
      cfg.ils_max_no_improve = bench_ils_iters;
      const auto report = optw::run_benchmark(cfg);
      optw::write_bench_outputs(report, bench_out);
      std::cout << "benchmark rows: " << report.rows.size() << ", outputs in "
                << bench_out << "\n";
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
