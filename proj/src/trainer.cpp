#include "optw/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <fstream>
#include <map>
#include <numeric>
#include <thread>

#include "optw/error.hpp"

namespace optw {

namespace {

using GradMap = std::map<std::string, nn::Mat<float>>;

void accumulate(GradMap& acc, const std::string& name,
                const nn::Mat<float>& g, float weight) {
  auto it = acc.find(name);
  if (it == acc.end()) {
    acc.emplace(name, nn::Mat<float>(weight * g));
  } else {
    it->second += weight * g;
  }
}

void merge(GradMap& into, const GradMap& from) {
  for (const auto& [name, g] : from) accumulate(into, name, g, 1.0f);
}

double now_seconds() {
  using clock = std::chrono::steady_clock;
  return std::chrono::duration<double>(clock::now().time_since_epoch()).count();
}

}  // namespace

ScoreScheme default_score_scheme(const Instance& base) {
  return base.group_tag == GroupTag::Gavalas ? ScoreScheme::CorrelatedScores
                                             : ScoreScheme::UniformScores;
}

double reinforce_on_instance(PointerModel<float>& model,
                             const Instance& tourist,
                             std::uint64_t rollout_seed, int batch_size,
                             const nn::AdamConfig& adam, int threads) {
  if (batch_size < 2) {
    raise(ErrorCode::ShapeError, "batch size must be >= 2 for the mean baseline");
  }
  const int workers = std::max(1, std::min(threads, batch_size));

  std::vector<GradMap> acc_plain(workers);     // sum_b grad log p_b
  std::vector<GradMap> acc_weighted(workers);  // sum_b R_b grad log p_b
  std::vector<double> scores(batch_size, 0.0);
  std::vector<std::string> failures(workers);

  auto run_range = [&](int w, int b0, int b1) {
    try {
      for (int b = b0; b < b1; ++b) {
        Rng rng = Rng::substream(rollout_seed, static_cast<std::uint64_t>(b));
        nn::Tape<float> tape;
        nn::BoundParams<float> bound(tape, model.params);
        auto result = rollout(tape, bound, model.cfg, tourist,
                              SelectMode::Sample, &rng);
        const double reward = route_score(tourist, result.route);
        scores[b] = reward;
        tape.backward(result.log_prob_var);
        bound.visit_grads([&](const std::string& name, const nn::Mat<float>& g) {
          accumulate(acc_plain[w], name, g, 1.0f);
          accumulate(acc_weighted[w], name, g, static_cast<float>(reward));
        });
      }
    } catch (const std::exception& e) {
      failures[w] = e.what();
    }
  };

  if (workers == 1) {
    run_range(0, 0, batch_size);
  } else {
    std::vector<std::thread> pool;
    const int per = (batch_size + workers - 1) / workers;
    for (int w = 0; w < workers; ++w) {
      const int b0 = w * per;
      const int b1 = std::min(batch_size, b0 + per);
      if (b0 >= b1) break;
      pool.emplace_back(run_range, w, b0, b1);
    }
    for (auto& t : pool) t.join();
  }
  for (const auto& f : failures) {
    if (!f.empty()) {
      raise(ErrorCode::InfeasibleRoute,
            "rollout failed during REINFORCE batch: " + f);
    }
  }

  // Merge in worker order so a fixed thread count is deterministic.
  GradMap plain, weighted;
  for (int w = 0; w < workers; ++w) {
    merge(plain, acc_plain[w]);
    merge(weighted, acc_weighted[w]);
  }

  const double mean =
      std::accumulate(scores.begin(), scores.end(), 0.0) / batch_size;

  // Ascent on J via descent on -J:
  //   grad = -(1/B) * sum_b (R_b - mean) grad log p_b
  model.params.zero_grads();
  const float inv_b = 1.0f / static_cast<float>(batch_size);
  const float baseline = static_cast<float>(mean);
  for (auto& [name, gw] : weighted) {
    nn::Mat<float> g = gw;
    auto it = plain.find(name);
    if (it != plain.end()) g -= baseline * it->second;
    model.params.grad(name) = -inv_b * g;
  }
  nn::adam_step(model.params, adam);
  return mean;
}

double reinforce_epoch(PointerModel<float>& model,
                       const std::vector<const Instance*>& regions,
                       const std::vector<ScoreScheme>& schemes, long epoch,
                       const TrainConfig& cfg) {
  if (regions.empty()) {
    raise(ErrorCode::ShapeError, "training needs at least one region");
  }
  std::size_t pick = 0;
  if (regions.size() > 1) {
    Rng region_rng = Rng::substream(cfg.seed ^ 0x5245474eULL,
                                    static_cast<std::uint64_t>(epoch));
    pick = static_cast<std::size_t>(region_rng.next_below(regions.size()));
  }
  TouristSampler sampler(*regions[pick], schemes[pick],
                         cfg.seed ^ 0x544f5552ULL);
  const Instance tourist = sampler.generate(static_cast<std::uint64_t>(epoch));

  Rng seed_rng = Rng::substream(cfg.seed ^ 0x524f4c4cULL,
                                static_cast<std::uint64_t>(epoch));
  const std::uint64_t rollout_seed = seed_rng.next_u64();
  return reinforce_on_instance(model, tourist, rollout_seed, cfg.batch_size,
                               cfg.adam, cfg.threads);
}

TrainResult train(const std::vector<Instance>& all_regions,
                  const TrainConfig& cfg) {
  if (all_regions.empty()) {
    raise(ErrorCode::ShapeError, "no training regions given");
  }

  std::vector<const Instance*> regions;
  std::vector<ScoreScheme> schemes;
  for (const Instance& r : all_regions) {
    const bool left_out =
        std::find(cfg.leave_out.begin(), cfg.leave_out.end(), r.name) !=
        cfg.leave_out.end();
    if ((cfg.scheme == TrainScheme::Global ||
         cfg.scheme == TrainScheme::TransferLeaveOut) &&
        left_out) {
      continue;
    }
    regions.push_back(&r);
    schemes.push_back(default_score_scheme(r));
  }
  if (regions.empty()) {
    raise(ErrorCode::ShapeError, "leave-out list excludes every region");
  }
  if (cfg.scheme == TrainScheme::Scratch && regions.size() != 1) {
    raise(ErrorCode::ShapeError,
          "scratch training expects exactly one region; train per region");
  }

  PointerModel<float> model;
  nn::AdamConfig adam = cfg.adam;
  if (cfg.scheme == TrainScheme::FineTune) {
    if (cfg.init_checkpoint.empty()) {
      raise(ErrorCode::CheckpointError, "fine-tuning needs --ckpt");
    }
    model = load_checkpoint<float>(cfg.init_checkpoint);
    adam = TrainConfig::fine_tune_adam();
  } else {
    model = PointerModel<float>::init(cfg.model, cfg.seed);
  }

  // Fixed validation tourists per region, reused across monitor points.
  std::vector<std::vector<Instance>> validation;
  for (std::size_t r = 0; r < regions.size(); ++r) {
    validation.push_back(build_validation_set(
        *regions[r], cfg.validation_count, cfg.validation_seed, schemes[r]));
  }

  TrainConfig effective = cfg;
  effective.adam = adam;

  TrainResult result;
  const double t0 = now_seconds();
  for (long epoch = 0; epoch < cfg.epochs; ++epoch) {
    const double mean_score =
        reinforce_epoch(model, regions, schemes, epoch, effective);
    if (!model.params.all_finite()) {
      raise(ErrorCode::ShapeError,
            "non-finite parameters after epoch " + std::to_string(epoch));
    }
    const bool monitor = (cfg.monitor_every > 0 &&
                          (epoch + 1) % cfg.monitor_every == 0) ||
                         epoch + 1 == cfg.epochs;
    if (!monitor) continue;

    TrainLogRow row;
    row.epoch = epoch + 1;
    row.mean_batch_score = mean_score;
    for (std::size_t r = 0; r < regions.size(); ++r) {
      double total = 0.0;
      for (const Instance& tourist : validation[r]) {
        auto g = rollout(model, tourist, SelectMode::Greedy, nullptr);
        total += route_score(tourist, g.route);
      }
      row.validation_scores.push_back(total / validation[r].size());
    }
    row.wall_seconds = now_seconds() - t0;
    result.log.push_back(row);

    if (!cfg.out_checkpoint.empty()) {
      save_checkpoint(cfg.out_checkpoint, model, adam);
    }
  }

  if (!cfg.out_checkpoint.empty()) {
    save_checkpoint(cfg.out_checkpoint, model, adam);
    result.checkpoint_path = cfg.out_checkpoint;
  }
  if (!cfg.log_path.empty()) {
    std::vector<std::string> names;
    for (const Instance* r : regions) names.push_back(r->name);
    write_train_log_csv(result.log, names, cfg.log_path);
  }
  return result;
}

ActiveSearchResult active_search(const PointerModel<float>& model,
                                 const Instance& inst, int epochs,
                                 std::uint64_t seed, int beams, int batch_size,
                                 int threads) {
  ActiveSearchResult out;
  out.model = model;  // copy-on-tune; caller's checkpoint is untouched
  nn::AdamConfig adam = TrainConfig::fine_tune_adam();
  std::vector<double> progress;
  for (int epoch = 0; epoch < epochs; ++epoch) {
    Rng seed_rng = Rng::substream(seed ^ 0x41535243ULL,
                                  static_cast<std::uint64_t>(epoch));
    const double mean = reinforce_on_instance(
        out.model, inst, seed_rng.next_u64(), batch_size, adam, threads);
    progress.push_back(mean);
  }
  out.report = beam_search(out.model, inst, beams);
  out.report.strategy = "active_search";
  out.report.as_epochs = epochs;
  out.report.progress = std::move(progress);
  return out;
}

void write_train_log_csv(const std::vector<TrainLogRow>& log,
                         const std::vector<std::string>& region_names,
                         const std::string& path) {
  std::ofstream out(path);
  if (!out) raise(ErrorCode::IoError, "cannot write " + path);
  out << "epoch,mean_batch_score";
  for (const auto& name : region_names) out << ",val_" << name;
  out << ",wall_seconds\n";
  out.precision(10);
  for (const auto& row : log) {
    out << row.epoch << ',' << row.mean_batch_score;
    for (double v : row.validation_scores) out << ',' << v;
    out << ',' << row.wall_seconds << '\n';
  }
}

}  // namespace optw
