#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "optw/inference.hpp"
#include "optw/instance.hpp"
#include "optw/model.hpp"
#include "optw/nn/optim.hpp"
#include "optw/tourist_gen.hpp"

namespace optw {

enum class TrainScheme { Scratch, Global, TransferLeaveOut, FineTune };

struct TrainConfig {
  int batch_size = 32;
  long epochs = 500000;           // 50000 for fine-tuning
  nn::AdamConfig adam;            // lr 1e-4, x0.96 / 5000 steps, floor 1e-5
  TrainScheme scheme = TrainScheme::Scratch;
  std::vector<std::string> leave_out;  // region names excluded when Global/Transfer
  std::uint64_t seed = 0;
  long monitor_every = 1000;      // greedy validation + checkpoint cadence
  ModelConfig model = ModelConfig{};
  int threads = 1;                // rollouts per epoch run concurrently
  std::string out_checkpoint;
  std::string log_path;           // TrainLog CSV; empty disables
  std::string init_checkpoint;    // required for FineTune
  int validation_count = 64;
  std::uint64_t validation_seed = 777;

  // Fine-tuning uses a fixed 1e-5 learning rate.
  static nn::AdamConfig fine_tune_adam() {
    nn::AdamConfig a;
    a.lr = 1e-5;
    a.lr_floor = 1e-5;
    return a;
  }
};

// Gavalas regions default to duration-correlated scores, everything else
// to uniform.
ScoreScheme default_score_scheme(const Instance& base);

// One REINFORCE update on a single fixed tourist-instance: batch_size
// sampled rollouts, batch-mean baseline, one Adam ascent step. Returns the
// mean batch score. Rollouts may run on `threads` workers with independent
// RNG substreams; the parameter update itself is single-threaded.
double reinforce_on_instance(PointerModel<float>& model,
                             const Instance& tourist, std::uint64_t rollout_seed,
                             int batch_size, const nn::AdamConfig& adam,
                             int threads);

// One training epoch: sample a tourist from the region (a random region of
// the set when more than one is given), then update on it.
double reinforce_epoch(PointerModel<float>& model,
                       const std::vector<const Instance*>& regions,
                       const std::vector<ScoreScheme>& schemes, long epoch,
                       const TrainConfig& cfg);

struct TrainLogRow {
  long epoch = 0;
  double mean_batch_score = 0.0;
  std::vector<double> validation_scores;  // greedy mean per region
  double wall_seconds = 0.0;
};

struct TrainResult {
  std::string checkpoint_path;
  std::vector<TrainLogRow> log;
};

// Full training driver for a set of parsed base regions. Writes periodic
// checkpoints and the TrainLog CSV when paths are configured.
TrainResult train(const std::vector<Instance>& regions, const TrainConfig& cfg);

struct ActiveSearchResult {
  PointerModel<float> model;  // tuned copy; the input model is untouched
  SolutionReport report;
};

// Algorithm: REINFORCE epochs on the single fixed instance, then beam
// search on the tuned parameters. epochs == 0 reduces to plain beam search.
ActiveSearchResult active_search(const PointerModel<float>& model,
                                 const Instance& inst, int epochs,
                                 std::uint64_t seed, int beams = 128,
                                 int batch_size = 32, int threads = 1);

void write_train_log_csv(const std::vector<TrainLogRow>& log,
                         const std::vector<std::string>& region_names,
                         const std::string& path);

}  // namespace optw
