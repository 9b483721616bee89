#pragma once

#include <memory>
#include <string>
#include <vector>

#include "optw/features.hpp"
#include "optw/instance.hpp"
#include "optw/nn/autodiff.hpp"
#include "optw/nn/optim.hpp"
#include "optw/rng.hpp"

namespace optw {

struct ModelConfig {
  int d_e = 128;   // node representation width (two embedding halves)
  int d_h = 128;   // pointer hidden width
  int d_d = 128;   // LSTM width
  int d_ff = 256;  // encoder feedforward width
  int layers = 2;
  int heads = 8;
  double clip_c = 10.0;
  bool recursion = true;
  GraphMaskMode graph_mask = GraphMaskMode::Lookahead;
  nn::MaskStyle mask_style = nn::MaskStyle::NegInf;

  int head_dim() const { return d_e / heads; }

  // Small configuration for tests and CI-scale training runs.
  static ModelConfig desk() {
    ModelConfig cfg;
    cfg.d_e = cfg.d_h = cfg.d_d = 16;
    cfg.d_ff = 32;
    return cfg;
  }

  void check() const;
};

std::string model_config_to_json(const ModelConfig& cfg);
ModelConfig model_config_from_json(const std::string& text);

// Policy network: static/dynamic embedding, transformer set encoder with
// key recursion and graph-masked attention, LSTM sequence encoder and the
// clipped additive-attention pointer.
template <typename S>
struct PointerModel {
  ModelConfig cfg;
  nn::ParameterStore<S> params;

  static PointerModel init(const ModelConfig& cfg, std::uint64_t seed);

  template <typename T>
  PointerModel<T> cast() const {
    PointerModel<T> out;
    out.cfg = cfg;
    out.params = params.template cast<T>();
    return out;
  }
};

// ---- forward building blocks (shared by training and inference) ----

// e_i = [tanh(W_st f_st + b_st), tanh(W_dy f_dy + b_dy)], n x d_e.
template <typename S>
nn::Var embed(nn::Tape<S>& tape, nn::BoundParams<S>& p, const ModelConfig& cfg,
              nn::Var f_static, nn::Var f_dynamic);

// Two-block transformer encoder. Queries and values come from the current
// layer input; keys come from `h_prev` (the previous iteration's final
// encoding) when cfg.recursion is set. Attention is restricted to mask
// edges; rows without any edge fall back to their own value vector.
template <typename S>
nn::Var set_encode(nn::Tape<S>& tape, nn::BoundParams<S>& p,
                   const ModelConfig& cfg, nn::Var e, nn::Var h_prev,
                   std::shared_ptr<const AdjacencyMask> mask);

// Standard LSTM cell on 1 x d row vectors. Returns (h, c).
template <typename S>
std::pair<nn::Var, nn::Var> lstm_cell(nn::Tape<S>& tape, nn::Var x, nn::Var h,
                                      nn::Var c, nn::Var wx, nn::Var wh,
                                      nn::Var b);

// Pointer distribution over nodes (1 x n). Inadmissible nodes have
// probability exactly 0; finite logits lie in [-C, C]. Throws
// NoAdmissibleNode when the admissible set is empty.
template <typename S>
nn::Var point(nn::Tape<S>& tape, nn::BoundParams<S>& p, const ModelConfig& cfg,
              nn::Var h_e, nn::Var h_d,
              std::shared_ptr<const std::vector<std::uint8_t>> admissible);

// ---- rollout ----

enum class SelectMode { Greedy, Sample };

template <typename S>
struct RolloutResult {
  std::vector<int> route;
  std::vector<double> step_probs;  // probability of each chosen node
  double log_prob = 0.0;
  nn::Var log_prob_var;            // valid while the tape is alive
};

// Full construction loop: featurize, embed, encode (fresh every step),
// LSTM step on the current node's representation, point, select, advance;
// stops at the end depot. With tape.grad_enabled the returned
// log_prob_var backs the REINFORCE gradient. `forced_route`, when given,
// replaces selection with the listed moves (teacher forcing); it must
// start at the start depot.
template <typename S>
RolloutResult<S> rollout(nn::Tape<S>& tape, nn::BoundParams<S>& bound,
                         const ModelConfig& cfg, const Instance& inst,
                         SelectMode mode, Rng* rng,
                         const std::vector<int>* forced_route = nullptr);

// Convenience wrapper for inference-style calls (fresh no-grad tape).
template <typename S>
RolloutResult<S> rollout(PointerModel<S>& model, const Instance& inst,
                         SelectMode mode, Rng* rng);

// ---- incremental forward for beam search ----

// Plain-value encoder state carried between construction steps.
template <typename S>
struct EncoderState {
  nn::Mat<S> h_e_prev;  // empty before the first step
  nn::Mat<S> lstm_h;
  nn::Mat<S> lstm_c;
  int step = 0;
};

template <typename S>
struct StepResult {
  nn::Mat<S> h_e;
  nn::Mat<S> lstm_h;
  nn::Mat<S> lstm_c;
  Eigen::RowVectorXd probs;
  std::vector<std::uint8_t> admissible;
};

// One no-grad forward pass for `state`, reusing the instance's static
// features. The caller threads EncoderState values between steps.
template <typename S>
class StepEvaluator {
 public:
  StepEvaluator(PointerModel<S>& model, const Instance& inst);

  EncoderState<S> initial_state() const;
  StepResult<S> evaluate(const RouteState& state, const EncoderState<S>& enc);

 private:
  PointerModel<S>* model_;
  const Instance* inst_;
  nn::Mat<S> f_static_;
};

// ---- checkpointing ----

// Versioned binary container: dtype tag, step count, Adam configuration,
// model configuration, then name -> shape -> raw little-endian values with
// Adam moments. Round-trips bit-exact.
template <typename S>
void save_checkpoint(const std::string& path, const PointerModel<S>& model,
                     const nn::AdamConfig& adam);

template <typename S>
PointerModel<S> load_checkpoint(const std::string& path,
                                nn::AdamConfig* adam_out = nullptr);

}  // namespace optw
