#include "optw/model.hpp"

#include <json.hpp>

#include "optw/error.hpp"

namespace optw {

using nn::BoundParams;
using nn::Mat;
using nn::Tape;
using nn::Var;

void ModelConfig::check() const {
  if (d_e <= 0 || d_h <= 0 || d_d <= 0 || d_ff <= 0 || layers <= 0 || heads <= 0) {
    raise(ErrorCode::ShapeError, "model dimensions must be positive");
  }
  if (d_e % heads != 0) {
    raise(ErrorCode::ShapeError, "d_e must be divisible by the head count");
  }
  if (d_e % 2 != 0) {
    raise(ErrorCode::ShapeError, "d_e must be even (two embedding halves)");
  }
  if (clip_c <= 0.0) {
    raise(ErrorCode::ShapeError, "clip_c must be positive");
  }
}

std::string model_config_to_json(const ModelConfig& cfg) {
  nlohmann::ordered_json j;
  j["d_e"] = cfg.d_e;
  j["d_h"] = cfg.d_h;
  j["d_d"] = cfg.d_d;
  j["d_ff"] = cfg.d_ff;
  j["layers"] = cfg.layers;
  j["heads"] = cfg.heads;
  j["clip_c"] = cfg.clip_c;
  j["recursion"] = cfg.recursion;
  j["graph_mask"] =
      cfg.graph_mask == GraphMaskMode::Lookahead ? "lookahead" : "complete";
  j["mask_style"] =
      cfg.mask_style == nn::MaskStyle::NegInf ? "neg_inf" : "zero_score";
  return j.dump();
}

ModelConfig model_config_from_json(const std::string& text) {
  ModelConfig cfg;
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
    cfg.d_e = j.at("d_e").get<int>();
    cfg.d_h = j.at("d_h").get<int>();
    cfg.d_d = j.at("d_d").get<int>();
    cfg.d_ff = j.at("d_ff").get<int>();
    cfg.layers = j.at("layers").get<int>();
    cfg.heads = j.at("heads").get<int>();
    cfg.clip_c = j.at("clip_c").get<double>();
    cfg.recursion = j.at("recursion").get<bool>();
    cfg.graph_mask = j.at("graph_mask").get<std::string>() == "complete"
                         ? GraphMaskMode::CompleteGraph
                         : GraphMaskMode::Lookahead;
    cfg.mask_style = j.at("mask_style").get<std::string>() == "zero_score"
                         ? nn::MaskStyle::ZeroScore
                         : nn::MaskStyle::NegInf;
  } catch (const std::exception& e) {
    raise(ErrorCode::CheckpointError,
          std::string("bad model config: ") + e.what());
  }
  cfg.check();
  return cfg;
}

template <typename S>
PointerModel<S> PointerModel<S>::init(const ModelConfig& cfg,
                                      std::uint64_t seed) {
  cfg.check();
  PointerModel<S> model;
  model.cfg = cfg;
  Rng rng(seed);
  auto& p = model.params;
  const int half = cfg.d_e / 2;

  p.add("embed.static.w", nn::xavier_uniform<S>(kStaticFeatureCount, half, rng));
  p.add("embed.static.b", nn::xavier_uniform<S>(1, half, rng));
  p.add("embed.dynamic.w", nn::xavier_uniform<S>(kDynamicFeatureCount, half, rng));
  p.add("embed.dynamic.b", nn::xavier_uniform<S>(1, half, rng));

  for (int l = 0; l < cfg.layers; ++l) {
    const std::string base = "enc" + std::to_string(l);
    p.add(base + ".attn.wq", nn::xavier_uniform<S>(cfg.d_e, cfg.d_e, rng));
    p.add(base + ".attn.wk", nn::xavier_uniform<S>(cfg.d_e, cfg.d_e, rng));
    p.add(base + ".attn.wv", nn::xavier_uniform<S>(cfg.d_e, cfg.d_e, rng));
    p.add(base + ".attn.wo", nn::xavier_uniform<S>(cfg.d_e, cfg.d_e, rng));
    p.add(base + ".ln1.gain", Mat<S>::Ones(1, cfg.d_e));
    p.add(base + ".ln1.bias", Mat<S>::Zero(1, cfg.d_e));
    p.add(base + ".ff.w1", nn::xavier_uniform<S>(cfg.d_e, cfg.d_ff, rng));
    p.add(base + ".ff.b1", nn::xavier_uniform<S>(1, cfg.d_ff, rng));
    p.add(base + ".ff.w2", nn::xavier_uniform<S>(cfg.d_ff, cfg.d_e, rng));
    p.add(base + ".ff.b2", nn::xavier_uniform<S>(1, cfg.d_e, rng));
    p.add(base + ".ln2.gain", Mat<S>::Ones(1, cfg.d_e));
    p.add(base + ".ln2.bias", Mat<S>::Zero(1, cfg.d_e));
  }

  p.add("lstm.wx", nn::xavier_uniform<S>(cfg.d_e, 4 * cfg.d_d, rng));
  p.add("lstm.wh", nn::xavier_uniform<S>(cfg.d_d, 4 * cfg.d_d, rng));
  p.add("lstm.b", nn::xavier_uniform<S>(1, 4 * cfg.d_d, rng));

  // First hidden/cell states are learnable, U[-1/sqrt(d_h), 1/sqrt(d_h)].
  const double hb = 1.0 / std::sqrt(static_cast<double>(cfg.d_h));
  Mat<S> h0(1, cfg.d_d), c0(1, cfg.d_d);
  for (int i = 0; i < cfg.d_d; ++i) h0(0, i) = static_cast<S>(rng.uniform(-hb, hb));
  for (int i = 0; i < cfg.d_d; ++i) c0(0, i) = static_cast<S>(rng.uniform(-hb, hb));
  p.add("lstm.h0", std::move(h0));
  p.add("lstm.c0", std::move(c0));

  p.add("pointer.w1", nn::xavier_uniform<S>(cfg.d_e, cfg.d_h, rng));
  p.add("pointer.w2", nn::xavier_uniform<S>(cfg.d_d, cfg.d_h, rng));
  // The pointer weight vector is a weight, not a bias: Xavier bound with
  // fan_out 1.
  const double vb = std::sqrt(6.0 / (cfg.d_h + 1));
  Mat<S> v(cfg.d_h, 1);
  for (int i = 0; i < cfg.d_h; ++i) v(i, 0) = static_cast<S>(rng.uniform(-vb, vb));
  p.add("pointer.v", std::move(v));
  return model;
}

template <typename S>
Var embed(Tape<S>& tape, BoundParams<S>& p, const ModelConfig& cfg,
          Var f_static, Var f_dynamic) {
  (void)cfg;
  Var e_st = tape.tanh_(tape.add_rowvec(
      tape.matmul(f_static, p["embed.static.w"]), p["embed.static.b"]));
  Var e_dy = tape.tanh_(tape.add_rowvec(
      tape.matmul(f_dynamic, p["embed.dynamic.w"]), p["embed.dynamic.b"]));
  return tape.concat_cols({e_st, e_dy});
}

namespace {

template <typename S>
Var attention_sublayer(Tape<S>& tape, BoundParams<S>& p, const ModelConfig& cfg,
                       const std::string& base, Var x, Var key_src,
                       std::shared_ptr<const AdjacencyMask> mask) {
  const int dk = cfg.head_dim();
  Var q = tape.matmul(x, p[base + ".attn.wq"]);
  Var k = tape.matmul(key_src, p[base + ".attn.wk"]);
  Var v = tape.matmul(x, p[base + ".attn.wv"]);
  const S inv_sqrt_dk = static_cast<S>(1.0 / std::sqrt(static_cast<double>(dk)));

  std::vector<Var> heads;
  heads.reserve(cfg.heads);
  for (int h = 0; h < cfg.heads; ++h) {
    Var qh = tape.slice_cols(q, h * dk, dk);
    Var kh = tape.slice_cols(k, h * dk, dk);
    Var vh = tape.slice_cols(v, h * dk, dk);
    Var scores = tape.scale(tape.matmul(qh, tape.transpose(kh)), inv_sqrt_dk);
    Var attn;
    if (cfg.mask_style == nn::MaskStyle::NegInf) {
      attn = tape.masked_softmax_rows(scores, mask);
    } else {
      // Literal "set to zero" reading: masked scores contribute exp(0)
      // terms to the softmax.
      auto flat = std::shared_ptr<const std::vector<std::uint8_t>>(
          mask, &mask->matrix);
      attn = tape.softmax_rows(tape.apply_mask(scores, flat, S(0)));
    }
    heads.push_back(tape.matmul(attn, vh));
  }
  Var cat = tape.concat_cols(heads);
  return tape.matmul(cat, p[base + ".attn.wo"]);
}

}  // namespace

template <typename S>
Var set_encode(Tape<S>& tape, BoundParams<S>& p, const ModelConfig& cfg, Var e,
               Var h_prev, std::shared_ptr<const AdjacencyMask> mask) {
  Var x = e;
  for (int l = 0; l < cfg.layers; ++l) {
    const std::string base = "enc" + std::to_string(l);
    Var key_src = cfg.recursion ? h_prev : x;
    Var att = attention_sublayer(tape, p, cfg, base, x, key_src, mask);
    Var x1 = tape.layer_norm(tape.add(x, att), p[base + ".ln1.gain"],
                             p[base + ".ln1.bias"]);
    Var hidden = tape.relu(tape.add_rowvec(tape.matmul(x1, p[base + ".ff.w1"]),
                                           p[base + ".ff.b1"]));
    Var ff = tape.add_rowvec(tape.matmul(hidden, p[base + ".ff.w2"]),
                             p[base + ".ff.b2"]);
    x = tape.layer_norm(tape.add(x1, ff), p[base + ".ln2.gain"],
                        p[base + ".ln2.bias"]);
  }
  return x;
}

template <typename S>
std::pair<Var, Var> lstm_cell(Tape<S>& tape, Var x, Var h, Var c, Var wx,
                              Var wh, Var b) {
  const int d = static_cast<int>(tape.value(c).cols());
  Var gates = tape.add_rowvec(
      tape.add(tape.matmul(x, wx), tape.matmul(h, wh)), b);
  Var gi = tape.sigmoid(tape.slice_cols(gates, 0, d));
  Var gf = tape.sigmoid(tape.slice_cols(gates, d, d));
  Var gg = tape.tanh_(tape.slice_cols(gates, 2 * d, d));
  Var go = tape.sigmoid(tape.slice_cols(gates, 3 * d, d));
  Var c_next = tape.add(tape.hadamard(gf, c), tape.hadamard(gi, gg));
  Var h_next = tape.hadamard(go, tape.tanh_(c_next));
  return {h_next, c_next};
}

template <typename S>
Var point(Tape<S>& tape, BoundParams<S>& p, const ModelConfig& cfg, Var h_e,
          Var h_d, std::shared_ptr<const std::vector<std::uint8_t>> admissible) {
  bool any = false;
  for (auto a : *admissible) any = any || (a != 0);
  if (!any) {
    raise(ErrorCode::NoAdmissibleNode, "pointer needs an admissible node");
  }
  Var t1 = tape.matmul(h_e, p["pointer.w1"]);      // n x d_h
  Var t2 = tape.matmul(h_d, p["pointer.w2"]);      // 1 x d_h
  Var u = tape.matmul(tape.tanh_(tape.add_rowvec(t1, t2)), p["pointer.v"]);
  Var clipped = tape.scale(tape.tanh_(u), static_cast<S>(cfg.clip_c));
  Var logits = tape.apply_mask(tape.transpose(clipped), admissible,
                               static_cast<S>(nn::kNegInf));
  return tape.softmax_rows(logits);  // 1 x n
}

namespace {

template <typename S>
int pick_greedy(const Mat<S>& probs, const std::vector<std::uint8_t>& adm) {
  int best = -1;
  S best_p = S(-1);
  for (int j = 0; j < probs.cols(); ++j) {
    if (!adm[j]) continue;
    if (probs(0, j) > best_p) {
      best_p = probs(0, j);
      best = j;
    }
  }
  return best;
}

template <typename S>
int pick_sample(const Mat<S>& probs, const std::vector<std::uint8_t>& adm,
                Rng& rng) {
  const double u = rng.next_double();
  double cum = 0.0;
  int last = -1;
  for (int j = 0; j < probs.cols(); ++j) {
    if (!adm[j]) continue;
    last = j;
    cum += static_cast<double>(probs(0, j));
    if (u < cum) return j;
  }
  return last;  // guards the fp tail where cum sums to slightly below 1
}

}  // namespace

template <typename S>
RolloutResult<S> rollout(Tape<S>& tape, BoundParams<S>& bound,
                         const ModelConfig& cfg, const Instance& inst,
                         SelectMode mode, Rng* rng,
                         const std::vector<int>* forced_route) {
  RolloutResult<S> result;
  RouteState state = RouteState::initial(inst);

  const Mat<S> f_st = static_features(inst).cast<S>();
  Var f_static = tape.constant(f_st);
  Var h_prev{-1};
  Var h = bound["lstm.h0"];
  Var c = bound["lstm.c0"];
  Var log_sum{-1};
  std::size_t forced_at = 1;  // forced_route[0] is the start depot

  while (!state.terminal(inst)) {
    auto mask = std::make_shared<AdjacencyMask>(
        lookahead_adjacency(inst, state, cfg.graph_mask));
    auto adm = std::make_shared<const std::vector<std::uint8_t>>(mask->admissible);

    Var f_dynamic = tape.constant(Mat<S>(dynamic_features(inst, state).cast<S>()));
    Var e = embed(tape, bound, cfg, f_static, f_dynamic);
    if (!h_prev.valid()) h_prev = e;  // first-step key source
    Var h_e = set_encode(tape, bound, cfg, e, h_prev, mask);

    Var current_repr = tape.row(h_e, state.current_node);
    auto [h_next, c_next] = lstm_cell(tape, current_repr, h, c,
                                      bound["lstm.wx"], bound["lstm.wh"],
                                      bound["lstm.b"]);
    h = h_next;
    c = c_next;

    Var probs = point(tape, bound, cfg, h_e, h, adm);

    int j = -1;
    if (forced_route != nullptr) {
      if (forced_at >= forced_route->size()) {
        raise(ErrorCode::InfeasibleRoute, "forced route ended early",
              static_cast<long>(forced_at));
      }
      j = (*forced_route)[forced_at++];
    } else if (mode == SelectMode::Greedy) {
      j = pick_greedy(tape.value(probs), *adm);
    } else {
      j = pick_sample(tape.value(probs), *adm, *rng);
    }
    if (j < 0 || !(*adm)[j]) {
      raise(ErrorCode::NoAdmissibleNode,
            "selected node " + std::to_string(j) + " is not admissible");
    }

    Var lp = tape.log_(tape.pick(probs, 0, j));
    log_sum = log_sum.valid() ? tape.add(log_sum, lp) : lp;

    result.step_probs.push_back(static_cast<double>(tape.value(probs)(0, j)));
    state = advance(inst, state, j);
    h_prev = h_e;
  }

  result.route = state.route;
  result.log_prob_var = log_sum;
  result.log_prob = log_sum.valid() ? static_cast<double>(tape.value(log_sum)(0, 0)) : 0.0;
  return result;
}

template <typename S>
RolloutResult<S> rollout(PointerModel<S>& model, const Instance& inst,
                         SelectMode mode, Rng* rng) {
  Tape<S> tape;
  tape.grad_enabled = false;
  BoundParams<S> bound(tape, model.params);
  return rollout(tape, bound, model.cfg, inst, mode, rng);
}

// ---- StepEvaluator ----

template <typename S>
StepEvaluator<S>::StepEvaluator(PointerModel<S>& model, const Instance& inst)
    : model_(&model), inst_(&inst) {
  f_static_ = static_features(inst).cast<S>();
}

template <typename S>
EncoderState<S> StepEvaluator<S>::initial_state() const {
  EncoderState<S> enc;
  enc.lstm_h = model_->params.value("lstm.h0");
  enc.lstm_c = model_->params.value("lstm.c0");
  enc.step = 0;
  return enc;
}

template <typename S>
StepResult<S> StepEvaluator<S>::evaluate(const RouteState& state,
                                         const EncoderState<S>& enc) {
  Tape<S> tape;
  tape.grad_enabled = false;
  BoundParams<S> bound(tape, model_->params);
  const ModelConfig& cfg = model_->cfg;

  auto mask = std::make_shared<AdjacencyMask>(
      lookahead_adjacency(*inst_, state, cfg.graph_mask));
  auto adm = std::make_shared<const std::vector<std::uint8_t>>(mask->admissible);

  Var f_static = tape.constant(f_static_);
  Var f_dynamic =
      tape.constant(Mat<S>(dynamic_features(*inst_, state).cast<S>()));
  Var e = embed(tape, bound, cfg, f_static, f_dynamic);
  Var h_prev = enc.h_e_prev.size() > 0 ? tape.constant(enc.h_e_prev) : e;
  Var h_e = set_encode(tape, bound, cfg, e, h_prev, mask);

  Var current_repr = tape.row(h_e, state.current_node);
  auto [h_next, c_next] =
      lstm_cell(tape, current_repr, tape.constant(enc.lstm_h),
                tape.constant(enc.lstm_c), bound["lstm.wx"], bound["lstm.wh"],
                bound["lstm.b"]);
  Var probs = point(tape, bound, cfg, h_e, h_next, adm);

  StepResult<S> out;
  out.h_e = tape.value(h_e);
  out.lstm_h = tape.value(h_next);
  out.lstm_c = tape.value(c_next);
  out.probs = tape.value(probs).template cast<double>();
  out.admissible = *adm;
  return out;
}

// ---- explicit instantiations ----

template struct PointerModel<float>;
template struct PointerModel<double>;

template PointerModel<float> PointerModel<double>::cast<float>() const;
template PointerModel<double> PointerModel<float>::cast<double>() const;

template Var embed<float>(Tape<float>&, BoundParams<float>&, const ModelConfig&,
                          Var, Var);
template Var embed<double>(Tape<double>&, BoundParams<double>&,
                           const ModelConfig&, Var, Var);

template Var set_encode<float>(Tape<float>&, BoundParams<float>&,
                               const ModelConfig&, Var, Var,
                               std::shared_ptr<const AdjacencyMask>);
template Var set_encode<double>(Tape<double>&, BoundParams<double>&,
                                const ModelConfig&, Var, Var,
                                std::shared_ptr<const AdjacencyMask>);

template std::pair<Var, Var> lstm_cell<float>(Tape<float>&, Var, Var, Var, Var,
                                              Var, Var);
template std::pair<Var, Var> lstm_cell<double>(Tape<double>&, Var, Var, Var,
                                               Var, Var, Var);

template Var point<float>(Tape<float>&, BoundParams<float>&, const ModelConfig&,
                          Var, Var,
                          std::shared_ptr<const std::vector<std::uint8_t>>);
template Var point<double>(Tape<double>&, BoundParams<double>&,
                           const ModelConfig&, Var, Var,
                           std::shared_ptr<const std::vector<std::uint8_t>>);

template RolloutResult<float> rollout<float>(Tape<float>&, BoundParams<float>&,
                                             const ModelConfig&, const Instance&,
                                             SelectMode, Rng*,
                                             const std::vector<int>*);
template RolloutResult<double> rollout<double>(Tape<double>&,
                                               BoundParams<double>&,
                                               const ModelConfig&,
                                               const Instance&, SelectMode,
                                               Rng*, const std::vector<int>*);

template RolloutResult<float> rollout<float>(PointerModel<float>&,
                                             const Instance&, SelectMode, Rng*);
template RolloutResult<double> rollout<double>(PointerModel<double>&,
                                               const Instance&, SelectMode,
                                               Rng*);

template class StepEvaluator<float>;
template class StepEvaluator<double>;

}  // namespace optw
