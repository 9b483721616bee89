#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <map>

#include "optw/error.hpp"
#include "optw/features.hpp"
#include "optw/model.hpp"
#include "test_util.hpp"

using namespace optw;
using nn::BoundParams;
using nn::Mat;
using nn::Tape;
using nn::Var;
using testutil::make_instance;

namespace {

ModelConfig desk_cfg() { return ModelConfig::desk(); }

Mat<double> random_mat(Rng& rng, int r, int c, double lo = -1.0, double hi = 1.0) {
  Mat<double> m(r, c);
  for (int j = 0; j < c; ++j) {
    for (int i = 0; i < r; ++i) m(i, j) = rng.uniform(lo, hi);
  }
  return m;
}

std::shared_ptr<AdjacencyMask> full_mask(int n) {
  auto mask = std::make_shared<AdjacencyMask>();
  mask->n = n;
  mask->admissible.assign(n, 1);
  mask->matrix.assign(static_cast<std::size_t>(n) * n, 0);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      if (i != j) mask->set_edge(i, j);
    }
  }
  return mask;
}

}  // namespace

TEST_CASE("embedding halves concatenate and stay inside tanh range") {
  auto model = PointerModel<double>::init(desk_cfg(), 1);
  Rng rng(2);
  const int n = 7;
  Mat<double> f_st = random_mat(rng, n, kStaticFeatureCount);
  Mat<double> f_dy = random_mat(rng, n, kDynamicFeatureCount);

  Tape<double> tape;
  BoundParams<double> bound(tape, model.params);
  Var e = embed(tape, bound, model.cfg, tape.constant(f_st), tape.constant(f_dy));
  const auto& v = tape.value(e);
  CHECK(v.rows() == n);
  CHECK(v.cols() == desk_cfg().d_e);
  CHECK(v.cwiseAbs().maxCoeff() < 1.0);

  // zero weights give a zero embedding
  model.params.value("embed.static.w").setZero();
  model.params.value("embed.static.b").setZero();
  model.params.value("embed.dynamic.w").setZero();
  model.params.value("embed.dynamic.b").setZero();
  Tape<double> tape2;
  BoundParams<double> bound2(tape2, model.params);
  Var e2 = embed(tape2, bound2, model.cfg, tape2.constant(f_st),
                 tape2.constant(f_dy));
  CHECK(tape2.value(e2).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("embedding is a row-wise map: permuting inputs permutes outputs") {
  auto model = PointerModel<double>::init(desk_cfg(), 3);
  Rng rng(4);
  const int n = 6;
  Mat<double> f_st = random_mat(rng, n, kStaticFeatureCount);
  Mat<double> f_dy = random_mat(rng, n, kDynamicFeatureCount);
  std::vector<int> perm{3, 0, 5, 1, 4, 2};
  Mat<double> f_st_p(n, kStaticFeatureCount), f_dy_p(n, kDynamicFeatureCount);
  for (int i = 0; i < n; ++i) {
    f_st_p.row(i) = f_st.row(perm[i]);
    f_dy_p.row(i) = f_dy.row(perm[i]);
  }

  Tape<double> tape;
  BoundParams<double> bound(tape, model.params);
  const auto a = tape.value(embed(tape, bound, model.cfg, tape.constant(f_st),
                                  tape.constant(f_dy)));
  const auto b = tape.value(embed(tape, bound, model.cfg, tape.constant(f_st_p),
                                  tape.constant(f_dy_p)));
  for (int i = 0; i < n; ++i) {
    CHECK((b.row(i) - a.row(perm[i])).cwiseAbs().maxCoeff() <= 1e-14);
  }
}

TEST_CASE("set encoder is permutation equivariant") {
  auto cfg = desk_cfg();
  auto model = PointerModel<double>::init(cfg, 5);
  Rng rng(6);
  const int n = 7;
  Mat<double> e = random_mat(rng, n, cfg.d_e);
  Mat<double> h_prev = random_mat(rng, n, cfg.d_e);

  // random mask with a few edges and at least one empty row
  auto mask = std::make_shared<AdjacencyMask>();
  mask->n = n;
  mask->admissible.assign(n, 1);
  mask->matrix.assign(static_cast<std::size_t>(n) * n, 0);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      if (i != j && i != 4 && rng.next_double() < 0.4) mask->set_edge(i, j);
    }
  }

  std::vector<int> perm{2, 6, 0, 3, 5, 1, 4};
  Mat<double> e_p(n, cfg.d_e), h_p(n, cfg.d_e);
  auto mask_p = std::make_shared<AdjacencyMask>();
  mask_p->n = n;
  mask_p->admissible.assign(n, 1);
  mask_p->matrix.assign(static_cast<std::size_t>(n) * n, 0);
  for (int i = 0; i < n; ++i) {
    e_p.row(i) = e.row(perm[i]);
    h_p.row(i) = h_prev.row(perm[i]);
    for (int j = 0; j < n; ++j) {
      if (mask->edge(perm[i], perm[j])) mask_p->set_edge(i, j);
    }
  }

  Tape<double> tape;
  BoundParams<double> bound(tape, model.params);
  const auto out = tape.value(set_encode(tape, bound, cfg, tape.constant(e),
                                         tape.constant(h_prev), mask));
  const auto out_p = tape.value(set_encode(tape, bound, cfg, tape.constant(e_p),
                                           tape.constant(h_p), mask_p));
  for (int i = 0; i < n; ++i) {
    CHECK((out_p.row(i) - out.row(perm[i])).cwiseAbs().maxCoeff() <= 1e-10);
  }
}

TEST_CASE("without recursion the keys ignore the previous encoding") {
  auto cfg = desk_cfg();
  cfg.recursion = false;
  auto model = PointerModel<double>::init(cfg, 7);
  Rng rng(8);
  const int n = 5;
  Mat<double> e = random_mat(rng, n, cfg.d_e);
  auto mask = full_mask(n);

  Tape<double> tape;
  BoundParams<double> bound(tape, model.params);
  const auto a = tape.value(set_encode(tape, bound, cfg, tape.constant(e),
                                       tape.constant(random_mat(rng, n, cfg.d_e)),
                                       mask));
  const auto b = tape.value(set_encode(tape, bound, cfg, tape.constant(e),
                                       tape.constant(random_mat(rng, n, cfg.d_e)),
                                       mask));
  CHECK((a - b).cwiseAbs().maxCoeff() == 0.0);

  // with recursion the same change does matter
  auto cfg_rec = desk_cfg();
  auto model_rec = PointerModel<double>::init(cfg_rec, 7);
  Tape<double> tape2;
  BoundParams<double> bound2(tape2, model_rec.params);
  const auto c = tape2.value(set_encode(tape2, bound2, cfg_rec, tape2.constant(e),
                                        tape2.constant(random_mat(rng, n, cfg_rec.d_e)),
                                        mask));
  const auto d = tape2.value(set_encode(tape2, bound2, cfg_rec, tape2.constant(e),
                                        tape2.constant(random_mat(rng, n, cfg_rec.d_e)),
                                        mask));
  CHECK((c - d).cwiseAbs().maxCoeff() > 0.0);
}

TEST_CASE("pointer puts probability 1 on a single admissible node") {
  auto cfg = desk_cfg();
  auto model = PointerModel<double>::init(cfg, 9);
  Rng rng(10);
  const int n = 6;
  Mat<double> h_e = random_mat(rng, n, cfg.d_e);
  Mat<double> h_d = random_mat(rng, 1, cfg.d_d);
  auto adm = std::make_shared<const std::vector<std::uint8_t>>(
      std::vector<std::uint8_t>{0, 0, 0, 1, 0, 0});

  Tape<double> tape;
  BoundParams<double> bound(tape, model.params);
  Var p = point(tape, bound, cfg, tape.constant(h_e), tape.constant(h_d), adm);
  const auto& v = tape.value(p);
  CHECK(v(0, 3) == 1.0);
  for (int j = 0; j < n; ++j) {
    if (j != 3) CHECK(v(0, j) == 0.0);
  }
}

TEST_CASE("pointer is uniform over identical representations") {
  auto cfg = desk_cfg();
  auto model = PointerModel<double>::init(cfg, 11);
  Rng rng(12);
  const int n = 5;
  Mat<double> h_e = random_mat(rng, 1, cfg.d_e).replicate(n, 1);
  Mat<double> h_d = random_mat(rng, 1, cfg.d_d);
  auto adm = std::make_shared<const std::vector<std::uint8_t>>(
      std::vector<std::uint8_t>(n, 1));

  Tape<double> tape;
  BoundParams<double> bound(tape, model.params);
  Var p = point(tape, bound, cfg, tape.constant(h_e), tape.constant(h_d), adm);
  const auto& v = tape.value(p);
  for (int j = 0; j < n; ++j) {
    CHECK(v(0, j) == doctest::Approx(1.0 / n).epsilon(1e-12));
  }
}

TEST_CASE("clipped logits bound the probability ratio by exp(2C)") {
  auto cfg = desk_cfg();
  auto model = PointerModel<double>::init(cfg, 13);
  Rng rng(14);
  const int n = 8;
  // extreme representations try to saturate the logits
  Mat<double> h_e = random_mat(rng, n, cfg.d_e, -50.0, 50.0);
  Mat<double> h_d = random_mat(rng, 1, cfg.d_d, -50.0, 50.0);
  auto adm = std::make_shared<const std::vector<std::uint8_t>>(
      std::vector<std::uint8_t>(n, 1));

  Tape<double> tape;
  BoundParams<double> bound(tape, model.params);
  Var p = point(tape, bound, cfg, tape.constant(h_e), tape.constant(h_d), adm);
  const auto& v = tape.value(p);
  const double ratio = v.maxCoeff() / v.minCoeff();
  CHECK(ratio <= std::exp(2.0 * cfg.clip_c) * (1.0 + 1e-9));
}

TEST_CASE("pointer with no admissible node raises NoAdmissibleNode") {
  auto cfg = desk_cfg();
  auto model = PointerModel<double>::init(cfg, 15);
  Tape<double> tape;
  BoundParams<double> bound(tape, model.params);
  auto adm = std::make_shared<const std::vector<std::uint8_t>>(
      std::vector<std::uint8_t>(4, 0));
  CHECK_THROWS_AS(point(tape, bound, cfg, tape.constant(Mat<double>::Zero(4, 16)),
                        tape.constant(Mat<double>::Zero(1, 16)), adm),
                  Error);
}

TEST_CASE("forced single-choice instance gives log probability zero") {
  // only [start, end] is feasible
  auto inst = make_instance({{50.0, 0.0, 9.0, 0.0, 1.0, 1.0}}, 0.0, 10.0);
  auto model = PointerModel<float>::init(desk_cfg(), 17);
  auto result = rollout(model, inst, SelectMode::Greedy, nullptr);
  CHECK(result.route == std::vector<int>{0, 2});
  CHECK(result.log_prob == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(result.step_probs == std::vector<double>{1.0});
}

TEST_CASE("greedy rollouts are deterministic") {
  Rng rng(18);
  auto inst = testutil::random_instance(rng, 10);
  auto model = PointerModel<float>::init(desk_cfg(), 19);
  auto a = rollout(model, inst, SelectMode::Greedy, nullptr);
  auto b = rollout(model, inst, SelectMode::Greedy, nullptr);
  CHECK(a.route == b.route);
  CHECK(a.log_prob == b.log_prob);
}

TEST_CASE("rollout routes are always feasible and end at the depot") {
  Rng rng(20);
  for (int trial = 0; trial < 40; ++trial) {
    auto inst = testutil::random_instance(rng, 9);
    auto model = PointerModel<float>::init(desk_cfg(), 100 + trial);
    Rng sample_rng(trial);
    auto result = rollout(model, inst, SelectMode::Sample, &sample_rng);
    CHECK(result.route.back() == inst.end_index);
    CHECK_NOTHROW(route_score(inst, result.route));
  }
}

TEST_CASE("masked nodes have probability exactly zero at every step") {
  Rng rng(22);
  auto inst = testutil::random_instance(rng, 10);
  auto model = PointerModel<float>::init(desk_cfg(), 23);
  StepEvaluator<float> eval(model, inst);
  auto enc = eval.initial_state();
  RouteState state = RouteState::initial(inst);
  while (!state.terminal(inst)) {
    auto step = eval.evaluate(state, enc);
    double sum = 0.0;
    for (int j = 0; j < inst.n(); ++j) {
      if (!step.admissible[j]) {
        CHECK(step.probs(j) == 0.0);
      }
      sum += step.probs(j);
    }
    CHECK(sum == doctest::Approx(1.0).epsilon(1e-5));
    // follow the argmax
    int pick = -1;
    double best = -1.0;
    for (int j = 0; j < inst.n(); ++j) {
      if (step.admissible[j] && step.probs(j) > best) {
        best = step.probs(j);
        pick = j;
      }
    }
    enc.h_e_prev = step.h_e;
    enc.lstm_h = step.lstm_h;
    enc.lstm_c = step.lstm_c;
    enc.step += 1;
    state = advance(inst, state, pick);
  }
}

TEST_CASE("stepwise evaluator reproduces the rollout path exactly") {
  Rng rng(24);
  auto inst = testutil::random_instance(rng, 8);
  auto model = PointerModel<float>::init(desk_cfg(), 25);
  auto reference = rollout(model, inst, SelectMode::Greedy, nullptr);

  StepEvaluator<float> eval(model, inst);
  auto enc = eval.initial_state();
  RouteState state = RouteState::initial(inst);
  std::vector<int> route{state.current_node};
  std::vector<double> probs;
  while (!state.terminal(inst)) {
    auto step = eval.evaluate(state, enc);
    int pick = -1;
    double best = -1.0;
    for (int j = 0; j < inst.n(); ++j) {
      if (step.admissible[j] && step.probs(j) > best) {
        best = step.probs(j);
        pick = j;
      }
    }
    probs.push_back(step.probs(pick));
    enc.h_e_prev = step.h_e;
    enc.lstm_h = step.lstm_h;
    enc.lstm_c = step.lstm_c;
    state = advance(inst, state, pick);
    route.push_back(pick);
  }
  CHECK(route == reference.route);
  REQUIRE(probs.size() == reference.step_probs.size());
  for (std::size_t i = 0; i < probs.size(); ++i) {
    CHECK(probs[i] == doctest::Approx(reference.step_probs[i]).epsilon(1e-6));
  }
}

TEST_CASE("sampling frequencies match chain-rule probabilities") {
  // small instance with few routes; 1000 samples against exact products
  auto inst = make_instance({{2.0, 0.0, 5.0, 0.0, 60.0, 2.0},
                             {4.0, 0.0, 7.0, 0.0, 60.0, 2.0},
                             {6.0, 0.0, 9.0, 0.0, 60.0, 2.0}},
                            0.0, 60.0);
  auto model = PointerModel<float>::init(desk_cfg(), 27);

  std::map<std::vector<int>, int> counts;
  const int trials = 1000;
  for (int t = 0; t < trials; ++t) {
    Rng rng(9000 + t);
    auto r = rollout(model, inst, SelectMode::Sample, &rng);
    counts[r.route] += 1;
  }

  for (const auto& [route, count] : counts) {
    // teacher-forced replay recovers the exact route probability
    Tape<float> tape;
    tape.grad_enabled = false;
    BoundParams<float> bound(tape, model.params);
    auto forced = rollout(tape, bound, model.cfg, inst, SelectMode::Greedy,
                          nullptr, &route);
    const double p = std::exp(forced.log_prob);
    const double sigma = std::sqrt(p * (1.0 - p) * trials);
    CHECK(std::abs(count - p * trials) <= std::max(3.0 * sigma, 1.0));
  }
}

TEST_CASE("full model gradient matches finite differences (3 steps, d=16)") {
  auto inst = make_instance({{2.0, 1.0, 5.0, 0.0, 80.0, 2.0},
                             {4.0, -1.0, 7.0, 0.0, 80.0, 2.0},
                             {6.0, 2.0, 9.0, 5.0, 80.0, 2.0},
                             {3.0, 3.0, 4.0, 0.0, 80.0, 2.0}},
                            0.0, 80.0);
  auto model = PointerModel<double>::init(ModelConfig::desk(), 29);

  // a fixed 3-move teacher-forced prefix ending at the depot
  const std::vector<int> forced{0, 1, 2, 5};

  auto loss_fn = [&](Tape<double>& tape, BoundParams<double>& bound) {
    auto r = rollout(tape, bound, model.cfg, inst, SelectMode::Greedy, nullptr,
                     &forced);
    return r.log_prob_var;
  };

  model.params.zero_grads();
  nn::forward_backward(loss_fn, model.params);

  const double h = 1e-5;
  int checked = 0;
  for (std::size_t p = 0; p < model.params.size(); ++p) {
    auto& entry = model.params.entry_at(p);
    // spot-check a spread of coordinates per parameter; the acceptance
    // suite sweeps everything
    const Eigen::Index stride = std::max<Eigen::Index>(1, entry.value.size() / 7);
    for (Eigen::Index k = 0; k < entry.value.size(); k += stride) {
      const double orig = entry.value.data()[k];
      auto eval = [&]() {
        Tape<double> tape;
        tape.grad_enabled = false;
        BoundParams<double> bound(tape, model.params);
        auto r = rollout(tape, bound, model.cfg, inst, SelectMode::Greedy,
                         nullptr, &forced);
        return r.log_prob;
      };
      entry.value.data()[k] = orig + h;
      const double up = eval();
      entry.value.data()[k] = orig - h;
      const double down = eval();
      entry.value.data()[k] = orig;
      const double fd = (up - down) / (2.0 * h);
      const double an = entry.grad.data()[k];
      const double scale = std::max({std::abs(fd), std::abs(an), 1e-3});
      CHECK(std::abs(fd - an) / scale <= 1e-3);
      ++checked;
    }
  }
  CHECK(checked > 100);
}

TEST_CASE("lstm initial states start inside the documented range") {
  auto cfg = ModelConfig::desk();
  auto model = PointerModel<double>::init(cfg, 31);
  const double bound = 1.0 / std::sqrt(static_cast<double>(cfg.d_h));
  CHECK(model.params.value("lstm.h0").cwiseAbs().maxCoeff() <= bound);
  CHECK(model.params.value("lstm.c0").cwiseAbs().maxCoeff() <= bound);
  CHECK(model.params.value("lstm.h0").cwiseAbs().maxCoeff() > 0.0);
}

TEST_CASE("model config validates dimensions") {
  ModelConfig cfg;
  cfg.heads = 7;  // 128 % 7 != 0
  CHECK_THROWS_AS(cfg.check(), Error);
  ModelConfig bad_c;
  bad_c.clip_c = 0.0;
  CHECK_THROWS_AS(bad_c.check(), Error);
  CHECK_NOTHROW(ModelConfig::desk().check());
}

TEST_CASE("model config survives json round trip") {
  ModelConfig cfg = ModelConfig::desk();
  cfg.recursion = false;
  cfg.graph_mask = GraphMaskMode::CompleteGraph;
  cfg.mask_style = nn::MaskStyle::ZeroScore;
  auto back = model_config_from_json(model_config_to_json(cfg));
  CHECK(back.d_e == cfg.d_e);
  CHECK(back.recursion == cfg.recursion);
  CHECK(back.graph_mask == cfg.graph_mask);
  CHECK(back.mask_style == cfg.mask_style);
}

TEST_CASE("checkpoints round-trip bit-exact and preserve behavior") {
  Rng rng(33);
  auto inst = testutil::random_instance(rng, 8);
  auto model = PointerModel<float>::init(ModelConfig::desk(), 35);
  model.params.step_count = 4321;

  const std::string path = "/tmp/optw_test.ckpt";
  nn::AdamConfig adam;
  adam.lr = 3e-4;
  save_checkpoint(path, model, adam);

  nn::AdamConfig adam_back;
  auto loaded = load_checkpoint<float>(path, &adam_back);
  CHECK(adam_back.lr == 3e-4);
  CHECK(loaded.params.step_count == 4321);
  REQUIRE(loaded.params.size() == model.params.size());
  for (std::size_t i = 0; i < model.params.size(); ++i) {
    const auto& a = model.params.entry_at(i);
    const auto& b = loaded.params.entry_at(i);
    CHECK(a.name == b.name);
    CHECK((a.value - b.value).cwiseAbs().maxCoeff() == 0.0f);
    CHECK((a.adam_m - b.adam_m).cwiseAbs().maxCoeff() == 0.0f);
  }

  auto before = rollout(model, inst, SelectMode::Greedy, nullptr);
  auto after = rollout(loaded, inst, SelectMode::Greedy, nullptr);
  CHECK(before.route == after.route);
  CHECK(before.log_prob == after.log_prob);
  std::remove(path.c_str());
}

TEST_CASE("checkpoint dtype mismatch is rejected") {
  auto model = PointerModel<float>::init(ModelConfig::desk(), 37);
  const std::string path = "/tmp/optw_dtype.ckpt";
  save_checkpoint(path, model, nn::AdamConfig{});
  CHECK_THROWS_AS(load_checkpoint<double>(path), Error);
  std::remove(path.c_str());
}

TEST_CASE("zero-score mask style changes the attention but stays valid") {
  auto cfg = desk_cfg();
  cfg.mask_style = nn::MaskStyle::ZeroScore;
  auto model = PointerModel<float>::init(cfg, 39);
  Rng rng(40);
  auto inst = testutil::random_instance(rng, 8);
  auto result = rollout(model, inst, SelectMode::Greedy, nullptr);
  CHECK_NOTHROW(route_score(inst, result.route));
}
