#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <set>

#include "optw/ils.hpp"
#include "optw/inference.hpp"
#include "optw/instance_io.hpp"
#include "optw/oracle.hpp"
#include "optw/trainer.hpp"
#include "test_util.hpp"

using namespace optw;
using testutil::make_instance;

TEST_CASE("beam width 1 is exactly greedy") {
  Rng rng(51);
  for (int trial = 0; trial < 12; ++trial) {
    auto inst = testutil::random_instance(rng, 9);
    auto model = PointerModel<float>::init(ModelConfig::desk(), 500 + trial);
    auto g = greedy(model, inst);
    auto b = beam_search(model, inst, 1);
    CHECK(g.route == b.route);
    CHECK(g.score == b.score);
  }
}

TEST_CASE("wide-enough beams return the optimum over all feasible routes") {
  Rng rng(52);
  for (int trial = 0; trial < 8; ++trial) {
    auto inst = testutil::random_instance(rng, 6, 60.0);
    auto model = PointerModel<float>::init(ModelConfig::desk(), 600 + trial);

    int route_count = 0;
    double best = -1.0;
    for_each_feasible_route(inst, 12, [&](const std::vector<int>&, double s) {
      ++route_count;
      best = std::max(best, s);
    });
    REQUIRE(route_count > 0);

    auto report = beam_search(model, inst, route_count);
    CHECK(report.score == doctest::Approx(best));
    // and the oracle agrees by construction
    CHECK(brute_force_optimum(inst).score == doctest::Approx(best));
  }
}

TEST_CASE("beam final selection is by score, not by log probability") {
  // a uniform policy ranks the short depot-only route highest by
  // probability, but the scored route must win the final selection
  auto inst = make_instance({{2.0, 0.0, 5.0, 0.0, 50.0, 2.0},
                             {4.0, 0.0, 9.0, 0.0, 50.0, 2.0}},
                            0.0, 50.0);
  auto model = PointerModel<float>::init(ModelConfig::desk(), 61);
  model.params.value("pointer.v").setZero();  // uniform over admissible

  auto report = beam_search(model, inst, 16);
  CHECK(report.score == doctest::Approx(14.0));  // both POIs fit
  CHECK(report.route.size() == 4);

  // sanity: the depot-only route has the single highest route probability
  nn::Tape<float> tape;
  tape.grad_enabled = false;
  nn::BoundParams<float> bound(tape, model.params);
  const std::vector<int> direct{0, 3};
  auto forced = rollout(tape, bound, model.cfg, inst, SelectMode::Greedy,
                        nullptr, &direct);
  CHECK(forced.log_prob > report.log_prob);
}

TEST_CASE("beam scores are non-decreasing in width on a toy suite") {
  Rng rng(53);
  int adjacent = 0, monotone = 0;
  for (int trial = 0; trial < 10; ++trial) {
    auto inst = testutil::random_instance(rng, 10);
    auto model = PointerModel<float>::init(ModelConfig::desk(), 700 + trial);
    double prev = -1.0;
    for (int width : {1, 2, 4, 8, 16, 32}) {
      const double s = beam_search(model, inst, width).score;
      if (prev >= 0.0) {
        ++adjacent;
        if (s >= prev - 1e-9) ++monotone;
      }
      prev = s;
    }
  }
  CHECK(monotone >= adjacent * 95 / 100);
}

TEST_CASE("active search with zero epochs is plain beam search") {
  Rng rng(54);
  auto inst = testutil::random_instance(rng, 9);
  auto model = PointerModel<float>::init(ModelConfig::desk(), 55);
  auto plain = beam_search(model, inst, 8);
  auto tuned = active_search(model, inst, 0, 123, 8);
  CHECK(tuned.report.route == plain.route);
  CHECK(tuned.report.score == plain.score);
}

TEST_CASE("solve dispatches and stamps metadata") {
  Rng rng(56);
  auto inst = testutil::random_instance(rng, 8);
  auto model = PointerModel<float>::init(ModelConfig::desk(), 57);

  auto s1 = solve(model, inst, Strategy::parse("sample", 0, 0, 42));
  auto s2 = solve(model, inst, Strategy::parse("sample", 0, 0, 42));
  CHECK(s1.route == s2.route);
  CHECK(s1.strategy == "sample");
  CHECK(s1.seed == 42);
  CHECK(s1.wall_seconds >= 0.0);

  auto b = solve(model, inst, Strategy::parse("beam", 4, 0, 0));
  CHECK(b.beams == 4);
  CHECK(b.strategy == "beam");

  CHECK_THROWS(Strategy::parse("nonsense", 1, 1, 1));
}

TEST_CASE("every strategy returns feasible routes") {
  Rng rng(58);
  for (int trial = 0; trial < 6; ++trial) {
    auto inst = testutil::random_instance(rng, 8);
    auto model = PointerModel<float>::init(ModelConfig::desk(), 800 + trial);
    for (const char* name : {"greedy", "sample", "beam"}) {
      auto report = solve(model, inst, Strategy::parse(name, 8, 0, trial));
      CHECK_NOTHROW(route_score(inst, report.route));
      CHECK(report.route.back() == inst.end_index);
    }
  }
}

TEST_CASE("report json serializes the full solution") {
  Rng rng(59);
  auto inst = testutil::random_instance(rng, 6);
  auto model = PointerModel<float>::init(ModelConfig::desk(), 60);
  auto report = solve(model, inst, Strategy::parse("beam", 4, 0, 7));
  const std::string text = report_to_json(report);
  CHECK(text.find("\"strategy\": \"beam\"") != std::string::npos);
  CHECK(text.find("\"route\"") != std::string::npos);
  CHECK(text.find("\"score\"") != std::string::npos);
}

// ---- ILS ----

TEST_CASE("ils returns the bare depot route when nothing fits") {
  auto inst = make_instance({{50.0, 0.0, 9.0, 0.0, 1.0, 1.0}}, 0.0, 10.0);
  auto report = ils_solve(inst);
  CHECK(report.route == std::vector<int>{0, 2});
  CHECK(report.score == 0.0);
}

TEST_CASE("ils is deterministic") {
  Rng rng(61);
  auto inst = testutil::random_instance(rng, 12);
  auto a = ils_solve(inst);
  auto b = ils_solve(inst);
  CHECK(a.route == b.route);
  CHECK(a.score == b.score);
}

TEST_CASE("ils stays close to the oracle on 8-node toys") {
  Rng rng(62);
  int good = 0;
  const int trials = 20;
  for (int t = 0; t < trials; ++t) {
    auto inst = testutil::random_instance(rng, 8);
    const double opt = brute_force_optimum(inst).score;
    const double ils = ils_solve(inst).score;
    CHECK(ils <= opt + 1e-9);  // the oracle really is an upper bound
    if (opt == 0.0 || ils >= 0.9 * opt) ++good;
  }
  CHECK(good >= trials * 9 / 10);
}

TEST_CASE("ils best-so-far log never decreases") {
  Rng rng(63);
  auto inst = testutil::random_instance(rng, 14);
  auto report = ils_solve(inst);
  REQUIRE(!report.progress.empty());
  for (std::size_t i = 1; i < report.progress.size(); ++i) {
    CHECK(report.progress[i] >= report.progress[i - 1]);
  }
  CHECK(report.progress.back() == doctest::Approx(report.score));
}

TEST_CASE("ils handles the benchmark fixtures") {
  auto inst = parse_benchmark(testutil::data_path("solomon/s25_mixed.txt"));
  auto report = ils_solve(inst);
  CHECK(report.score > 0.0);
  CHECK_NOTHROW(route_score(inst, report.route));
}
