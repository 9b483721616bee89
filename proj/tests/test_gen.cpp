#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "optw/error.hpp"
#include "optw/instance_io.hpp"
#include "optw/tourist_gen.hpp"
#include "test_util.hpp"

using namespace optw;
using testutil::make_instance;
using testutil::NodeSpec;

namespace {

Instance day_base() {
  // windows run to 1440 while the tour budget ends at 1236: t_day = 1440
  std::vector<NodeSpec> pois;
  for (int i = 0; i < 6; ++i) {
    pois.push_back({10.0 * i, 5.0, 10.0, 0.0, 1440.0, 30.0 + 10.0 * i});
  }
  return make_instance(pois, 0.0, 1236.0, 1, 35.0, 35.0, GroupTag::Solomon);
}

double pearson(const std::vector<double>& x, const std::vector<double>& y) {
  const double n = static_cast<double>(x.size());
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < x.size(); ++i) { mx += x[i]; my += y[i]; }
  mx /= n; my /= n;
  double sxy = 0, sxx = 0, syy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  return sxy / std::sqrt(sxx * syy);
}

}  // namespace

TEST_CASE("start locations stay inside the family sampling square") {
  Rng rng(5);
  double sum_x = 0.0;
  const int n = 10000;
  for (int i = 0; i < n; ++i) {
    double x, y;
    sample_start_location(rng, GroupTag::Solomon, x, y);
    CHECK(x >= 0.0); CHECK(x <= 100.0);
    CHECK(y >= 0.0); CHECK(y <= 100.0);
    sum_x += x;
  }
  // mean within 3 sigma of the square center
  const double sd = 100.0 / std::sqrt(12.0) / std::sqrt(static_cast<double>(n));
  CHECK(std::abs(sum_x / n - 50.0) < 3.0 * sd);

  for (int i = 0; i < 2000; ++i) {
    double x, y;
    sample_start_location(rng, GroupTag::Cordeau, x, y);
    CHECK(x >= -100.0); CHECK(x <= 100.0);
    CHECK(y >= -100.0); CHECK(y <= 100.0);
  }
}

TEST_CASE("time sampling bounds match the day-normalized rules") {
  auto base = day_base();
  const auto b = time_sample_bounds(base);
  // scale = 1440/24 = 60
  CHECK(b.start_lo == doctest::Approx(-4.0));
  CHECK(b.start_hi == doctest::Approx(15.0));   // min(15, 1236/60 + 4 = 24.6)
  CHECK(b.end_hi == doctest::Approx(24.6));

  Rng rng(31);
  for (int i = 0; i < 10000; ++i) {
    double ts, te;
    sample_times(rng, base, ts, te);
    CHECK(ts >= -240.0 - 0.5);  // raw bounds, half-unit rounding slack
    CHECK(ts <= 900.0 + 0.5);
    CHECK(te >= 720.0 - 0.5);
    CHECK(te <= 1476.0 + 0.5);
    CHECK(ts < te);
    CHECK(ts == std::floor(ts));  // integer time units
    CHECK(te == std::floor(te));
  }
}

TEST_CASE("degenerate base caps the start upper bound at t_end + 4") {
  // t_day = 2400 from a late-closing window, budget ends at 1000:
  // normalized t_end = 10, so ub = min(15, 14) = 14
  auto base = make_instance({{10.0, 10.0, 5.0, 0.0, 2400.0, 20.0}}, 0.0, 1000.0);
  const auto b = time_sample_bounds(base);
  CHECK(b.start_hi == doctest::Approx(14.0));
  Rng rng(32);
  for (int i = 0; i < 2000; ++i) {
    double ts, te;
    sample_times(rng, base, ts, te);
    CHECK(ts <= 14.0 * 100.0 + 0.5);
    CHECK(te - ts >= 4.0 * 100.0 - 1.5);  // 4 normalized hours minus rounding
  }
}

TEST_CASE("uniform scores cover [1, 1.1 max] with zero depots") {
  auto base = day_base();
  double s_max = 0.0;
  for (const auto& n : base.nodes) s_max = std::max(s_max, n.score);
  Rng rng(33);
  double total = 0.0;
  int count = 0;
  for (int rep = 0; rep < 2000; ++rep) {
    auto scores = sample_scores_uniform(rng, base);
    CHECK(scores[base.start_index] == 0.0);
    CHECK(scores[base.end_index] == 0.0);
    for (int i = 0; i < base.n(); ++i) {
      if (i == base.start_index || i == base.end_index) continue;
      CHECK(scores[i] >= 1.0);
      CHECK(scores[i] <= 1.1 * s_max);
      total += scores[i];
      ++count;
    }
  }
  const double lo = 1.0, hi = 1.1 * s_max;
  const double mean = (lo + hi) / 2.0;
  const double sd = (hi - lo) / std::sqrt(12.0) / std::sqrt(count);
  CHECK(std::abs(total / count - mean) < 3.0 * sd);
}

TEST_CASE("correlated scores track visit duration") {
  // wide duration spread so the correlation target is meaningful
  std::vector<NodeSpec> pois;
  Rng setup(9);
  for (int i = 0; i < 400; ++i) {
    const double d = 5.0 + 195.0 * setup.next_double();
    pois.push_back({setup.uniform(0, 100), setup.uniform(0, 100), 50.0, 0.0,
                    1440.0, d});
  }
  auto base = make_instance(pois, 0.0, 1200.0);

  Rng rng(34);
  auto scores = sample_scores_correlated(rng, base);
  std::vector<double> s, d;
  for (int i = 1; i < base.n() - 1; ++i) {
    s.push_back(scores[i]);
    d.push_back(base.nodes[i].duration);
    CHECK(scores[i] >= 1.0);
    CHECK(scores[i] <= 1.1 * 50.0);
  }
  CHECK(pearson(s, d) > 0.5);

  // max-duration node draws near the top of the range
  int arg_max = 1;
  for (int i = 1; i < base.n() - 1; ++i) {
    if (base.nodes[i].duration > base.nodes[arg_max].duration) arg_max = i;
  }
  double mean_top = 0.0;
  for (int rep = 0; rep < 300; ++rep) {
    mean_top += sample_scores_correlated(rng, base)[arg_max];
  }
  CHECK(mean_top / 300.0 > 40.0);  // centered near s_max = 50, sigma 10
}

TEST_CASE("near-zero durations clip to the score floor") {
  auto base = make_instance({{1, 1, 50.0, 0, 100, 0.0},
                             {2, 2, 50.0, 0, 100, 80.0}},
                            0.0, 200.0);
  Rng rng(35);
  int floored = 0;
  for (int rep = 0; rep < 500; ++rep) {
    auto scores = sample_scores_correlated(rng, base);
    if (scores[1] == 1.0) ++floored;
  }
  CHECK(floored > 250);  // N(0, 100) puts ~54% of its mass below the floor
}

TEST_CASE("all-zero durations raise DegenerateDurations") {
  auto base = make_instance({{1, 1, 5.0, 0, 100, 0.0}}, 0.0, 200.0);
  Rng rng(36);
  CHECK_THROWS_AS(sample_scores_correlated(rng, base), Error);
}

TEST_CASE("generated tourists share region parameters bit for bit") {
  auto base = day_base();
  Rng rng(37);
  auto tourist = generate_tourist(rng, base, ScoreScheme::UniformScores);
  REQUIRE(tourist.n() == base.n());
  for (int i = 1; i < base.n() - 1; ++i) {
    CHECK(tourist.nodes[i].x == base.nodes[i].x);
    CHECK(tourist.nodes[i].y == base.nodes[i].y);
    CHECK(tourist.nodes[i].open == base.nodes[i].open);
    CHECK(tourist.nodes[i].close == base.nodes[i].close);
    CHECK(tourist.nodes[i].duration == base.nodes[i].duration);
  }
  CHECK(tourist.t_max == base.t_max);
  CHECK(tourist.score_upper == base.score_upper);
  CHECK(tourist.nodes[0].x == tourist.nodes[tourist.n() - 1].x);
  CHECK(validate_instance(tourist).empty());
}

TEST_CASE("same sampler index reproduces the same tourist") {
  auto base = day_base();
  TouristSampler sampler(base, ScoreScheme::UniformScores, 99);
  auto a = sampler.generate(7);
  auto b = sampler.generate(7);
  CHECK(canonical_to_string(a) == canonical_to_string(b));
  auto c = sampler.generate(8);
  CHECK(canonical_to_string(a) != canonical_to_string(c));
}

TEST_CASE("validation sets are deterministic on disk") {
  namespace fs = std::filesystem;
  auto base = day_base();
  base.name = "reg";
  const std::string dir_a = "/tmp/optw_val_a";
  const std::string dir_b = "/tmp/optw_val_b";
  fs::remove_all(dir_a);
  fs::remove_all(dir_b);

  auto set_a = build_validation_set(base, 8, 42, ScoreScheme::UniformScores, dir_a);
  auto set_b = build_validation_set(base, 8, 42, ScoreScheme::UniformScores, dir_b);
  CHECK(set_a.size() == 8);

  for (int i = 0; i < 8; ++i) {
    const auto pa = fs::path(dir_a) / "reg" / "validation" / (std::to_string(i) + ".json");
    const auto pb = fs::path(dir_b) / "reg" / "validation" / (std::to_string(i) + ".json");
    std::ifstream fa(pa), fb(pb);
    std::stringstream sa, sb;
    sa << fa.rdbuf();
    sb << fb.rdbuf();
    CHECK(sa.str() == sb.str());
    CHECK(!sa.str().empty());
  }

  auto single = build_validation_set(base, 1, 42, ScoreScheme::UniformScores);
  CHECK(single.size() == 1);

  fs::remove_all(dir_a);
  fs::remove_all(dir_b);
}
