#include "optw/inference.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>

#include <json.hpp>

#include "optw/error.hpp"
#include "optw/trainer.hpp"

namespace optw {

namespace {

double now_seconds() {
  using clock = std::chrono::steady_clock;
  return std::chrono::duration<double>(clock::now().time_since_epoch()).count();
}

}  // namespace

std::string report_to_json(const SolutionReport& report) {
  nlohmann::ordered_json j;
  j["strategy"] = report.strategy;
  j["route"] = report.route;
  j["score"] = report.score;
  j["log_prob"] = report.log_prob;
  j["step_probs"] = report.step_probs;
  j["wall_seconds"] = report.wall_seconds;
  j["beams"] = report.beams;
  j["as_epochs"] = report.as_epochs;
  j["seed"] = report.seed;
  if (!report.progress.empty()) j["progress"] = report.progress;
  return j.dump(2) + "\n";
}

void write_report(const SolutionReport& report, const std::string& path) {
  std::ofstream out(path);
  if (!out) raise(ErrorCode::IoError, "cannot write " + path);
  out << report_to_json(report);
}

SolutionReport greedy(PointerModel<float>& model, const Instance& inst) {
  auto result = rollout(model, inst, SelectMode::Greedy, nullptr);
  SolutionReport report;
  report.route = result.route;
  report.score = route_score(inst, result.route);
  report.step_probs = result.step_probs;
  report.log_prob = result.log_prob;
  report.strategy = "greedy";
  return report;
}

SolutionReport sample(PointerModel<float>& model, const Instance& inst,
                      std::uint64_t seed) {
  Rng rng(seed);
  auto result = rollout(model, inst, SelectMode::Sample, &rng);
  SolutionReport report;
  report.route = result.route;
  report.score = route_score(inst, result.route);
  report.step_probs = result.step_probs;
  report.log_prob = result.log_prob;
  report.strategy = "sample";
  report.seed = seed;
  return report;
}

namespace {

struct Beam {
  RouteState state;
  EncoderState<float> enc;
  double log_prob = 0.0;
  std::vector<double> step_probs;
  bool finished = false;
};

struct Candidate {
  int parent = -1;  // index into the live-beam scratch arrays
  int next = -1;    // -1 marks a carried-over finished beam
  int carried = -1; // index into the pool for carried beams
  double log_prob = 0.0;
  double prob = 0.0;
  const std::vector<int>* parent_route = nullptr;
};

bool candidate_less(const Candidate& a, const Candidate& b) {
  if (a.log_prob != b.log_prob) return a.log_prob > b.log_prob;
  // Deterministic tie-break: lexicographically smaller extended route wins.
  const auto& ra = *a.parent_route;
  const auto& rb = *b.parent_route;
  const std::size_t na = ra.size(), nb = rb.size();
  for (std::size_t i = 0;; ++i) {
    const long va = i < na ? ra[i] : (i == na && a.next >= 0 ? a.next : -1);
    const long vb = i < nb ? rb[i] : (i == nb && b.next >= 0 ? b.next : -1);
    if (va < 0 && vb < 0) return false;
    if (va < 0) return true;
    if (vb < 0) return false;
    if (va != vb) return va < vb;
  }
}

}  // namespace

SolutionReport beam_search(PointerModel<float>& model, const Instance& inst,
                           int n_b) {
  if (n_b < 1) raise(ErrorCode::ShapeError, "beam width must be >= 1");
  StepEvaluator<float> eval(model, inst);

  std::vector<Beam> pool;
  {
    Beam root;
    root.state = RouteState::initial(inst);
    root.enc = eval.initial_state();
    pool.push_back(std::move(root));
  }

  while (true) {
    bool any_live = false;
    for (const Beam& b : pool) any_live = any_live || !b.finished;
    if (!any_live) break;

    std::vector<StepResult<float>> results(pool.size());
    std::vector<Candidate> candidates;
    for (std::size_t p = 0; p < pool.size(); ++p) {
      Beam& beam = pool[p];
      if (beam.finished) {
        Candidate c;
        c.carried = static_cast<int>(p);
        c.log_prob = beam.log_prob;
        c.parent_route = &beam.state.route;
        candidates.push_back(c);
        continue;
      }
      results[p] = eval.evaluate(beam.state, beam.enc);
      const auto& res = results[p];
      for (int j = 0; j < inst.n(); ++j) {
        if (!res.admissible[j]) continue;
        Candidate c;
        c.parent = static_cast<int>(p);
        c.next = j;
        c.prob = res.probs(j);
        c.log_prob = beam.log_prob + std::log(res.probs(j));
        c.parent_route = &beam.state.route;
        candidates.push_back(c);
      }
    }

    const std::size_t keep = std::min<std::size_t>(candidates.size(),
                                                   static_cast<std::size_t>(n_b));
    std::partial_sort(candidates.begin(), candidates.begin() + keep,
                      candidates.end(), candidate_less);
    candidates.resize(keep);

    std::vector<Beam> next_pool;
    next_pool.reserve(keep);
    for (const Candidate& c : candidates) {
      if (c.carried >= 0) {
        next_pool.push_back(std::move(pool[c.carried]));
        continue;
      }
      const Beam& parent = pool[c.parent];
      const auto& res = results[c.parent];
      Beam child;
      child.state = advance(inst, parent.state, c.next);
      child.enc.h_e_prev = res.h_e;
      child.enc.lstm_h = res.lstm_h;
      child.enc.lstm_c = res.lstm_c;
      child.enc.step = parent.enc.step + 1;
      child.log_prob = c.log_prob;
      child.step_probs = parent.step_probs;
      child.step_probs.push_back(c.prob);
      child.finished = (c.next == inst.end_index);
      next_pool.push_back(std::move(child));
    }
    pool = std::move(next_pool);
  }

  // Final selection is by score, not log probability.
  const Beam* best = nullptr;
  double best_score = -1.0;
  for (const Beam& b : pool) {
    const double s = route_score(inst, b.state.route);
    if (s > best_score ||
        (s == best_score && best != nullptr && b.state.route < best->state.route)) {
      best = &b;
      best_score = s;
    }
  }

  SolutionReport report;
  report.route = best->state.route;
  report.score = best_score;
  report.step_probs = best->step_probs;
  report.log_prob = best->log_prob;
  report.strategy = "beam";
  report.beams = n_b;
  return report;
}

Strategy Strategy::parse(const std::string& name, int beams, int as_epochs,
                         std::uint64_t seed) {
  Strategy s;
  s.beams = beams;
  s.as_epochs = as_epochs;
  s.seed = seed;
  if (name == "greedy") s.kind = Kind::Greedy;
  else if (name == "sample") s.kind = Kind::Sample;
  else if (name == "beam") s.kind = Kind::Beam;
  else if (name == "active" || name == "active_search") s.kind = Kind::ActiveSearch;
  else raise(ErrorCode::UnknownFormat, "unknown strategy " + name);
  return s;
}

std::string Strategy::name() const {
  switch (kind) {
    case Kind::Greedy: return "greedy";
    case Kind::Sample: return "sample";
    case Kind::Beam: return "beam";
    case Kind::ActiveSearch: return "active_search";
  }
  return "greedy";
}

SolutionReport solve(PointerModel<float>& model, const Instance& inst,
                     const Strategy& strategy) {
  const double t0 = now_seconds();
  SolutionReport report;
  switch (strategy.kind) {
    case Strategy::Kind::Greedy:
      report = greedy(model, inst);
      break;
    case Strategy::Kind::Sample:
      report = sample(model, inst, strategy.seed);
      break;
    case Strategy::Kind::Beam:
      report = beam_search(model, inst, strategy.beams);
      break;
    case Strategy::Kind::ActiveSearch: {
      auto tuned = active_search(model, inst, strategy.as_epochs,
                                 strategy.seed, strategy.beams);
      report = tuned.report;
      break;
    }
  }
  report.wall_seconds = now_seconds() - t0;
  report.strategy = strategy.name();
  if (strategy.kind == Strategy::Kind::Beam ||
      strategy.kind == Strategy::Kind::ActiveSearch) {
    report.beams = strategy.beams;
  }
  if (strategy.kind == Strategy::Kind::ActiveSearch) {
    report.as_epochs = strategy.as_epochs;
  }
  report.seed = strategy.seed;
  return report;
}

}  // namespace optw
