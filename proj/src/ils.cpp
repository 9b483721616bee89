#include "optw/ils.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <vector>

namespace optw {

namespace {

struct Visit {
  int node = 0;
  double arrive = 0.0;
  double wait = 0.0;
  double start = 0.0;
  double leave = 0.0;
  double max_shift = 0.0;
};

class Tour {
 public:
  explicit Tour(const Instance& inst) : inst_(&inst) {
    visits_.resize(2);
    visits_[0].node = inst.start_index;
    visits_[1].node = inst.end_index;
    in_route_.assign(inst.n(), 0);
    in_route_[inst.start_index] = 1;
    in_route_[inst.end_index] = 1;
    recompute();
  }

  int poi_count() const { return static_cast<int>(visits_.size()) - 2; }
  bool contains(int node) const { return in_route_[node] != 0; }

  std::vector<int> route() const {
    std::vector<int> r;
    r.reserve(visits_.size());
    for (const Visit& v : visits_) r.push_back(v.node);
    return r;
  }

  double score() const {
    double total = 0.0;
    for (const Visit& v : visits_) total += inst_->nodes[v.node].score;
    return total;
  }

  // Cheapest feasible insertion position for `node`, or a negative shift
  // when none exists.
  struct Placement {
    int position = -1;  // insert after visits_[position]
    double shift = -1.0;
  };

  Placement best_placement(int node) const {
    const Node& cand = inst_->nodes[node];
    Placement best;
    for (std::size_t p = 0; p + 1 < visits_.size(); ++p) {
      const Visit& prev = visits_[p];
      const Visit& next = visits_[p + 1];
      const double arrive = prev.leave + inst_->travel(prev.node, node);
      const double start = std::max(arrive, cand.open);
      if (start > cand.close) continue;
      const double shift = inst_->travel(prev.node, node) + (start - arrive) +
                           cand.duration + inst_->travel(node, next.node) -
                           inst_->travel(prev.node, next.node);
      if (shift > next.wait + next.max_shift + 1e-9) continue;
      if (best.position < 0 || shift < best.shift) {
        best.position = static_cast<int>(p);
        best.shift = shift;
      }
    }
    return best;
  }

  void insert(int node, int position) {
    Visit v;
    v.node = node;
    visits_.insert(visits_.begin() + position + 1, v);
    in_route_[node] = 1;
    recompute();
  }

  // Removes `count` consecutive POI visits starting at POI position
  // `start_pos` (1-based within the POI segment).
  void remove_block(int start_pos, int count) {
    const int m = poi_count();
    if (m == 0) return;
    const int s = ((start_pos - 1) % m) + 1;
    const int c = std::min(count, m - s + 1);
    for (int k = s; k < s + c; ++k) in_route_[visits_[k].node] = 0;
    visits_.erase(visits_.begin() + s, visits_.begin() + s + c);
    recompute();
  }

 private:
  void recompute() {
    Visit& first = visits_.front();
    first.arrive = inst_->t_start;
    first.wait = 0.0;
    first.start = inst_->t_start;
    first.leave = inst_->t_start + inst_->nodes[first.node].duration;
    for (std::size_t k = 1; k < visits_.size(); ++k) {
      Visit& v = visits_[k];
      const Visit& prev = visits_[k - 1];
      const Node& n = inst_->nodes[v.node];
      v.arrive = prev.leave + inst_->travel(prev.node, v.node);
      v.wait = std::max(0.0, n.open - v.arrive);
      v.start = v.arrive + v.wait;
      v.leave = v.start + n.duration;
    }
    Visit& last = visits_.back();
    const Node& end_node = inst_->nodes[last.node];
    last.max_shift =
        std::min(end_node.close, inst_->t_end - end_node.duration) - last.start;
    for (int k = static_cast<int>(visits_.size()) - 2; k >= 0; --k) {
      Visit& v = visits_[k];
      const Visit& next = visits_[k + 1];
      v.max_shift = std::min(inst_->nodes[v.node].close - v.start,
                             next.wait + next.max_shift);
    }
  }

  const Instance* inst_;
  std::vector<Visit> visits_;
  std::vector<std::uint8_t> in_route_;
};

// Repeated best-ratio insertion until nothing fits.
void construct(const Instance& inst, Tour& tour) {
  for (;;) {
    int best_node = -1;
    int best_pos = -1;
    double best_ratio = -1.0;
    for (int j = 0; j < inst.n(); ++j) {
      if (tour.contains(j)) continue;
      const auto placement = tour.best_placement(j);
      if (placement.position < 0) continue;
      const double s = inst.nodes[j].score;
      const double ratio = s * s / std::max(placement.shift, 1e-9);
      if (ratio > best_ratio) {
        best_ratio = ratio;
        best_node = j;
        best_pos = placement.position;
      }
    }
    if (best_node < 0) break;
    tour.insert(best_node, best_pos);
  }
}

}  // namespace

SolutionReport ils_solve(const Instance& inst, const IlsConfig& cfg) {
  const auto t0 = std::chrono::steady_clock::now();

  Tour tour(inst);
  construct(inst, tour);

  std::vector<int> best_route = tour.route();
  double best_score = tour.score();
  std::vector<double> progress{best_score};

  int shake_start = 1;
  int shake_count = 1;
  int no_improve = 0;
  while (no_improve < cfg.max_no_improve && tour.poi_count() > 0) {
    tour.remove_block(shake_start, shake_count);
    construct(inst, tour);

    const double score = tour.score();
    if (score > best_score + 1e-9) {
      best_score = score;
      best_route = tour.route();
      shake_count = 1;
      no_improve = 0;
    } else {
      ++no_improve;
      ++shake_count;
      if (shake_count > std::max(1, tour.poi_count())) shake_count = 1;
    }
    shake_start += shake_count;
    if (tour.poi_count() > 0 && shake_start > tour.poi_count()) {
      shake_start = ((shake_start - 1) % tour.poi_count()) + 1;
    }
    progress.push_back(best_score);
  }

  SolutionReport report;
  report.route = best_route;
  report.score = route_score(inst, best_route);
  report.strategy = "ils";
  report.seed = cfg.seed;
  report.progress = std::move(progress);
  report.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
          .count();
  return report;
}

}  // namespace optw
