#pragma once

#include <cmath>
#include <map>
#include <string>
#include <unordered_map>
#include <vector>

#include "optw/error.hpp"
#include "optw/nn/autodiff.hpp"
#include "optw/rng.hpp"

namespace optw::nn {

struct AdamConfig {
  double lr = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double decay_factor = 0.96;
  long decay_every = 5000;
  double lr_floor = 1e-5;
};

// Step-dependent learning rate: decays by decay_factor every decay_every
// steps, clamped at lr_floor.
inline double effective_lr(const AdamConfig& cfg, long step_count) {
  double lr = cfg.lr;
  if (cfg.decay_every > 0 && cfg.decay_factor > 0.0) {
    const long k = step_count / cfg.decay_every;
    lr = cfg.lr * std::pow(cfg.decay_factor, static_cast<double>(k));
  }
  return std::max(lr, cfg.lr_floor);
}

// Named parameter collection with gradient buffers and Adam moment state.
template <typename S>
class ParameterStore {
 public:
  struct Entry {
    std::string name;
    Mat<S> value;
    Mat<S> grad;
    Mat<S> adam_m;
    Mat<S> adam_v;
  };

  long step_count = 0;

  void add(const std::string& name, Mat<S> value) {
    if (index_.count(name)) {
      raise(ErrorCode::ShapeError, "duplicate parameter name " + name);
    }
    Entry e;
    e.name = name;
    e.grad = Mat<S>::Zero(value.rows(), value.cols());
    e.adam_m = Mat<S>::Zero(value.rows(), value.cols());
    e.adam_v = Mat<S>::Zero(value.rows(), value.cols());
    e.value = std::move(value);
    index_[name] = static_cast<int>(entries_.size());
    entries_.push_back(std::move(e));
  }

  bool has(const std::string& name) const { return index_.count(name) > 0; }

  Mat<S>& value(const std::string& name) { return entry(name).value; }
  const Mat<S>& value(const std::string& name) const {
    return entries_[at(name)].value;
  }
  Mat<S>& grad(const std::string& name) { return entry(name).grad; }

  std::size_t size() const { return entries_.size(); }
  Entry& entry_at(std::size_t i) { return entries_[i]; }
  const Entry& entry_at(std::size_t i) const { return entries_[i]; }

  void zero_grads() {
    for (auto& e : entries_) e.grad.setZero();
  }

  std::size_t scalar_count() const {
    std::size_t total = 0;
    for (const auto& e : entries_) total += e.value.size();
    return total;
  }

  bool all_finite() const {
    for (const auto& e : entries_) {
      if (!e.value.allFinite()) return false;
    }
    return true;
  }

  template <typename T>
  ParameterStore<T> cast() const {
    ParameterStore<T> out;
    out.step_count = step_count;
    for (const auto& e : entries_) {
      out.add(e.name, e.value.template cast<T>());
      // moments travel too so fine-tuning can resume in either precision
      out.set_adam(e.name, e.adam_m.template cast<T>(), e.adam_v.template cast<T>());
    }
    return out;
  }

  void set_adam(const std::string& name, Mat<S> m, Mat<S> v) {
    Entry& e = entry(name);
    if (m.rows() != e.value.rows() || m.cols() != e.value.cols()) {
      raise(ErrorCode::ShapeError, "adam state shape mismatch for " + name);
    }
    e.adam_m = std::move(m);
    e.adam_v = std::move(v);
  }

 private:
  Entry& entry(const std::string& name) { return entries_[at(name)]; }
  int at(const std::string& name) const {
    auto it = index_.find(name);
    if (it == index_.end()) {
      raise(ErrorCode::ShapeError, "unknown parameter " + name);
    }
    return it->second;
  }

  std::vector<Entry> entries_;
  std::unordered_map<std::string, int> index_;
};

// One Adam update from the gradients currently held in the store. The
// gradients are left untouched; callers zero them when starting a new
// accumulation.
template <typename S>
void adam_step(ParameterStore<S>& params, const AdamConfig& cfg) {
  params.step_count += 1;
  const double t = static_cast<double>(params.step_count);
  const double lr = effective_lr(cfg, params.step_count);
  const S corr1 = static_cast<S>(1.0 - std::pow(cfg.beta1, t));
  const S corr2 = static_cast<S>(1.0 - std::pow(cfg.beta2, t));
  const S b1 = static_cast<S>(cfg.beta1);
  const S b2 = static_cast<S>(cfg.beta2);
  const S eps = static_cast<S>(cfg.eps);
  const S step = static_cast<S>(lr);
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto& e = params.entry_at(i);
    if (e.grad.rows() != e.value.rows() || e.grad.cols() != e.value.cols()) {
      raise(ErrorCode::ShapeError, "gradient shape mismatch for " + e.name);
    }
    e.adam_m = b1 * e.adam_m + (S(1) - b1) * e.grad;
    e.adam_v.array() = b2 * e.adam_v.array() + (S(1) - b2) * e.grad.array().square();
    e.value.array() -=
        step * (e.adam_m.array() / corr1) /
        ((e.adam_v.array() / corr2).sqrt() + eps);
  }
}

// Xavier/Glorot uniform: U(-b, b) with b = sqrt(6 / (fan_in + fan_out)).
// 1-dimensional shapes (rows==1 or cols==1) are biases and start at zero.
template <typename S>
Mat<S> xavier_uniform(int rows, int cols, Rng& rng) {
  Mat<S> m(rows, cols);
  if (rows == 1 || cols == 1) {
    m.setZero();
    return m;
  }
  const double bound = std::sqrt(6.0 / (rows + cols));
  for (int j = 0; j < cols; ++j) {
    for (int i = 0; i < rows; ++i) {
      m(i, j) = static_cast<S>(rng.uniform(-bound, bound));
    }
  }
  return m;
}

// Binds store entries to tape leaves on first use, so one forward pass
// creates at most one leaf per parameter. After backward, pull_grads moves
// the tape gradients back into the store (accumulating).
template <typename S>
class BoundParams {
 public:
  BoundParams(Tape<S>& tape, ParameterStore<S>& store)
      : tape_(&tape), store_(&store) {}

  Var operator[](const std::string& name) {
    auto it = bound_.find(name);
    if (it != bound_.end()) return it->second;
    Var v = tape_->leaf(store_->value(name));
    bound_.emplace(name, v);
    return v;
  }

  void pull_grads() {
    for (const auto& [name, var] : bound_) {
      if (tape_->requires_grad(var)) {
        store_->grad(name) += tape_->grad(var);
      }
    }
  }

  // Visits the raw tape gradient of every bound parameter (REINFORCE needs
  // per-rollout gradients before they are scaled by the advantage).
  template <typename Fn>
  void visit_grads(Fn&& fn) {
    for (const auto& [name, var] : bound_) {
      if (tape_->requires_grad(var)) fn(name, tape_->grad(var));
    }
  }

 private:
  Tape<S>* tape_;
  ParameterStore<S>* store_;
  std::map<std::string, Var> bound_;
};

// Runs graph_fn on a fresh tape, back-propagates from its scalar output and
// accumulates parameter gradients into the store. Returns the loss value.
template <typename S, typename Fn>
S forward_backward(Fn&& graph_fn, ParameterStore<S>& params) {
  Tape<S> tape;
  BoundParams<S> bound(tape, params);
  Var loss = graph_fn(tape, bound);
  tape.backward(loss);
  bound.pull_grads();
  return tape.value(loss)(0, 0);
}

}  // namespace optw::nn
