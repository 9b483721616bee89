#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <memory>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "optw/error.hpp"
#include "optw/instance.hpp"

namespace optw::nn {

template <typename S>
using Mat = Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic>;

// Sentinel standing in for -inf inside differentiable paths; large enough
// that exp underflows to exact 0 after max-subtraction, small enough to
// stay finite in float.
inline constexpr double kNegInf = -1e9;

enum class MaskStyle { NegInf, ZeroScore };

struct Var {
  int id = -1;
  bool valid() const { return id >= 0; }
};

// Eager tape: ops compute values immediately and record a backward closure.
// With grad disabled the same ops run value-only, which is the inference
// fast path. One tape is owned by one rollout/thread at a time.
template <typename S>
class Tape {
 public:
  bool grad_enabled = true;

  void clear() { nodes_.clear(); }
  std::size_t size() const { return nodes_.size(); }

  Var constant(Mat<S> v) { return push(std::move(v), false); }
  Var leaf(Mat<S> v) { return push(std::move(v), grad_enabled); }

  const Mat<S>& value(Var v) const { return nodes_[v.id].value; }

  Mat<S>& grad(Var v) {
    auto& node = nodes_[v.id];
    if (node.grad.size() == 0) {
      node.grad = Mat<S>::Zero(node.value.rows(), node.value.cols());
    }
    return node.grad;
  }

  bool requires_grad(Var v) const { return nodes_[v.id].requires_grad; }

  // ---- arithmetic ----

  Var matmul(Var a, Var b) {
    check_inner(a, b);
    Var out = push(Mat<S>(value(a) * value(b)), needs(a, b));
    record(out, [this, a, b, out]() {
      const Mat<S>& g = grad_ref(out);
      if (requires_grad(a)) grad(a).noalias() += g * value(b).transpose();
      if (requires_grad(b)) grad(b).noalias() += value(a).transpose() * g;
    });
    return out;
  }

  Var add(Var a, Var b) {
    check_same(a, b);
    Var out = push(Mat<S>(value(a) + value(b)), needs(a, b));
    record(out, [this, a, b, out]() {
      const Mat<S>& g = grad_ref(out);
      if (requires_grad(a)) grad(a) += g;
      if (requires_grad(b)) grad(b) += g;
    });
    return out;
  }

  Var sub(Var a, Var b) {
    check_same(a, b);
    Var out = push(Mat<S>(value(a) - value(b)), needs(a, b));
    record(out, [this, a, b, out]() {
      const Mat<S>& g = grad_ref(out);
      if (requires_grad(a)) grad(a) += g;
      if (requires_grad(b)) grad(b) -= g;
    });
    return out;
  }

  // Broadcast a 1 x k row vector over every row of a.
  Var add_rowvec(Var a, Var bias) {
    if (value(bias).rows() != 1 || value(bias).cols() != value(a).cols()) {
      raise(ErrorCode::ShapeError, "add_rowvec: bias must be 1 x cols(a)");
    }
    Mat<S> v = value(a);
    v.rowwise() += value(bias).row(0);
    Var out = push(std::move(v), needs(a, bias));
    record(out, [this, a, bias, out]() {
      const Mat<S>& g = grad_ref(out);
      if (requires_grad(a)) grad(a) += g;
      if (requires_grad(bias)) grad(bias) += g.colwise().sum();
    });
    return out;
  }

  Var hadamard(Var a, Var b) {
    check_same(a, b);
    Var out = push(Mat<S>(value(a).cwiseProduct(value(b))), needs(a, b));
    record(out, [this, a, b, out]() {
      const Mat<S>& g = grad_ref(out);
      if (requires_grad(a)) grad(a) += g.cwiseProduct(value(b));
      if (requires_grad(b)) grad(b) += g.cwiseProduct(value(a));
    });
    return out;
  }

  Var scale(Var a, S s) {
    Var out = push(Mat<S>(value(a) * s), needs(a));
    record(out, [this, a, s, out]() {
      if (requires_grad(a)) grad(a) += grad_ref(out) * s;
    });
    return out;
  }

  Var transpose(Var a) {
    Var out = push(Mat<S>(value(a).transpose()), needs(a));
    record(out, [this, a, out]() {
      if (requires_grad(a)) grad(a) += grad_ref(out).transpose();
    });
    return out;
  }

  // ---- elementwise nonlinearities ----

  Var tanh_(Var a) {
    Var out = push(Mat<S>(value(a).array().tanh()), needs(a));
    record(out, [this, a, out]() {
      if (!requires_grad(a)) return;
      const auto& y = value(out).array();
      grad(a).array() += grad_ref(out).array() * (S(1) - y * y);
    });
    return out;
  }

  Var sigmoid(Var a) {
    Var out = push(
        Mat<S>(((value(a).array() * S(-1)).exp() + S(1)).inverse()), needs(a));
    record(out, [this, a, out]() {
      if (!requires_grad(a)) return;
      const auto& y = value(out).array();
      grad(a).array() += grad_ref(out).array() * y * (S(1) - y);
    });
    return out;
  }

  Var relu(Var a) {
    Var out = push(Mat<S>(value(a).cwiseMax(S(0))), needs(a));
    record(out, [this, a, out]() {
      if (!requires_grad(a)) return;
      grad(a).array() +=
          grad_ref(out).array() * (value(a).array() > S(0)).template cast<S>();
    });
    return out;
  }

  Var log_(Var a) {
    Var out = push(Mat<S>(value(a).array().log()), needs(a));
    record(out, [this, a, out]() {
      if (!requires_grad(a)) return;
      grad(a).array() += grad_ref(out).array() / value(a).array();
    });
    return out;
  }

  // ---- shape ops ----

  Var slice_cols(Var a, int c0, int count) {
    Var out = push(Mat<S>(value(a).middleCols(c0, count)), needs(a));
    record(out, [this, a, c0, count, out]() {
      if (requires_grad(a)) grad(a).middleCols(c0, count) += grad_ref(out);
    });
    return out;
  }

  Var row(Var a, int r) {
    Var out = push(Mat<S>(value(a).row(r)), needs(a));
    record(out, [this, a, r, out]() {
      if (requires_grad(a)) grad(a).row(r) += grad_ref(out);
    });
    return out;
  }

  Var concat_cols(const std::vector<Var>& parts) {
    const Eigen::Index rows = value(parts[0]).rows();
    Eigen::Index cols = 0;
    for (Var p : parts) cols += value(p).cols();
    Mat<S> v(rows, cols);
    Eigen::Index at = 0;
    bool any = false;
    for (Var p : parts) {
      v.middleCols(at, value(p).cols()) = value(p);
      at += value(p).cols();
      any = any || requires_grad(p);
    }
    Var out = push(std::move(v), any && grad_enabled);
    auto parts_copy = parts;
    record(out, [this, parts_copy, out]() {
      const Mat<S>& g = grad_ref(out);
      Eigen::Index at = 0;
      for (Var p : parts_copy) {
        const Eigen::Index w = value(p).cols();
        if (requires_grad(p)) grad(p) += g.middleCols(at, w);
        at += w;
      }
    });
    return out;
  }

  // ---- reductions / selections ----

  Var sum(Var a) {
    Mat<S> v(1, 1);
    v(0, 0) = value(a).sum();
    Var out = push(std::move(v), needs(a));
    record(out, [this, a, out]() {
      if (requires_grad(a)) grad(a).array() += grad_ref(out)(0, 0);
    });
    return out;
  }

  Var pick(Var a, int r, int c) {
    Mat<S> v(1, 1);
    v(0, 0) = value(a)(r, c);
    Var out = push(std::move(v), needs(a));
    record(out, [this, a, r, c, out]() {
      if (requires_grad(a)) grad(a)(r, c) += grad_ref(out)(0, 0);
    });
    return out;
  }

  // ---- normalization / attention ----

  // Rowwise layer normalization with learnable gain and bias (1 x k each).
  Var layer_norm(Var x, Var gamma, Var beta, S eps = S(1e-6)) {
    const Mat<S>& v = value(x);
    const Eigen::Index n = v.rows(), k = v.cols();
    if (value(gamma).cols() != k || value(beta).cols() != k) {
      raise(ErrorCode::ShapeError, "layer_norm: gain/bias must be 1 x cols(x)");
    }
    Mat<S> xhat(n, k);
    Mat<S> inv_sigma(n, 1);
    for (Eigen::Index i = 0; i < n; ++i) {
      const S mu = v.row(i).mean();
      const S var = (v.row(i).array() - mu).square().mean();
      const S is = S(1) / std::sqrt(var + eps);
      inv_sigma(i, 0) = is;
      xhat.row(i) = (v.row(i).array() - mu) * is;
    }
    Mat<S> y = xhat;
    y.array().rowwise() *= value(gamma).row(0).array();
    y.rowwise() += value(beta).row(0);
    Var out = push(std::move(y), needs(x, gamma, beta));
    record(out, [this, x, gamma, beta, out, xhat, inv_sigma]() {
      const Mat<S>& g = grad_ref(out);
      if (requires_grad(beta)) grad(beta) += g.colwise().sum();
      if (requires_grad(gamma)) {
        grad(gamma) += (g.array() * xhat.array()).colwise().sum().matrix();
      }
      if (!requires_grad(x)) return;
      Mat<S> dxhat = g;
      dxhat.array().rowwise() *= value(gamma).row(0).array();
      Mat<S>& gx = grad(x);
      for (Eigen::Index i = 0; i < g.rows(); ++i) {
        const S m1 = dxhat.row(i).mean();
        const S m2 = (dxhat.row(i).array() * xhat.row(i).array()).mean();
        gx.row(i).array() += inv_sigma(i, 0) *
            (dxhat.row(i).array() - m1 - xhat.row(i).array() * m2);
      }
    });
    return out;
  }

  Var softmax_rows(Var a) {
    Mat<S> y = value(a);
    for (Eigen::Index i = 0; i < y.rows(); ++i) {
      const S m = y.row(i).maxCoeff();
      y.row(i) = (y.row(i).array() - m).exp();
      y.row(i) /= y.row(i).sum();
    }
    Var out = push(std::move(y), needs(a));
    record(out, [this, a, out]() {
      if (!requires_grad(a)) return;
      const Mat<S>& g = grad_ref(out);
      const Mat<S>& y = value(out);
      Mat<S>& ga = grad(a);
      for (Eigen::Index i = 0; i < y.rows(); ++i) {
        const S dot = g.row(i).dot(y.row(i));
        ga.row(i).array() += y.row(i).array() * (g.row(i).array() - dot);
      }
    });
    return out;
  }

  // Rowwise softmax over entries where mask(i,j) is set; masked entries get
  // probability exactly 0. A row with no active entry falls back to a
  // one-hot on its own index (its attention output then reduces to the
  // node's own value vector), with no gradient through the scores.
  Var masked_softmax_rows(Var a, std::shared_ptr<const AdjacencyMask> mask) {
    const Mat<S>& x = value(a);
    const Eigen::Index n = x.rows();
    Mat<S> y = Mat<S>::Zero(n, x.cols());
    for (Eigen::Index i = 0; i < n; ++i) {
      S m = std::numeric_limits<S>::lowest();
      bool any = false;
      for (Eigen::Index j = 0; j < x.cols(); ++j) {
        if (mask->edge(static_cast<int>(i), static_cast<int>(j))) {
          any = true;
          m = std::max(m, x(i, j));
        }
      }
      if (!any) {
        y(i, i) = S(1);
        continue;
      }
      S total = S(0);
      for (Eigen::Index j = 0; j < x.cols(); ++j) {
        if (mask->edge(static_cast<int>(i), static_cast<int>(j))) {
          y(i, j) = std::exp(x(i, j) - m);
          total += y(i, j);
        }
      }
      y.row(i) /= total;
    }
    Var out = push(std::move(y), needs(a));
    record(out, [this, a, out, mask]() {
      if (!requires_grad(a)) return;
      const Mat<S>& g = grad_ref(out);
      const Mat<S>& y = value(out);
      Mat<S>& ga = grad(a);
      for (Eigen::Index i = 0; i < y.rows(); ++i) {
        bool any = false;
        for (Eigen::Index j = 0; j < y.cols() && !any; ++j) {
          any = mask->edge(static_cast<int>(i), static_cast<int>(j));
        }
        if (!any) continue;  // fallback rows carry no score gradient
        const S dot = g.row(i).dot(y.row(i));
        ga.row(i).array() += y.row(i).array() * (g.row(i).array() - dot);
      }
    });
    return out;
  }

  // out(i,j) = mask(i,j) ? x(i,j) : fill. Gradient flows only through kept
  // entries. `mask` is row-major n_rows*n_cols.
  Var apply_mask(Var a, std::shared_ptr<const std::vector<std::uint8_t>> mask,
                 S fill) {
    const Mat<S>& x = value(a);
    if (static_cast<std::size_t>(x.size()) != mask->size()) {
      raise(ErrorCode::ShapeError, "apply_mask: mask size mismatch");
    }
    Mat<S> y(x.rows(), x.cols());
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
      for (Eigen::Index j = 0; j < x.cols(); ++j) {
        y(i, j) = (*mask)[i * x.cols() + j] ? x(i, j) : fill;
      }
    }
    Var out = push(std::move(y), needs(a));
    record(out, [this, a, out, mask]() {
      if (!requires_grad(a)) return;
      const Mat<S>& g = grad_ref(out);
      Mat<S>& ga = grad(a);
      for (Eigen::Index i = 0; i < g.rows(); ++i) {
        for (Eigen::Index j = 0; j < g.cols(); ++j) {
          if ((*mask)[i * g.cols() + j]) ga(i, j) += g(i, j);
        }
      }
    });
    return out;
  }

  // ---- backward ----

  // Reverse sweep from a scalar loss. Throws NonScalarLoss otherwise.
  void backward(Var loss) {
    if (value(loss).rows() != 1 || value(loss).cols() != 1) {
      raise(ErrorCode::NonScalarLoss, "backward needs a 1x1 output");
    }
    grad(loss)(0, 0) = S(1);
    for (int k = loss.id; k >= 0; --k) {
      auto& node = nodes_[k];
      if (!node.requires_grad || !node.backward) continue;
      if (node.grad.size() == 0) continue;  // not on a path to the loss
      node.backward();
    }
  }

 private:
  struct Node {
    Mat<S> value;
    Mat<S> grad;
    bool requires_grad = false;
    std::function<void()> backward;
  };

  std::vector<Node> nodes_;

  Var push(Mat<S> v, bool req) {
#ifndef NDEBUG
    if (!v.allFinite()) {
      raise(ErrorCode::ShapeError, "non-finite values produced by tape op");
    }
#endif
    Node node;
    node.value = std::move(v);
    node.requires_grad = req && grad_enabled;
    nodes_.push_back(std::move(node));
    return Var{static_cast<int>(nodes_.size()) - 1};
  }

  template <typename Fn>
  void record(Var out, Fn&& fn) {
    if (nodes_[out.id].requires_grad) {
      nodes_[out.id].backward = std::forward<Fn>(fn);
    }
  }

  const Mat<S>& grad_ref(Var v) { return grad(v); }

  bool needs(Var a) const { return nodes_[a.id].requires_grad; }
  bool needs(Var a, Var b) const { return needs(a) || needs(b); }
  bool needs(Var a, Var b, Var c) const { return needs(a) || needs(b) || needs(c); }

  void check_inner(Var a, Var b) const {
    if (value(a).cols() != value(b).rows()) {
      raise(ErrorCode::ShapeError, "matmul: inner dimensions disagree");
    }
  }
  void check_same(Var a, Var b) const {
    if (value(a).rows() != value(b).rows() || value(a).cols() != value(b).cols()) {
      raise(ErrorCode::ShapeError, "elementwise op: shapes disagree");
    }
  }
};

}  // namespace optw::nn
