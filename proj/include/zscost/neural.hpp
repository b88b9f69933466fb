#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "zscost/common.hpp"

namespace zscost {

inline constexpr double kLeakySlope = 0.01;

struct Matrix {
  int rows = 0;
  int cols = 0;
  std::vector<double> data;  // row-major

  Matrix() = default;
  Matrix(int r, int c) : rows(r), cols(c), data(static_cast<std::size_t>(r) * c, 0.0) {}
  double& at(int r, int c) { return data[static_cast<std::size_t>(r) * cols + c]; }
  double at(int r, int c) const { return data[static_cast<std::size_t>(r) * cols + c]; }
};

// ---------------------------------------------------------------------------
// Tape: records primitive operations on vectors/scalars for reverse-mode
// gradient computation. Values live in one arena; a Var is an index into the
// variable table. Parameter gradients accumulate into caller-owned buffers so
// several taped samples can contribute to one minibatch gradient.
// ---------------------------------------------------------------------------

using Var = int;

class Tape {
 public:
  enum class OpKind {
    Input,       // leaf
    Affine,      // out = W a + b
    LeakyRelu,   // elementwise
    Sum,         // out = sum of child vars (equal lengths)
    Concat,      // out = [a, b]
    Exp,         // scalar
    Scale,       // out = k * a            (scalar)
    RecipScale,  // out = k / a            (scalar)
    Max2,        // out = max(a, b); gradient to the larger, ties to a
    ClampMax,    // out = min(a, k); zero gradient when clamped
  };

  void reset() {
    vars_.clear();
    ops_.clear();
    vals_.clear();
    grads_.clear();
    child_pool_.clear();
  }

  std::size_t size(Var v) const { return vars_[v].n; }
  std::span<const double> value(Var v) const {
    return {vals_.data() + vars_[v].off, vars_[v].n};
  }
  double scalar(Var v) const { return vals_[vars_[v].off]; }
  // Valid after backward().
  std::span<const double> grad(Var v) const {
    return {grads_.data() + vars_[v].off, vars_[v].n};
  }

  Var input(std::span<const double> x) {
    const Var v = alloc(x.size());
    std::copy(x.begin(), x.end(), vals_.begin() + vars_[v].off);
    ops_.push_back({OpKind::Input, v, -1, -1, nullptr, nullptr, nullptr, nullptr, 0.0, 0, 0});
    return v;
  }

  // out = W a + b. wgrad/bgrad receive accumulated gradients on backward.
  Var affine(const Matrix& W, const std::vector<double>& b, Var a,
             Matrix* wgrad, std::vector<double>* bgrad) {
    if (static_cast<std::size_t>(W.cols) != size(a))
      throw Error("affine: dimension mismatch");
    const Var v = alloc(static_cast<std::size_t>(W.rows));
    const double* x = vals_.data() + vars_[a].off;
    double* y = vals_.data() + vars_[v].off;
    for (int r = 0; r < W.rows; ++r) {
      const double* wr = W.data.data() + static_cast<std::size_t>(r) * W.cols;
      double acc = b[r];
      for (int c = 0; c < W.cols; ++c) acc += wr[c] * x[c];
      y[r] = acc;
    }
    ops_.push_back({OpKind::Affine, v, a, -1, &W, &b, wgrad, bgrad, 0.0, 0, 0});
    return v;
  }

  Var leaky_relu(Var a) {
    const Var v = alloc(size(a));
    const double* x = vals_.data() + vars_[a].off;
    double* y = vals_.data() + vars_[v].off;
    for (std::size_t i = 0; i < vars_[v].n; ++i)
      y[i] = x[i] > 0.0 ? x[i] : kLeakySlope * x[i];
    ops_.push_back({OpKind::LeakyRelu, v, a, -1, nullptr, nullptr, nullptr, nullptr, 0.0, 0, 0});
    return v;
  }

  // Elementwise sum over vars, in the given order (fixed reduction order).
  Var sum(std::span<const Var> vs) {
    if (vs.empty()) throw Error("sum: no operands");
    const std::size_t n = size(vs[0]);
    const Var v = alloc(n);
    double* y = vals_.data() + vars_[v].off;
    std::fill(y, y + n, 0.0);
    for (Var u : vs) {
      if (size(u) != n) throw Error("sum: dimension mismatch");
      const double* x = vals_.data() + vars_[u].off;
      for (std::size_t i = 0; i < n; ++i) y[i] += x[i];
    }
    const int begin = static_cast<int>(child_pool_.size());
    child_pool_.insert(child_pool_.end(), vs.begin(), vs.end());
    ops_.push_back({OpKind::Sum, v, -1, -1, nullptr, nullptr, nullptr, nullptr,
                    0.0, begin, static_cast<int>(vs.size())});
    return v;
  }

  Var concat(Var a, Var b) {
    const Var v = alloc(size(a) + size(b));
    double* y = vals_.data() + vars_[v].off;
    std::copy_n(vals_.data() + vars_[a].off, size(a), y);
    std::copy_n(vals_.data() + vars_[b].off, size(b), y + size(a));
    ops_.push_back({OpKind::Concat, v, a, b, nullptr, nullptr, nullptr, nullptr, 0.0, 0, 0});
    return v;
  }

  Var exp(Var a) {
    require_scalar(a, "exp");
    const Var v = alloc(1);
    vals_[vars_[v].off] = std::exp(scalar(a));
    ops_.push_back({OpKind::Exp, v, a, -1, nullptr, nullptr, nullptr, nullptr, 0.0, 0, 0});
    return v;
  }

  Var scale(Var a, double k) {
    require_scalar(a, "scale");
    const Var v = alloc(1);
    vals_[vars_[v].off] = k * scalar(a);
    ops_.push_back({OpKind::Scale, v, a, -1, nullptr, nullptr, nullptr, nullptr, k, 0, 0});
    return v;
  }

  // out = k / a.
  Var recip_scale(Var a, double k) {
    require_scalar(a, "recip_scale");
    const Var v = alloc(1);
    vals_[vars_[v].off] = k / scalar(a);
    ops_.push_back({OpKind::RecipScale, v, a, -1, nullptr, nullptr, nullptr, nullptr, k, 0, 0});
    return v;
  }

  Var max2(Var a, Var b) {
    require_scalar(a, "max2");
    require_scalar(b, "max2");
    const Var v = alloc(1);
    vals_[vars_[v].off] = std::max(scalar(a), scalar(b));
    ops_.push_back({OpKind::Max2, v, a, b, nullptr, nullptr, nullptr, nullptr, 0.0, 0, 0});
    return v;
  }

  Var clamp_max(Var a, double k) {
    require_scalar(a, "clamp_max");
    const Var v = alloc(1);
    vals_[vars_[v].off] = std::min(scalar(a), k);
    ops_.push_back({OpKind::ClampMax, v, a, -1, nullptr, nullptr, nullptr, nullptr, k, 0, 0});
    return v;
  }

  // Reverse pass from a recorded scalar. seed is the upstream gradient
  // (1/batch_size when accumulating a minibatch mean). Parameter gradients
  // are ADDED to the registered wgrad/bgrad buffers.
  void backward(Var out, double seed = 1.0) {
    if (out < 0 || out >= static_cast<Var>(vars_.size()))
      throw Error("backward: output not on tape");
    require_scalar(out, "backward");
    grads_.assign(vals_.size(), 0.0);
    grads_[vars_[out].off] = seed;
    for (std::size_t oi = ops_.size(); oi-- > 0;) {
      const Op& op = ops_[oi];
      const double* gy = grads_.data() + vars_[op.out].off;
      switch (op.kind) {
        case OpKind::Input:
          break;
        case OpKind::Affine: {
          const Matrix& W = *op.W;
          const double* x = vals_.data() + vars_[op.a].off;
          double* gx = grads_.data() + vars_[op.a].off;
          for (int r = 0; r < W.rows; ++r) {
            const double g = gy[r];
            if (g == 0.0) continue;
            const double* wr = W.data.data() + static_cast<std::size_t>(r) * W.cols;
            double* wgr = op.wgrad
                              ? op.wgrad->data.data() + static_cast<std::size_t>(r) * W.cols
                              : nullptr;
            for (int c = 0; c < W.cols; ++c) {
              gx[c] += g * wr[c];
              if (wgr) wgr[c] += g * x[c];
            }
            if (op.bgrad) (*op.bgrad)[r] += g;
          }
          break;
        }
        case OpKind::LeakyRelu: {
          const double* x = vals_.data() + vars_[op.a].off;
          double* gx = grads_.data() + vars_[op.a].off;
          for (std::size_t i = 0; i < vars_[op.out].n; ++i)
            gx[i] += gy[i] * (x[i] > 0.0 ? 1.0 : kLeakySlope);
          break;
        }
        case OpKind::Sum: {
          for (int k = 0; k < op.child_count; ++k) {
            const Var u = child_pool_[op.child_begin + k];
            double* gx = grads_.data() + vars_[u].off;
            for (std::size_t i = 0; i < vars_[op.out].n; ++i) gx[i] += gy[i];
          }
          break;
        }
        case OpKind::Concat: {
          double* ga = grads_.data() + vars_[op.a].off;
          double* gb = grads_.data() + vars_[op.b].off;
          const std::size_t na = vars_[op.a].n;
          for (std::size_t i = 0; i < na; ++i) ga[i] += gy[i];
          for (std::size_t i = 0; i < vars_[op.b].n; ++i) gb[i] += gy[na + i];
          break;
        }
        case OpKind::Exp:
          grads_[vars_[op.a].off] += gy[0] * vals_[vars_[op.out].off];
          break;
        case OpKind::Scale:
          grads_[vars_[op.a].off] += gy[0] * op.k;
          break;
        case OpKind::RecipScale: {
          const double x = vals_[vars_[op.a].off];
          grads_[vars_[op.a].off] += gy[0] * (-op.k / (x * x));
          break;
        }
        case OpKind::Max2: {
          const double a = vals_[vars_[op.a].off];
          const double b = vals_[vars_[op.b].off];
          if (a >= b)
            grads_[vars_[op.a].off] += gy[0];
          else
            grads_[vars_[op.b].off] += gy[0];
          break;
        }
        case OpKind::ClampMax:
          if (vals_[vars_[op.a].off] <= op.k)
            grads_[vars_[op.a].off] += gy[0];
          break;
      }
    }
  }

 private:
  struct VarInfo {
    std::size_t off, n;
  };
  struct Op {
    OpKind kind;
    Var out;
    Var a, b;
    const Matrix* W;
    const std::vector<double>* bias;
    Matrix* wgrad;
    std::vector<double>* bgrad;
    double k;
    int child_begin, child_count;
  };

  Var alloc(std::size_t n) {
    vars_.push_back({vals_.size(), n});
    vals_.resize(vals_.size() + n, 0.0);
    return static_cast<Var>(vars_.size()) - 1;
  }

  void require_scalar(Var v, const char* what) const {
    if (vars_[v].n != 1) throw Error(std::string(what) + ": expected scalar");
  }

  std::vector<VarInfo> vars_;
  std::vector<Op> ops_;
  std::vector<double> vals_;
  std::vector<double> grads_;
  std::vector<Var> child_pool_;
};

// ---------------------------------------------------------------------------
// MLP: affine layers with LeakyReLU(0.01) hidden activations and identity
// output. He-style uniform initialization from a seeded PRNG.
// ---------------------------------------------------------------------------

struct Mlp {
  struct Layer {
    Matrix W;
    std::vector<double> b;
  };
  std::vector<Layer> layers;

  int input_dim() const { return layers.front().W.cols; }
  int output_dim() const { return layers.back().W.rows; }

  // depth = number of affine layers; hidden layers all have `hidden` units.
  static Mlp make(int in_dim, int hidden, int out_dim, int depth, Rng& rng) {
    if (depth < 1) throw Error("Mlp: depth must be >= 1");
    Mlp m;
    for (int l = 0; l < depth; ++l) {
      const int ni = l == 0 ? in_dim : hidden;
      const int no = l == depth - 1 ? out_dim : hidden;
      Layer layer{Matrix(no, ni), std::vector<double>(no, 0.0)};
      const double bound = std::sqrt(6.0 / static_cast<double>(ni));
      for (double& w : layer.W.data) w = uniform_real(rng, -bound, bound);
      m.layers.push_back(std::move(layer));
    }
    return m;
  }
};

// Mirror of an Mlp's parameter shapes for gradient accumulation.
struct MlpGrads {
  std::vector<Mlp::Layer> layers;

  explicit MlpGrads(const Mlp& m) {
    for (const auto& l : m.layers)
      layers.push_back({Matrix(l.W.rows, l.W.cols),
                        std::vector<double>(l.b.size(), 0.0)});
  }
  void zero() {
    for (auto& l : layers) {
      std::fill(l.W.data.begin(), l.W.data.end(), 0.0);
      std::fill(l.b.begin(), l.b.end(), 0.0);
    }
  }
};

inline Var mlp_forward(const Mlp& m, Tape& tape, Var x, MlpGrads* grads) {
  Var h = x;
  for (std::size_t l = 0; l < m.layers.size(); ++l) {
    h = tape.affine(m.layers[l].W, m.layers[l].b, h,
                    grads ? &grads->layers[l].W : nullptr,
                    grads ? &grads->layers[l].b : nullptr);
    if (l + 1 < m.layers.size()) h = tape.leaky_relu(h);
  }
  return h;
}

// Tape-free forward for the prediction path.
inline std::vector<double> mlp_forward(const Mlp& m, std::span<const double> x) {
  if (static_cast<int>(x.size()) != m.input_dim())
    throw Error("mlp_forward: dimension mismatch");
  std::vector<double> cur(x.begin(), x.end());
  std::vector<double> next;
  for (std::size_t l = 0; l < m.layers.size(); ++l) {
    const Matrix& W = m.layers[l].W;
    next.assign(static_cast<std::size_t>(W.rows), 0.0);
    for (int r = 0; r < W.rows; ++r) {
      const double* wr = W.data.data() + static_cast<std::size_t>(r) * W.cols;
      double acc = m.layers[l].b[r];
      for (int c = 0; c < W.cols; ++c) acc += wr[c] * cur[c];
      next[r] = acc;
    }
    if (l + 1 < m.layers.size())
      for (double& v : next) v = v > 0.0 ? v : kLeakySlope * v;
    cur.swap(next);
  }
  return cur;
}

// ---------------------------------------------------------------------------
// Adam with bias correction over a flat list of parameter views.
// ---------------------------------------------------------------------------

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

class Adam {
 public:
  Adam(AdamConfig cfg, const std::vector<std::size_t>& shapes) : cfg_(cfg) {
    for (std::size_t n : shapes) {
      m_.emplace_back(n, 0.0);
      v_.emplace_back(n, 0.0);
    }
  }

  // Returns false (and leaves parameters untouched) if any gradient is
  // non-finite.
  bool step(const std::vector<std::span<double>>& params,
            const std::vector<std::span<const double>>& grads) {
    if (params.size() != m_.size() || grads.size() != m_.size())
      throw Error("adam: shape mismatch");
    for (const auto& g : grads)
      for (double x : g)
        if (!std::isfinite(x)) return false;
    ++t_;
    const double bc1 = 1.0 - std::pow(cfg_.beta1, t_);
    const double bc2 = 1.0 - std::pow(cfg_.beta2, t_);
    for (std::size_t p = 0; p < params.size(); ++p) {
      auto& m = m_[p];
      auto& v = v_[p];
      auto& w = params[p];
      const auto& g = grads[p];
      for (std::size_t i = 0; i < w.size(); ++i) {
        m[i] = cfg_.beta1 * m[i] + (1.0 - cfg_.beta1) * g[i];
        v[i] = cfg_.beta2 * v[i] + (1.0 - cfg_.beta2) * g[i] * g[i];
        const double mhat = m[i] / bc1;
        const double vhat = v[i] / bc2;
        w[i] -= cfg_.lr * mhat / (std::sqrt(vhat) + cfg_.eps);
      }
    }
    return true;
  }

  std::int64_t step_count() const { return t_; }
  void set_lr(double lr) { cfg_.lr = lr; }

 private:
  AdamConfig cfg_;
  std::int64_t t_ = 0;
  std::vector<std::vector<double>> m_, v_;
};

}  // namespace zscost
