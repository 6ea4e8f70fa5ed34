/**
 * @file layers.hpp
 * @brief Neural-network layers with hand-written forward and backward passes.
 *
 * Everything is templated on the scalar so the training path runs in float32
 * while finite-difference gradient checks instantiate the same code in
 * float64. Layers are free functions over explicit parameter and cache
 * structs; no global state.
 */
#ifndef ITL_LAYERS_HPP
#define ITL_LAYERS_HPP

#include <cmath>
#include <vector>

#include "itl/rng.hpp"
#include "itl/tensor.hpp"

namespace itl {

enum class Activation { Linear, Tanh, Relu };

/// Forward mode of stochastic/normalizing layers. Dropout is live in Train
/// and McDropout; batch normalization uses batch statistics only in Train.
enum class RunMode { Train, Inference, McDropout };

template <typename S>
void apply_activation(Activation act, MatrixX<S>& m) {
  switch (act) {
    case Activation::Linear:
      return;
    case Activation::Tanh:
      m = m.array().tanh().matrix();
      return;
    case Activation::Relu:
      m = m.cwiseMax(S(0));
      return;
  }
}

/// d(activation)/d(pre-activation) expressed through the stored output.
template <typename S, typename D1, typename D2>
void activation_grad_from_output(Activation act,
                                 const Eigen::MatrixBase<D1>& y,
                                 Eigen::MatrixBase<D2> const& dy_inout) {
  auto& dy = const_cast<Eigen::MatrixBase<D2>&>(dy_inout);
  switch (act) {
    case Activation::Linear:
      return;
    case Activation::Tanh:
      dy.array() *= (S(1) - y.array().square());
      return;
    case Activation::Relu:
      dy.array() *= (y.array() > S(0)).template cast<S>();
      return;
  }
}

/// Glorot uniform initialization on +/- sqrt(6 / (fan_in + fan_out)).
template <typename S>
MatrixX<S> glorot_init(Index rows, Index cols, Index fan_in, Index fan_out,
                       RngStream& rng) {
  const double limit = std::sqrt(6.0 / double(fan_in + fan_out));
  MatrixX<S> w(rows, cols);
  for (Index i = 0; i < rows; ++i)
    for (Index j = 0; j < cols; ++j)
      w(i, j) = static_cast<S>(rng.uniform(-limit, limit));
  return w;
}

// ---------------------------------------------------------------------------
// 2-D convolution, same padding, stride 1, square odd kernel.
// Weights: (K*K*Cin) x Cout with patch features ordered (kh, kw, cin).
// ---------------------------------------------------------------------------

template <typename S>
struct Conv2dCache {
  MatrixX<S> patches;  // (H*W) x (K*K*Cin) of the last sample processed
};

template <typename S>
void im2col(const Tensor<S>& x, Index b, Index k, MatrixX<S>& patches) {
  const Index h = x.height(), w = x.width(), c = x.channels();
  const Index pad = (k - 1) / 2;
  patches.resize(h * w, k * k * c);
  auto xs = x.sample(b);
  for (Index i = 0; i < h; ++i) {
    for (Index j = 0; j < w; ++j) {
      const Index row = i * w + j;
      Index col = 0;
      for (Index ki = 0; ki < k; ++ki) {
        const Index si = i + ki - pad;
        for (Index kj = 0; kj < k; ++kj, col += c) {
          const Index sj = j + kj - pad;
          if (si < 0 || si >= h || sj < 0 || sj >= w) {
            patches.row(row).segment(col, c).setZero();
          } else {
            patches.row(row).segment(col, c) = xs.row(si * w + sj);
          }
        }
      }
    }
  }
}

/// Scatter-add of patch-space gradients back onto the input sample.
template <typename S>
void col2im_add(const MatrixX<S>& dpatches, Index h, Index w, Index c, Index k,
                typename Tensor<S>::MapT dx) {
  const Index pad = (k - 1) / 2;
  for (Index i = 0; i < h; ++i) {
    for (Index j = 0; j < w; ++j) {
      const Index row = i * w + j;
      Index col = 0;
      for (Index ki = 0; ki < k; ++ki) {
        const Index si = i + ki - pad;
        for (Index kj = 0; kj < k; ++kj, col += c) {
          const Index sj = j + kj - pad;
          if (si < 0 || si >= h || sj < 0 || sj >= w) continue;
          dx.row(si * w + sj) += dpatches.row(row).segment(col, c);
        }
      }
    }
  }
}

template <typename S>
void conv2d_forward(const Tensor<S>& x, const MatrixX<S>& weights,
                    const RowVectorX<S>& bias, Activation act, Tensor<S>& y,
                    Conv2dCache<S>& cache) {
  const Index k = static_cast<Index>(
      std::llround(std::sqrt(double(weights.rows() / x.channels()))));
  if (k * k * x.channels() != weights.rows())
    throw DomainError("conv2d: weight rows do not match kernel*channels");
  if (k % 2 == 0) throw DomainError("conv2d: kernel size must be odd");
  y.resize(x.batch(), x.height(), x.width(), weights.cols());
  for (Index b = 0; b < x.batch(); ++b) {
    im2col(x, b, k, cache.patches);
    auto ys = y.sample(b);
    ys.noalias() = cache.patches * weights;
    ys.rowwise() += bias;
    switch (act) {
      case Activation::Linear:
        break;
      case Activation::Tanh:
        ys = ys.array().tanh().matrix();
        break;
      case Activation::Relu:
        ys = ys.cwiseMax(S(0));
        break;
    }
  }
}

/// Backward pass; dx may be null for the first layer. dw/db are accumulated
/// from zero (caller owns zeroing between batches).
template <typename S>
void conv2d_backward(const Tensor<S>& x, const MatrixX<S>& weights,
                     Activation act, const Tensor<S>& y, const Tensor<S>& dy,
                     Tensor<S>* dx, MatrixX<S>& dw, RowVectorX<S>& db,
                     Conv2dCache<S>& cache) {
  const Index k = static_cast<Index>(
      std::llround(std::sqrt(double(weights.rows() / x.channels()))));
  if (dx) {
    dx->resize(x.batch(), x.height(), x.width(), x.channels());
    dx->setZero();
  }
  MatrixX<S> dpre, dpatches;
  for (Index b = 0; b < x.batch(); ++b) {
    dpre = dy.sample(b);
    activation_grad_from_output<S>(act, y.sample(b), dpre);
    im2col(x, b, k, cache.patches);
    dw.noalias() += cache.patches.transpose() * dpre;
    db += dpre.colwise().sum();
    if (dx) {
      dpatches.noalias() = dpre * weights.transpose();
      col2im_add(dpatches, x.height(), x.width(), x.channels(), k,
                 dx->sample(b));
    }
  }
}

// ---------------------------------------------------------------------------
// 2x2 max pooling with ceil-mode output shape. Gradient routes to the first
// maximum in row-major window order.
// ---------------------------------------------------------------------------

template <typename S>
struct MaxPoolCache {
  std::vector<Index> argmax;  // flat (b, ho, wo, c) -> input spatial index
};

inline Index pooled_len(Index n) { return (n + 1) / 2; }

template <typename S>
void maxpool2d_forward(const Tensor<S>& x, Tensor<S>& y, MaxPoolCache<S>& cache) {
  const Index ho = pooled_len(x.height()), wo = pooled_len(x.width());
  const Index c = x.channels();
  y.resize(x.batch(), ho, wo, c);
  cache.argmax.assign(static_cast<std::size_t>(x.batch() * ho * wo * c), 0);
  for (Index b = 0; b < x.batch(); ++b) {
    auto xs = x.sample(b);
    auto ys = y.sample(b);
    for (Index i = 0; i < ho; ++i) {
      for (Index j = 0; j < wo; ++j) {
        for (Index ch = 0; ch < c; ++ch) {
          S best{};
          Index best_idx = -1;
          for (Index di = 0; di < 2; ++di) {
            const Index si = 2 * i + di;
            if (si >= x.height()) break;
            for (Index dj = 0; dj < 2; ++dj) {
              const Index sj = 2 * j + dj;
              if (sj >= x.width()) break;
              const S v = xs(si * x.width() + sj, ch);
              if (best_idx < 0 || v > best) {
                best = v;
                best_idx = si * x.width() + sj;
              }
            }
          }
          ys(i * wo + j, ch) = best;
          cache.argmax[static_cast<std::size_t>(
              ((b * ho + i) * wo + j) * c + ch)] = best_idx;
        }
      }
    }
  }
}

template <typename S>
void maxpool2d_backward(const Tensor<S>& x, const Tensor<S>& dy,
                        const MaxPoolCache<S>& cache, Tensor<S>& dx) {
  const Index ho = dy.height(), wo = dy.width(), c = dy.channels();
  dx.resize(x.batch(), x.height(), x.width(), x.channels());
  dx.setZero();
  for (Index b = 0; b < x.batch(); ++b) {
    auto dys = dy.sample(b);
    auto dxs = dx.sample(b);
    for (Index i = 0; i < ho; ++i)
      for (Index j = 0; j < wo; ++j)
        for (Index ch = 0; ch < c; ++ch)
          dxs(cache.argmax[static_cast<std::size_t>(
                  ((b * ho + i) * wo + j) * c + ch)],
              ch) += dys(i * wo + j, ch);
  }
}

// ---------------------------------------------------------------------------
// Inverted dropout. Mask ~ Bernoulli(1-rate) scaled by 1/(1-rate) in Train
// and McDropout modes; identity in Inference.
// ---------------------------------------------------------------------------

template <typename S>
struct DropoutCache {
  VectorX<S> mask;  // empty when the layer ran as identity
};

/// In-place over any contiguous buffer (conv tensors or flat matrices).
template <typename S>
void dropout_forward(S* data, Index n, double rate, RunMode mode,
                     RngStream& rng, DropoutCache<S>& cache) {
  if (rate < 0.0 || rate >= 1.0)
    throw DomainError("dropout: rate must be in [0, 1)");
  if (mode == RunMode::Inference || rate == 0.0) {
    cache.mask.resize(0);
    return;
  }
  const S keep_scale = S(1.0 / (1.0 - rate));
  cache.mask.resize(n);
  for (Index i = 0; i < n; ++i) {
    cache.mask[i] = rng.uniform() < rate ? S(0) : keep_scale;
    data[i] *= cache.mask[i];
  }
}

template <typename S>
void dropout_backward(S* ddata, Index n, const DropoutCache<S>& cache) {
  if (cache.mask.size() == 0) return;
  for (Index i = 0; i < n; ++i) ddata[i] *= cache.mask[i];
}

// ---------------------------------------------------------------------------
// Dense layer on (batch x features) matrices.
// ---------------------------------------------------------------------------

template <typename S>
void dense_forward(const MatrixX<S>& x, const MatrixX<S>& w,
                   const RowVectorX<S>& b, Activation act, MatrixX<S>& y) {
  if (x.cols() != w.rows())
    throw DomainError("dense: input width " + std::to_string(x.cols()) +
                      " does not match weight rows " + std::to_string(w.rows()));
  y.noalias() = x * w;
  y.rowwise() += b;
  apply_activation(act, y);
}

template <typename S>
void dense_backward(const MatrixX<S>& x, const MatrixX<S>& w, Activation act,
                    const MatrixX<S>& y, MatrixX<S> dy, MatrixX<S>* dx,
                    MatrixX<S>& dw, RowVectorX<S>& db) {
  activation_grad_from_output<S>(act, y, dy);
  dw.noalias() += x.transpose() * dy;
  db += dy.colwise().sum();
  if (dx) dx->noalias() = dy * w.transpose();
}

// ---------------------------------------------------------------------------
// Batch normalization over the batch axis of (batch x features) matrices.
// ---------------------------------------------------------------------------

template <typename S>
struct BatchNormParams {
  RowVectorX<S> gamma, beta;
  RowVectorX<S> run_mean, run_var;  // inference statistics
  void init(Index features) {
    gamma = RowVectorX<S>::Ones(features);
    beta = RowVectorX<S>::Zero(features);
    run_mean = RowVectorX<S>::Zero(features);
    run_var = RowVectorX<S>::Ones(features);
  }
};

template <typename S>
struct BatchNormCache {
  MatrixX<S> xhat;
  RowVectorX<S> inv_std;
};

inline constexpr double kBatchNormMomentum = 0.99;
inline constexpr double kBatchNormEps = 1e-5;

template <typename S>
void batchnorm_forward(const MatrixX<S>& x, BatchNormParams<S>& p, RunMode mode,
                       MatrixX<S>& y, BatchNormCache<S>& cache) {
  if (mode == RunMode::Train) {
    if (x.rows() < 2)
      throw DomainError("batchnorm: training mode needs a batch of >= 2");
    const S inv_b = S(1) / S(x.rows());
    const RowVectorX<S> mean = x.colwise().sum() * inv_b;
    const RowVectorX<S> var =
        (x.rowwise() - mean).array().square().colwise().sum() * inv_b;
    cache.inv_std =
        (var.array() + S(kBatchNormEps)).sqrt().inverse().matrix();
    cache.xhat = (x.rowwise() - mean).array().rowwise() *
                 cache.inv_std.array();
    y = cache.xhat.array().rowwise() * p.gamma.array();
    y.rowwise() += p.beta;
    p.run_mean = S(kBatchNormMomentum) * p.run_mean +
                 S(1 - kBatchNormMomentum) * mean;
    p.run_var =
        S(kBatchNormMomentum) * p.run_var + S(1 - kBatchNormMomentum) * var;
  } else {
    const RowVectorX<S> inv_std =
        (p.run_var.array() + S(kBatchNormEps)).sqrt().inverse().matrix();
    y = (x.rowwise() - p.run_mean).array().rowwise() * inv_std.array();
    y = y.array().rowwise() * p.gamma.array();
    y.rowwise() += p.beta;
  }
}

template <typename S>
void batchnorm_backward(const MatrixX<S>& dy, const BatchNormParams<S>& p,
                        const BatchNormCache<S>& cache, MatrixX<S>* dx,
                        RowVectorX<S>& dgamma, RowVectorX<S>& dbeta) {
  dgamma += (dy.array() * cache.xhat.array()).colwise().sum().matrix();
  dbeta += dy.colwise().sum();
  if (!dx) return;
  const Index b = dy.rows();
  const MatrixX<S> dxhat = dy.array().rowwise() * p.gamma.array();
  const RowVectorX<S> sum_dxhat = dxhat.colwise().sum();
  const RowVectorX<S> sum_dxhat_xhat =
      (dxhat.array() * cache.xhat.array()).colwise().sum().matrix();
  // dx = inv_std/B * (B dxhat - sum(dxhat) - xhat * sum(dxhat x xhat))
  *dx = (S(b) * dxhat.array() -
         (MatrixX<S>::Ones(b, 1) * sum_dxhat).array() -
         cache.xhat.array().rowwise() * sum_dxhat_xhat.array())
            .rowwise() *
        (cache.inv_std.array() / S(b));
}

// ---------------------------------------------------------------------------
// GRU layer. Convention:
//   z_t = sigmoid(x_t Wz + h_{t-1} Uz + bz)        update gate
//   r_t = sigmoid(x_t Wr + h_{t-1} Ur + br)        reset gate
//   c_t = tanh(x_t Wh + (r_t . h_{t-1}) Uh + bh)   candidate
//   h_t = z_t . h_{t-1} + (1 - z_t) . c_t
// ---------------------------------------------------------------------------

template <typename S>
struct GruParams {
  MatrixX<S> wz, wr, wh;  // input projections, (in x hidden)
  MatrixX<S> uz, ur, uh;  // recurrent projections, (hidden x hidden)
  RowVectorX<S> bz, br, bh;

  void init(Index in, Index hidden, RngStream& rng) {
    wz = glorot_init<S>(in, hidden, in, hidden, rng);
    wr = glorot_init<S>(in, hidden, in, hidden, rng);
    wh = glorot_init<S>(in, hidden, in, hidden, rng);
    uz = glorot_init<S>(hidden, hidden, hidden, hidden, rng);
    ur = glorot_init<S>(hidden, hidden, hidden, hidden, rng);
    uh = glorot_init<S>(hidden, hidden, hidden, hidden, rng);
    bz = RowVectorX<S>::Zero(hidden);
    br = RowVectorX<S>::Zero(hidden);
    bh = RowVectorX<S>::Zero(hidden);
  }
  Index hidden() const { return uz.rows(); }
};

template <typename S>
struct GruCache {
  std::vector<MatrixX<S>> z, r, c, h;  // per step, h[t] after the update
};

template <typename S>
MatrixX<S> sigmoid(MatrixX<S> m) {
  return ((-m.array()).exp() + S(1)).inverse().matrix();
}

/// Forward over a sequence of (batch x in) inputs; returns all hidden states.
template <typename S>
void gru_forward(const std::vector<MatrixX<S>>& xs, const GruParams<S>& p,
                 GruCache<S>& cache) {
  const auto steps = static_cast<Index>(xs.size());
  if (steps == 0) throw DomainError("gru: empty sequence");
  const Index b = xs[0].rows(), hidden = p.hidden();
  cache.z.assign(steps, {});
  cache.r.assign(steps, {});
  cache.c.assign(steps, {});
  cache.h.assign(steps, {});
  MatrixX<S> h_prev = MatrixX<S>::Zero(b, hidden);
  for (Index t = 0; t < steps; ++t) {
    const auto& x = xs[static_cast<std::size_t>(t)];
    MatrixX<S> z = x * p.wz + h_prev * p.uz;
    z.rowwise() += p.bz;
    z = sigmoid<S>(std::move(z));
    MatrixX<S> r = x * p.wr + h_prev * p.ur;
    r.rowwise() += p.br;
    r = sigmoid<S>(std::move(r));
    MatrixX<S> c = x * p.wh + (r.array() * h_prev.array()).matrix() * p.uh;
    c.rowwise() += p.bh;
    c = c.array().tanh().matrix();
    cache.h[static_cast<std::size_t>(t)] =
        (z.array() * h_prev.array() + (S(1) - z.array()) * c.array()).matrix();
    cache.z[static_cast<std::size_t>(t)] = std::move(z);
    cache.r[static_cast<std::size_t>(t)] = std::move(r);
    cache.c[static_cast<std::size_t>(t)] = std::move(c);
    h_prev = cache.h[static_cast<std::size_t>(t)];
  }
}

template <typename S>
struct GruGrads {
  MatrixX<S> wz, wr, wh, uz, ur, uh;
  RowVectorX<S> bz, br, bh;
  void init_like(const GruParams<S>& p) {
    wz = MatrixX<S>::Zero(p.wz.rows(), p.wz.cols());
    wr = wz;
    wh = wz;
    uz = MatrixX<S>::Zero(p.uz.rows(), p.uz.cols());
    ur = uz;
    uh = uz;
    bz = RowVectorX<S>::Zero(p.bz.size());
    br = bz;
    bh = bz;
  }
};

/// Backpropagation through time. dh_seq holds the gradient flowing into each
/// step's hidden state from outside (zero matrices where unused). Gradients
/// accumulate into `g`; input gradients are written to dxs when non-null.
template <typename S>
void gru_backward(const std::vector<MatrixX<S>>& xs, const GruParams<S>& p,
                  const GruCache<S>& cache,
                  const std::vector<MatrixX<S>>& dh_seq,
                  GruGrads<S>& g, std::vector<MatrixX<S>>* dxs) {
  const auto steps = static_cast<Index>(xs.size());
  const Index b = xs[0].rows(), hidden = p.hidden();
  if (dxs) dxs->assign(static_cast<std::size_t>(steps), {});
  MatrixX<S> dh = MatrixX<S>::Zero(b, hidden);
  for (Index t = steps - 1; t >= 0; --t) {
    const auto ti = static_cast<std::size_t>(t);
    dh += dh_seq[ti];
    const MatrixX<S>& z = cache.z[ti];
    const MatrixX<S>& r = cache.r[ti];
    const MatrixX<S>& c = cache.c[ti];
    const MatrixX<S> h_prev =
        t == 0 ? MatrixX<S>::Zero(b, hidden).eval() : cache.h[ti - 1];

    const MatrixX<S> dz =
        (dh.array() * (h_prev.array() - c.array()) * z.array() *
         (S(1) - z.array()))
            .matrix();
    const MatrixX<S> dc_pre =
        (dh.array() * (S(1) - z.array()) * (S(1) - c.array().square()))
            .matrix();
    const MatrixX<S> drh = dc_pre * p.uh.transpose();
    const MatrixX<S> dr =
        (drh.array() * h_prev.array() * r.array() * (S(1) - r.array()))
            .matrix();

    g.wz.noalias() += xs[ti].transpose() * dz;
    g.wr.noalias() += xs[ti].transpose() * dr;
    g.wh.noalias() += xs[ti].transpose() * dc_pre;
    g.uz.noalias() += h_prev.transpose() * dz;
    g.ur.noalias() += h_prev.transpose() * dr;
    g.uh.noalias() += (r.array() * h_prev.array()).matrix().transpose() * dc_pre;
    g.bz += dz.colwise().sum();
    g.br += dr.colwise().sum();
    g.bh += dc_pre.colwise().sum();

    if (dxs)
      (*dxs)[ti] = dz * p.wz.transpose() + dr * p.wr.transpose() +
                   dc_pre * p.wh.transpose();

    dh = (dh.array() * z.array() + drh.array() * r.array()).matrix() +
         dz * p.uz.transpose() + dr * p.ur.transpose();
  }
}

// ---------------------------------------------------------------------------
// Root-mean-square-error loss over every element of (batch x outputs).
// ---------------------------------------------------------------------------

inline constexpr double kRmseEps = 1e-12;

template <typename S>
S rmse_loss(const MatrixX<S>& pred, const MatrixX<S>& target,
            MatrixX<S>* dpred = nullptr) {
  if (pred.rows() != target.rows() || pred.cols() != target.cols())
    throw DomainError("rmse_loss: shape mismatch");
  const MatrixX<S> diff = pred - target;
  const S n = S(pred.size());
  const S mse = diff.squaredNorm() / n;
  const S loss = std::sqrt(mse);
  if (dpred) *dpred = diff / (n * std::max(loss, S(kRmseEps)));
  return loss;
}

// ---------------------------------------------------------------------------
// Adam with bias correction.
// ---------------------------------------------------------------------------

struct AdamConfig {
  double lr = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

/// Moment buffers for one parameter tensor, flat over its storage.
template <typename S>
struct AdamState {
  VectorX<S> m, v;
  void init(Index n) {
    m = VectorX<S>::Zero(n);
    v = m;
  }
};

/// One bias-corrected update over a contiguous parameter buffer; `t` is the
/// 1-based global step shared by every tensor of the model.
template <typename S>
void adam_step(S* param, const S* grad, Index n, AdamState<S>& state,
               const AdamConfig& cfg, Index t) {
  if (state.m.size() != n)
    throw DomainError("adam_step: state size does not match parameter");
  const S b1 = S(cfg.beta1), b2 = S(cfg.beta2);
  const S corr1 = S(1) - S(std::pow(cfg.beta1, double(t)));
  const S corr2 = S(1) - S(std::pow(cfg.beta2, double(t)));
  const S lr = S(cfg.lr), eps = S(cfg.eps);
  for (Index i = 0; i < n; ++i) {
    state.m[i] = b1 * state.m[i] + (S(1) - b1) * grad[i];
    state.v[i] = b2 * state.v[i] + (S(1) - b2) * grad[i] * grad[i];
    param[i] -= lr * (state.m[i] / corr1) /
                (std::sqrt(state.v[i] / corr2) + eps);
  }
}

}  // namespace itl

#endif  // ITL_LAYERS_HPP
