/**
 * @file model.hpp
 * @brief The convolutional-recurrent surrogate network.
 *
 * Stack: three convolutional feature-extraction blocks (conv 3x3 tanh,
 * 2x2 ceil max-pool, dropout) -> alignment (width becomes the sequence axis,
 * features are altitude-major h*C + c) -> GRU returning the full sequence ->
 * GRU returning the final state -> source frequency concatenated -> three
 * dense feature-transformation blocks (batchnorm, dense relu, dropout) ->
 * batchnorm -> linear head.
 */
#ifndef ITL_MODEL_HPP
#define ITL_MODEL_HPP

#include <array>
#include <string>
#include <vector>

#include "itl/layers.hpp"

namespace itl {

struct ModelConfig {
  Index input_height = 433;
  Index input_width = 40;
  std::array<Index, 3> conv_filters{64, 128, 256};
  Index conv_kernel = 3;
  double dropout_rate = 0.35;
  Index gru_hidden = 512;
  std::array<Index, 3> dft_widths{2048, 1536, 1024};
  Index output_width = 800;

  Index pooled_height() const {
    return pooled_len(pooled_len(pooled_len(input_height)));
  }
  Index pooled_width() const {
    return pooled_len(pooled_len(pooled_len(input_width)));
  }
  Index sequence_steps() const { return pooled_width(); }
  Index sequence_features() const {
    return pooled_height() * conv_filters[2];
  }

  void validate() const {
    if (input_height < 8 || input_width < 2)
      throw ConfigError("ModelConfig: input grid too small");
    if (conv_kernel % 2 == 0 || conv_kernel < 1)
      throw ConfigError("ModelConfig: kernel size must be odd");
    if (dropout_rate < 0.0 || dropout_rate >= 1.0)
      throw ConfigError("ModelConfig: dropout rate must be in [0, 1)");
    if (gru_hidden < 1 || output_width < 1)
      throw ConfigError("ModelConfig: bad layer widths");
  }
};

/// Named view over one parameter tensor's contiguous storage.
template <typename S>
struct TensorRef {
  std::string name;
  S* data = nullptr;
  Index rows = 0, cols = 0;
  Index size() const { return rows * cols; }
};

template <typename S>
struct DenseLayer {
  MatrixX<S> w;
  RowVectorX<S> b;
};

template <typename S>
struct ModelParams {
  std::array<MatrixX<S>, 3> conv_w;
  std::array<RowVectorX<S>, 3> conv_b;
  GruParams<S> gru1, gru2;
  std::array<BatchNormParams<S>, 3> dft_bn;
  std::array<DenseLayer<S>, 3> dft;
  BatchNormParams<S> head_bn;
  DenseLayer<S> head;
};

template <typename S>
struct ModelGrads {
  std::array<MatrixX<S>, 3> conv_w;
  std::array<RowVectorX<S>, 3> conv_b;
  GruGrads<S> gru1, gru2;
  std::array<RowVectorX<S>, 3> dft_bn_gamma, dft_bn_beta;
  std::array<MatrixX<S>, 3> dft_w;
  std::array<RowVectorX<S>, 3> dft_b;
  RowVectorX<S> head_bn_gamma, head_bn_beta;
  MatrixX<S> head_w;
  RowVectorX<S> head_b;
};

template <typename S>
struct ModelCache {
  Tensor<S> input;
  std::array<Tensor<S>, 3> conv_out, pool_out;
  std::array<Conv2dCache<S>, 3> conv;
  std::array<MaxPoolCache<S>, 3> pool;
  std::array<DropoutCache<S>, 3> conv_drop;
  std::vector<MatrixX<S>> seq;  // alignment output, steps x (B x features)
  GruCache<S> gru1, gru2;
  MatrixX<S> recur_out;  // gru2 final state with the frequency column
  std::array<MatrixX<S>, 3> dft_bn_out, dft_out;
  std::array<BatchNormCache<S>, 3> dft_bn;
  std::array<DropoutCache<S>, 3> dft_drop;
  MatrixX<S> head_bn_out;
  BatchNormCache<S> head_bn;
  MatrixX<S> output;
};

namespace detail {
template <typename S>
TensorRef<S> ref(const std::string& name, MatrixX<S>& m) {
  return {name, m.data(), m.rows(), m.cols()};
}
template <typename S>
TensorRef<S> ref(const std::string& name, RowVectorX<S>& v) {
  return {name, v.data(), 1, v.cols()};
}
}  // namespace detail

template <typename S>
class CrnnModel {
 public:
  CrnnModel() = default;

  /// Build with Glorot-initialized parameters, deterministic per seed.
  CrnnModel(const ModelConfig& config, std::uint64_t seed) : cfg_(config) {
    cfg_.validate();
    const Index k = cfg_.conv_kernel;
    Index cin = 1;
    for (int i = 0; i < 3; ++i) {
      const Index cout = cfg_.conv_filters[static_cast<std::size_t>(i)];
      RngStream rng(seed, 0x10, static_cast<std::uint64_t>(i));
      params_.conv_w[static_cast<std::size_t>(i)] =
          glorot_init<S>(k * k * cin, cout, k * k * cin, k * k * cout, rng);
      params_.conv_b[static_cast<std::size_t>(i)] = RowVectorX<S>::Zero(cout);
      cin = cout;
    }
    {
      RngStream rng(seed, 0x20, 0);
      params_.gru1.init(cfg_.sequence_features(), cfg_.gru_hidden, rng);
    }
    {
      RngStream rng(seed, 0x20, 1);
      params_.gru2.init(cfg_.gru_hidden, cfg_.gru_hidden, rng);
    }
    Index width = cfg_.gru_hidden + 1;  // frequency appended
    for (int i = 0; i < 3; ++i) {
      const Index out = cfg_.dft_widths[static_cast<std::size_t>(i)];
      RngStream rng(seed, 0x30, static_cast<std::uint64_t>(i));
      params_.dft_bn[static_cast<std::size_t>(i)].init(width);
      params_.dft[static_cast<std::size_t>(i)].w =
          glorot_init<S>(width, out, width, out, rng);
      params_.dft[static_cast<std::size_t>(i)].b = RowVectorX<S>::Zero(out);
      width = out;
    }
    params_.head_bn.init(width);
    RngStream rng(seed, 0x40, 0);
    params_.head.w =
        glorot_init<S>(width, cfg_.output_width, width, cfg_.output_width, rng);
    params_.head.b = RowVectorX<S>::Zero(cfg_.output_width);
  }

  const ModelConfig& config() const { return cfg_; }
  ModelParams<S>& params() { return params_; }
  const ModelParams<S>& params() const { return params_; }

  /// Learnable parameter views, in a fixed order shared with grad_refs().
  std::vector<TensorRef<S>> param_refs() {
    using detail::ref;
    std::vector<TensorRef<S>> r;
    for (int i = 0; i < 3; ++i) {
      const auto si = static_cast<std::size_t>(i);
      const std::string p = "cfe" + std::to_string(i + 1);
      r.push_back(ref<S>(p + ".conv.w", params_.conv_w[si]));
      r.push_back(ref<S>(p + ".conv.b", params_.conv_b[si]));
    }
    const std::pair<GruParams<S>*, const char*> grus[] = {
        {&params_.gru1, "gru1"}, {&params_.gru2, "gru2"}};
    for (auto [g, n] : grus) {
      r.push_back(ref<S>(std::string(n) + ".wz", g->wz));
      r.push_back(ref<S>(std::string(n) + ".wr", g->wr));
      r.push_back(ref<S>(std::string(n) + ".wh", g->wh));
      r.push_back(ref<S>(std::string(n) + ".uz", g->uz));
      r.push_back(ref<S>(std::string(n) + ".ur", g->ur));
      r.push_back(ref<S>(std::string(n) + ".uh", g->uh));
      r.push_back(ref<S>(std::string(n) + ".bz", g->bz));
      r.push_back(ref<S>(std::string(n) + ".br", g->br));
      r.push_back(ref<S>(std::string(n) + ".bh", g->bh));
    }
    for (int i = 0; i < 3; ++i) {
      const auto si = static_cast<std::size_t>(i);
      const std::string p = "dft" + std::to_string(i + 1);
      r.push_back(ref<S>(p + ".bn.gamma", params_.dft_bn[si].gamma));
      r.push_back(ref<S>(p + ".bn.beta", params_.dft_bn[si].beta));
      r.push_back(ref<S>(p + ".dense.w", params_.dft[si].w));
      r.push_back(ref<S>(p + ".dense.b", params_.dft[si].b));
    }
    r.push_back(ref<S>("head.bn.gamma", params_.head_bn.gamma));
    r.push_back(ref<S>("head.bn.beta", params_.head_bn.beta));
    r.push_back(ref<S>("head.dense.w", params_.head.w));
    r.push_back(ref<S>("head.dense.b", params_.head.b));
    return r;
  }

  /// Batch-normalization running statistics (checkpointed, not optimized).
  std::vector<TensorRef<S>> state_refs() {
    using detail::ref;
    std::vector<TensorRef<S>> r;
    for (int i = 0; i < 3; ++i) {
      const auto si = static_cast<std::size_t>(i);
      const std::string p = "dft" + std::to_string(i + 1);
      r.push_back(ref<S>(p + ".bn.run_mean", params_.dft_bn[si].run_mean));
      r.push_back(ref<S>(p + ".bn.run_var", params_.dft_bn[si].run_var));
    }
    r.push_back(ref<S>("head.bn.run_mean", params_.head_bn.run_mean));
    r.push_back(ref<S>("head.bn.run_var", params_.head_bn.run_var));
    return r;
  }

  Index parameter_count() {
    Index n = 0;
    for (const auto& r : param_refs()) n += r.size();
    return n;
  }

  void init_grads(ModelGrads<S>& g) const {
    for (int i = 0; i < 3; ++i) {
      const auto si = static_cast<std::size_t>(i);
      g.conv_w[si] = MatrixX<S>::Zero(params_.conv_w[si].rows(),
                                      params_.conv_w[si].cols());
      g.conv_b[si] = RowVectorX<S>::Zero(params_.conv_b[si].size());
      g.dft_bn_gamma[si] = RowVectorX<S>::Zero(params_.dft_bn[si].gamma.size());
      g.dft_bn_beta[si] = RowVectorX<S>::Zero(params_.dft_bn[si].beta.size());
      g.dft_w[si] =
          MatrixX<S>::Zero(params_.dft[si].w.rows(), params_.dft[si].w.cols());
      g.dft_b[si] = RowVectorX<S>::Zero(params_.dft[si].b.size());
    }
    g.gru1.init_like(params_.gru1);
    g.gru2.init_like(params_.gru2);
    g.head_bn_gamma = RowVectorX<S>::Zero(params_.head_bn.gamma.size());
    g.head_bn_beta = RowVectorX<S>::Zero(params_.head_bn.beta.size());
    g.head_w =
        MatrixX<S>::Zero(params_.head.w.rows(), params_.head.w.cols());
    g.head_b = RowVectorX<S>::Zero(params_.head.b.size());
  }

  /// Gradient views in the same order as param_refs().
  std::vector<TensorRef<S>> grad_refs(ModelGrads<S>& g) const {
    using detail::ref;
    std::vector<TensorRef<S>> r;
    for (int i = 0; i < 3; ++i) {
      const auto si = static_cast<std::size_t>(i);
      const std::string p = "cfe" + std::to_string(i + 1);
      r.push_back(ref<S>(p + ".conv.w", g.conv_w[si]));
      r.push_back(ref<S>(p + ".conv.b", g.conv_b[si]));
    }
    const std::pair<GruGrads<S>*, const char*> grus[] = {
        {&g.gru1, "gru1"}, {&g.gru2, "gru2"}};
    for (auto [gg, n] : grus) {
      r.push_back(ref<S>(std::string(n) + ".wz", gg->wz));
      r.push_back(ref<S>(std::string(n) + ".wr", gg->wr));
      r.push_back(ref<S>(std::string(n) + ".wh", gg->wh));
      r.push_back(ref<S>(std::string(n) + ".uz", gg->uz));
      r.push_back(ref<S>(std::string(n) + ".ur", gg->ur));
      r.push_back(ref<S>(std::string(n) + ".uh", gg->uh));
      r.push_back(ref<S>(std::string(n) + ".bz", gg->bz));
      r.push_back(ref<S>(std::string(n) + ".br", gg->br));
      r.push_back(ref<S>(std::string(n) + ".bh", gg->bh));
    }
    for (int i = 0; i < 3; ++i) {
      const auto si = static_cast<std::size_t>(i);
      const std::string p = "dft" + std::to_string(i + 1);
      r.push_back(ref<S>(p + ".bn.gamma", g.dft_bn_gamma[si]));
      r.push_back(ref<S>(p + ".bn.beta", g.dft_bn_beta[si]));
      r.push_back(ref<S>(p + ".dense.w", g.dft_w[si]));
      r.push_back(ref<S>(p + ".dense.b", g.dft_b[si]));
    }
    r.push_back(ref<S>("head.bn.gamma", g.head_bn_gamma));
    r.push_back(ref<S>("head.bn.beta", g.head_bn_beta));
    r.push_back(ref<S>("head.dense.w", g.head_w));
    r.push_back(ref<S>("head.dense.b", g.head_b));
    return r;
  }

  /// Forward pass over a standardized batch. `freq_std` holds one
  /// standardized frequency per sample. Dropout masks are drawn from streams
  /// keyed by (seed, pass_index, layer index).
  void forward(const Tensor<S>& input, const VectorX<S>& freq_std,
               RunMode mode, std::uint64_t seed, std::uint64_t pass_index,
               ModelCache<S>& cache) {
    if (input.height() != cfg_.input_height ||
        input.width() != cfg_.input_width || input.channels() != 1)
      throw DomainError("model: input is not the standardized slice shape (" +
                        std::to_string(cfg_.input_height) + " x " +
                        std::to_string(cfg_.input_width) + " x 1)");
    if (freq_std.size() != input.batch())
      throw DomainError("model: frequency batch size mismatch");
    const Index batch = input.batch();
    cache.input = input;

    const Tensor<S>* stage = &cache.input;
    for (int i = 0; i < 3; ++i) {
      const auto si = static_cast<std::size_t>(i);
      conv2d_forward(*stage, params_.conv_w[si], params_.conv_b[si],
                     Activation::Tanh, cache.conv_out[si], cache.conv[si]);
      maxpool2d_forward(cache.conv_out[si], cache.pool_out[si], cache.pool[si]);
      RngStream rng(seed, 0x100 + static_cast<std::uint64_t>(i), pass_index);
      dropout_forward(cache.pool_out[si].buf.data(),
                      cache.pool_out[si].buf.size(), cfg_.dropout_rate, mode,
                      rng, cache.conv_drop[si]);
      stage = &cache.pool_out[si];
    }

    // Alignment: width w becomes the sequence step, features altitude-major.
    const Index h3 = cfg_.pooled_height(), w3 = cfg_.pooled_width();
    const Index c3 = cfg_.conv_filters[2];
    cache.seq.assign(static_cast<std::size_t>(w3), MatrixX<S>(batch, h3 * c3));
    for (Index t = 0; t < w3; ++t) {
      auto& xt = cache.seq[static_cast<std::size_t>(t)];
      for (Index b = 0; b < batch; ++b) {
        auto ps = stage->sample(b);
        for (Index h = 0; h < h3; ++h)
          xt.row(b).segment(h * c3, c3) = ps.row(h * w3 + t);
      }
    }

    gru_forward(cache.seq, params_.gru1, cache.gru1);
    gru_forward(cache.gru1.h, params_.gru2, cache.gru2);

    cache.recur_out.resize(batch, cfg_.gru_hidden + 1);
    cache.recur_out.leftCols(cfg_.gru_hidden) = cache.gru2.h.back();
    cache.recur_out.col(cfg_.gru_hidden) = freq_std;

    const MatrixX<S>* flat = &cache.recur_out;
    for (int i = 0; i < 3; ++i) {
      const auto si = static_cast<std::size_t>(i);
      batchnorm_forward(*flat, params_.dft_bn[si], mode, cache.dft_bn_out[si],
                        cache.dft_bn[si]);
      dense_forward(cache.dft_bn_out[si], params_.dft[si].w, params_.dft[si].b,
                    Activation::Relu, cache.dft_out[si]);
      RngStream rng(seed, 0x200 + static_cast<std::uint64_t>(i), pass_index);
      dropout_forward(cache.dft_out[si].data(), cache.dft_out[si].size(),
                      cfg_.dropout_rate, mode, rng, cache.dft_drop[si]);
      flat = &cache.dft_out[si];
    }

    batchnorm_forward(*flat, params_.head_bn, mode, cache.head_bn_out,
                      cache.head_bn);
    dense_forward(cache.head_bn_out, params_.head.w, params_.head.b,
                  Activation::Linear, cache.output);
  }

  /// Backward pass; accumulates into `grads` (zeroed by the caller). The
  /// cache is mutable because convolution patch buffers are rebuilt in place.
  void backward(ModelCache<S>& cache, const MatrixX<S>& d_output,
                ModelGrads<S>& grads) {
    const Index batch = cache.input.batch();
    const Index h3 = cfg_.pooled_height(), w3 = cfg_.pooled_width();
    const Index c3 = cfg_.conv_filters[2];

    MatrixX<S> d_head_bn_out;
    dense_backward(cache.head_bn_out, params_.head.w, Activation::Linear,
                   cache.output, d_output, &d_head_bn_out, grads.head_w,
                   grads.head_b);
    MatrixX<S> dflat;
    batchnorm_backward(d_head_bn_out, params_.head_bn, cache.head_bn, &dflat,
                       grads.head_bn_gamma, grads.head_bn_beta);

    for (int i = 2; i >= 0; --i) {
      const auto si = static_cast<std::size_t>(i);
      dropout_backward(dflat.data(), dflat.size(), cache.dft_drop[si]);
      MatrixX<S> d_bn_out;
      dense_backward(cache.dft_bn_out[si], params_.dft[si].w, Activation::Relu,
                     cache.dft_out[si], dflat, &d_bn_out, grads.dft_w[si],
                     grads.dft_b[si]);
      batchnorm_backward(d_bn_out, params_.dft_bn[si], cache.dft_bn[si],
                         &dflat, grads.dft_bn_gamma[si], grads.dft_bn_beta[si]);
    }

    // Split the recurrent-output gradient from the frequency column.
    MatrixX<S> d_gru2_final = dflat.leftCols(cfg_.gru_hidden);

    std::vector<MatrixX<S>> dh2(cache.gru2.h.size(),
                                MatrixX<S>::Zero(batch, cfg_.gru_hidden));
    dh2.back() = d_gru2_final;
    std::vector<MatrixX<S>> d_gru1_out;
    gru_backward(cache.gru1.h, params_.gru2, cache.gru2, dh2, grads.gru2,
                 &d_gru1_out);
    std::vector<MatrixX<S>> d_seq;
    gru_backward(cache.seq, params_.gru1, cache.gru1, d_gru1_out, grads.gru1,
                 &d_seq);

    // Alignment backward: scatter sequence gradients into the pooled tensor.
    Tensor<S> d_stage(batch, h3, w3, c3);
    d_stage.setZero();
    for (Index t = 0; t < w3; ++t) {
      const auto& dxt = d_seq[static_cast<std::size_t>(t)];
      for (Index b = 0; b < batch; ++b) {
        auto ds = d_stage.sample(b);
        for (Index h = 0; h < h3; ++h)
          ds.row(h * w3 + t) = dxt.row(b).segment(h * c3, c3);
      }
    }

    for (int i = 2; i >= 0; --i) {
      const auto si = static_cast<std::size_t>(i);
      dropout_backward(d_stage.buf.data(), d_stage.buf.size(),
                       cache.conv_drop[si]);
      const Tensor<S>& conv_in =
          (i == 0) ? cache.input : cache.pool_out[static_cast<std::size_t>(i - 1)];
      Tensor<S> d_conv_out;
      maxpool2d_backward(cache.conv_out[si], d_stage, cache.pool[si],
                         d_conv_out);
      Tensor<S> d_in;
      conv2d_backward(conv_in, params_.conv_w[si], Activation::Tanh,
                      cache.conv_out[si], d_conv_out, i > 0 ? &d_in : nullptr,
                      grads.conv_w[si], grads.conv_b[si], cache.conv[si]);
      if (i > 0) d_stage = std::move(d_in);
    }
  }

 private:
  ModelConfig cfg_;
  ModelParams<S> params_;
};

}  // namespace itl

#endif  // ITL_MODEL_HPP
