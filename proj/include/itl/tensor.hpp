/**
 * @file tensor.hpp
 * @brief Minimal dense 4-axis tensor over a contiguous Eigen buffer.
 *
 * Feature maps are stored (batch, height, width, channels) with channels
 * fastest, so a sample views as a row-major (H*W x C) matrix and convolution
 * patch extraction copies channel-contiguous runs.
 */
#ifndef ITL_TENSOR_HPP
#define ITL_TENSOR_HPP

#include <array>

#include "itl/common.hpp"

namespace itl {

template <typename Scalar>
struct Tensor {
  using MapT = Eigen::Map<
      Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;
  using ConstMapT = Eigen::Map<const Eigen::Matrix<Scalar, Eigen::Dynamic,
                                                   Eigen::Dynamic, Eigen::RowMajor>>;

  std::array<Index, 4> dims{0, 0, 0, 0};  // (batch, height, width, channels)
  VectorX<Scalar> buf;

  Tensor() = default;
  Tensor(Index b, Index h, Index w, Index c) { resize(b, h, w, c); }

  void resize(Index b, Index h, Index w, Index c) {
    dims = {b, h, w, c};
    buf.resize(b * h * w * c);
  }
  void setZero() { buf.setZero(); }

  Index batch() const { return dims[0]; }
  Index height() const { return dims[1]; }
  Index width() const { return dims[2]; }
  Index channels() const { return dims[3]; }
  Index sample_size() const { return dims[1] * dims[2] * dims[3]; }

  /// Sample b as a (H*W x C) row-major matrix view.
  MapT sample(Index b) {
    return MapT(buf.data() + b * sample_size(), dims[1] * dims[2], dims[3]);
  }
  ConstMapT sample(Index b) const {
    return ConstMapT(buf.data() + b * sample_size(), dims[1] * dims[2], dims[3]);
  }

  Scalar& at(Index b, Index h, Index w, Index c) {
    return buf[((b * dims[1] + h) * dims[2] + w) * dims[3] + c];
  }
  Scalar at(Index b, Index h, Index w, Index c) const {
    return buf[((b * dims[1] + h) * dims[2] + w) * dims[3] + c];
  }
};

}  // namespace itl

#endif  // ITL_TENSOR_HPP
