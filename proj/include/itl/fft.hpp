/**
 * @file fft.hpp
 * @brief Radix-2 complex FFT used by the range-marching solver.
 *
 * Power-of-two only, iterative Cooley-Tukey with a per-size twiddle table.
 * The unscaled forward/inverse pair satisfies ifft(fft(x)) = x, so a
 * phase-screen/diffraction step built from it conserves the discrete norm.
 */
#ifndef ITL_FFT_HPP
#define ITL_FFT_HPP

#include <complex>
#include <vector>

#include "itl/common.hpp"

namespace itl {

template <typename Scalar>
class FftPlan {
 public:
  using Complex = std::complex<Scalar>;

  explicit FftPlan(Index n) : n_(n) {
    if (n < 2 || (n & (n - 1)) != 0)
      throw ConfigError("FftPlan: size must be a power of two >= 2, got " +
                        std::to_string(n));
    bitrev_.resize(static_cast<std::size_t>(n));
    int log2n = 0;
    while ((Index{1} << log2n) < n) ++log2n;
    for (Index i = 0; i < n; ++i) {
      Index r = 0;
      for (int b = 0; b < log2n; ++b)
        if (i & (Index{1} << b)) r |= Index{1} << (log2n - 1 - b);
      bitrev_[static_cast<std::size_t>(i)] = r;
    }
    twiddle_.resize(static_cast<std::size_t>(n / 2));
    for (Index k = 0; k < n / 2; ++k) {
      const double a = -2.0 * constants::kPi * static_cast<double>(k) /
                       static_cast<double>(n);
      twiddle_[static_cast<std::size_t>(k)] =
          Complex(static_cast<Scalar>(std::cos(a)),
                  static_cast<Scalar>(std::sin(a)));
    }
  }

  Index size() const { return n_; }

  /// In-place forward transform (negative-exponent convention, unscaled).
  void forward(Complex* x) const { run(x, false); }

  /// In-place inverse transform, scaled by 1/n.
  void inverse(Complex* x) const {
    run(x, true);
    const Scalar s = Scalar(1) / static_cast<Scalar>(n_);
    for (Index i = 0; i < n_; ++i) x[i] *= s;
  }

 private:
  void run(Complex* x, bool inv) const {
    const Index n = n_;
    for (Index i = 0; i < n; ++i) {
      const Index j = bitrev_[static_cast<std::size_t>(i)];
      if (j > i) std::swap(x[i], x[j]);
    }
    for (Index len = 2; len <= n; len <<= 1) {
      const Index half = len >> 1;
      const Index stride = n / len;
      for (Index base = 0; base < n; base += len) {
        for (Index k = 0; k < half; ++k) {
          Complex w = twiddle_[static_cast<std::size_t>(k * stride)];
          if (inv) w = std::conj(w);
          const Complex u = x[base + k];
          const Complex t = w * x[base + k + half];
          x[base + k] = u + t;
          x[base + k + half] = u - t;
        }
      }
    }
  }

  Index n_;
  std::vector<Index> bitrev_;
  std::vector<Complex> twiddle_;
};

}  // namespace itl

#endif  // ITL_FFT_HPP
