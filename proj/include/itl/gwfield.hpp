/**
 * @file gwfield.hpp
 * @brief Stochastic gravity-wave wind-perturbation fields.
 *
 * Vertical perturbation profiles are synthesized from a three-regime vertical
 * wavenumber spectrum on 10-km overlapping layers, blended with normalized
 * Gaussian weights, and combined horizontally with a correlation-length
 * kernel into a 2-D along-path wind disturbance field.
 */
#ifndef ITL_GWFIELD_HPP
#define ITL_GWFIELD_HPP

#include <cstdint>
#include <vector>

#include "itl/atmosphere.hpp"
#include "itl/common.hpp"
#include "itl/rng.hpp"

namespace itl {

struct GwSpectrumParams {
  double alpha = 0.62;              // saturation constant, < 1
  double buoyancy_freq = 0.02;      // N, rad/s
  double m_star_0 = 2.0 * constants::kPi / 2'500.0;  // dominant wavenumber at
                                                     // z = 0, rad/m
  double m_b = 2.0 * constants::kPi / 300.0;  // buoyancy wavenumber, rad/m
  double s = 1.0;    // source-regime spectral index
  double q = 1.5;    // saturation-decay index
  double scale_height_m = 7'000.0;  // H
  double corr_length_m = 500'000.0;  // horizontal correlation length
  double layer_thickness_m = 10'000.0;
  double sigma_weight_m = 2'500.0;  // Gaussian layer-blending width
  bool density_growth = false;      // optional exp(z/2H) amplitude factor

  void validate() const;
};

struct GwRealization {
  MatrixXd du;  // along-path wind perturbation, m/s, n_alt x n_range
  std::uint64_t seed = 0;
  GwSpectrumParams params;
};

/// Three-regime vertical GW spectrum F_u(m). Throws DomainError for m <= 0.
double gw_spectrum(double m, double m_star, const GwSpectrumParams& params);

/// Dominant vertical wavenumber profile m*(z) = m*_0 exp[-z / ((q+s) H)].
double m_star_at(double alt_m, const GwSpectrumParams& params);

/// Random-phase synthesis of one layer's perturbation profile, evaluated on
/// the portion of alt_axis inside [center - L/2, center + L/2].
/// Discrete modes m_k = 2 pi k / L, amplitudes sqrt(F(m_k) dm / pi), so the
/// profile variance equals sum_k F(m_k) dm / (2 pi).
VectorXd synth_layer_profile(double layer_center_m, double layer_thickness_m,
                             const VectorXd& alt_axis,
                             const GwSpectrumParams& params, RngStream& rng);

/// Blend per-layer profiles with Gaussian weights renormalized to sum to 1 at
/// every altitude. Profiles are full-length columns, zero outside the layer.
VectorXd combine_layers(const std::vector<VectorXd>& layer_profiles,
                        const std::vector<double>& layer_centers_m,
                        const VectorXd& alt_axis, double sigma_weight_m);

/// One full-column perturbation profile (all layers, blended).
VectorXd gw_column(const VectorXd& alt_axis, const GwSpectrumParams& params,
                   RngStream& rng);

/// Column-ensemble size that calibrates full-scale field extremes to the
/// -25/+25 m/s average min/max.
inline constexpr Index kDefaultGwColumnEnsemble = 24;

/// Two-dimensional field: an ensemble of columns anchored at random ranges,
/// mixed per output column with a normalized Gaussian kernel of width
/// corr_length_m. Deterministic per seed.
GwRealization gw_field_2d(const VectorXd& alt_axis, const VectorXd& range_axis,
                          Index n_column_ensemble,
                          const GwSpectrumParams& params, std::uint64_t seed);

/// Apply a perturbation as an along-path wind increment:
/// c_eff' = c_ratio * c_eff(0) + du, renormalized by the new ground value.
AtmosphericSlice perturb_slice(const AtmosphericSlice& slice,
                               const GwRealization& field);

}  // namespace itl

#endif  // ITL_GWFIELD_HPP
