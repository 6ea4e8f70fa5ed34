/**
 * @file pe.hpp
 * @brief Split-step Fourier parabolic-equation transmission-loss solver.
 *
 * A complex pressure envelope is marched in range on a mirrored vertical grid
 * (even symmetry about z = 0 models the rigid ground). Each step alternates a
 * refraction phase screen built from 1 / c_ratio with the free-space
 * diffraction operator applied in the vertical wavenumber domain; a quadratic
 * absorbing layer tapers the field below the domain top. Ground-level TL is
 * reported against the field at a 1-km reference range, with the cylindrical
 * envelope converted to point-source (spherical) spreading.
 */
#ifndef ITL_PE_HPP
#define ITL_PE_HPP

#include <optional>
#include <string>
#include <vector>

#include "itl/atmosphere.hpp"
#include "itl/common.hpp"

namespace itl {

/// Constant attenuation over an altitude band, dB per km of range.
struct AbsorptionBand {
  double alt_lo_m = 0.0;
  double alt_hi_m = 0.0;
  double alpha_db_per_km = 0.0;
};

struct PeConfig {
  double dz_m = 0.0;  // requested vertical step; the solver refines it to the
                      // power-of-two grid, never coarsens
  double dr_m = 0.0;  // range step; must divide reference_range_m
  double domain_top_m = 0.0;
  double absorber_thickness_m = 0.0;
  double absorber_strength = 0.12;  // peak imaginary refractive index
  double reference_range_m = 1'000.0;
  double c0_ms = 340.2970287557621;  // ground reference sound speed
  double starter_width_factor = 0.25;  // starter sigma as a fraction of lambda
  std::vector<AbsorptionBand> absorption;  // empty = no physical absorption

  /// Grid-compliant defaults for a frequency and a slice top altitude:
  /// dz = lambda/10, dr = largest divisor of 1 km that is <= lambda/2,
  /// absorber = max(10 lambda, 15 km), domain_top = slice_top + absorber.
  static PeConfig for_frequency(double frequency_hz, double slice_top_m);

  /// Throws ConfigError (naming the limiting wavelength) if dz > lambda/8,
  /// dr > lambda, the absorber is thinner than 10 lambda, or dr does not
  /// divide the reference range.
  void validate(double frequency_hz) const;
};

/// Ground-level transmission loss on a regular range grid.
struct TlCurve {
  VectorXd tl_db;
  VectorXd range_axis_m;
  double frequency_hz = 0.0;

  void validate() const;
};

inline constexpr double kTlFloorDb = -300.0;

/// 20 log10(p / p0), clamped at -300 dB for p = 0. Throws DomainError for
/// p0 <= 0 or p < 0.
double tl_db(double p, double p0);

/// Optional per-run diagnostics.
struct PeRunStats {
  VectorXd step_norms;  // discrete L2 norm of the marched field per step
};

/// March the envelope through the slice and return ground-level TL at every
/// range step in (0, max slice range]. Throws ConfigError on grid-resolution
/// violations and NumericalError (with the range index) on a mid-march NaN.
TlCurve solve_tl(const AtmosphericSlice& slice, double frequency_hz,
                 const PeConfig& cfg, PeRunStats* stats = nullptr);

/// Linear resample onto the regular grid step_m, 2 step_m, ..., n_points
/// step_m. Throws DataError if the source curve does not cover the target.
TlCurve resample_tl(const TlCurve& curve, double step_m = 5'000.0,
                    Index n_points = 800);

/// TL curve CSV: `# frequency_hz=<f>` comment header then `range_km,tl_db`.
void write_tl_csv(const TlCurve& curve, const std::string& path);
TlCurve read_tl_csv(const std::string& path);

}  // namespace itl

#endif  // ITL_PE_HPP
