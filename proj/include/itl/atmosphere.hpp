/**
 * @file atmosphere.hpp
 * @brief Effective-sound-speed-ratio slices from gridded atmospheric state.
 *
 * A slice is a vertical plane of c_ratio(z, d) = c_eff(z, d) / c_eff(0, d)
 * where c_eff = adiabatic sound speed + along-path horizontal wind. Slices
 * are sampled along great-circle paths through a lat/lon grid of profiles.
 */
#ifndef ITL_ATMOSPHERE_HPP
#define ITL_ATMOSPHERE_HPP

#include <string>
#include <vector>

#include "itl/common.hpp"
#include "itl/geodesy.hpp"

namespace itl {

/// Single-column atmospheric state on an ascending altitude axis.
struct AtmosProfile {
  VectorXd altitudes_m;
  VectorXd temperature_K;
  VectorXd wind_zonal_ms;
  VectorXd wind_merid_ms;

  /// Throws DomainError on non-ascending altitudes, non-positive
  /// temperatures or mismatched lengths.
  void validate() const;
};

/// Lat/lon grid of profiles sharing one altitude axis.
struct AtmosGrid {
  VectorXd lat_deg;  // ascending, within [-90, 90]
  VectorXd lon_deg;  // ascending, within [-180, 180)
  VectorXd altitudes_m;
  // profiles[i * n_lon + j] holds the column at (lat_deg[i], lon_deg[j]).
  std::vector<AtmosProfile> profiles;
  std::string valid_time;

  const AtmosProfile& at(Index ilat, Index ilon) const {
    return profiles[static_cast<std::size_t>(ilat * lon_deg.size() + ilon)];
  }
  void validate() const;
};

/// Range-dependent c_ratio plane with provenance metadata.
struct AtmosphericSlice {
  MatrixXd c_ratio;       // n_alt x n_range, first row == 1
  VectorXd alt_axis_m;    // length n_alt
  VectorXd range_axis_m;  // length n_range
  VectorXd ground_c_eff_ms;  // c_eff(z=0) per column; kept so perturbations
                             // can be applied in wind units
  GeoPoint origin;
  double bearing_deg = 0.0;
  double azimuth_projection_deg = 0.0;
  std::string source;

  Index n_alt() const { return c_ratio.rows(); }
  Index n_range() const { return c_ratio.cols(); }
  void validate() const;
};

/// Adiabatic sound speed sqrt(gamma R T), m/s. Throws DomainError for T <= 0.
double adiabatic_sound_speed(double temperature_K,
                             double gamma = constants::kGamma,
                             double gas_constant = constants::kGasConstant);

/// Horizontal wind projected on a bearing (degrees clockwise from north):
/// u0 = u_zonal sin(az) + u_merid cos(az).
double project_wind(double u_zonal_ms, double u_merid_ms, double azimuth_deg);

/// Effective sound speed column c_eff(z) = u0(z) + c(z) for a profile.
VectorXd c_eff_column(const AtmosProfile& profile, double azimuth_deg);

/// c_ratio(z) = c_eff(z) / c_eff(0). Throws DomainError if c_eff(0) <= 0.
VectorXd c_ratio_column(const AtmosProfile& profile, double azimuth_deg);

/// Bilinear horizontal interpolation of the four grid profiles around `p`.
/// Coordinates outside the grid hull clamp to the nearest node/edge.
AtmosProfile interpolate_profile(const AtmosGrid& grid, const GeoPoint& p);

/// Build a slice of `n_columns` columns spaced max_range_m / n_columns apart
/// (columns at 0, s, 2s, ...), sampling the grid along the bearing and
/// projecting winds on azimuth_projection_deg.
AtmosphericSlice build_slice(const AtmosGrid& grid, const GeoPoint& origin,
                             double bearing_deg, double azimuth_projection_deg,
                             double max_range_m, Index n_columns);

/// One Gaussian-in-altitude wind jet, optionally modulated over the globe.
struct JetSpec {
  double center_alt_m = 50'000.0;
  double width_m = 8'000.0;
  double amplitude_ms = 40.0;       // peak along-jet speed
  double direction_deg = 90.0;      // wind direction the jet blows toward
  double lat_period_deg = 180.0;    // latitudinal modulation wavelength
  double lat_phase_deg = 0.0;
  double lon_period_deg = 0.0;      // 0 disables longitudinal modulation
};

/// Parameters of the synthetic stand-in atmosphere.
struct SynthAtmosphereSpec {
  double lat_step_deg = 10.0;
  double lon_step_deg = 10.0;
  double alt_top_m = 129'900.0;
  double alt_step_m = 300.0;
  std::vector<JetSpec> jets;
  double noise_amp_ms = 5.0;   // smooth pseudo-random wind variation
  double noise_amp_K = 3.0;    // smooth pseudo-random temperature variation
  static SynthAtmosphereSpec defaults();
};

/// Deterministic synthetic atmosphere: standard-atmosphere-like temperature
/// with a warm thermosphere, plus the configured jets and seeded smooth
/// large-scale variation.
AtmosGrid synth_atmosphere(const SynthAtmosphereSpec& spec, std::uint64_t seed);

/// Reference temperature profile of the synthetic atmosphere, K.
double synth_temperature_at(double alt_m);

/// Grid CSV interchange: header lat_deg,lon_deg,z_m,T_K,u_ms,v_ms with rows
/// sorted by (lat, lon, z). The loader validates ordering and rectangularity.
void write_grid_csv(const AtmosGrid& grid, const std::string& path);
AtmosGrid read_grid_csv(const std::string& path);

}  // namespace itl

#endif  // ITL_ATMOSPHERE_HPP
