#include "itl/atmosphere.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "itl/rng.hpp"

namespace itl {

using constants::kDeg2Rad;

void AtmosProfile::validate() const {
  const Index n = altitudes_m.size();
  if (temperature_K.size() != n || wind_zonal_ms.size() != n ||
      wind_merid_ms.size() != n)
    throw DomainError("AtmosProfile: array lengths differ");
  if (n < 2) throw DomainError("AtmosProfile: need at least two levels");
  for (Index i = 1; i < n; ++i)
    if (!(altitudes_m[i] > altitudes_m[i - 1]))
      throw DomainError("AtmosProfile: altitudes must be strictly increasing");
  if ((temperature_K.array() <= 0.0).any())
    throw DomainError("AtmosProfile: temperature must be positive");
}

void AtmosGrid::validate() const {
  const Index nlat = lat_deg.size(), nlon = lon_deg.size();
  if (nlat < 2 || nlon < 2) throw DomainError("AtmosGrid: need a 2x2 grid");
  if (static_cast<Index>(profiles.size()) != nlat * nlon)
    throw DomainError("AtmosGrid: profile count does not match axes");
  if (lat_deg.minCoeff() < -90.0 || lat_deg.maxCoeff() > 90.0)
    throw DomainError("AtmosGrid: latitude out of [-90, 90]");
  if (lon_deg.minCoeff() < -180.0 || lon_deg.maxCoeff() >= 180.0)
    throw DomainError("AtmosGrid: longitude out of [-180, 180)");
  for (const auto& p : profiles) {
    p.validate();
    if (p.altitudes_m.size() != altitudes_m.size() ||
        (p.altitudes_m - altitudes_m).cwiseAbs().maxCoeff() > 1e-9)
      throw DomainError("AtmosGrid: all nodes must share the altitude axis");
  }
}

void AtmosphericSlice::validate() const {
  if (alt_axis_m.size() != n_alt() || range_axis_m.size() != n_range())
    throw DomainError("AtmosphericSlice: axis lengths do not match grid");
  if (ground_c_eff_ms.size() != n_range())
    throw DomainError("AtmosphericSlice: ground c_eff length mismatch");
  if (!(c_ratio.array() > 0.0).all())
    throw DomainError("AtmosphericSlice: c_ratio must be positive");
  if ((c_ratio.row(0).array() - 1.0).cwiseAbs().maxCoeff() > 1e-12)
    throw DomainError("AtmosphericSlice: ground row must equal 1");
}

double adiabatic_sound_speed(double temperature_K, double gamma,
                             double gas_constant) {
  if (!(temperature_K > 0.0))
    throw DomainError("adiabatic_sound_speed: temperature must be > 0 K");
  return std::sqrt(gamma * gas_constant * temperature_K);
}

double project_wind(double u_zonal_ms, double u_merid_ms, double azimuth_deg) {
  const double a = azimuth_deg * kDeg2Rad;
  return u_zonal_ms * std::sin(a) + u_merid_ms * std::cos(a);
}

VectorXd c_eff_column(const AtmosProfile& profile, double azimuth_deg) {
  profile.validate();
  const Index n = profile.altitudes_m.size();
  VectorXd c_eff(n);
  for (Index i = 0; i < n; ++i)
    c_eff[i] = project_wind(profile.wind_zonal_ms[i], profile.wind_merid_ms[i],
                            azimuth_deg) +
               adiabatic_sound_speed(profile.temperature_K[i]);
  return c_eff;
}

VectorXd c_ratio_column(const AtmosProfile& profile, double azimuth_deg) {
  VectorXd c_eff = c_eff_column(profile, azimuth_deg);
  if (!(c_eff[0] > 0.0))
    throw DomainError("c_ratio_column: degenerate profile, c_eff(0) <= 0");
  return c_eff / c_eff[0];
}

namespace {

// Index of the grid cell containing x, clamped to the axis interior.
Index cell_index(const VectorXd& axis, double x) {
  Index lo = 0;
  Index hi = axis.size() - 2;
  while (lo < hi) {
    const Index mid = (lo + hi + 1) / 2;
    if (axis[mid] <= x)
      lo = mid;
    else
      hi = mid - 1;
  }
  return lo;
}

double clamped_frac(const VectorXd& axis, Index i, double x) {
  const double t = (x - axis[i]) / (axis[i + 1] - axis[i]);
  return std::clamp(t, 0.0, 1.0);
}

}  // namespace

AtmosProfile interpolate_profile(const AtmosGrid& grid, const GeoPoint& p) {
  const Index i = cell_index(grid.lat_deg, p.lat_deg);
  const Index j = cell_index(grid.lon_deg, p.lon_deg);
  const double ty = clamped_frac(grid.lat_deg, i, p.lat_deg);
  const double tx = clamped_frac(grid.lon_deg, j, p.lon_deg);
  const AtmosProfile& p00 = grid.at(i, j);
  const AtmosProfile& p01 = grid.at(i, j + 1);
  const AtmosProfile& p10 = grid.at(i + 1, j);
  const AtmosProfile& p11 = grid.at(i + 1, j + 1);
  auto blend = [&](auto getter) {
    return ((1 - ty) * (1 - tx) * getter(p00) + (1 - ty) * tx * getter(p01) +
            ty * (1 - tx) * getter(p10) + ty * tx * getter(p11))
        .eval();
  };
  AtmosProfile out;
  out.altitudes_m = grid.altitudes_m;
  out.temperature_K = blend([](const AtmosProfile& q) { return q.temperature_K; });
  out.wind_zonal_ms = blend([](const AtmosProfile& q) { return q.wind_zonal_ms; });
  out.wind_merid_ms = blend([](const AtmosProfile& q) { return q.wind_merid_ms; });
  return out;
}

AtmosphericSlice build_slice(const AtmosGrid& grid, const GeoPoint& origin,
                             double bearing_deg, double azimuth_projection_deg,
                             double max_range_m, Index n_columns) {
  if (n_columns < 2) throw DomainError("build_slice: need at least 2 columns");
  const double step = max_range_m / static_cast<double>(n_columns);
  AtmosphericSlice slice;
  slice.alt_axis_m = grid.altitudes_m;
  slice.range_axis_m = VectorXd::LinSpaced(n_columns, 0.0,
                                           step * static_cast<double>(n_columns - 1));
  slice.c_ratio.resize(grid.altitudes_m.size(), n_columns);
  slice.ground_c_eff_ms.resize(n_columns);
  slice.origin = origin;
  slice.bearing_deg = bearing_deg;
  slice.azimuth_projection_deg = azimuth_projection_deg;
  slice.source = "grid";

  const double lat_min = grid.lat_deg.minCoeff(), lat_max = grid.lat_deg.maxCoeff();
  const double lon_min = grid.lon_deg.minCoeff(), lon_max = grid.lon_deg.maxCoeff();
  const bool global_lon = (lon_max - lon_min) >= 360.0 - 1.5 * (grid.lon_deg[1] - grid.lon_deg[0]);

  for (Index k = 0; k < n_columns; ++k) {
    const GeoPoint p = geodesic_forward(origin, bearing_deg,
                                        slice.range_axis_m[k]);
    // Nearest-node lookup is allowed at the outer half-cell; beyond that the
    // path has left the coverage.
    const double lat_pad = grid.lat_deg[1] - grid.lat_deg[0];
    const double lon_pad = grid.lon_deg[1] - grid.lon_deg[0];
    if (p.lat_deg < lat_min - lat_pad || p.lat_deg > lat_max + lat_pad ||
        (!global_lon &&
         (p.lon_deg < lon_min - lon_pad || p.lon_deg > lon_max + lon_pad)))
      throw DataError("build_slice: path exits grid coverage at (" +
                      std::to_string(p.lat_deg) + ", " +
                      std::to_string(p.lon_deg) + "), column " +
                      std::to_string(k));
    const AtmosProfile prof = interpolate_profile(grid, p);
    const VectorXd c_eff = c_eff_column(prof, azimuth_projection_deg);
    if (!(c_eff[0] > 0.0))
      throw DomainError("build_slice: degenerate column, c_eff(0) <= 0");
    slice.c_ratio.col(k) = c_eff / c_eff[0];
    slice.ground_c_eff_ms[k] = c_eff[0];
  }
  slice.validate();
  return slice;
}

SynthAtmosphereSpec SynthAtmosphereSpec::defaults() {
  SynthAtmosphereSpec s;
  JetSpec strato;
  strato.center_alt_m = 50'000.0;
  strato.width_m = 9'000.0;
  strato.amplitude_ms = 55.0;
  strato.direction_deg = 90.0;
  strato.lat_period_deg = 120.0;
  strato.lat_phase_deg = 20.0;
  JetSpec tropo;
  tropo.center_alt_m = 10'000.0;
  tropo.width_m = 4'000.0;
  tropo.amplitude_ms = 30.0;
  tropo.direction_deg = 90.0;
  tropo.lat_period_deg = 70.0;
  tropo.lat_phase_deg = -35.0;
  JetSpec meso;
  meso.center_alt_m = 75'000.0;
  meso.width_m = 12'000.0;
  meso.amplitude_ms = 25.0;
  meso.direction_deg = 270.0;
  meso.lat_period_deg = 160.0;
  meso.lat_phase_deg = 60.0;
  s.jets = {strato, tropo, meso};
  return s;
}

double synth_temperature_at(double alt_m) {
  // Piecewise-linear profile: troposphere lapse, stratopause warm point,
  // cold mesopause, strongly heated thermosphere.
  struct Node {
    double z, T;
  };
  static const Node nodes[] = {{0.0, 288.15},      {12'000.0, 216.65},
                               {20'000.0, 216.65}, {47'000.0, 270.65},
                               {51'000.0, 270.65}, {86'000.0, 186.9},
                               {95'000.0, 190.0},  {110'000.0, 450.0},
                               {130'000.0, 750.0}};
  if (alt_m <= nodes[0].z) return nodes[0].T;
  for (std::size_t i = 1; i < std::size(nodes); ++i) {
    if (alt_m <= nodes[i].z) {
      const double t = (alt_m - nodes[i - 1].z) / (nodes[i].z - nodes[i - 1].z);
      return nodes[i - 1].T + t * (nodes[i].T - nodes[i - 1].T);
    }
  }
  return nodes[std::size(nodes) - 1].T;
}

AtmosGrid synth_atmosphere(const SynthAtmosphereSpec& spec, std::uint64_t seed) {
  AtmosGrid grid;
  const Index nlat =
      static_cast<Index>(std::floor(180.0 / spec.lat_step_deg)) + 1;
  const Index nlon = static_cast<Index>(std::floor(360.0 / spec.lon_step_deg));
  grid.lat_deg = VectorXd::LinSpaced(nlat, -90.0, -90.0 + spec.lat_step_deg *
                                                              double(nlat - 1));
  grid.lon_deg = VectorXd::LinSpaced(nlon, -180.0, -180.0 + spec.lon_step_deg *
                                                               double(nlon - 1));
  const Index nalt =
      static_cast<Index>(std::floor(spec.alt_top_m / spec.alt_step_m)) + 1;
  grid.altitudes_m = VectorXd::LinSpaced(nalt, 0.0, spec.alt_step_m * double(nalt - 1));
  grid.valid_time = "synthetic";

  // Smooth pseudo-random large-scale variation: a few seeded spherical
  // harmonics-like waves keep neighbouring nodes (and bilinear samples)
  // consistent.
  RngStream rng(seed, /*a=*/0xA7);
  struct Wave {
    double klat, klon, phase, amp;
  };
  std::vector<Wave> wind_waves(4), temp_waves(3);
  for (auto& w : wind_waves)
    w = {rng.uniform(1.0, 3.0), std::floor(rng.uniform(1.0, 4.0)),
         rng.uniform(0.0, 2.0 * constants::kPi), rng.uniform(0.5, 1.0)};
  for (auto& w : temp_waves)
    w = {rng.uniform(1.0, 2.5), std::floor(rng.uniform(1.0, 3.0)),
         rng.uniform(0.0, 2.0 * constants::kPi), rng.uniform(0.5, 1.0)};

  grid.profiles.resize(static_cast<std::size_t>(nlat * nlon));
  for (Index i = 0; i < nlat; ++i) {
    for (Index j = 0; j < nlon; ++j) {
      const double lat = grid.lat_deg[i], lon = grid.lon_deg[j];
      AtmosProfile prof;
      prof.altitudes_m = grid.altitudes_m;
      prof.temperature_K.resize(nalt);
      prof.wind_zonal_ms = VectorXd::Zero(nalt);
      prof.wind_merid_ms = VectorXd::Zero(nalt);

      double wnoise = 0.0, tnoise = 0.0;
      for (const auto& w : wind_waves)
        wnoise += w.amp * std::sin(w.klat * lat * kDeg2Rad + w.phase) *
                  std::cos(w.klon * lon * kDeg2Rad + w.phase);
      for (const auto& w : temp_waves)
        tnoise += w.amp * std::cos(w.klat * lat * kDeg2Rad + w.phase) *
                  std::sin(w.klon * lon * kDeg2Rad + 0.5 * w.phase);

      for (Index k = 0; k < nalt; ++k) {
        const double z = grid.altitudes_m[k];
        prof.temperature_K[k] =
            synth_temperature_at(z) +
            spec.noise_amp_K * tnoise * std::sin(z / 30'000.0);
        double u = 0.0, v = 0.0;
        for (const auto& jet : spec.jets) {
          double mod = std::cos((lat - jet.lat_phase_deg) * 360.0 /
                                jet.lat_period_deg * kDeg2Rad);
          if (jet.lon_period_deg > 0.0)
            mod *= std::cos(lon * 360.0 / jet.lon_period_deg * kDeg2Rad);
          const double dz = (z - jet.center_alt_m) / jet.width_m;
          const double amp = jet.amplitude_ms * mod * std::exp(-0.5 * dz * dz);
          u += amp * std::sin(jet.direction_deg * kDeg2Rad);
          v += amp * std::cos(jet.direction_deg * kDeg2Rad);
        }
        const double env = spec.noise_amp_ms * wnoise *
                           (0.3 + 0.7 * std::sin(z / 45'000.0));
        prof.wind_zonal_ms[k] = u + env;
        prof.wind_merid_ms[k] = v + 0.4 * env;
      }
      grid.profiles[static_cast<std::size_t>(i * nlon + j)] = std::move(prof);
    }
  }
  grid.validate();
  return grid;
}

void write_grid_csv(const AtmosGrid& grid, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw DataError("write_grid_csv: cannot open " + path);
  out << "lat_deg,lon_deg,z_m,T_K,u_ms,v_ms\n";
  out.precision(17);
  for (Index i = 0; i < grid.lat_deg.size(); ++i)
    for (Index j = 0; j < grid.lon_deg.size(); ++j) {
      const AtmosProfile& p = grid.at(i, j);
      for (Index k = 0; k < grid.altitudes_m.size(); ++k)
        out << grid.lat_deg[i] << ',' << grid.lon_deg[j] << ','
            << p.altitudes_m[k] << ',' << p.temperature_K[k] << ','
            << p.wind_zonal_ms[k] << ',' << p.wind_merid_ms[k] << '\n';
    }
  if (!out) throw DataError("write_grid_csv: write failed for " + path);
}

AtmosGrid read_grid_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("read_grid_csv: cannot open " + path);
  std::string line;
  if (!std::getline(in, line) || line != "lat_deg,lon_deg,z_m,T_K,u_ms,v_ms")
    throw DataError("read_grid_csv: bad header in " + path);

  struct Row {
    double lat, lon, z, T, u, v;
  };
  std::vector<Row> rows;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    Row r{};
    std::istringstream ss(line);
    char c = 0;
    if (!(ss >> r.lat >> c >> r.lon >> c >> r.z >> c >> r.T >> c >> r.u >> c >>
          r.v))
      throw DataError("read_grid_csv: parse error at line " +
                      std::to_string(lineno));
    if (!rows.empty()) {
      const Row& q = rows.back();
      const bool ordered =
          (r.lat > q.lat) || (r.lat == q.lat && r.lon > q.lon) ||
          (r.lat == q.lat && r.lon == q.lon && r.z > q.z);
      if (!ordered)
        throw DataError("read_grid_csv: rows not sorted by (lat, lon, z) at line " +
                        std::to_string(lineno));
    }
    rows.push_back(r);
  }
  if (rows.empty()) throw DataError("read_grid_csv: no data rows in " + path);

  std::vector<double> lats, lons, alts;
  for (const Row& r : rows) {
    if (lats.empty() || r.lat > lats.back()) lats.push_back(r.lat);
    if (r.lat == rows.front().lat) {
      if (lons.empty() || r.lon > lons.back()) lons.push_back(r.lon);
      if (r.lon == rows.front().lon) alts.push_back(r.z);
    }
  }
  const Index nlat = static_cast<Index>(lats.size());
  const Index nlon = static_cast<Index>(lons.size());
  const Index nalt = static_cast<Index>(alts.size());
  if (rows.size() != static_cast<std::size_t>(nlat * nlon * nalt))
    throw DataError("read_grid_csv: grid is not rectangular");

  AtmosGrid grid;
  grid.lat_deg = Eigen::Map<const VectorXd>(lats.data(), nlat);
  grid.lon_deg = Eigen::Map<const VectorXd>(lons.data(), nlon);
  grid.altitudes_m = Eigen::Map<const VectorXd>(alts.data(), nalt);
  grid.valid_time = "csv:" + path;
  grid.profiles.resize(static_cast<std::size_t>(nlat * nlon));
  std::size_t idx = 0;
  for (Index i = 0; i < nlat; ++i)
    for (Index j = 0; j < nlon; ++j) {
      AtmosProfile p;
      p.altitudes_m = grid.altitudes_m;
      p.temperature_K.resize(nalt);
      p.wind_zonal_ms.resize(nalt);
      p.wind_merid_ms.resize(nalt);
      for (Index k = 0; k < nalt; ++k, ++idx) {
        const Row& r = rows[idx];
        if (r.lat != grid.lat_deg[i] || r.lon != grid.lon_deg[j] ||
            r.z != grid.altitudes_m[k])
          throw DataError("read_grid_csv: grid is not rectangular");
        p.temperature_K[k] = r.T;
        p.wind_zonal_ms[k] = r.u;
        p.wind_merid_ms[k] = r.v;
      }
      grid.profiles[static_cast<std::size_t>(i * nlon + j)] = std::move(p);
    }
  grid.validate();
  return grid;
}

}  // namespace itl
