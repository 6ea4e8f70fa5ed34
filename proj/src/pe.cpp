#include "itl/pe.hpp"

#include <cmath>
#include <complex>
#include <fstream>
#include <sstream>

#include "itl/fft.hpp"

namespace itl {

using constants::kPi;
using Complex = std::complex<double>;

PeConfig PeConfig::for_frequency(double frequency_hz, double slice_top_m) {
  if (!(frequency_hz > 0.0))
    throw ConfigError("PeConfig: frequency must be positive");
  PeConfig cfg;
  const double lambda = cfg.c0_ms / frequency_hz;
  cfg.dz_m = lambda / 10.0;
  cfg.dr_m = 1'000.0 / std::ceil(1'000.0 / (lambda / 2.0));
  cfg.absorber_thickness_m = std::max(10.0 * lambda, 15'000.0);
  cfg.domain_top_m = slice_top_m + cfg.absorber_thickness_m;
  return cfg;
}

void PeConfig::validate(double frequency_hz) const {
  if (!(frequency_hz > 0.05 && frequency_hz <= 5.0))
    throw ConfigError("PeConfig: frequency " + std::to_string(frequency_hz) +
                      " Hz outside the validity band (0.05, 5]");
  const double lambda = c0_ms / frequency_hz;
  if (dz_m > lambda / 8.0 + 1e-9)
    throw ConfigError("PeConfig: dz = " + std::to_string(dz_m) +
                      " m exceeds lambda/8 for the limiting wavelength " +
                      std::to_string(lambda) + " m");
  if (dr_m > lambda + 1e-9)
    throw ConfigError("PeConfig: dr = " + std::to_string(dr_m) +
                      " m exceeds the limiting wavelength " +
                      std::to_string(lambda) + " m");
  if (absorber_thickness_m < 10.0 * lambda - 1e-9)
    throw ConfigError("PeConfig: absorber thinner than 10 x wavelength " +
                      std::to_string(lambda) + " m");
  if (!(domain_top_m > absorber_thickness_m))
    throw ConfigError("PeConfig: domain top must exceed absorber thickness");
  const double steps = reference_range_m / dr_m;
  if (std::abs(steps - std::round(steps)) > 1e-6)
    throw ConfigError("PeConfig: dr must divide the reference range");
}

void TlCurve::validate() const {
  if (tl_db.size() != range_axis_m.size())
    throw DomainError("TlCurve: axis length mismatch");
  if (tl_db.size() < 2) throw DomainError("TlCurve: need at least 2 nodes");
  if (!tl_db.allFinite()) throw DomainError("TlCurve: non-finite values");
  if (tl_db.minCoeff() < kTlFloorDb - 1e-9)
    throw DomainError("TlCurve: values below the -300 dB floor");
}

double tl_db(double p, double p0) {
  if (!(p0 > 0.0)) throw DomainError("tl_db: reference amplitude must be > 0");
  if (p < 0.0) throw DomainError("tl_db: amplitude must be >= 0");
  if (p == 0.0) return kTlFloorDb;
  return std::max(20.0 * std::log10(p / p0), kTlFloorDb);
}

namespace {

Index next_pow2(Index n) {
  Index p = 1;
  while (p < n) p <<= 1;
  return p;
}

// Piecewise-linear resample of a column onto the PE z-grid, clamping beyond
// the source axis ends.
VectorXd resample_column(const VectorXd& axis, const VectorXd& values,
                         const VectorXd& targets) {
  VectorXd out(targets.size());
  Index j = 0;
  for (Index i = 0; i < targets.size(); ++i) {
    const double z = targets[i];
    if (z <= axis[0]) {
      out[i] = values[0];
      continue;
    }
    if (z >= axis[axis.size() - 1]) {
      out[i] = values[values.size() - 1];
      continue;
    }
    while (axis[j + 1] < z) ++j;
    const double t = (z - axis[j]) / (axis[j + 1] - axis[j]);
    out[i] = values[j] + t * (values[j + 1] - values[j]);
  }
  return out;
}

}  // namespace

TlCurve solve_tl(const AtmosphericSlice& slice, double frequency_hz,
                 const PeConfig& cfg, PeRunStats* stats) {
  cfg.validate(frequency_hz);
  const double max_range = slice.range_axis_m[slice.n_range() - 1] +
                           (slice.n_range() > 1
                                ? slice.range_axis_m[1] - slice.range_axis_m[0]
                                : 0.0);
  const auto n_steps = static_cast<Index>(std::floor(max_range / cfg.dr_m + 1e-9));
  const auto ref_step =
      static_cast<Index>(std::llround(cfg.reference_range_m / cfg.dr_m));
  if (ref_step < 1 || ref_step > n_steps)
    throw ConfigError("solve_tl: reference range outside the marched domain");

  const double k0 = 2.0 * kPi * frequency_hz / cfg.c0_ms;

  // Power-of-two vertical grid; the mirrored domain has M = 2 n_z samples.
  const Index n_z = next_pow2(
      static_cast<Index>(std::ceil(cfg.domain_top_m / cfg.dz_m)));
  const double dz = cfg.domain_top_m / static_cast<double>(n_z);
  const Index m_len = 2 * n_z;
  FftPlan<double> plan(m_len);

  // Signed altitude of every mirrored sample: index k holds z_k = k dz for
  // k <= n_z and z_k = (k - M) dz above, so |z| is the physical altitude.
  VectorXd abs_z(m_len);
  for (Index k = 0; k < m_len; ++k) {
    const Index signed_k = (k <= n_z) ? k : k - m_len;
    abs_z[k] = std::abs(static_cast<double>(signed_k)) * dz;
  }

  // Slice columns resampled once onto the PE grid (physical half).
  VectorXd z_grid(n_z + 1);
  for (Index i = 0; i <= n_z; ++i) z_grid[i] = static_cast<double>(i) * dz;
  std::vector<VectorXd> columns(static_cast<std::size_t>(slice.n_range()));
  for (Index c = 0; c < slice.n_range(); ++c)
    columns[static_cast<std::size_t>(c)] =
        resample_column(slice.alt_axis_m, slice.c_ratio.col(c), z_grid);

  // Amplitude taper: quadratic absorber below the domain top plus any
  // configured physical absorption bands. Range-independent, precomputed.
  VectorXd taper(m_len);
  const double z_abs = cfg.domain_top_m - cfg.absorber_thickness_m;
  for (Index k = 0; k < m_len; ++k) {
    double beta = 0.0;
    if (abs_z[k] > z_abs) {
      const double x = (abs_z[k] - z_abs) / cfg.absorber_thickness_m;
      beta = cfg.absorber_strength * x * x;
    }
    double alpha_np_per_m = k0 * beta;
    for (const AbsorptionBand& band : cfg.absorption)
      if (abs_z[k] >= band.alt_lo_m && abs_z[k] < band.alt_hi_m)
        alpha_np_per_m += band.alpha_db_per_km * (std::log(10.0) / 20.0) / 1'000.0;
    taper[k] = std::exp(-alpha_np_per_m * cfg.dr_m);
  }

  // Free-space diffraction operator in the vertical wavenumber domain.
  std::vector<Complex> diffract(static_cast<std::size_t>(m_len));
  for (Index k = 0; k < m_len; ++k) {
    const double kk = (k <= m_len / 2) ? static_cast<double>(k)
                                       : static_cast<double>(k - m_len);
    const double m = 2.0 * kPi * kk / (static_cast<double>(m_len) * dz);
    const double phase = -m * m * cfg.dr_m / (2.0 * k0);
    diffract[static_cast<std::size_t>(k)] = std::polar(1.0, phase);
  }

  // Gaussian starter centred at the ground; even by construction.
  const double lambda = cfg.c0_ms / frequency_hz;
  const double sigma = cfg.starter_width_factor * lambda;
  std::vector<Complex> field(static_cast<std::size_t>(m_len));
  for (Index k = 0; k < m_len; ++k) {
    const double x = abs_z[k] / sigma;
    field[static_cast<std::size_t>(k)] = Complex(std::exp(-0.5 * x * x), 0.0);
  }

  const double col_step = slice.n_range() > 1
                              ? slice.range_axis_m[1] - slice.range_axis_m[0]
                              : 1.0;
  std::vector<Complex> half_screen(static_cast<std::size_t>(m_len));
  VectorXd ground_amp(n_steps);
  if (stats) stats->step_norms.resize(n_steps);

  for (Index s = 0; s < n_steps; ++s) {
    // Refraction screen at the mid-step range, slice columns interpolated
    // linearly in range and clamped beyond the last column.
    const double r_mid = (static_cast<double>(s) + 0.5) * cfg.dr_m;
    const double pos = (r_mid - slice.range_axis_m[0]) / col_step;
    const Index c0_idx = std::clamp<Index>(static_cast<Index>(std::floor(pos)),
                                           0, slice.n_range() - 1);
    const Index c1_idx = std::min<Index>(c0_idx + 1, slice.n_range() - 1);
    const double t = std::clamp(pos - static_cast<double>(c0_idx), 0.0, 1.0);
    const VectorXd& col0 = columns[static_cast<std::size_t>(c0_idx)];
    const VectorXd& col1 = columns[static_cast<std::size_t>(c1_idx)];
    for (Index k = 0; k <= n_z; ++k) {
      const double c_ratio = col0[k] + t * (col1[k] - col0[k]);
      const double phase = 0.5 * k0 * (1.0 / c_ratio - 1.0) * cfg.dr_m;
      half_screen[static_cast<std::size_t>(k)] = std::polar(1.0, phase);
    }
    for (Index k = n_z + 1; k < m_len; ++k)
      half_screen[static_cast<std::size_t>(k)] =
          half_screen[static_cast<std::size_t>(m_len - k)];

    for (Index k = 0; k < m_len; ++k)
      field[static_cast<std::size_t>(k)] *= half_screen[static_cast<std::size_t>(k)];
    plan.forward(field.data());
    for (Index k = 0; k < m_len; ++k)
      field[static_cast<std::size_t>(k)] *= diffract[static_cast<std::size_t>(k)];
    plan.inverse(field.data());
    for (Index k = 0; k < m_len; ++k)
      field[static_cast<std::size_t>(k)] *=
          taper[k] * half_screen[static_cast<std::size_t>(k)];

    const double ga = std::abs(field[0]);
    if (!std::isfinite(ga))
      throw NumericalError("solve_tl: numerical blowup at range step " +
                           std::to_string(s) + " (" +
                           std::to_string((s + 1) * cfg.dr_m / 1000.0) + " km)");
    ground_amp[s] = ga;
    if (stats) {
      double norm2 = 0.0;
      for (const Complex& v : field) norm2 += std::norm(v);
      stats->step_norms[s] = std::sqrt(norm2);
    }
  }

  const double ref_amp = ground_amp[ref_step - 1];
  if (!(ref_amp > 0.0))
    throw NumericalError("solve_tl: vanishing field at the reference range");

  TlCurve curve;
  curve.frequency_hz = frequency_hz;
  curve.range_axis_m.resize(n_steps);
  curve.tl_db.resize(n_steps);
  for (Index s = 0; s < n_steps; ++s) {
    const double r = static_cast<double>(s + 1) * cfg.dr_m;
    curve.range_axis_m[s] = r;
    // Envelope ratio plus cylindrical-to-spherical spreading restoration.
    const double spread = 10.0 * std::log10(r / cfg.reference_range_m);
    curve.tl_db[s] =
        std::max(tl_db(ground_amp[s], ref_amp) - spread, kTlFloorDb);
  }
  curve.validate();
  return curve;
}

TlCurve resample_tl(const TlCurve& curve, double step_m, Index n_points) {
  if (!(step_m > 0.0) || n_points < 2)
    throw ConfigError("resample_tl: bad target grid");
  const double lo = curve.range_axis_m[0];
  const double hi = curve.range_axis_m[curve.range_axis_m.size() - 1];
  const double target_hi = step_m * static_cast<double>(n_points);
  if (step_m < lo - 1e-9 || target_hi > hi + 1e-9)
    throw DataError("resample_tl: source covers [" + std::to_string(lo) + ", " +
                    std::to_string(hi) + "] m, target needs [" +
                    std::to_string(step_m) + ", " + std::to_string(target_hi) +
                    "]");
  TlCurve out;
  out.frequency_hz = curve.frequency_hz;
  out.range_axis_m = VectorXd::LinSpaced(n_points, step_m, target_hi);
  out.tl_db = resample_column(curve.range_axis_m, curve.tl_db, out.range_axis_m);
  out.validate();
  return out;
}

void write_tl_csv(const TlCurve& curve, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw DataError("write_tl_csv: cannot open " + path);
  out.precision(17);
  out << "# frequency_hz=" << curve.frequency_hz << "\n";
  out << "range_km,tl_db\n";
  for (Index i = 0; i < curve.tl_db.size(); ++i)
    out << curve.range_axis_m[i] / 1000.0 << ',' << curve.tl_db[i] << '\n';
  if (!out) throw DataError("write_tl_csv: write failed for " + path);
}

TlCurve read_tl_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("read_tl_csv: cannot open " + path);
  std::string line;
  if (!std::getline(in, line) || line.rfind("# frequency_hz=", 0) != 0)
    throw DataError("read_tl_csv: missing frequency header in " + path);
  TlCurve curve;
  curve.frequency_hz = std::stod(line.substr(15));
  if (!std::getline(in, line) || line != "range_km,tl_db")
    throw DataError("read_tl_csv: bad column header in " + path);
  std::vector<double> r, tl;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream ss(line);
    double a = 0, b = 0;
    char c = 0;
    if (!(ss >> a >> c >> b))
      throw DataError("read_tl_csv: parse error in " + path);
    r.push_back(a * 1000.0);
    tl.push_back(b);
  }
  curve.range_axis_m = Eigen::Map<const VectorXd>(r.data(), static_cast<Index>(r.size()));
  curve.tl_db = Eigen::Map<const VectorXd>(tl.data(), static_cast<Index>(tl.size()));
  curve.validate();
  return curve;
}

}  // namespace itl
