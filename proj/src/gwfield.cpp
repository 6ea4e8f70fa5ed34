#include "itl/gwfield.hpp"

#include <cmath>

namespace itl {

using constants::kPi;

void GwSpectrumParams::validate() const {
  if (!(alpha > 0.0 && alpha < 1.0))
    throw DomainError("GwSpectrumParams: alpha must be in (0, 1)");
  if (!(m_star_0 > 0.0 && m_star_0 < m_b))
    throw DomainError("GwSpectrumParams: need 0 < m_star_0 < m_b");
  if (!(s > 0.0) || !(q > 0.0))
    throw DomainError("GwSpectrumParams: spectral indices must be positive");
  if (!(scale_height_m > 0.0))
    throw DomainError("GwSpectrumParams: scale height must be positive");
  if (!(buoyancy_freq > 0.0))
    throw DomainError("GwSpectrumParams: buoyancy frequency must be positive");
  if (!(corr_length_m > 0.0) || !(layer_thickness_m > 0.0) ||
      !(sigma_weight_m > 0.0))
    throw DomainError("GwSpectrumParams: lengths must be positive");
}

double gw_spectrum(double m, double m_star, const GwSpectrumParams& p) {
  if (!(m > 0.0)) throw DomainError("gw_spectrum: m must be > 0");
  const double n2 = p.buoyancy_freq * p.buoyancy_freq;
  const double base = 2.0 * kPi * p.alpha * n2;
  if (m <= m_star)
    return base / (m_star * m_star * m_star) * std::pow(m / m_star, p.s);
  if (m <= p.m_b) return base / (m * m * m);
  return base / (p.m_b * p.m_b * p.m_b) * std::pow(p.m_b / m, 5.0 / 3.0);
}

double m_star_at(double alt_m, const GwSpectrumParams& p) {
  return p.m_star_0 * std::exp(-alt_m / ((p.q + p.s) * p.scale_height_m));
}

VectorXd synth_layer_profile(double layer_center_m, double layer_thickness_m,
                             const VectorXd& alt_axis,
                             const GwSpectrumParams& p, RngStream& rng) {
  const double dz = alt_axis[1] - alt_axis[0];
  const double lo = layer_center_m - 0.5 * layer_thickness_m;
  const double hi = layer_center_m + 0.5 * layer_thickness_m;
  Index i0 = 0, i1 = alt_axis.size() - 1;
  while (i0 < alt_axis.size() && alt_axis[i0] < lo - 1e-9) ++i0;
  while (i1 >= 0 && alt_axis[i1] > hi + 1e-9) --i1;
  if (i1 - i0 + 1 < 2)
    throw DomainError("synth_layer_profile: layer shorter than 2 grid steps");

  const double m_star = m_star_at(layer_center_m, p);
  const double dm = 2.0 * kPi / layer_thickness_m;
  const auto n_modes = static_cast<Index>(
      std::floor(layer_thickness_m / (2.0 * dz)));  // up to the Nyquist bin

  VectorXd out = VectorXd::Zero(alt_axis.size());
  for (Index k = 1; k <= n_modes; ++k) {
    const double m = dm * static_cast<double>(k);
    const double amp = std::sqrt(gw_spectrum(m, m_star, p) * dm / kPi);
    const double phase = rng.uniform(0.0, 2.0 * kPi);
    for (Index i = i0; i <= i1; ++i)
      out[i] += amp * std::cos(m * (alt_axis[i] - lo) + phase);
  }
  if (p.density_growth) {
    for (Index i = i0; i <= i1; ++i)
      out[i] *= std::exp(alt_axis[i] / (2.0 * p.scale_height_m));
  }
  return out;
}

VectorXd combine_layers(const std::vector<VectorXd>& layer_profiles,
                        const std::vector<double>& layer_centers_m,
                        const VectorXd& alt_axis, double sigma_weight_m) {
  if (layer_profiles.size() != layer_centers_m.size() || layer_profiles.empty())
    throw DomainError("combine_layers: profile/center count mismatch");
  const Index n = alt_axis.size();
  const std::size_t n_layers = layer_profiles.size();
  VectorXd out = VectorXd::Zero(n);
  std::vector<double> w(n_layers);
  for (Index i = 0; i < n; ++i) {
    double wsum = 0.0;
    for (std::size_t l = 0; l < n_layers; ++l) {
      const double d = (alt_axis[i] - layer_centers_m[l]) / sigma_weight_m;
      w[l] = std::exp(-0.5 * d * d);
      wsum += w[l];
    }
    if (!(wsum > 1e-300))
      throw DomainError("combine_layers: altitude " +
                        std::to_string(alt_axis[i]) +
                        " m not covered by any layer");
    double acc = 0.0;
    for (std::size_t l = 0; l < n_layers; ++l)
      acc += (w[l] / wsum) * layer_profiles[l][i];
    out[i] = acc;
  }
  return out;
}

VectorXd gw_column(const VectorXd& alt_axis, const GwSpectrumParams& p,
                   RngStream& rng) {
  p.validate();
  const double top = alt_axis[alt_axis.size() - 1];
  const double half = 0.5 * p.layer_thickness_m;
  std::vector<double> centers;
  for (double c = 0.0; c - half < top; c += half) centers.push_back(c);
  std::vector<VectorXd> profiles;
  profiles.reserve(centers.size());
  for (double c : centers)
    profiles.push_back(
        synth_layer_profile(c, p.layer_thickness_m, alt_axis, p, rng));
  return combine_layers(profiles, centers, alt_axis, p.sigma_weight_m);
}

GwRealization gw_field_2d(const VectorXd& alt_axis, const VectorXd& range_axis,
                          Index n_column_ensemble, const GwSpectrumParams& p,
                          std::uint64_t seed) {
  if (n_column_ensemble < 2)
    throw DomainError("gw_field_2d: need an ensemble of at least 2 columns");
  p.validate();
  const Index n_range = range_axis.size();
  const double span = range_axis[n_range - 1] - range_axis[0];

  RngStream anchor_rng(seed, 0x01);
  std::vector<double> anchors(static_cast<std::size_t>(n_column_ensemble));
  for (auto& a : anchors)
    a = range_axis[0] + anchor_rng.uniform() * span;  // with replacement

  std::vector<VectorXd> columns;
  columns.reserve(static_cast<std::size_t>(n_column_ensemble));
  for (Index j = 0; j < n_column_ensemble; ++j) {
    RngStream col_rng(seed, 0x02, static_cast<std::uint64_t>(j));
    columns.push_back(gw_column(alt_axis, p, col_rng));
  }

  GwRealization field;
  field.seed = seed;
  field.params = p;
  field.du.resize(alt_axis.size(), n_range);
  for (Index r = 0; r < n_range; ++r) {
    double wsum = 0.0;
    VectorXd acc = VectorXd::Zero(alt_axis.size());
    for (Index j = 0; j < n_column_ensemble; ++j) {
      const double d = (range_axis[r] - anchors[static_cast<std::size_t>(j)]) /
                       p.corr_length_m;
      const double w = std::exp(-0.5 * d * d);
      wsum += w;
      acc += w * columns[static_cast<std::size_t>(j)];
    }
    if (!(wsum > 1e-300)) {
      // Degenerate kernel (all anchors far away); fall back to the nearest
      // anchor so the field stays defined.
      Index best = 0;
      double bd = std::abs(range_axis[r] - anchors[0]);
      for (Index j = 1; j < n_column_ensemble; ++j) {
        const double dj =
            std::abs(range_axis[r] - anchors[static_cast<std::size_t>(j)]);
        if (dj < bd) {
          bd = dj;
          best = j;
        }
      }
      field.du.col(r) = columns[static_cast<std::size_t>(best)];
    } else {
      field.du.col(r) = acc / wsum;
    }
  }
  if (!field.du.allFinite())
    throw NumericalError("gw_field_2d: non-finite perturbation");
  return field;
}

AtmosphericSlice perturb_slice(const AtmosphericSlice& slice,
                               const GwRealization& field) {
  if (field.du.rows() != slice.n_alt() || field.du.cols() != slice.n_range())
    throw DomainError("perturb_slice: field shape does not match slice");
  AtmosphericSlice out = slice;
  for (Index r = 0; r < slice.n_range(); ++r) {
    // c_eff' = c_ratio * c_eff(0) + du, renormalized by its own ground value.
    // Written with c_eff(0) divided out so a zero field is an exact identity.
    const double c0 = slice.ground_c_eff_ms[r];
    const double g = 1.0 + field.du(0, r) / c0;
    if (!(g > 0.0))
      throw DomainError("perturb_slice: perturbed ground c_eff <= 0");
    out.c_ratio.col(r) =
        (slice.c_ratio.col(r) + field.du.col(r) / c0).eval() / g;
    out.ground_c_eff_ms[r] = c0 * g;
  }
  out.validate();
  return out;
}

}  // namespace itl
