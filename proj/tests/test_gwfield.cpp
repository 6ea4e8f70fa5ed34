#include <doctest.h>

#include <cmath>
#include <complex>

#include "itl/gwfield.hpp"

using namespace itl;
using constants::kPi;

namespace {

GwSpectrumParams defaults() { return GwSpectrumParams{}; }

// Analytic layer variance oracle: sum_k F(m_k) dm / (2 pi) over the discrete
// modes of a layer, independent of the synthesis code path.
double layer_variance_oracle(double center_z, const GwSpectrumParams& p,
                             double dz) {
  const double dm = 2.0 * kPi / p.layer_thickness_m;
  const auto n_modes =
      static_cast<Index>(std::floor(p.layer_thickness_m / (2.0 * dz)));
  const double m_star = m_star_at(center_z, p);
  double acc = 0.0;
  for (Index k = 1; k <= n_modes; ++k)
    acc += gw_spectrum(dm * double(k), m_star, p) * dm;
  return acc / (2.0 * kPi);
}

// Ensemble-averaged Hann-windowed periodogram at harmonics of the record.
// The taper keeps leakage from the energetic low-wavenumber lines out of the
// saturated range.
VectorXd mean_periodogram(const std::vector<VectorXd>& cols, const VectorXd& z,
                          Index k_max) {
  VectorXd psd = VectorXd::Zero(k_max + 1);
  const Index n = z.size();
  const double span = z[n - 1] - z[0] + (z[1] - z[0]);
  VectorXd hann(n);
  for (Index j = 0; j < n; ++j)
    hann[j] = 0.5 * (1.0 - std::cos(2.0 * kPi * double(j) / double(n - 1)));
  for (const VectorXd& u : cols) {
    for (Index k = 1; k <= k_max; ++k) {
      const double m = 2.0 * kPi * double(k) / span;
      std::complex<double> acc = 0.0;
      for (Index j = 0; j < n; ++j)
        acc += hann[j] * u[j] * std::polar(1.0, -m * z[j]);
      psd[k] += std::norm(acc) / double(n);
    }
  }
  return psd / double(cols.size());
}

}  // namespace

TEST_CASE("spectrum branches are continuous at m* and m_b") {
  const GwSpectrumParams p = defaults();
  const double m_star = p.m_star_0;
  const double eps = 1e-9;
  const double below = gw_spectrum(m_star * (1.0 - eps), m_star, p);
  const double above = gw_spectrum(m_star * (1.0 + eps), m_star, p);
  CHECK(std::abs(below - above) / above < 1e-7);  // slope-limited approach
  // exact value at the breakpoints
  const double at_star = gw_spectrum(m_star, m_star, p);
  const double source_branch =
      2.0 * kPi * p.alpha * p.buoyancy_freq * p.buoyancy_freq /
      (m_star * m_star * m_star);
  CHECK(std::abs(at_star - source_branch) / source_branch < 1e-12);
  const double at_b = gw_spectrum(p.m_b, m_star, p);
  const double sat_branch = 2.0 * kPi * p.alpha * p.buoyancy_freq *
                            p.buoyancy_freq / (p.m_b * p.m_b * p.m_b);
  CHECK(std::abs(at_b - sat_branch) / sat_branch < 1e-12);
}

TEST_CASE("spectrum matches the frozen extended-precision value at m*") {
  const GwSpectrumParams p = defaults();
  CHECK(gw_spectrum(p.m_star_0, p.m_star_0, p) ==
        doctest::Approx(98154.8966535147).epsilon(1e-10));
  CHECK_THROWS_AS(gw_spectrum(0.0, p.m_star_0, p), DomainError);
  CHECK_THROWS_AS(gw_spectrum(-1.0, p.m_star_0, p), DomainError);
}

TEST_CASE("m* profile is exponential in altitude") {
  const GwSpectrumParams p = defaults();
  CHECK(m_star_at(0.0, p) == p.m_star_0);
  const double z_e = (p.q + p.s) * p.scale_height_m;
  CHECK(m_star_at(z_e, p) == doctest::Approx(p.m_star_0 / std::exp(1.0)));
  double prev = m_star_at(0.0, p);
  for (double z = 5'000.0; z <= 130'000.0; z += 5'000.0) {
    const double cur = m_star_at(z, p);
    CHECK(cur < prev);
    prev = cur;
  }
}

TEST_CASE("layer synthesis: zero-spectrum limit, determinism, short layers") {
  const VectorXd axis = VectorXd::LinSpaced(101, 0.0, 10'000.0);
  GwSpectrumParams p = defaults();
  p.alpha = 1e-300;  // F -> 0 limit
  RngStream rng(1);
  VectorXd zero = synth_layer_profile(5'000.0, p.layer_thickness_m, axis, p, rng);
  CHECK(zero.cwiseAbs().maxCoeff() < 1e-100);

  p = defaults();
  RngStream r1(7, 1), r2(7, 1), r3(8, 1);
  VectorXd a = synth_layer_profile(5'000.0, p.layer_thickness_m, axis, p, r1);
  VectorXd b = synth_layer_profile(5'000.0, p.layer_thickness_m, axis, p, r2);
  VectorXd c = synth_layer_profile(5'000.0, p.layer_thickness_m, axis, p, r3);
  CHECK((a - b).cwiseAbs().maxCoeff() == 0.0);
  CHECK((a - c).cwiseAbs().maxCoeff() > 1e-6);

  const VectorXd tiny = VectorXd::LinSpaced(101, 0.0, 10'000.0);
  CHECK_THROWS_AS(
      synth_layer_profile(50'000.0, p.layer_thickness_m, tiny, p, r1),
      DomainError);
}

TEST_CASE("layer ensemble matches the Parseval variance oracle") {
  const double dz = 100.0;
  const VectorXd axis = VectorXd::LinSpaced(101, 0.0, 10'000.0);
  const GwSpectrumParams p = defaults();
  const Index n_ens = 1'000;
  MatrixXd profiles(axis.size(), n_ens);
  for (Index e = 0; e < n_ens; ++e) {
    RngStream rng(2024, static_cast<std::uint64_t>(e));
    profiles.col(e) =
        synth_layer_profile(5'000.0, p.layer_thickness_m, axis, p, rng);
  }
  const double var_oracle = layer_variance_oracle(5'000.0, p, dz);
  const VectorXd mean = profiles.rowwise().mean();
  const VectorXd var =
      (profiles.colwise() - mean).rowwise().squaredNorm() / double(n_ens);
  const double sigma = std::sqrt(var_oracle);
  Index mean_ok = 0;
  for (Index i = 0; i < axis.size(); ++i) {
    if (std::abs(mean[i]) < 3.0 * sigma / std::sqrt(double(n_ens))) ++mean_ok;
    CHECK(std::abs(mean[i]) < 5.0 * sigma / std::sqrt(double(n_ens)));
    CHECK(var[i] == doctest::Approx(var_oracle).epsilon(0.10));
  }
  CHECK(double(mean_ok) / double(axis.size()) > 0.95);
}

TEST_CASE("layer blending is convex and exact in degenerate cases") {
  const VectorXd axis = VectorXd::LinSpaced(27, 0.0, 130'000.0);
  std::vector<double> centers;
  for (double c = 0.0; c <= 130'000.0; c += 5'000.0) centers.push_back(c);
  std::vector<VectorXd> profiles(centers.size(),
                                 VectorXd::Constant(axis.size(), 3.25));
  VectorXd out = combine_layers(profiles, centers, axis, 2'500.0);
  CHECK((out.array() - 3.25).abs().maxCoeff() < 1e-9);

  std::vector<VectorXd> one = {VectorXd::LinSpaced(axis.size(), -2.0, 2.0)};
  VectorXd single = combine_layers(one, {65'000.0}, axis, 2'500.0);
  CHECK((single - one[0]).cwiseAbs().maxCoeff() == 0.0);

  CHECK_THROWS_AS(combine_layers({}, {}, axis, 2'500.0), DomainError);
}

TEST_CASE("2-D field: flat-kernel limit, determinism") {
  const VectorXd alt = VectorXd::LinSpaced(131, 0.0, 130'000.0);
  const VectorXd rng_axis = VectorXd::LinSpaced(10, 0.0, 900'000.0);
  GwSpectrumParams p = defaults();
  p.corr_length_m = 1e13;  // kernel flat over the whole span
  GwRealization flat = gw_field_2d(alt, rng_axis, 6, p, 3);
  for (Index c = 1; c < flat.du.cols(); ++c)
    CHECK((flat.du.col(c) - flat.du.col(0)).cwiseAbs().maxCoeff() < 1e-9);

  p = defaults();
  GwRealization f1 = gw_field_2d(alt, rng_axis, 6, p, 42);
  GwRealization f2 = gw_field_2d(alt, rng_axis, 6, p, 42);
  GwRealization f3 = gw_field_2d(alt, rng_axis, 6, p, 43);
  CHECK((f1.du - f2.du).cwiseAbs().maxCoeff() == 0.0);
  CHECK((f1.du - f3.du).cwiseAbs().maxCoeff() > 1e-6);
  CHECK_THROWS_AS(gw_field_2d(alt, rng_axis, 1, p, 1), DomainError);
}

TEST_CASE("nearby columns correlate more than distant ones") {
  const VectorXd alt = VectorXd::LinSpaced(131, 0.0, 130'000.0);
  const VectorXd rng_axis = VectorXd::LinSpaced(40, 0.0, 3'900'000.0);
  const GwSpectrumParams p = defaults();
  double corr_near = 0.0, corr_far = 0.0;
  const int n_seeds = 200;
  for (int s = 0; s < n_seeds; ++s) {
    GwRealization f = gw_field_2d(alt, rng_axis, 12, p, 1'000 + s);
    auto corr = [&](Index a, Index b) {
      const VectorXd u = f.du.col(a).array() - f.du.col(a).mean();
      const VectorXd v = f.du.col(b).array() - f.du.col(b).mean();
      return u.dot(v) / std::sqrt(u.squaredNorm() * v.squaredNorm() + 1e-30);
    };
    corr_near += corr(10, 11);  // 100 km apart
    corr_far += corr(10, 30);   // 2,000 km apart
  }
  corr_near /= n_seeds;
  corr_far /= n_seeds;
  CHECK(corr_near > corr_far);
}

TEST_CASE("ensemble periodogram of full columns has the saturated -3 slope") {
  const GwSpectrumParams p = defaults();
  const Index n_alt = 433;
  const VectorXd alt = VectorXd::LinSpaced(n_alt, 0.0, 129'900.0);
  std::vector<VectorXd> cols;
  for (int e = 0; e < 200; ++e) {
    RngStream rng(77, static_cast<std::uint64_t>(e));
    cols.push_back(gw_column(alt, p, rng));
  }
  const double span = 129'900.0 + 300.0;
  const double dm_bin = 2.0 * kPi / span;
  const Index k_lo = static_cast<Index>(std::ceil(2.0 * p.m_star_0 / dm_bin));
  const Index k_hi = static_cast<Index>(std::floor(0.5 * p.m_b / dm_bin));
  REQUIRE(k_hi > k_lo + 10);
  VectorXd psd = mean_periodogram(cols, alt, k_hi);
  // least-squares slope in log-log space
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  Index n = 0;
  for (Index k = k_lo; k <= k_hi; ++k) {
    const double x = std::log(dm_bin * double(k));
    const double y = std::log(psd[k]);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
    ++n;
  }
  const double slope = (double(n) * sxy - sx * sy) / (double(n) * sxx - sx * sx);
  MESSAGE("fitted log-log slope = " << slope);
  CHECK(slope == doctest::Approx(-3.0).epsilon(0.1));  // -3 +/- 0.3
}

TEST_CASE("single-layer periodogram peaks within one bin of m*") {
  GwSpectrumParams p = defaults();
  p.scale_height_m = 1e12;  // freeze m*(z) = m*_0
  const VectorXd axis = VectorXd::LinSpaced(101, 0.0, 10'000.0);
  std::vector<VectorXd> cols;
  for (int e = 0; e < 300; ++e) {
    RngStream rng(55, static_cast<std::uint64_t>(e));
    cols.push_back(synth_layer_profile(5'000.0, p.layer_thickness_m, axis, p, rng));
  }
  const double span = 10'000.0 + 100.0;
  const double dm_bin = 2.0 * kPi / span;
  VectorXd psd = mean_periodogram(cols, axis, 25);
  Index peak = 1;
  for (Index k = 2; k < psd.size(); ++k)
    if (psd[k] > psd[peak]) peak = k;
  const auto star_bin = static_cast<Index>(std::llround(p.m_star_0 / dm_bin));
  CHECK(std::abs(peak - star_bin) <= 1);
}

TEST_CASE("perturbation is an exact identity for a zero field") {
  AtmosphericSlice slice;
  slice.alt_axis_m = VectorXd::LinSpaced(131, 0.0, 130'000.0);
  slice.range_axis_m = VectorXd::LinSpaced(10, 0.0, 900'000.0);
  slice.c_ratio = MatrixXd::Constant(131, 10, 1.02);
  slice.c_ratio.row(0).setOnes();
  slice.ground_c_eff_ms = VectorXd::Constant(10, 338.0);
  GwRealization zero;
  zero.du = MatrixXd::Zero(131, 10);
  AtmosphericSlice same = perturb_slice(slice, zero);
  CHECK((same.c_ratio - slice.c_ratio).cwiseAbs().maxCoeff() == 0.0);
  CHECK((same.ground_c_eff_ms - slice.ground_c_eff_ms).cwiseAbs().maxCoeff() ==
        0.0);

  GwRealization f = gw_field_2d(slice.alt_axis_m, slice.range_axis_m, 4,
                                defaults(), 9);
  AtmosphericSlice pert = perturb_slice(slice, f);
  for (Index c = 0; c < pert.n_range(); ++c) CHECK(pert.c_ratio(0, c) == 1.0);
  AtmosphericSlice pert2 = perturb_slice(pert, zero);
  CHECK((pert2.c_ratio - pert.c_ratio).cwiseAbs().maxCoeff() == 0.0);

  GwRealization bad;
  bad.du = MatrixXd::Zero(7, 10);
  CHECK_THROWS_AS(perturb_slice(slice, bad), DomainError);
}

TEST_CASE("full-scale field amplitude calibration is near the +/-25 m/s target") {
  const VectorXd alt = VectorXd::LinSpaced(433, 0.0, 129'900.0);
  const VectorXd rng_axis = VectorXd::LinSpaced(40, 0.0, 3'900'000.0);
  const GwSpectrumParams p = defaults();
  double mean_min = 0.0, mean_max = 0.0;
  const int n_fields = 10;
  for (int s = 0; s < n_fields; ++s) {
    GwRealization f =
        gw_field_2d(alt, rng_axis, kDefaultGwColumnEnsemble, p, 500 + s);
    mean_min += f.du.minCoeff();
    mean_max += f.du.maxCoeff();
  }
  mean_min /= n_fields;
  mean_max /= n_fields;
  MESSAGE("mean field min/max over " << n_fields << " realizations: "
                                     << mean_min << " / " << mean_max
                                     << " (target -25 / +25)");
  CHECK(mean_max > 15.0);
  CHECK(mean_max < 40.0);
  CHECK(mean_min < -15.0);
  CHECK(mean_min > -40.0);
}
