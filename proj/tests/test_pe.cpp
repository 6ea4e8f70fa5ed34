#include <doctest.h>

#include <cmath>
#include <filesystem>

#include "itl/pe.hpp"
#include "itl/sha256.hpp"

using namespace itl;

namespace {

constexpr double kPiLocal = 3.141592653589793;

// Range-independent slice with a prescribed c_ratio profile.
AtmosphericSlice profile_slice(const VectorXd& alt_axis, const VectorXd& c_ratio,
                               double span_m = 400'000.0) {
  AtmosphericSlice s;
  s.alt_axis_m = alt_axis;
  s.range_axis_m = VectorXd::LinSpaced(2, 0.0, span_m / 2.0);
  s.c_ratio.resize(alt_axis.size(), 2);
  s.c_ratio.col(0) = c_ratio;
  s.c_ratio.col(1) = c_ratio;
  s.ground_c_eff_ms = VectorXd::Constant(2, 340.297028755762133);
  s.source = "test";
  return s;
}

AtmosphericSlice homogeneous_slice(double top_m, double span_m) {
  const VectorXd alt = VectorXd::LinSpaced(14, 0.0, top_m);
  return profile_slice(alt, VectorXd::Ones(14), span_m);
}

// c_ratio plateau at 40-50 km over a gently upward-refracting background
// (a standard temperature-driven decline, so energy that is not trapped
// leaves the ground). Smooth cosine ramps avoid sharp impedance jumps.
AtmosphericSlice duct_slice(double value, double span_m) {
  const Index n = 241;
  const VectorXd alt = VectorXd::LinSpaced(n, 0.0, 60'000.0);
  VectorXd prof(n);
  for (Index i = 0; i < n; ++i) {
    const double z = alt[i];
    const double background = 1.0 - 0.08 * std::min(z, 40'000.0) / 40'000.0;
    double blend = 0.0;  // 0 = background, 1 = plateau
    if (z >= 40'000.0 && z <= 50'000.0)
      blend = 1.0;
    else if (z > 36'000.0 && z < 40'000.0)
      blend = 0.5 - 0.5 * std::cos(kPiLocal * (z - 36'000.0) / 4'000.0);
    else if (z > 50'000.0 && z < 54'000.0)
      blend = 0.5 + 0.5 * std::cos(kPiLocal * (z - 50'000.0) / 4'000.0);
    prof[i] = (1.0 - blend) * background + blend * value;
  }
  return profile_slice(alt, prof, span_m);
}

}  // namespace

TEST_CASE("tl_db basics") {
  CHECK(tl_db(1.0, 1.0) == 0.0);
  CHECK(tl_db(0.1, 1.0) == doctest::Approx(-20.0));
  CHECK(tl_db(0.0, 1.0) == -300.0);
  CHECK_THROWS_AS(tl_db(1.0, 0.0), DomainError);
  CHECK_THROWS_AS(tl_db(-1.0, 1.0), DomainError);
}

TEST_CASE("config validation names the limiting wavelength") {
  PeConfig cfg = PeConfig::for_frequency(0.5, 40'000.0);
  CHECK_NOTHROW(cfg.validate(0.5));
  PeConfig bad = cfg;
  bad.dz_m = 1'000.0;  // lambda/8 at 0.5 Hz is ~85 m
  CHECK_THROWS_WITH_AS(bad.validate(0.5),
                       doctest::Contains("680."), ConfigError);
  bad = cfg;
  bad.dr_m = 5'000.0;
  CHECK_THROWS_AS(bad.validate(0.5), ConfigError);
  bad = cfg;
  bad.absorber_thickness_m = 100.0;
  CHECK_THROWS_AS(bad.validate(0.5), ConfigError);
  CHECK_THROWS_AS(cfg.validate(0.01), ConfigError);  // below validity band
}

TEST_CASE("homogeneous medium reproduces point-source spreading") {
  AtmosphericSlice slice = homogeneous_slice(40'000.0, 400'000.0);
  PeConfig cfg = PeConfig::for_frequency(0.5, 40'000.0);
  TlCurve tl = solve_tl(slice, 0.5, cfg);
  // reference range node is exactly 0 dB by construction
  Index ref_idx = -1;
  for (Index i = 0; i < tl.range_axis_m.size(); ++i)
    if (std::abs(tl.range_axis_m[i] - cfg.reference_range_m) < 1e-6) ref_idx = i;
  REQUIRE(ref_idx >= 0);
  CHECK(tl.tl_db[ref_idx] == 0.0);

  double worst = 0.0;
  for (Index i = 0; i < tl.range_axis_m.size(); ++i) {
    const double d = tl.range_axis_m[i];
    if (d < 10'000.0 || d > 400'000.0) continue;
    const double expected = -20.0 * std::log10(d / 1'000.0);
    worst = std::max(worst, std::abs(tl.tl_db[i] - expected));
  }
  MESSAGE("max |TL - spreading law| over 10-400 km: " << worst << " dB");
  CHECK(worst < 1.5);
}

TEST_CASE("split-step march conserves the discrete norm with absorber off") {
  AtmosphericSlice slice = homogeneous_slice(40'000.0, 100'000.0);
  PeConfig cfg = PeConfig::for_frequency(0.5, 40'000.0);
  cfg.absorber_strength = 0.0;
  PeRunStats stats;
  solve_tl(slice, 0.5, cfg, &stats);
  for (Index s = 1; s < stats.step_norms.size(); ++s) {
    const double drift =
        std::abs(stats.step_norms[s] - stats.step_norms[s - 1]) /
        stats.step_norms[s - 1];
    CHECK(drift < 1e-6);
  }
}

TEST_CASE("stratospheric duct beats its upwind mirror by 15 dB at 1000 km") {
  AtmosphericSlice duct = duct_slice(1.1, 1'000'000.0);
  AtmosphericSlice mirror = duct_slice(0.9, 1'000'000.0);
  PeConfig cfg = PeConfig::for_frequency(0.2, 60'000.0);
  TlCurve tl_duct = solve_tl(duct, 0.2, cfg);
  TlCurve tl_mirror = solve_tl(mirror, 0.2, cfg);
  const Index last = tl_duct.tl_db.size() - 1;
  CHECK(tl_duct.range_axis_m[last] == doctest::Approx(1'000'000.0));
  MESSAGE("duct TL " << tl_duct.tl_db[last] << " dB vs mirror "
                     << tl_mirror.tl_db[last] << " dB");
  CHECK(tl_duct.tl_db[last] - tl_mirror.tl_db[last] >= 15.0);
}

TEST_CASE("solver is bit-deterministic") {
  AtmosphericSlice duct = duct_slice(1.05, 200'000.0);
  PeConfig cfg = PeConfig::for_frequency(0.4, 60'000.0);
  TlCurve a = solve_tl(duct, 0.4, cfg);
  TlCurve b = solve_tl(duct, 0.4, cfg);
  CHECK((a.tl_db - b.tl_db).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("halving the grid changes TL by under 1 dB median") {
  AtmosphericSlice duct = duct_slice(1.08, 400'000.0);
  PeConfig coarse = PeConfig::for_frequency(0.2, 60'000.0);
  PeConfig fine = coarse;
  fine.dz_m = coarse.dz_m / 2.0;
  fine.dr_m = coarse.dr_m / 2.0;
  TlCurve a = solve_tl(duct, 0.2, coarse);
  TlCurve b = solve_tl(duct, 0.2, fine);
  // compare on the coarse nodes
  std::vector<double> diffs;
  for (Index i = 0; i < a.range_axis_m.size(); ++i) {
    const Index j = 2 * i + 1;
    REQUIRE(b.range_axis_m[j] == doctest::Approx(a.range_axis_m[i]));
    diffs.push_back(std::abs(a.tl_db[i] - b.tl_db[j]));
  }
  std::sort(diffs.begin(), diffs.end());
  const double median = diffs[diffs.size() / 2];
  MESSAGE("median |TL(h) - TL(h/2)| = " << median << " dB");
  CHECK(median < 1.0);
}

TEST_CASE("resample_tl reproduces grids and linear ramps") {
  TlCurve ramp;
  ramp.frequency_hz = 0.5;
  ramp.range_axis_m = VectorXd::LinSpaced(401, 1'000.0, 401'000.0);
  ramp.tl_db = -0.05e-3 * ramp.range_axis_m;  // linear in range
  TlCurve out = resample_tl(ramp, 5'000.0, 80);
  CHECK(out.tl_db.size() == 80);
  for (Index i = 0; i < out.tl_db.size(); ++i)
    CHECK(out.tl_db[i] ==
          doctest::Approx(-0.05e-3 * out.range_axis_m[i]).epsilon(1e-12));

  // identity when already on the target grid
  TlCurve grid;
  grid.frequency_hz = 0.5;
  grid.range_axis_m = VectorXd::LinSpaced(80, 5'000.0, 400'000.0);
  grid.tl_db = VectorXd::Random(80);
  TlCurve same = resample_tl(grid, 5'000.0, 80);
  CHECK((same.tl_db - grid.tl_db).cwiseAbs().maxCoeff() < 1e-12);

  CHECK_THROWS_AS(resample_tl(grid, 5'000.0, 800), DataError);
}

TEST_CASE("tl csv round-trips") {
  TlCurve c;
  c.frequency_hz = 0.8;
  c.range_axis_m = VectorXd::LinSpaced(10, 5'000.0, 50'000.0);
  c.tl_db = VectorXd::Random(10) * 40.0;
  const auto dir = std::filesystem::temp_directory_path() / "itl_pe";
  std::filesystem::create_directories(dir);
  const auto path = (dir / "c.csv").string();
  write_tl_csv(c, path);
  TlCurve back = read_tl_csv(path);
  CHECK(back.frequency_hz == 0.8);
  CHECK((back.tl_db - c.tl_db).cwiseAbs().maxCoeff() == 0.0);
  CHECK((back.range_axis_m - c.range_axis_m).cwiseAbs().maxCoeff() == 0.0);
}
