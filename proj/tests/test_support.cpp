#include <doctest.h>

#include <complex>
#include <filesystem>
#include <fstream>

#include "itl/fft.hpp"
#include "itl/geodesy.hpp"
#include "itl/rng.hpp"
#include "itl/sha256.hpp"
#include "itl/slice_io.hpp"

using namespace itl;

namespace {

// Naive O(n^2) DFT oracle.
std::vector<std::complex<double>> dft(const std::vector<std::complex<double>>& x) {
  const auto n = static_cast<Index>(x.size());
  std::vector<std::complex<double>> out(x.size());
  for (Index k = 0; k < n; ++k) {
    std::complex<double> acc = 0.0;
    for (Index j = 0; j < n; ++j) {
      const double a = -2.0 * constants::kPi * double(k) * double(j) / double(n);
      acc += x[static_cast<std::size_t>(j)] * std::polar(1.0, a);
    }
    out[static_cast<std::size_t>(k)] = acc;
  }
  return out;
}

}  // namespace

TEST_CASE("fft matches the naive DFT oracle") {
  RngStream rng(7);
  for (Index n : {8, 64, 256}) {
    std::vector<std::complex<double>> x(static_cast<std::size_t>(n));
    for (auto& v : x) v = {rng.normal(), rng.normal()};
    auto expected = dft(x);
    auto got = x;
    FftPlan<double> plan(n);
    plan.forward(got.data());
    double max_err = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i)
      max_err = std::max(max_err, std::abs(got[i] - expected[i]));
    CHECK(max_err < 1e-9 * std::sqrt(double(n)));
    plan.inverse(got.data());
    for (std::size_t i = 0; i < x.size(); ++i)
      CHECK(std::abs(got[i] - x[i]) < 1e-12);
  }
}

TEST_CASE("fft rejects non-power-of-two sizes") {
  CHECK_THROWS_AS(FftPlan<double>(48), ConfigError);
  CHECK_THROWS_AS(FftPlan<double>(0), ConfigError);
}

TEST_CASE("rng streams are deterministic and independent") {
  RngStream a(42, 1, 2, 3), b(42, 1, 2, 3), c(42, 1, 2, 4);
  for (int i = 0; i < 100; ++i) {
    const double x = a.uniform();
    CHECK(x == b.uniform());
    CHECK(x >= 0.0);
    CHECK(x < 1.0);
  }
  // different key should decorrelate immediately
  int same = 0;
  RngStream a2(42, 1, 2, 3);
  for (int i = 0; i < 100; ++i)
    if (a2.next_u64() == c.next_u64()) ++same;
  CHECK(same == 0);
}

TEST_CASE("rng normal has the expected first moments") {
  RngStream rng(123);
  const int n = 200'000;
  double sum = 0.0, sum2 = 0.0;
  for (int i = 0; i < n; ++i) {
    const double x = rng.normal();
    sum += x;
    sum2 += x * x;
  }
  CHECK(std::abs(sum / n) < 0.01);
  CHECK(sum2 / n == doctest::Approx(1.0).epsilon(0.01));
}

TEST_CASE("geodesic forward reproduces one degree of arc") {
  // step derived from 2 pi R / 360
  auto pts = great_circle_sample({0.0, 0.0}, 90.0, 111'195.0, 111'195.0);
  REQUIRE(pts.size() == 2);
  CHECK(pts[0].lat_deg == 0.0);
  CHECK(pts[1].lat_deg == doctest::Approx(0.0).epsilon(1e-9));
  CHECK(pts[1].lon_deg == doctest::Approx(1.0).epsilon(1e-4));

  auto north = great_circle_sample({0.0, 0.0}, 0.0, 111'195.0, 111'195.0);
  CHECK(north[1].lat_deg == doctest::Approx(1.0).epsilon(1e-4));
  CHECK(north[1].lon_deg == doctest::Approx(0.0).epsilon(1e-9));
}

TEST_CASE("great-circle sampling keeps steps uniform within 0.1%") {
  auto pts = great_circle_sample({37.5, -10.0}, 55.0, 4'000'000.0, 100'000.0);
  REQUIRE(pts.size() == 41);
  for (std::size_t i = 1; i < pts.size(); ++i) {
    const double d = geodesic_distance(pts[i - 1], pts[i]);
    CHECK(std::abs(d - 100'000.0) / 100'000.0 < 1e-3);
  }
}

TEST_CASE("great-circle sampling validates arguments") {
  CHECK_THROWS_AS(great_circle_sample({0, 0}, 0, 10.0, 0.0), DomainError);
  CHECK_THROWS_AS(great_circle_sample({0, 0}, 0, 5.0, 10.0), DomainError);
}

TEST_CASE("sha256 matches known vectors") {
  CHECK(sha256_hex("", 0) ==
        "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
  CHECK(sha256_hex("abc", 3) ==
        "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST_CASE("slice container round-trips and rejects corruption") {
  AtmosphericSlice slice;
  slice.alt_axis_m = VectorXd::LinSpaced(6, 0.0, 50'000.0);
  slice.range_axis_m = VectorXd::LinSpaced(4, 0.0, 300'000.0);
  slice.c_ratio = MatrixXd::Constant(6, 4, 1.05);
  slice.c_ratio.row(0).setOnes();
  slice.ground_c_eff_ms = VectorXd::Constant(4, 340.0);
  slice.origin = {12.5, -45.0};
  slice.bearing_deg = 135.0;
  slice.azimuth_projection_deg = 90.0;
  slice.source = "test";

  const auto dir = std::filesystem::temp_directory_path() / "itl_slice_io";
  std::filesystem::create_directories(dir);
  const auto path = dir / "a.atms";
  write_slice(slice, path);
  AtmosphericSlice back = read_slice(path);
  CHECK(back.c_ratio.rows() == 6);
  CHECK(back.c_ratio.cols() == 4);
  CHECK(back.bearing_deg == 135.0);
  CHECK((back.alt_axis_m - slice.alt_axis_m).cwiseAbs().maxCoeff() == 0.0);
  CHECK(back.ground_c_eff_ms[0] == 340.0);
  // float32 payload: equal to float precision
  CHECK((back.c_ratio - slice.c_ratio).cwiseAbs().maxCoeff() < 1e-6);

  // second write of the re-read slice is byte-identical
  const auto path2 = dir / "b.atms";
  write_slice(back, path2);
  write_slice(read_slice(path2), dir / "c.atms");
  CHECK(sha256_file(path2) == sha256_file(dir / "c.atms"));

  std::ofstream(dir / "bad.atms", std::ios::binary) << "NOPE";
  CHECK_THROWS_AS(read_slice(dir / "bad.atms"), DataError);
}

TEST_CASE("gw realization container round-trips parameters") {
  GwRealization f;
  f.du = MatrixXd::Random(8, 5);
  f.seed = 99;
  f.params.corr_length_m = 123'456.0;
  const auto dir = std::filesystem::temp_directory_path() / "itl_slice_io";
  std::filesystem::create_directories(dir);
  write_gw_realization(f, dir / "f.gwrl");
  GwRealization back = read_gw_realization(dir / "f.gwrl");
  CHECK(back.seed == 99);
  CHECK(back.params.corr_length_m == 123'456.0);
  CHECK((back.du - f.du).cwiseAbs().maxCoeff() < 1e-6);
  CHECK_THROWS_AS(read_slice(dir / "f.gwrl"), DataError);  // wrong magic
}
