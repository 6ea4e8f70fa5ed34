#include "itl/slice_io.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <nlohmann/json.hpp>

static_assert(std::endian::native == std::endian::little,
              "container format is little-endian");

namespace itl {

using nlohmann::json;

namespace {

void write_bytes(std::ofstream& out, const void* p, std::size_t n) {
  out.write(static_cast<const char*>(p), static_cast<std::streamsize>(n));
}

void read_bytes(std::ifstream& in, void* p, std::size_t n,
                const std::string& what) {
  in.read(static_cast<char*>(p), static_cast<std::streamsize>(n));
  if (static_cast<std::size_t>(in.gcount()) != n)
    throw DataError("container: truncated " + what);
}

void write_container(const std::filesystem::path& path, const char magic[4],
                     const MatrixXd& grid, const VectorXd& alt_axis,
                     const VectorXd& range_axis, const json& meta) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("container: cannot open " + path.string());
  write_bytes(out, magic, 4);
  const std::uint16_t version = kContainerVersion;
  write_bytes(out, &version, sizeof version);
  const auto n_alt = static_cast<std::uint32_t>(grid.rows());
  const auto n_range = static_cast<std::uint32_t>(grid.cols());
  write_bytes(out, &n_alt, sizeof n_alt);
  write_bytes(out, &n_range, sizeof n_range);
  // row-major float32 grid
  for (Index i = 0; i < grid.rows(); ++i)
    for (Index j = 0; j < grid.cols(); ++j) {
      const float v = static_cast<float>(grid(i, j));
      write_bytes(out, &v, sizeof v);
    }
  write_bytes(out, alt_axis.data(), sizeof(double) * static_cast<std::size_t>(n_alt));
  write_bytes(out, range_axis.data(), sizeof(double) * static_cast<std::size_t>(n_range));
  const std::string blob = meta.dump();
  const auto blob_len = static_cast<std::uint32_t>(blob.size());
  write_bytes(out, &blob_len, sizeof blob_len);
  write_bytes(out, blob.data(), blob.size());
  if (!out) throw DataError("container: write failed for " + path.string());
}

void read_container(const std::filesystem::path& path, const char magic[4],
                    MatrixXd& grid, VectorXd& alt_axis, VectorXd& range_axis,
                    json& meta) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("container: cannot open " + path.string());
  char got[4];
  read_bytes(in, got, 4, "magic");
  if (std::memcmp(got, magic, 4) != 0)
    throw DataError("container: bad magic in " + path.string() + ", expected " +
                    std::string(magic, 4));
  std::uint16_t version = 0;
  read_bytes(in, &version, sizeof version, "version");
  if (version != kContainerVersion)
    throw DataError("container: unsupported version " + std::to_string(version) +
                    " in " + path.string());
  std::uint32_t n_alt = 0, n_range = 0;
  read_bytes(in, &n_alt, sizeof n_alt, "shape");
  read_bytes(in, &n_range, sizeof n_range, "shape");
  grid.resize(n_alt, n_range);
  for (std::uint32_t i = 0; i < n_alt; ++i)
    for (std::uint32_t j = 0; j < n_range; ++j) {
      float v = 0;
      read_bytes(in, &v, sizeof v, "grid");
      grid(i, j) = static_cast<double>(v);
    }
  alt_axis.resize(n_alt);
  range_axis.resize(n_range);
  read_bytes(in, alt_axis.data(), sizeof(double) * n_alt, "altitude axis");
  read_bytes(in, range_axis.data(), sizeof(double) * n_range, "range axis");
  std::uint32_t blob_len = 0;
  read_bytes(in, &blob_len, sizeof blob_len, "metadata length");
  std::string blob(blob_len, '\0');
  read_bytes(in, blob.data(), blob_len, "metadata");
  try {
    meta = json::parse(blob);
  } catch (const json::exception& e) {
    throw DataError("container: bad metadata JSON in " + path.string() + ": " +
                    e.what());
  }
}

}  // namespace

void write_slice(const AtmosphericSlice& slice, const std::filesystem::path& path) {
  json meta;
  meta["origin_lat_deg"] = slice.origin.lat_deg;
  meta["origin_lon_deg"] = slice.origin.lon_deg;
  meta["bearing_deg"] = slice.bearing_deg;
  meta["azimuth_projection_deg"] = slice.azimuth_projection_deg;
  meta["source"] = slice.source;
  meta["ground_c_eff_ms"] = std::vector<double>(
      slice.ground_c_eff_ms.data(),
      slice.ground_c_eff_ms.data() + slice.ground_c_eff_ms.size());
  write_container(path, "ATMS", slice.c_ratio, slice.alt_axis_m,
                  slice.range_axis_m, meta);
}

AtmosphericSlice read_slice(const std::filesystem::path& path) {
  AtmosphericSlice slice;
  json meta;
  read_container(path, "ATMS", slice.c_ratio, slice.alt_axis_m,
                 slice.range_axis_m, meta);
  slice.origin.lat_deg = meta.at("origin_lat_deg").get<double>();
  slice.origin.lon_deg = meta.at("origin_lon_deg").get<double>();
  slice.bearing_deg = meta.at("bearing_deg").get<double>();
  slice.azimuth_projection_deg = meta.at("azimuth_projection_deg").get<double>();
  slice.source = meta.at("source").get<std::string>();
  const auto g = meta.at("ground_c_eff_ms").get<std::vector<double>>();
  if (g.size() != static_cast<std::size_t>(slice.n_range()))
    throw DataError("read_slice: ground c_eff length mismatch in " +
                    path.string());
  slice.ground_c_eff_ms = Eigen::Map<const VectorXd>(
      g.data(), static_cast<Index>(g.size()));
  // Grids round-trip through float32, so the ground row is 1 to float
  // precision; snap it back to the exact invariant.
  slice.c_ratio.row(0).setOnes();
  slice.validate();
  return slice;
}

void write_gw_realization(const GwRealization& field,
                          const std::filesystem::path& path) {
  const GwSpectrumParams& p = field.params;
  json meta;
  meta["seed"] = field.seed;
  meta["alpha"] = p.alpha;
  meta["buoyancy_freq"] = p.buoyancy_freq;
  meta["m_star_0"] = p.m_star_0;
  meta["m_b"] = p.m_b;
  meta["s"] = p.s;
  meta["q"] = p.q;
  meta["scale_height_m"] = p.scale_height_m;
  meta["corr_length_m"] = p.corr_length_m;
  meta["layer_thickness_m"] = p.layer_thickness_m;
  meta["sigma_weight_m"] = p.sigma_weight_m;
  meta["density_growth"] = p.density_growth;
  // GW fields are generated on the same axes as their target slices; the
  // container reuses the slice axis slots.
  VectorXd alt = VectorXd::LinSpaced(field.du.rows(), 0.0,
                                     static_cast<double>(field.du.rows() - 1));
  VectorXd rng = VectorXd::LinSpaced(field.du.cols(), 0.0,
                                     static_cast<double>(field.du.cols() - 1));
  write_container(path, "GWRL", field.du, alt, rng, meta);
}

GwRealization read_gw_realization(const std::filesystem::path& path) {
  GwRealization field;
  json meta;
  VectorXd alt, rng;
  read_container(path, "GWRL", field.du, alt, rng, meta);
  field.seed = meta.at("seed").get<std::uint64_t>();
  GwSpectrumParams& p = field.params;
  p.alpha = meta.at("alpha").get<double>();
  p.buoyancy_freq = meta.at("buoyancy_freq").get<double>();
  p.m_star_0 = meta.at("m_star_0").get<double>();
  p.m_b = meta.at("m_b").get<double>();
  p.s = meta.at("s").get<double>();
  p.q = meta.at("q").get<double>();
  p.scale_height_m = meta.at("scale_height_m").get<double>();
  p.corr_length_m = meta.at("corr_length_m").get<double>();
  p.layer_thickness_m = meta.at("layer_thickness_m").get<double>();
  p.sigma_weight_m = meta.at("sigma_weight_m").get<double>();
  p.density_growth = meta.at("density_growth").get<bool>();
  if (!field.du.allFinite())
    throw DataError("read_gw_realization: non-finite field in " + path.string());
  return field;
}

}  // namespace itl
