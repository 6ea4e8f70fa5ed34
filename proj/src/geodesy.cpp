#include "itl/geodesy.hpp"

#include <cmath>

namespace itl {

using constants::kDeg2Rad;
using constants::kEarthRadius;
using constants::kRad2Deg;

static double normalize_lon(double lon_deg) {
  double x = std::fmod(lon_deg + 180.0, 360.0);
  if (x < 0) x += 360.0;
  return x - 180.0;
}

GeoPoint geodesic_forward(const GeoPoint& origin, double bearing_deg,
                          double distance_m) {
  const double lat1 = origin.lat_deg * kDeg2Rad;
  const double lon1 = origin.lon_deg * kDeg2Rad;
  const double brg = bearing_deg * kDeg2Rad;
  const double delta = distance_m / kEarthRadius;
  const double sin_lat2 = std::sin(lat1) * std::cos(delta) +
                          std::cos(lat1) * std::sin(delta) * std::cos(brg);
  const double lat2 = std::asin(std::clamp(sin_lat2, -1.0, 1.0));
  const double lon2 =
      lon1 + std::atan2(std::sin(brg) * std::sin(delta) * std::cos(lat1),
                        std::cos(delta) - std::sin(lat1) * sin_lat2);
  return {lat2 * kRad2Deg, normalize_lon(lon2 * kRad2Deg)};
}

double geodesic_distance(const GeoPoint& a, const GeoPoint& b) {
  const double lat1 = a.lat_deg * kDeg2Rad, lat2 = b.lat_deg * kDeg2Rad;
  const double dlat = lat2 - lat1;
  const double dlon = (b.lon_deg - a.lon_deg) * kDeg2Rad;
  const double s = std::sin(dlat / 2), t = std::sin(dlon / 2);
  const double h = s * s + std::cos(lat1) * std::cos(lat2) * t * t;
  return 2.0 * kEarthRadius * std::asin(std::sqrt(std::clamp(h, 0.0, 1.0)));
}

std::vector<GeoPoint> great_circle_sample(const GeoPoint& origin,
                                          double bearing_deg,
                                          double max_range_m, double step_m) {
  if (step_m <= 0) throw DomainError("great_circle_sample: step_m must be > 0");
  if (max_range_m < step_m)
    throw DomainError("great_circle_sample: max_range_m must be >= step_m");
  const auto n_steps = static_cast<Index>(std::llround(max_range_m / step_m));
  std::vector<GeoPoint> pts;
  pts.reserve(static_cast<std::size_t>(n_steps) + 1);
  pts.push_back({origin.lat_deg, normalize_lon(origin.lon_deg)});
  for (Index i = 1; i <= n_steps; ++i)
    pts.push_back(geodesic_forward(origin, bearing_deg,
                                   static_cast<double>(i) * step_m));
  return pts;
}

}  // namespace itl
