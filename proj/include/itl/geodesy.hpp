/**
 * @file geodesy.hpp
 * @brief Spherical-Earth forward geodesics for path sampling.
 */
#ifndef ITL_GEODESY_HPP
#define ITL_GEODESY_HPP

#include <vector>

#include "itl/common.hpp"

namespace itl {

struct GeoPoint {
  double lat_deg = 0.0;
  double lon_deg = 0.0;  // normalized to [-180, 180)
};

/// Destination after travelling `distance_m` from `origin` on a fixed initial
/// bearing (degrees clockwise from north), on a sphere of radius kEarthRadius.
GeoPoint geodesic_forward(const GeoPoint& origin, double bearing_deg,
                          double distance_m);

/// Great-circle distance between two points, m.
double geodesic_distance(const GeoPoint& a, const GeoPoint& b);

/// Points along the geodesic every `step_m`, first point = origin, last point
/// at `max_range_m` (max_range_m must be an integer multiple of step_m to
/// within rounding; the count is round(max/step)+1).
std::vector<GeoPoint> great_circle_sample(const GeoPoint& origin,
                                          double bearing_deg,
                                          double max_range_m, double step_m);

}  // namespace itl

#endif  // ITL_GEODESY_HPP
