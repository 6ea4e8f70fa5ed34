/**
 * @file common.hpp
 * @brief Shared aliases, error types and physical constants.
 */
#ifndef ITL_COMMON_HPP
#define ITL_COMMON_HPP

#include <Eigen/Dense>
#include <stdexcept>
#include <string>

namespace itl {

using Eigen::Index;

template <typename Scalar>
using MatrixX = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Scalar>
using VectorX = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
template <typename Scalar>
using RowVectorX = Eigen::Matrix<Scalar, 1, Eigen::Dynamic>;
template <typename Scalar>
using ArrayX = Eigen::Array<Scalar, Eigen::Dynamic, 1>;

using MatrixXd = MatrixX<double>;
using VectorXd = VectorX<double>;

/// Invalid physical quantity or argument (maps to exit code 2 in the CLI).
struct DomainError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Inconsistent or unsatisfiable configuration (exit code 2).
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Bad, missing or corrupt data: files, coverage, checksums (exit code 3).
struct DataError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Numerical failure such as a mid-march blowup (exit code 4).
struct NumericalError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

namespace constants {
inline constexpr double kGamma = 1.4;            // adiabatic index of air
inline constexpr double kGasConstant = 287.058;  // specific gas constant, J/(kg K)
inline constexpr double kEarthRadius = 6'371'000.0;  // spherical Earth, m
inline constexpr double kPi = 3.141592653589793238462643383279502884;
inline constexpr double kDeg2Rad = kPi / 180.0;
inline constexpr double kRad2Deg = 180.0 / kPi;
}  // namespace constants

}  // namespace itl

#endif  // ITL_COMMON_HPP
