#pragma once

#include <array>
#include <cmath>
#include <complex>
#include <cstddef>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace risrsma {

using Complex = std::complex<double>;
using CVector = Eigen::VectorXcd;
using CMatrix = Eigen::MatrixXcd;
using RVector = Eigen::VectorXd;
using RMatrix = Eigen::MatrixXd;

inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

/// Per-RSU quantity indexed as [pair][rsu], rsu in {0, 1}.
template <typename T>
using PerRsu = std::vector<std::array<T, 2>>;

template <typename T>
PerRsu<T> make_per_rsu(std::size_t pairs, T value) {
  return PerRsu<T>(pairs, std::array<T, 2>{value, value});
}

/// Raised for malformed configuration or invariant violations on inputs.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline double dbm_to_watt(double dbm) { return std::pow(10.0, (dbm - 30.0) / 10.0); }
inline double watt_to_dbm(double w) { return 10.0 * std::log10(w) + 30.0; }

/// Wraps an angle into [0, 2pi).
inline double wrap_phase(double theta) {
  double w = std::fmod(theta, kTwoPi);
  if (w < 0.0) w += kTwoPi;
  if (w >= kTwoPi) w = 0.0;
  return w;
}

}  // namespace risrsma
