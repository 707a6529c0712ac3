#pragma once

#include <Eigen/Dense>

#include <complex>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace losp {

using Cx = std::complex<double>;

/// Real 2D image indexed (readout, phase-encoding).
using RealImage = Eigen::ArrayXXd;
/// Complex 2D array indexed (readout, phase-encoding).
using CxImage = Eigen::ArrayXXcd;
using CxMatrix = Eigen::MatrixXcd;
using CxVector = Eigen::VectorXcd;
using LabelImage = Eigen::Array<std::uint8_t, Eigen::Dynamic, Eigen::Dynamic>;
using MaskImage = Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic>;

/// One (readout, phase-encoding) array per shot, either image or k-space.
using ShotArray = std::vector<CxImage>;

/// Which k-space axis a 1D Hankel lift runs along.
enum class Direction : std::uint8_t { RO = 0, PE = 1 };

inline const char *to_string(Direction d) { return d == Direction::RO ? "RO" : "PE"; }

class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Invalid configuration, arguments or file contents.
class ConfigError : public Error {
public:
  using Error::Error;
};

/// NaN/Inf or otherwise unusable numerical state.
class NumericalError : public Error {
public:
  using Error::Error;
};

inline constexpr double kPsnrCap = 300.0;

} // namespace losp
