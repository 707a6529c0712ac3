#pragma once

#include "losp/types.hpp"

#include <span>
#include <vector>

namespace losp {

enum class HankelLayout : std::uint8_t {
  ComplexShotConcat,  ///< [H(s_1) | H(s_2) | ... ], complex entries
  RealImagSplit,      ///< [H(Re s_1) | H(Im s_1) | H(Re s_2) | ...], real entries
};

/// Block-Hankel lifting of J shot signals of length L with window w. Each shot
/// block is (L-w+1) x w; row k holds s[k .. k+w-1].
struct HankelSpec
{
  int window = 10;
  int length = 0;
  int n_shots = 1;
  HankelLayout layout = HankelLayout::ComplexShotConcat;

  int rows() const { return length - window + 1; }
  int block_cols() const { return layout == HankelLayout::RealImagSplit ? 2 * window : window; }
  int cols() const { return n_shots * block_cols(); }
  int max_rank() const { return std::min(rows(), cols()); }
  /// Number of lifted-matrix entries.
  long entries() const { return static_cast<long>(rows()) * cols(); }
  void validate() const;
};

using ShotSignals = std::vector<CxVector>;

CxMatrix lift(std::span<CxVector const> signals, HankelSpec const &spec);
/// Adjoint of lift under the real inner product Re<.,.>; for the complex layout
/// this is the ordinary complex adjoint.
ShotSignals adjoint(CxMatrix const &matrix, HankelSpec const &spec);
/// Per-index count of lifted entries mapped from each signal sample (H*H diagonal).
Eigen::VectorXi frame_weights(HankelSpec const &spec);
/// Least-squares inverse of lift: adjoint followed by division by frame weights.
ShotSignals delift(CxMatrix const &matrix, HankelSpec const &spec);

struct Truncation
{
  CxMatrix matrix;
  /// Full descending singular spectrum of the input.
  Eigen::VectorXd singular_values;
};

/// Best rank-min(r, max) approximation (Eckart-Young).
Truncation truncate_svd(CxMatrix const &matrix, int r);

struct Svd
{
  CxMatrix U;
  Eigen::VectorXd S;
  CxMatrix V;
};

/// Thin SVD with singular values sorted descending.
Svd thin_svd(CxMatrix const &matrix);

Eigen::VectorXd singular_values(std::span<CxVector const> signals, HankelSpec const &spec);
double nuclear_norm(CxMatrix const &matrix);

/// Smallest r whose leading singular values hold `fraction` of the total energy.
int energy_rank(Eigen::VectorXd const &sv, double fraction = 0.99);

} // namespace losp
