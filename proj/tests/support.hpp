#pragma once

#include "losp/rng.hpp"
#include "losp/types.hpp"

#include <random>

namespace losp::test {

inline Cx random_cx(Rng &rng)
{
  std::normal_distribution<double> nd;
  return {nd(rng), nd(rng)};
}

inline CxVector random_vector(Eigen::Index n, std::uint64_t seed)
{
  Rng rng(seed);
  CxVector v(n);
  for (auto &x : v) {
    x = random_cx(rng);
  }
  return v;
}

inline CxMatrix random_matrix(Eigen::Index rows, Eigen::Index cols, std::uint64_t seed)
{
  Rng rng(seed);
  CxMatrix m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) {
    m(i) = random_cx(rng);
  }
  return m;
}

inline CxImage random_image(Eigen::Index rows, Eigen::Index cols, std::uint64_t seed)
{
  return random_matrix(rows, cols, seed).array();
}

inline ShotArray random_shots(int J, Eigen::Index rows, Eigen::Index cols, std::uint64_t seed)
{
  ShotArray s;
  for (int j = 0; j < J; ++j) {
    s.push_back(random_image(rows, cols, derive_seed(seed, j)));
  }
  return s;
}

inline double rel_diff(CxImage const &a, CxImage const &b)
{
  return std::sqrt((a - b).abs2().sum() / std::max(b.abs2().sum(), 1e-300));
}

inline double rel_diff(ShotArray const &a, ShotArray const &b)
{
  double num = 0, den = 0;
  for (std::size_t j = 0; j < a.size(); ++j) {
    num += (a[j] - b[j]).abs2().sum();
    den += b[j].abs2().sum();
  }
  return std::sqrt(num / std::max(den, 1e-300));
}

/// Complex inner product <a, b> = Σ conj(a) b.
inline Cx inner(ShotArray const &a, ShotArray const &b)
{
  Cx s = 0;
  for (std::size_t j = 0; j < a.size(); ++j) {
    s += (a[j].conjugate() * b[j]).sum();
  }
  return s;
}

} // namespace losp::test
