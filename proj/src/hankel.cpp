#include "losp/hankel.hpp"

#include <Eigen/SVD>

#include <string>

namespace losp {

void HankelSpec::validate() const
{
  if (n_shots < 1) {
    throw ConfigError("Hankel spec needs at least one shot");
  }
  if (window < 1 || window > length) {
    throw ConfigError("Hankel window must satisfy 1 <= w <= L (w=" + std::to_string(window) +
                      ", L=" + std::to_string(length) + ")");
  }
}

namespace {

void check_signals(std::span<CxVector const> signals, HankelSpec const &spec)
{
  spec.validate();
  if (static_cast<int>(signals.size()) != spec.n_shots) {
    throw ConfigError("expected " + std::to_string(spec.n_shots) + " shot signals");
  }
  for (auto const &s : signals) {
    if (s.size() != spec.length) {
      throw ConfigError("shot signal length does not match the Hankel spec");
    }
  }
}

} // namespace

CxMatrix lift(std::span<CxVector const> signals, HankelSpec const &spec)
{
  check_signals(signals, spec);
  int const rows = spec.rows();
  int const w = spec.window;
  CxMatrix H(rows, spec.cols());
  for (int j = 0; j < spec.n_shots; ++j) {
    auto const &s = signals[j];
    if (spec.layout == HankelLayout::ComplexShotConcat) {
      for (int c = 0; c < w; ++c) {
        H.col(j * w + c) = s.segment(c, rows);
      }
    } else {
      int const base = j * 2 * w;
      for (int c = 0; c < w; ++c) {
        H.col(base + c) = s.segment(c, rows).real().cast<Cx>();
        H.col(base + w + c) = s.segment(c, rows).imag().cast<Cx>();
      }
    }
  }
  return H;
}

ShotSignals adjoint(CxMatrix const &matrix, HankelSpec const &spec)
{
  spec.validate();
  if (matrix.rows() != spec.rows() || matrix.cols() != spec.cols()) {
    throw ConfigError("matrix shape does not match the Hankel spec");
  }
  int const rows = spec.rows();
  int const w = spec.window;
  ShotSignals out(spec.n_shots, CxVector::Zero(spec.length));
  for (int j = 0; j < spec.n_shots; ++j) {
    auto &s = out[j];
    if (spec.layout == HankelLayout::ComplexShotConcat) {
      for (int c = 0; c < w; ++c) {
        s.segment(c, rows) += matrix.col(j * w + c);
      }
    } else {
      int const base = j * 2 * w;
      for (int c = 0; c < w; ++c) {
        s.segment(c, rows).real() += matrix.col(base + c).real();
        s.segment(c, rows).imag() += matrix.col(base + w + c).real();
      }
    }
  }
  return out;
}

Eigen::VectorXi frame_weights(HankelSpec const &spec)
{
  spec.validate();
  int const L = spec.length;
  int const w = spec.window;
  Eigen::VectorXi weights(L);
  for (int k = 1; k <= L; ++k) {
    weights(k - 1) = std::min({k, w, L - w + 1, L - k + 1});
  }
  return weights;
}

ShotSignals delift(CxMatrix const &matrix, HankelSpec const &spec)
{
  ShotSignals s = adjoint(matrix, spec);
  Eigen::VectorXd const w = frame_weights(spec).cast<double>();
  for (auto &v : s) {
    v.array() /= w.array().cast<Cx>();
  }
  return s;
}

Svd thin_svd(CxMatrix const &matrix)
{
  Eigen::BDCSVD<CxMatrix> svd(matrix, Eigen::ComputeThinU | Eigen::ComputeThinV);
  // Singular values come back sorted in decreasing order.
  return Svd{svd.matrixU(), svd.singularValues(), svd.matrixV()};
}

Truncation truncate_svd(CxMatrix const &matrix, int r)
{
  if (r < 1) {
    throw ConfigError("truncation rank must be >= 1");
  }
  Svd const svd = thin_svd(matrix);
  int const keep = std::min<int>(r, static_cast<int>(svd.S.size()));
  Truncation t;
  t.singular_values = svd.S;
  t.matrix = svd.U.leftCols(keep) * svd.S.head(keep).cast<Cx>().asDiagonal() * svd.V.leftCols(keep).adjoint();
  return t;
}

Eigen::VectorXd singular_values(std::span<CxVector const> signals, HankelSpec const &spec)
{
  CxMatrix const H = lift(signals, spec);
  return Eigen::BDCSVD<CxMatrix>(H).singularValues();
}

double nuclear_norm(CxMatrix const &matrix) { return Eigen::BDCSVD<CxMatrix>(matrix).singularValues().sum(); }

int energy_rank(Eigen::VectorXd const &sv, double fraction)
{
  double const total = sv.squaredNorm();
  if (total <= 0) {
    return 0;
  }
  double acc = 0;
  for (Eigen::Index i = 0; i < sv.size(); ++i) {
    acc += sv(i) * sv(i);
    if (acc >= fraction * total) {
      return static_cast<int>(i + 1);
    }
  }
  return static_cast<int>(sv.size());
}

} // namespace losp
