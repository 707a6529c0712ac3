#include "losp/hankel.hpp"

#include "../support.hpp"

#include <doctest.h>

#include <cmath>

using namespace losp;
using namespace losp::test;

namespace {

ShotSignals random_signals(int J, int L, std::uint64_t seed)
{
  ShotSignals s;
  for (int j = 0; j < J; ++j) {
    s.push_back(random_vector(L, derive_seed(seed, j)));
  }
  return s;
}

} // namespace

TEST_CASE("lift of a ramp")
{
  HankelSpec const spec{3, 5, 1};
  CxVector s(5);
  s << 1, 2, 3, 4, 5;
  CxMatrix expect(3, 3);
  expect << 1, 2, 3, 2, 3, 4, 3, 4, 5;
  CHECK((lift(std::span(&s, 1), spec) - expect).norm() == 0.0);
}

TEST_CASE("lift shape and entries over shots")
{
  HankelSpec const spec{4, 11, 3};
  ShotSignals const s = random_signals(3, 11, 1);
  CxMatrix const H = lift(s, spec);
  REQUIRE(H.rows() == 8);
  REQUIRE(H.cols() == 12);
  CHECK(spec.max_rank() == 8);
  for (int j = 0; j < 3; ++j) {
    for (int r = 0; r < 8; ++r) {
      for (int c = 0; c < 4; ++c) {
        CHECK(H(r, j * 4 + c) == s[j](r + c));
      }
    }
  }
}

TEST_CASE("realimag layout splits components")
{
  HankelSpec const spec{3, 6, 2, HankelLayout::RealImagSplit};
  ShotSignals const s = random_signals(2, 6, 4);
  CxMatrix const H = lift(s, spec);
  REQUIRE(H.cols() == 12);
  for (int j = 0; j < 2; ++j) {
    for (int r = 0; r < 4; ++r) {
      for (int c = 0; c < 3; ++c) {
        CHECK(H(r, j * 6 + c) == Cx(s[j](r + c).real(), 0));
        CHECK(H(r, j * 6 + 3 + c) == Cx(s[j](r + c).imag(), 0));
      }
    }
  }
  // Adjoint under the real inner product.
  CxMatrix const M = random_matrix(4, 12, 9);
  ShotSignals const a = adjoint(M, spec);
  double lhs = (H.conjugate().cwiseProduct(M)).sum().real();
  double rhs = 0;
  for (int j = 0; j < 2; ++j) {
    rhs += (s[j].conjugate().cwiseProduct(a[j])).sum().real();
  }
  CHECK(std::abs(lhs - rhs) < 1e-12 * (std::abs(lhs) + 1));
}

TEST_CASE("lift rejects mismatched lengths")
{
  HankelSpec const spec{3, 5, 2};
  ShotSignals s = random_signals(2, 5, 2);
  s[1] = random_vector(6, 3);
  CHECK_THROWS_AS(lift(s, spec), ConfigError);
  CHECK_THROWS_AS(adjoint(CxMatrix::Zero(2, 2), spec), ConfigError);
  CHECK_THROWS_AS((HankelSpec{6, 5, 1}.validate()), ConfigError);
}

TEST_CASE("constant and duplicated signals")
{
  HankelSpec const spec{5, 20, 1};
  CxVector const c = CxVector::Constant(20, Cx(0.3, -0.4));
  Eigen::VectorXd const sv = singular_values(std::span(&c, 1), spec);
  CHECK(sv(0) > 0);
  CHECK(sv.tail(sv.size() - 1).maxCoeff() < 1e-10 * sv(0));

  HankelSpec const two{5, 20, 2};
  CxVector const v = random_vector(20, 8);
  ShotSignals const dup{v, v};
  Eigen::VectorXd const s2 = singular_values(dup, two);
  Eigen::VectorXd const s1 = singular_values(std::span(&v, 1), spec);
  CHECK((s2.head(5) - std::sqrt(2.0) * s1).norm() < 1e-10 * s1(0));
  CHECK(s2.tail(s2.size() - 5).maxCoeff() < 1e-10 * s1(0));
}

TEST_CASE("adjoint identity and frame weights")
{
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    Rng rng(seed);
    int const J = 1 + static_cast<int>(rng() % 3);
    int const L = 4 + static_cast<int>(rng() % 30);
    int const w = 1 + static_cast<int>(rng() % L);
    HankelSpec const spec{w, L, J};
    ShotSignals const s = random_signals(J, L, seed);
    CxMatrix const M = random_matrix(spec.rows(), spec.cols(), seed + 1000);
    CxMatrix const H = lift(s, spec);
    ShotSignals const a = adjoint(M, spec);
    Cx lhs = (H.adjoint() * M).trace();
    Cx rhs = 0;
    for (int j = 0; j < J; ++j) {
      rhs += s[j].dot(a[j]);
    }
    CHECK(std::abs(lhs - rhs) < 1e-12 * H.norm() * M.norm());

    Eigen::VectorXi const wts = frame_weights(spec);
    ShotSignals const hh = adjoint(H, spec);
    for (int j = 0; j < J; ++j) {
      CHECK((hh[j] - s[j].cwiseProduct(wts.cast<double>().cast<Cx>())).norm() < 1e-12 * s[j].norm());
    }
    CHECK(wts.sum() == w * (L - w + 1));
  }
}

TEST_CASE("frame weight examples")
{
  Eigen::VectorXi const w = frame_weights(HankelSpec{3, 5, 1});
  CHECK(w == (Eigen::VectorXi(5) << 1, 2, 3, 2, 1).finished());
  CHECK((frame_weights(HankelSpec{7, 7, 2}).array() == 1).all());
  CHECK(adjoint(CxMatrix::Zero(3, 6), HankelSpec{3, 5, 2})[1].norm() == 0.0);
}

TEST_CASE("delift inverts lift")
{
  HankelSpec const spec{10, 64, 2};
  ShotSignals const s = random_signals(2, 64, 5);
  ShotSignals const back = delift(lift(s, spec), spec);
  for (int j = 0; j < 2; ++j) {
    CHECK((back[j] - s[j]).norm() < 1e-12 * s[j].norm());
  }
}

TEST_CASE("truncation examples")
{
  CxMatrix d = CxMatrix::Zero(2, 2);
  d(0, 0) = 3;
  d(1, 1) = 1;
  Truncation const t = truncate_svd(d, 1);
  CHECK(std::abs(t.matrix(0, 0) - Cx(3, 0)) < 1e-12);
  CHECK(t.matrix.cwiseAbs().sum() - 3 < 1e-12);
  CHECK(t.singular_values.size() == 2);

  CxVector const u = random_vector(6, 1);
  CxVector const v = random_vector(4, 2);
  CxMatrix const r1 = u * v.adjoint();
  CHECK((truncate_svd(r1, 1).matrix - r1).norm() < 1e-12 * r1.norm());
  CHECK_THROWS_AS(truncate_svd(r1, 0), ConfigError);
  CHECK((truncate_svd(r1, 99).matrix - r1).norm() < 1e-12 * r1.norm());
}

TEST_CASE("Eckart-Young residual and monotonicity")
{
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    CxMatrix const A = random_matrix(12, 8, seed);
    Truncation const full = truncate_svd(A, 1);
    Eigen::VectorXd const sv = full.singular_values;
    double prev = std::numeric_limits<double>::infinity();
    for (int r = 1; r <= 8; ++r) {
      double const res = (A - truncate_svd(A, r).matrix).norm();
      double const expect = std::sqrt(sv.tail(8 - r).squaredNorm());
      CHECK(std::abs(res - expect) < 1e-10 * A.norm());
      CHECK(res <= prev + 1e-12);
      prev = res;
    }
    for (Eigen::Index i = 1; i < sv.size(); ++i) {
      CHECK(sv(i) <= sv(i - 1));
    }
  }
}

TEST_CASE("singular values scale with the signal")
{
  HankelSpec const spec{6, 30, 2};
  ShotSignals const s = random_signals(2, 30, 3);
  ShotSignals scaled = s;
  for (auto &v : scaled) {
    v *= 2.5;
  }
  CHECK((singular_values(scaled, spec) - 2.5 * singular_values(s, spec)).norm() < 1e-12 * singular_values(scaled, spec).norm());
  CHECK(nuclear_norm(lift(s, spec)) == doctest::Approx(singular_values(s, spec).sum()).epsilon(1e-12));
}

TEST_CASE("energy rank")
{
  Eigen::VectorXd sv(3);
  sv << 10, 2, 0.1;
  CHECK(energy_rank(sv, 0.95) == 1);
  CHECK(energy_rank(sv, 0.99) == 2);
  CHECK(energy_rank(sv, 0.99995) == 3);
  CHECK(energy_rank(sv, 1.0) == 3);
}
