#include "losp/experiment.hpp"
#include "losp/fft.hpp"
#include "losp/label_oracle.hpp"
#include "losp/parallel.hpp"
#include "losp/solver.hpp"

#include "../support.hpp"

#include <doctest.h>

#include <cmath>

using namespace losp;
using namespace losp::test;

namespace {

ExperimentSetup small_setup(int size, SamplingPattern pattern, int coils, double snr)
{
  ExperimentSetup s;
  s.size_ro = size;
  s.size_pe = size;
  s.pattern = pattern;
  s.n_coils = coils;
  s.snr_db = snr;
  return s;
}

/// Σ_d Σ_lines F S* H* (H S F^-1 X - T_d) written out line by line.
ShotArray hankel_gradient(ShotArray const &X, SolverState const &state, double rho, bool with_targets)
{
  int const M = static_cast<int>(X.front().rows());
  int const N = static_cast<int>(X.front().cols());
  ShotArray total(X.size(), CxImage::Zero(M, N));
  for (Direction d : {Direction::RO, Direction::PE}) {
    auto const &ds = state.dir(d);
    if (!ds.active) {
      continue;
    }
    ShotArray const hybrid = to_hybrid(X, d);
    ShotArray acc(X.size(), CxImage::Zero(M, N));
    int const n = d == Direction::RO ? N : M;
    for (int p = 0; p < n; ++p) {
      CxMatrix E = lift(line_from_hybrid(hybrid, d, p).signals, ds.spec);
      if (with_targets) {
        E -= ds.Z[p] - ds.D[p] / rho;
      }
      line_to_hybrid(adjoint(E, ds.spec), acc, d, p);
    }
    ShotArray const back = from_hybrid(acc, d);
    for (std::size_t j = 0; j < X.size(); ++j) {
      total[j] += back[j];
    }
  }
  return total;
}

void randomize_aux(SolverState &state, std::uint64_t seed)
{
  for (Direction d : {Direction::RO, Direction::PE}) {
    auto &ds = state.dir(d);
    for (std::size_t p = 0; p < ds.Z.size(); ++p) {
      ds.Z[p] = random_matrix(ds.spec.rows(), ds.spec.cols(), derive_seed(seed, static_cast<int>(d), p));
      ds.D[p] = random_matrix(ds.spec.rows(), ds.spec.cols(), derive_seed(seed, 10 + static_cast<int>(d), p));
    }
  }
}

} // namespace

TEST_CASE("variant names and directions")
{
  CHECK(uses(SolverVariant::RoPe, Direction::RO));
  CHECK(uses(SolverVariant::RoPe, Direction::PE));
  CHECK(uses(SolverVariant::Ro, Direction::RO));
  CHECK_FALSE(uses(SolverVariant::Ro, Direction::PE));
  CHECK(uses(SolverVariant::Pe, Direction::PE));
  CHECK_FALSE(uses(SolverVariant::Pe, Direction::RO));
  for (auto v : {SolverVariant::RoPe, SolverVariant::Ro, SolverVariant::Pe}) {
    CHECK(solver_variant_from_string(to_string(v)) == v);
  }
  CHECK_THROWS_AS(solver_variant_from_string("diagonal"), ConfigError);
}

TEST_CASE("full-rank noiseless fully sampled fixed point")
{
  ExperimentSetup s = small_setup(32, SamplingPattern::Full, 1, std::numeric_limits<double>::infinity());
  Instance const in = make_instance(s, 3);
  for (auto v : {SolverVariant::RoPe, SolverVariant::Ro, SolverVariant::Pe}) {
    SolverConfig c;
    c.variant = v;
    c.iterations = 5;
    c.policy = FixedRank{HankelSpec{10, 32, 2}.max_rank()};
    SolverResult const r = reconstruct(in.data, in.coils, c);
    CHECK(rel_diff(r.X, in.ground_truth) < 1e-6);
  }
}

TEST_CASE("update_aux")
{
  HankelSpec const spec{5, 20, 2};
  CxMatrix const H = lift(ShotSignals{random_vector(20, 1), random_vector(20, 2)}, spec);
  CxMatrix const zero = CxMatrix::Zero(H.rows(), H.cols());
  CHECK((update_aux(H, zero, 1.0, spec.max_rank()) - H).norm() < 1e-12 * H.norm());
  CxMatrix const D = random_matrix(H.rows(), H.cols(), 3);
  CHECK((update_aux(H, D, 2.0, 3) - update_aux(H, D, 2.0, 3)).norm() == 0.0);
  double const full = nuclear_norm(H + D / 2.0);
  for (int r = 1; r <= spec.max_rank(); ++r) {
    CxMatrix const Z = update_aux(H, D, 2.0, r);
    CHECK(nuclear_norm(Z) <= full + 1e-10);
    Eigen::JacobiSVD<CxMatrix> svd(Z);
    CHECK((svd.singularValues().array() > 1e-9 * full).count() <= r);
  }
}

TEST_CASE("update_duals")
{
  Instance const in = make_instance(small_setup(16, SamplingPattern::Interleaved, 2, 10), 1);
  SolverConfig c;
  c.window = 4;
  SolverState state = init_state(in.data, in.coils, c);
  SolverState const before = state;
  // Z^0 is the lift of X^0: consensus.
  CHECK(update_duals(state, 1.0) < 1e-12);
  CHECK(state.ro.D[3].norm() == 0.0);

  randomize_aux(state, 4);
  SolverState const start = state;
  update_duals(state, 0.0);
  CHECK((state.pe.D[2] - start.pe.D[2]).norm() == 0.0);
  update_duals(state, 0.7);
  update_duals(state, 0.7);
  auto const lifted = lifted_lines(state.X, Direction::RO, state.ro.spec);
  for (int p : {0, 7, 15}) {
    CxMatrix const mismatch = lifted[p] - start.ro.Z[p];
    CHECK((state.ro.D[p] - (start.ro.D[p] + 1.4 * mismatch)).norm() < 1e-12 * mismatch.norm());
  }
  CHECK(before.iteration == 0);
}

TEST_CASE("update_image on a homogeneous system returns zero")
{
  Instance in = make_instance(small_setup(16, SamplingPattern::Interleaved, 2, 10), 2);
  for (auto &shot : in.data.data) {
    for (auto &k : shot) {
      k.setZero();
    }
  }
  SolverConfig c;
  c.window = 4;
  SolverState state = init_state(in.data, in.coils, c);
  state.X = random_shots(2, 16, 16, 5);
  update_image(state, in.data, in.coils, c);
  for (auto const &x : state.X) {
    CHECK(x.abs().maxCoeff() == 0.0);
  }
}

TEST_CASE("update_image solves the normal equations")
{
  Instance const in = make_instance(small_setup(32, SamplingPattern::Interleaved, 3, 8), 7);
  SolverConfig c;
  c.cg_iterations = 300;
  c.cg_tolerance = 1e-10;
  c.rho = 0.5;
  c.lambda = 1.3;
  SolverState state = init_state(in.data, in.coils, c);
  randomize_aux(state, 9);
  CgReport const report = update_image(state, in.data, in.coils, c);
  CHECK(report.warnings == 0);

  // Residual of the normal equations, assembled from the encoding operator and explicit per-line lifts.
  ShotArray const AtY = adjoint_encode(in.data, in.coils);
  ShotArray const AtAX = adjoint_encode(forward_encode(state.X, in.coils, in.sampling), in.coils);
  ShotArray const hank = hankel_gradient(state.X, state, c.rho, true);
  double num = 0, den = 0;
  for (std::size_t j = 0; j < state.X.size(); ++j) {
    num += (c.lambda * (AtAX[j] - AtY[j]) + c.rho * hank[j]).abs2().sum();
    den += (c.lambda * AtY[j]).abs2().sum();
  }
  CHECK(std::sqrt(num / den) < 1e-6);

  // The Hankel normal term is the frame-weight diagonal.
  ShotArray const R = random_shots(2, 32, 32, 10);
  ShotArray const direct = hankel_gradient(R, state, c.rho, false);
  RealImage const W = hankel_normal_diagonal(state, 32, 32);
  for (std::size_t j = 0; j < 2; ++j) {
    CHECK(rel_diff(CxImage(W * R[j]), direct[j]) < 1e-12);
  }
}

TEST_CASE("with lambda zero the image is the Hankel least-squares fit")
{
  Instance const in = make_instance(small_setup(16, SamplingPattern::Interleaved, 2, 8), 8);
  SolverConfig c;
  c.lambda = 0;
  c.window = 5;
  c.cg_iterations = 500;
  c.cg_tolerance = 1e-13;
  c.rho = 2.0;

  SUBCASE("single direction: per-line de-lift")
  {
    c.variant = SolverVariant::Ro;
    SolverState state = init_state(in.data, in.coils, c);
    randomize_aux(state, 1);
    update_image(state, in.data, in.coils, c);
    std::vector<HybridLine> lines;
    for (int p = 0; p < 16; ++p) {
      HybridLine l;
      l.direction = Direction::RO;
      l.position = p;
      l.signals = delift(state.ro.Z[p] - state.ro.D[p] / c.rho, state.ro.spec);
      lines.push_back(l);
    }
    CHECK(rel_diff(state.X, assemble_lines(lines, 16, 16)) < 1e-8);
  }

  SUBCASE("both directions: stationary point of the fit")
  {
    SolverState state = init_state(in.data, in.coils, c);
    randomize_aux(state, 2);
    update_image(state, in.data, in.coils, c);
    ShotArray const g = hankel_gradient(state.X, state, c.rho, true);
    ShotArray const scale = hankel_gradient(state.X, state, c.rho, false);
    double num = 0, den = 0;
    for (std::size_t j = 0; j < g.size(); ++j) {
      num += g[j].abs2().sum();
      den += scale[j].abs2().sum();
    }
    CHECK(std::sqrt(num / den) < 1e-8);
  }
}

TEST_CASE("resolve_ranks")
{
  Instance const in = make_instance(small_setup(64, SamplingPattern::Full, 1, std::numeric_limits<double>::infinity()), 5);
  SolverConfig c;
  SolverState const state = init_state(in.data, in.coils, c);
  std::vector<int> const five = resolve_ranks(state, FixedRank{5}, Direction::RO, 1.0);
  CHECK(five == std::vector<int>(64, 5));
  CHECK_THROWS_AS(resolve_ranks(state, FixedRank{999}, Direction::RO, 1.0), ConfigError);
  CHECK_THROWS_AS(resolve_ranks(state, OracleRank{}, Direction::RO, 1.0), ConfigError);

  // X^0 equals the ground truth here, so each line's oracle curve is maximal at its own rank.
  std::vector<int> const oracle = resolve_ranks(state, OracleRank{in.ground_truth}, Direction::PE, 1.0);
  auto const lines = extract_lines(in.ground_truth, Direction::PE);
  for (int p = 0; p < 64; ++p) {
    if (lines[p].scale < 1e-6) {
      continue;  // lines outside the object hold only rounding noise
    }
    RankSweep const sweep = optimal_rank(lines[p], lines[p], state.pe.spec);
    double const best = *std::max_element(sweep.psnr.begin(), sweep.psnr.end());
    CHECK(best >= 250);
    int const first = 1 + static_cast<int>(std::find(sweep.psnr.begin(), sweep.psnr.end(), best) - sweep.psnr.begin());
    CHECK(oracle[p] == first);
  }
}

TEST_CASE("shot combination")
{
  CxImage a = CxImage::Constant(4, 4, Cx(3, 0));
  CxImage b = CxImage::Constant(4, 4, Cx(0, 4));
  RealImage const c = shot_combine(ShotArray{fft2c(a), fft2c(b)});
  CHECK((c - 5).abs().maxCoeff() < 1e-12);
  CHECK((shot_combine(ShotArray{fft2c(b)}) - 4).abs().maxCoeff() < 1e-12);
  RealImage mag = RealImage::Random(6, 6).abs();
  CxImage const p1 = mag.cast<Cx>() * CxImage::Constant(6, 6, std::polar(1.0, 0.3));
  CxImage const p2 = mag.cast<Cx>() * CxImage::Constant(6, 6, std::polar(1.0, -1.1));
  CHECK((shot_combine(ShotArray{fft2c(p1), fft2c(p2)}) - std::sqrt(2.0) * mag).abs().maxCoeff() < 1e-12);
}

TEST_CASE("solver logs and residual decrease on noiseless data")
{
  Instance const in = make_instance(small_setup(32, SamplingPattern::Full, 1, std::numeric_limits<double>::infinity()), 6);
  SolverConfig c;
  c.policy = FixedRank{3};
  SolverResult const r = reconstruct(in.data, in.coils, c);
  REQUIRE(r.logs.size() == 20);
  for (auto const &log : r.logs) {
    CHECK(std::isfinite(log.objective));
    CHECK(log.objective > 0);
  }
  CHECK(r.logs.back().primal_residual < r.logs.front().primal_residual);
  CHECK(r.ranks_ro == std::vector<int>(32, 3));
}

TEST_CASE("thread count does not change the reconstruction")
{
  Instance const in = make_instance(small_setup(32, SamplingPattern::Interleaved, 3, 8), 4);
  SolverConfig c;
  c.iterations = 4;
  c.policy = OracleRank{in.ground_truth};
  SolverResult const serial = reconstruct(in.data, in.coils, c);
  set_thread_count(4);
  SolverResult const parallel = reconstruct(in.data, in.coils, c);
  set_thread_count(1);
  for (std::size_t j = 0; j < serial.X.size(); ++j) {
    CHECK((serial.X[j] == parallel.X[j]).all());
  }
  CHECK(serial.ranks_pe == parallel.ranks_pe);
}

TEST_CASE("invalid solver configuration")
{
  SolverConfig c;
  c.rho = 0;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = SolverConfig{};
  c.policy = FixedRank{0};
  CHECK_THROWS_AS(c.validate(), ConfigError);
}
