#include "losp/solver.hpp"

#include "losp/fft.hpp"
#include "losp/label_oracle.hpp"
#include "losp/parallel.hpp"

#include <chrono>
#include <cmath>

namespace losp {

std::string to_string(SolverVariant v)
{
  switch (v) {
  case SolverVariant::RoPe: return "ro+pe";
  case SolverVariant::Ro: return "ro";
  case SolverVariant::Pe: return "pe";
  }
  return "?";
}

SolverVariant solver_variant_from_string(std::string const &s)
{
  if (s == "ro+pe" || s == "rope" || s == "RO&PE") {
    return SolverVariant::RoPe;
  }
  if (s == "ro" || s == "RO") {
    return SolverVariant::Ro;
  }
  if (s == "pe" || s == "PE") {
    return SolverVariant::Pe;
  }
  throw ConfigError("unknown solver variant '" + s + "'");
}

bool uses(SolverVariant v, Direction d)
{
  return v == SolverVariant::RoPe || (v == SolverVariant::Ro) == (d == Direction::RO);
}

void SolverConfig::validate() const
{
  if (!(lambda >= 0) || !(rho > 0) || !(tau >= 0)) {
    throw ConfigError("solver needs lambda >= 0, rho > 0, tau >= 0");
  }
  if (iterations < 0 || window < 1 || cg_iterations < 1 || !(cg_tolerance > 0)) {
    throw ConfigError("solver iteration counts, window and CG tolerance must be positive");
  }
  if (auto const *f = std::get_if<FixedRank>(&policy); f && f->r < 1) {
    throw ConfigError("fixed rank must be >= 1");
  }
}

HankelSpec direction_spec(Direction d, int size_ro, int size_pe, int n_shots, int window)
{
  HankelSpec spec{window, d == Direction::RO ? size_ro : size_pe, n_shots, HankelLayout::ComplexShotConcat};
  spec.validate();
  return spec;
}

namespace {

int line_count(ShotArray const &X, Direction d)
{
  return static_cast<int>(d == Direction::RO ? X.front().cols() : X.front().rows());
}

std::vector<CxMatrix> lift_hybrid(ShotArray const &hybrid, Direction d, HankelSpec const &spec)
{
  int const n = line_count(hybrid, d);
  std::vector<CxMatrix> out(n);
  parallel_for(n, [&](std::size_t p) {
    out[p] = lift(line_from_hybrid(hybrid, d, static_cast<int>(p)).signals, spec);
  });
  return out;
}

HybridLine expression_line(CxMatrix const &lifted, CxMatrix const &dual, double rho, HankelSpec const &spec,
                           Direction d, int position)
{
  HybridLine line;
  line.direction = d;
  line.position = position;
  line.signals = delift(lifted + dual / rho, spec);
  double const peak = line.peak();
  if (peak > 0) {
    line.scale = peak;
    for (auto &s : line.signals) {
      s /= peak;
    }
  }
  return line;
}

std::vector<int> resolve_from(std::vector<CxMatrix> const &lifted, DirectionState const &ds, RankPolicy const &policy,
                              Direction d, double rho)
{
  int const n = static_cast<int>(lifted.size());
  int const r_max = ds.spec.max_rank();
  std::vector<int> ranks(n);
  if (auto const *f = std::get_if<FixedRank>(&policy)) {
    if (f->r < 1 || f->r > r_max) {
      throw ConfigError("fixed rank " + std::to_string(f->r) + " outside [1, " + std::to_string(r_max) + "]");
    }
    std::fill(ranks.begin(), ranks.end(), f->r);
  } else if (auto const *o = std::get_if<OracleRank>(&policy)) {
    if (o->reference.empty()) {
      throw ConfigError("oracle rank policy needs a ground-truth reference");
    }
    ShotArray const ref_hybrid = to_hybrid(o->reference, d);
    if (static_cast<int>(ref_hybrid.size()) != ds.spec.n_shots || line_count(ref_hybrid, d) != n ||
        ref_hybrid.front().size() != static_cast<Eigen::Index>(n) * ds.spec.length) {
      throw ConfigError("oracle reference shape does not match the data");
    }
    parallel_for(n, [&](std::size_t p) {
      HybridLine const expr = expression_line(lifted[p], ds.D[p], rho, ds.spec, d, static_cast<int>(p));
      HybridLine clean = line_from_hybrid(ref_hybrid, d, static_cast<int>(p));
      for (auto &s : clean.signals) {
        s /= expr.scale;
      }
      ranks[p] = optimal_rank(expr, clean, ds.spec).best_rank;
    });
  } else {
    auto const &weights = std::get<LearnedRank>(policy).weights;
    parallel_for(n, [&](std::size_t p) {
      ranks[p] = predict_rank(weights, expression_line(lifted[p], ds.D[p], rho, ds.spec, d, static_cast<int>(p)),
                              ds.spec);
    });
  }
  return ranks;
}

void z_step(DirectionState &ds, std::vector<CxMatrix> const &lifted, double rho)
{
  parallel_for(lifted.size(), [&](std::size_t p) { ds.Z[p] = update_aux(lifted[p], ds.D[p], rho, ds.ranks[p]); });
}

double dual_step(DirectionState &ds, std::vector<CxMatrix> const &lifted, double tau)
{
  std::vector<double> res(lifted.size());
  parallel_for(lifted.size(), [&](std::size_t p) {
    CxMatrix const mismatch = lifted[p] - ds.Z[p];
    res[p] = mismatch.squaredNorm();
    ds.D[p] += tau * mismatch;
  });
  double total = 0;
  for (double r : res) {
    total += r;
  }
  return total;
}

/// g(i) = Σ_c Σ_ro |fft2c(C_c)(ro, i)|^2 / (MN): the k_pe profile of |DFT(C_c)|^2.
Eigen::VectorXd coil_pe_kernel(CoilMaps const &coils)
{
  int const M = static_cast<int>(coils.maps.front().rows());
  int const N = static_cast<int>(coils.maps.front().cols());
  Eigen::VectorXd g = Eigen::VectorXd::Zero(N);
  for (auto const &c : coils.maps) {
    g += fft2c(c).abs2().colwise().sum().matrix().transpose();
  }
  return g / (static_cast<double>(M) * N);
}

/// Diagonal of A_j*A_j in k-space, as a k_pe profile.
Eigen::VectorXd encode_diagonal(Eigen::VectorXd const &g, ShotSampling const &sampling, int shot)
{
  int const N = static_cast<int>(g.size());
  Eigen::VectorXd d = Eigen::VectorXd::Zero(N);
  for (int kp = 0; kp < N; ++kp) {
    if (!sampling.masks[shot][kp]) {
      continue;
    }
    for (int k = 0; k < N; ++k) {
      d(k) += g(((kp - k) % N + N + N / 2) % N);
    }
  }
  return d;
}

double dot_re(CxImage const &a, CxImage const &b) { return (a.conjugate() * b).sum().real(); }

} // namespace

std::vector<CxMatrix> lifted_lines(ShotArray const &X, Direction d, HankelSpec const &spec)
{
  return lift_hybrid(to_hybrid(X, d), d, spec);
}

SolverState init_state(MultiShotKSpace const &Y, CoilMaps const &coils, SolverConfig const &config)
{
  config.validate();
  SolverState state;
  state.X = adjoint_encode(Y, coils);
  int const M = static_cast<int>(state.X.front().rows());
  int const N = static_cast<int>(state.X.front().cols());
  for (Direction d : {Direction::RO, Direction::PE}) {
    auto &ds = state.dir(d);
    ds.active = uses(config.variant, d);
    if (!ds.active) {
      continue;
    }
    ds.spec = direction_spec(d, M, N, Y.n_shots(), config.window);
    ds.Z = lifted_lines(state.X, d, ds.spec);
    ds.D.assign(ds.Z.size(), CxMatrix::Zero(ds.spec.rows(), ds.spec.cols()));
  }
  return state;
}

CxMatrix update_aux(CxMatrix const &lifted, CxMatrix const &dual, double rho, int r)
{
  return truncate_svd(lifted + dual / rho, r).matrix;
}

double update_duals(SolverState &state, double tau)
{
  double total = 0;
  for (Direction d : {Direction::RO, Direction::PE}) {
    auto &ds = state.dir(d);
    if (ds.active) {
      total += dual_step(ds, lifted_lines(state.X, d, ds.spec), tau);
    }
  }
  return std::sqrt(total);
}

std::vector<int> resolve_ranks(SolverState const &state, RankPolicy const &policy, Direction d, double rho)
{
  auto const &ds = state.dir(d);
  if (!ds.active) {
    throw ConfigError(std::string("direction ") + to_string(d) + " is not active in this solver variant");
  }
  return resolve_from(lifted_lines(state.X, d, ds.spec), ds, policy, d, rho);
}

RealImage hankel_normal_diagonal(SolverState const &state, int size_ro, int size_pe)
{
  RealImage W = RealImage::Zero(size_ro, size_pe);
  if (state.ro.active) {
    W.colwise() += frame_weights(state.ro.spec).cast<double>().array();
  }
  if (state.pe.active) {
    W.rowwise() += frame_weights(state.pe.spec).cast<double>().array().transpose();
  }
  return W;
}

ShotArray image_rhs(SolverState const &state, MultiShotKSpace const &Y, CoilMaps const &coils,
                    SolverConfig const &config)
{
  ShotArray rhs = adjoint_encode(Y, coils);
  for (auto &r : rhs) {
    r *= config.lambda;
  }
  int const M = static_cast<int>(rhs.front().rows());
  int const N = static_cast<int>(rhs.front().cols());
  for (Direction d : {Direction::RO, Direction::PE}) {
    auto const &ds = state.dir(d);
    if (!ds.active) {
      continue;
    }
    ShotArray hybrid(rhs.size(), CxImage::Zero(M, N));
    parallel_for(ds.Z.size(), [&](std::size_t p) {
      line_to_hybrid(adjoint(ds.Z[p] - ds.D[p] / config.rho, ds.spec), hybrid, d, static_cast<int>(p));
    });
    ShotArray const back = from_hybrid(hybrid, d);
    for (std::size_t j = 0; j < rhs.size(); ++j) {
      rhs[j] += config.rho * back[j];
    }
  }
  return rhs;
}

ShotArray image_operator(SolverState const &state, ShotArray const &X, CoilMaps const &coils,
                         ShotSampling const &sampling, SolverConfig const &config)
{
  RealImage const W = hankel_normal_diagonal(state, static_cast<int>(X.front().rows()), static_cast<int>(X.front().cols()));
  ShotArray out = normal_encode(X, coils, sampling);
  for (std::size_t j = 0; j < X.size(); ++j) {
    out[j] = config.lambda * out[j] + config.rho * W * X[j];
  }
  return out;
}

CgReport update_image(SolverState &state, MultiShotKSpace const &Y, CoilMaps const &coils, SolverConfig const &config)
{
  auto const &sampling = Y.sampling;
  int const M = static_cast<int>(state.X.front().rows());
  int const N = static_cast<int>(state.X.front().cols());
  RealImage const W = hankel_normal_diagonal(state, M, N);
  Eigen::VectorXd const g = coil_pe_kernel(coils);
  ShotArray const rhs = image_rhs(state, Y, coils, config);

  std::vector<double> rel(state.X.size(), 0.0);
  parallel_for(state.X.size(), [&](std::size_t jj) {
    int const j = static_cast<int>(jj);
    auto apply = [&](CxImage const &x) -> CxImage {
      return config.lambda * normal_encode_shot(x, coils, sampling, j) + config.rho * W * x;
    };
    RealImage precond = config.rho * W;
    precond.rowwise() += config.lambda * encode_diagonal(g, sampling, j).array().transpose();
    RealImage const inv = precond.inverse();

    CxImage &x = state.X[j];
    CxImage const &b = rhs[j];
    double const bnorm = std::sqrt(b.abs2().sum());
    if (bnorm == 0) {
      x.setZero();
      return;
    }
    CxImage r = b - apply(x);
    CxImage z = inv * r;
    CxImage p = z;
    double rz = dot_re(r, z);
    for (int it = 0; it < config.cg_iterations; ++it) {
      if (std::sqrt(r.abs2().sum()) / bnorm < config.cg_tolerance) {
        break;
      }
      CxImage const Ap = apply(p);
      double const alpha = rz / dot_re(p, Ap);
      x += alpha * p;
      r -= alpha * Ap;
      z = inv * r;
      double const rz_next = dot_re(r, z);
      p = z + (rz_next / rz) * p;
      rz = rz_next;
    }
    rel[j] = std::sqrt(r.abs2().sum()) / bnorm;
  });
  CgReport report;
  for (double v : rel) {
    report.max_relative_residual = std::max(report.max_relative_residual, v);
    report.warnings += v > config.cg_tolerance ? 1 : 0;
  }
  return report;
}

SolverResult reconstruct(MultiShotKSpace const &Y, CoilMaps const &coils, SolverConfig const &config)
{
  SolverState state = init_state(Y, coils, config);
  std::vector<CxMatrix> lifted_ro = state.ro.active ? state.ro.Z : std::vector<CxMatrix>{};
  std::vector<CxMatrix> lifted_pe = state.pe.active ? state.pe.Z : std::vector<CxMatrix>{};
  auto lifted_of = [&](Direction d) -> std::vector<CxMatrix> & { return d == Direction::RO ? lifted_ro : lifted_pe; };
  bool const fixed = std::holds_alternative<FixedRank>(config.policy);

  SolverResult result;
  for (int it = 1; it <= config.iterations; ++it) {
    auto const t0 = std::chrono::steady_clock::now();
    for (Direction d : {Direction::RO, Direction::PE}) {
      auto &ds = state.dir(d);
      if (!ds.active) {
        continue;
      }
      if (ds.ranks.empty() || (!fixed && config.resolve_every_iteration)) {
        ds.ranks = resolve_from(lifted_of(d), ds, config.policy, d, config.rho);
      }
      z_step(ds, lifted_of(d), config.rho);
    }

    CgReport const cg = update_image(state, Y, coils, config);
    result.cg_warnings += cg.warnings;

    IterationLog log;
    log.iteration = it;
    log.cg_residual = cg.max_relative_residual;
    double nuclear = 0;
    double primal = 0;
    for (Direction d : {Direction::RO, Direction::PE}) {
      auto &ds = state.dir(d);
      if (!ds.active) {
        continue;
      }
      auto &lifted = lifted_of(d);
      lifted = lifted_lines(state.X, d, ds.spec);
      primal += dual_step(ds, lifted, config.tau);
      if (config.log_objective) {
        std::vector<double> nn(lifted.size());
        parallel_for(lifted.size(), [&](std::size_t p) { nn[p] = nuclear_norm(lifted[p]); });
        for (double v : nn) {
          nuclear += v;
        }
      }
    }
    MultiShotKSpace const AX = forward_encode(state.X, coils, Y.sampling);
    double data = 0;
    for (int j = 0; j < Y.n_shots(); ++j) {
      for (int c = 0; c < Y.n_coils(); ++c) {
        data += (Y.data[j][c] - AX.data[j][c]).abs2().sum();
      }
    }
    log.data_residual = std::sqrt(data);
    log.primal_residual = std::sqrt(primal);
    log.objective = 0.5 * config.lambda * data + nuclear;
    log.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (!std::isfinite(log.objective) || !std::isfinite(log.primal_residual)) {
      throw NumericalError("non-finite solver state at iteration " + std::to_string(it));
    }
    result.logs.push_back(log);
    state.iteration = it;
  }
  for (auto const &x : state.X) {
    if (!x.allFinite()) {
      throw NumericalError("non-finite reconstruction");
    }
  }
  result.X = std::move(state.X);
  result.ranks_ro = state.ro.ranks;
  result.ranks_pe = state.pe.ranks;
  return result;
}

RealImage shot_combine(ShotArray const &X)
{
  if (X.empty()) {
    return {};
  }
  RealImage acc = RealImage::Zero(X.front().rows(), X.front().cols());
  for (auto const &x : X) {
    acc += ifft2c(x).abs2();
  }
  return acc.sqrt();
}

} // namespace losp
