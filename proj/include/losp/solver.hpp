#pragma once

#include "losp/encoding.hpp"
#include "losp/hankel.hpp"
#include "losp/prompt_net.hpp"
#include "losp/types.hpp"

#include <string>
#include <variant>
#include <vector>

namespace losp {

enum class SolverVariant : std::uint8_t { RoPe, Ro, Pe };

std::string to_string(SolverVariant v);
SolverVariant solver_variant_from_string(std::string const &s);
bool uses(SolverVariant v, Direction d);

struct FixedRank
{
  int r = 3;
};

/// Per-line optimal rank against a ground-truth multi-shot k-space.
struct OracleRank
{
  ShotArray reference;
};

struct LearnedRank
{
  PromptNetWeights weights;
};

using RankPolicy = std::variant<FixedRank, OracleRank, LearnedRank>;

struct SolverConfig
{
  double lambda = 1.0;
  int iterations = 20;
  int window = 10;
  double rho = 1.0;
  double tau = 1.0;
  int cg_iterations = 10;
  double cg_tolerance = 1e-6;
  SolverVariant variant = SolverVariant::RoPe;
  RankPolicy policy = FixedRank{};
  /// Oracle/Learned ranks are recomputed every iteration unless this is false.
  bool resolve_every_iteration = true;
  /// Evaluate the nuclear-norm objective for the log (one extra SVD per line).
  bool log_objective = true;

  void validate() const;
};

/// ADMM variables of one lifting direction, one entry per hybrid line.
struct DirectionState
{
  bool active = false;
  HankelSpec spec;
  std::vector<CxMatrix> Z;
  std::vector<CxMatrix> D;
  std::vector<int> ranks;
};

struct SolverState
{
  ShotArray X;
  DirectionState ro;
  DirectionState pe;
  int iteration = 0;

  DirectionState &dir(Direction d) { return d == Direction::RO ? ro : pe; }
  DirectionState const &dir(Direction d) const { return d == Direction::RO ? ro : pe; }
};

struct IterationLog
{
  int iteration = 0;
  double objective = 0;
  double primal_residual = 0;  ///< sqrt of Σ over lines of ||H S F^-1 X - Z||_F^2
  double data_residual = 0;    ///< ||Y - A X||_F
  double cg_residual = 0;      ///< worst relative residual over shots
  double wall_seconds = 0;
};

struct SolverResult
{
  ShotArray X;
  std::vector<IterationLog> logs;
  /// Ranks used in the last iteration (empty for inactive directions).
  std::vector<int> ranks_ro;
  std::vector<int> ranks_pe;
  /// Number of CG solves that stopped on the iteration budget above tolerance.
  int cg_warnings = 0;
};

/// Hankel spec of the lines of a direction for arrays of the given size.
HankelSpec direction_spec(Direction d, int size_ro, int size_pe, int n_shots, int window);

/// H S F^-1 X for every line of a direction.
std::vector<CxMatrix> lifted_lines(ShotArray const &X, Direction d, HankelSpec const &spec);

/// X^0 = adjoint_encode(Y), Z^0 = lifted lines of X^0, D^0 = 0.
SolverState init_state(MultiShotKSpace const &Y, CoilMaps const &coils, SolverConfig const &config);

/// Z = S_r(lifted + dual / rho).
CxMatrix update_aux(CxMatrix const &lifted, CxMatrix const &dual, double rho, int r);

/// D += tau (H S F^-1 X - Z) for every active direction; returns the primal residual.
double update_duals(SolverState &state, double tau);

/// Per-line ranks of a direction from the current X and D.
std::vector<int> resolve_ranks(SolverState const &state, RankPolicy const &policy, Direction d, double rho);

struct CgReport
{
  double max_relative_residual = 0;
  int warnings = 0;
};

/// Solves (λ A*A + ρ Σ_d W_d) X = λ A*Y + ρ Σ_d F_d S* H*(Z_d - D_d/ρ) per shot by
/// preconditioned CG, warm-started at the current X.
CgReport update_image(SolverState &state, MultiShotKSpace const &Y, CoilMaps const &coils, SolverConfig const &config);

/// Σ_d W_d as a k-space array: frame weights along the lifted axis of each active direction.
RealImage hankel_normal_diagonal(SolverState const &state, int size_ro, int size_pe);

/// Right-hand side of the X-update for every shot.
ShotArray image_rhs(SolverState const &state, MultiShotKSpace const &Y, CoilMaps const &coils,
                    SolverConfig const &config);

/// Left-hand operator of the X-update applied to X.
ShotArray image_operator(SolverState const &state, ShotArray const &X, CoilMaps const &coils,
                         ShotSampling const &sampling, SolverConfig const &config);

SolverResult reconstruct(MultiShotKSpace const &Y, CoilMaps const &coils, SolverConfig const &config);

/// Root-sum-of-squares over shots of the image-domain shots.
RealImage shot_combine(ShotArray const &X);

} // namespace losp
