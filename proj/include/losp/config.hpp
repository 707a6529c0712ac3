#pragma once

#include "losp/encoding.hpp"
#include "losp/label_oracle.hpp"
#include "losp/prompt_net.hpp"
#include "losp/solver.hpp"

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <numbers>
#include <string>
#include <vector>

namespace losp {

struct PhantomSection
{
  int size_ro = 64;
  int size_pe = 64;
  int n_regions = 6;
  bool operator==(PhantomSection const &) const = default;
};

struct PhaseSection
{
  int n_shots = 2;
  int liver_order = 5;
  int other_order = 1;
  double coeff_scale = std::numbers::pi;
  bool zero_first_shot = false;
  bool operator==(PhaseSection const &) const = default;
};

struct EncodingSection
{
  std::string pattern = "interleaved";
  double rate = 1.0;
  int n_coils = 4;
  double snr_db = 8.0;
  bool operator==(EncodingSection const &) const = default;
};

struct SolverSection
{
  double lambda = 1.0;
  int iterations = 20;
  int window = 10;
  double rho = 1.0;
  double tau = 1.0;
  int cg_iterations = 10;
  double cg_tolerance = 1e-6;
  std::string variant = "ro+pe";
  std::string policy = "fixed";  ///< fixed | oracle | learned
  int rank = 3;
  bool resolve_every_iteration = true;
  std::string weights;  ///< LOSPNN01 file for the learned policy
  bool operator==(SolverSection const &) const = default;
};

struct TrainSection
{
  int n_images = 16;
  int n_regions = 6;
  int min_order = 0;
  int max_order = 5;
  double snr_min_db = 1.0;
  double snr_max_db = 15.0;
  int epochs = 40;
  double learning_rate = 1e-3;
  double decay = 0.9;
  int decay_every = 50;
  int batch_size = 64;
  double train_fraction = 0.9;
  int filters = 16;
  int blocks = 4;
  bool operator==(TrainSection const &) const = default;
};

struct EvalSection
{
  std::vector<int> sweep_ranks;  ///< empty: every rank 1..r_max
  std::vector<double> b_values{0, 1000};
  std::vector<int> b_averages{2, 4};
  double liver_adc = 1.26e-3;
  double adc_min = 0.8e-3;
  double adc_max = 2.5e-3;
  double adc_snr_db = 12.0;
  int n_seeds = 1;
  bool operator==(EvalSection const &) const = default;
};

struct RunConfig
{
  PhantomSection phantom;
  PhaseSection phase;
  EncodingSection encoding;
  SolverSection solver;
  TrainSection train;
  EvalSection eval;
  std::uint64_t seed = 0;
  std::string output_dir = "out";
  bool operator==(RunConfig const &) const = default;
};

void to_json(nlohmann::json &j, RunConfig const &c);
/// Missing keys keep their defaults; unknown keys and type errors throw ConfigError.
RunConfig run_config_from_json(nlohmann::json const &j);
RunConfig load_run_config(std::filesystem::path const &path);
void save_run_config(RunConfig const &c, std::filesystem::path const &path);

/// Solver settings; the rank policy is Fixed{rank} and must be replaced for oracle/learned.
SolverConfig solver_config(RunConfig const &c);
SynthConfig synth_config(RunConfig const &c);
TrainConfig train_config(RunConfig const &c);

} // namespace losp
