#pragma once

#include "losp/config.hpp"
#include "losp/encoding.hpp"
#include "losp/phantom.hpp"
#include "losp/phase.hpp"
#include "losp/solver.hpp"

#include <cstdint>
#include <vector>

namespace losp {

/// One synthetic acquisition: phantom, per-shot phase, coils, mask and noisy data.
struct ExperimentSetup
{
  int size_ro = 64;
  int size_pe = 64;
  int n_regions = 6;
  int n_shots = 2;
  int liver_order = 5;
  int other_order = 1;
  double coeff_scale = std::numbers::pi;
  bool zero_first_shot = false;
  SamplingPattern pattern = SamplingPattern::Interleaved;
  double rate = 1.0;
  int n_coils = 4;
  double snr_db = 8.0;
};

ExperimentSetup experiment_setup(RunConfig const &c);
PhaseSampling phase_sampling(ExperimentSetup const &s);

struct Instance
{
  Phantom phantom;
  PhaseSpec phase;
  ShotArray ground_truth;  ///< noiseless, fully sampled shot k-space
  CoilMaps coils;
  ShotSampling sampling;
  MultiShotKSpace data;
  RealImage reference;  ///< shot_combine(ground_truth)
};

Instance make_instance(ExperimentSetup const &s, std::uint64_t seed);

/// Image PSNR of shot_combine(X) against the instance reference, both scaled by the reference peak.
double recon_psnr(Instance const &instance, ShotArray const &X);
double zero_filled_psnr(Instance const &instance);

/// Fills in instance-dependent policy data (the oracle reference).
SolverConfig bind_policy(SolverConfig config, Instance const &instance);
SolverResult run_solver(Instance const &instance, SolverConfig const &config);

struct RankSweepResult
{
  std::vector<int> ranks;
  std::vector<double> psnr;
  int best_rank = 1;
  double best_psnr = 0;
};

/// Fixed-rank reconstructions over `ranks` (empty: 1..r_max of the shorter direction).
RankSweepResult sweep_fixed_ranks(Instance const &instance, SolverConfig const &base, std::vector<int> ranks = {});

struct AdcSetup
{
  std::vector<double> b_values{0, 1000};
  /// Acquisitions per b-value, magnitude-averaged after reconstruction; empty means one each.
  std::vector<int> averages{2, 4};
  double liver_adc = 1.26e-3;
  double adc_min = 0.8e-3;
  double adc_max = 2.5e-3;
  /// SNR of the b = 0 acquisition; the same noise level is used for every b.
  double snr_db = 12.0;

  int averages_at(std::size_t i) const { return averages.empty() ? 1 : averages[i]; }
};

AdcSetup adc_setup(RunConfig const &c);

struct AdcResult
{
  RealImage adc;
  std::vector<RealImage> combined;  ///< one shot-combined reconstruction per b-value
  std::vector<double> region_adc;   ///< true ADC per phantom region
  double liver_mean = 0;            ///< mean fitted ADC over fittable liver pixels
  Phantom phantom;
};

/// Per b-value and average: attenuate the phantom, draw fresh shot phases, acquire,
/// reconstruct, shot-combine; averages are then combined and ADC fitted per pixel.
AdcResult run_adc_experiment(ExperimentSetup const &s, AdcSetup const &adc, SolverConfig const &config,
                             std::uint64_t seed);

} // namespace losp
