#include "losp/experiment.hpp"

#include "losp/fft.hpp"
#include "losp/metrics.hpp"
#include "losp/rng.hpp"

namespace losp {

ExperimentSetup experiment_setup(RunConfig const &c)
{
  ExperimentSetup s;
  s.size_ro = c.phantom.size_ro;
  s.size_pe = c.phantom.size_pe;
  s.n_regions = c.phantom.n_regions;
  s.n_shots = c.phase.n_shots;
  s.liver_order = c.phase.liver_order;
  s.other_order = c.phase.other_order;
  s.coeff_scale = c.phase.coeff_scale;
  s.zero_first_shot = c.phase.zero_first_shot;
  s.pattern = sampling_pattern_from_string(c.encoding.pattern);
  s.rate = c.encoding.rate;
  s.n_coils = c.encoding.n_coils;
  s.snr_db = c.encoding.snr_db;
  return s;
}

PhaseSampling phase_sampling(ExperimentSetup const &s)
{
  PhaseSampling p;
  p.order_range = {s.other_order, s.other_order};
  p.overrides[kLiverRegion] = {s.liver_order, s.liver_order};
  p.coeff_scale = s.coeff_scale;
  p.zero_first_shot = s.zero_first_shot;
  return p;
}

namespace {

enum Stream : std::uint64_t { kPhantom = 1, kPhase, kCoils, kNoise, kAdc };

MultiShotKSpace acquire(ShotArray const &gt, CoilMaps const &coils, ShotSampling const &sampling, double sigma,
                        std::uint64_t seed)
{
  return add_complex_noise_sigma(forward_encode(gt, coils, sampling), sigma, seed);
}

} // namespace

Instance make_instance(ExperimentSetup const &s, std::uint64_t seed)
{
  Instance in;
  in.phantom = generate_phantom(s.size_ro, s.size_pe, s.n_regions, derive_seed(seed, kPhantom));
  in.phase = sample_phase_spec(in.phantom, s.n_shots, phase_sampling(s), derive_seed(seed, kPhase));
  in.ground_truth = fft2c(apply_phase(in.phantom, in.phase));
  in.coils = simulate_coils(s.size_ro, s.size_pe, s.n_coils, derive_seed(seed, kCoils));
  in.sampling = make_shot_masks(s.n_shots, s.size_pe, s.pattern, s.rate);
  MultiShotKSpace const clean = forward_encode(in.ground_truth, in.coils, in.sampling);
  in.data = add_complex_noise(clean, s.snr_db, derive_seed(seed, kNoise));
  in.reference = shot_combine(in.ground_truth);
  return in;
}

double recon_psnr(Instance const &instance, ShotArray const &X)
{
  return normalized_psnr(shot_combine(X), instance.reference);
}

double zero_filled_psnr(Instance const &instance)
{
  return recon_psnr(instance, adjoint_encode(instance.data, instance.coils));
}

SolverConfig bind_policy(SolverConfig config, Instance const &instance)
{
  if (auto *o = std::get_if<OracleRank>(&config.policy)) {
    o->reference = instance.ground_truth;
  }
  return config;
}

SolverResult run_solver(Instance const &instance, SolverConfig const &config)
{
  return reconstruct(instance.data, instance.coils, bind_policy(config, instance));
}

RankSweepResult sweep_fixed_ranks(Instance const &instance, SolverConfig const &base, std::vector<int> ranks)
{
  if (ranks.empty()) {
    int const L = std::min(instance.phantom.size_ro, instance.phantom.size_pe);
    HankelSpec const spec{base.window, L, static_cast<int>(instance.ground_truth.size()), HankelLayout::ComplexShotConcat};
    for (int r = 1; r <= spec.max_rank(); ++r) {
      ranks.push_back(r);
    }
  }
  RankSweepResult out;
  out.ranks = ranks;
  out.best_psnr = -std::numeric_limits<double>::infinity();
  for (int r : ranks) {
    SolverConfig c = base;
    c.policy = FixedRank{r};
    double const p = recon_psnr(instance, run_solver(instance, c).X);
    out.psnr.push_back(p);
    if (p > out.best_psnr) {
      out.best_psnr = p;
      out.best_rank = r;
    }
  }
  return out;
}

AdcSetup adc_setup(RunConfig const &c)
{
  AdcSetup a;
  a.b_values = c.eval.b_values;
  a.liver_adc = c.eval.liver_adc;
  a.adc_min = c.eval.adc_min;
  a.adc_max = c.eval.adc_max;
  a.averages = c.eval.b_averages;
  a.snr_db = c.eval.adc_snr_db;
  return a;
}

AdcResult run_adc_experiment(ExperimentSetup const &s, AdcSetup const &adc, SolverConfig const &config,
                             std::uint64_t seed)
{
  if (adc.b_values.size() < 2) {
    throw ConfigError("ADC experiment needs at least two b-values");
  }
  if (!adc.averages.empty() && adc.averages.size() != adc.b_values.size()) {
    throw ConfigError("ADC experiment needs one average count per b-value");
  }
  for (int n : adc.averages) {
    if (n < 1) {
      throw ConfigError("average counts must be >= 1");
    }
  }
  AdcResult out;
  out.phantom = generate_phantom(s.size_ro, s.size_pe, s.n_regions, derive_seed(seed, kPhantom));
  Rng rng(derive_seed(seed, kAdc));
  for (auto const &region : out.phantom.regions) {
    out.region_adc.push_back(region.id == kLiverRegion ? adc.liver_adc : uniform(rng, adc.adc_min, adc.adc_max));
  }
  CoilMaps const coils = simulate_coils(s.size_ro, s.size_pe, s.n_coils, derive_seed(seed, kCoils));
  ShotSampling const sampling = make_shot_masks(s.n_shots, s.size_pe, s.pattern, s.rate);

  // Noise level fixed by the unattenuated acquisition.
  double sigma = 0;
  {
    PhaseSpec const phase = sample_phase_spec(out.phantom, s.n_shots, phase_sampling(s), derive_seed(seed, kPhase));
    RealImage const m0 = diffusion_weighted(out.phantom, out.region_adc, 0.0);
    sigma = noise_sigma_for_snr(forward_encode(fft2c(apply_phase(m0, out.phantom, phase)), coils, sampling), adc.snr_db);
  }
  for (std::size_t i = 0; i < adc.b_values.size(); ++i) {
    double const b = adc.b_values[i];
    RealImage const mag = diffusion_weighted(out.phantom, out.region_adc, b);
    int const n_avg = adc.averages_at(i);
    RealImage acc = RealImage::Zero(s.size_ro, s.size_pe);
    for (int k = 0; k < n_avg; ++k) {
      std::uint64_t const acq = i * 1024 + static_cast<std::uint64_t>(k);
      PhaseSpec const phase = sample_phase_spec(out.phantom, s.n_shots, phase_sampling(s), derive_seed(seed, kPhase, acq));
      ShotArray const gt = fft2c(apply_phase(mag, out.phantom, phase));
      MultiShotKSpace const Y = acquire(gt, coils, sampling, sigma, derive_seed(seed, kNoise, acq));
      SolverConfig c = config;
      if (auto *o = std::get_if<OracleRank>(&c.policy)) {
        o->reference = gt;
      }
      acc += shot_combine(reconstruct(Y, coils, c).X);
    }
    out.combined.push_back(acc / n_avg);
  }
  out.adc = adc_fit(out.combined, adc.b_values);
  MaskImage const &liver = out.phantom.region(kLiverRegion).mask;
  double sum = 0;
  long n = 0;
  for (Eigen::Index k = 0; k < liver.size(); ++k) {
    if (liver(k) && out.adc(k) != kAdcSentinel) {
      sum += out.adc(k);
      ++n;
    }
  }
  if (n == 0) {
    throw NumericalError("no fittable liver pixels");
  }
  out.liver_mean = sum / n;
  return out;
}

} // namespace losp
