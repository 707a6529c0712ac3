#pragma once

#include "losp/types.hpp"

#include <json.hpp>

#include <cstdint>
#include <string>
#include <vector>

namespace losp {

enum class SamplingPattern : std::uint8_t {
  Interleaved,                ///< shot j acquires lines j, j+J, j+2J, ...
  InterleavedUniform,         ///< every R-th line acquired (R = 1/rate), interleaved across shots
  InterleavedPartialFourier,  ///< interleaved lines within an asymmetric high-index window
  Full,                       ///< every shot acquires every line
};

std::string to_string(SamplingPattern p);
SamplingPattern sampling_pattern_from_string(std::string const &s);

/// Per-shot phase-encoding line masks. Line indices are 0-based.
struct ShotSampling
{
  int n_shots = 1;
  int n_pe = 0;
  SamplingPattern pattern = SamplingPattern::Interleaved;
  double rate = 1.0;
  std::vector<std::vector<bool>> masks;  // [shot][pe line]

  std::vector<int> lines(int shot) const;
  long sampled_count(int shot) const;
  bool sampled(int shot, int line) const { return masks[shot][line]; }
};

ShotSampling make_shot_masks(int n_shots, int n_pe, SamplingPattern pattern, double rate = 1.0);

void to_json(nlohmann::json &j, ShotSampling const &s);
void from_json(nlohmann::json const &j, ShotSampling &s);

struct CoilMaps
{
  std::vector<CxImage> maps;

  int n_coils() const { return static_cast<int>(maps.size()); }
};

/// Smooth Gaussian-lobe sensitivities around the field of view, normalized so that
/// Σ_c |C_c|^2 = 1 at every pixel. One coil gives the constant map 1.
CoilMaps simulate_coils(int size_ro, int size_pe, int n_coils, std::uint64_t seed);

/// Acquired data indexed [shot][coil], each a (readout, phase-encoding) k-space array.
struct MultiShotKSpace
{
  std::vector<std::vector<CxImage>> data;
  ShotSampling sampling;

  int n_shots() const { return static_cast<int>(data.size()); }
  int n_coils() const { return data.empty() ? 0 : static_cast<int>(data.front().size()); }
};

/// Y_jc = U_j F (C_c ⊙ F^-1 X_j).
MultiShotKSpace forward_encode(ShotArray const &X, CoilMaps const &coils, ShotSampling const &sampling);
/// Exact adjoint of forward_encode: X_j = Σ_c F (conj(C_c) ⊙ F^-1 U_j Y_jc).
ShotArray adjoint_encode(MultiShotKSpace const &Y, CoilMaps const &coils);
/// adjoint_encode(forward_encode(X)) without materializing Y.
ShotArray normal_encode(ShotArray const &X, CoilMaps const &coils, ShotSampling const &sampling);
CxImage normal_encode_shot(CxImage const &X, CoilMaps const &coils, ShotSampling const &sampling, int shot);

/// Mean |y|^2 over sampled entries.
double sampled_signal_power(MultiShotKSpace const &data);
/// Standard deviation of the complex noise giving `snr_db` over sampled entries.
double noise_sigma_for_snr(MultiShotKSpace const &data, double snr_db);

/// Adds circular complex Gaussian noise on sampled entries only. snr_db = +inf
/// returns the input unchanged.
MultiShotKSpace add_complex_noise(MultiShotKSpace const &data, double snr_db, std::uint64_t seed);
MultiShotKSpace add_complex_noise_sigma(MultiShotKSpace const &data, double sigma, std::uint64_t seed);

/// Fully sampled single-coil wrapper around target k-space.
MultiShotKSpace as_fully_sampled(ShotArray const &X);

} // namespace losp
