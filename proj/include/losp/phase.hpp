#pragma once

#include "losp/phantom.hpp"
#include "losp/types.hpp"

#include <json.hpp>

#include <cstdint>
#include <map>
#include <numbers>
#include <utility>
#include <vector>

namespace losp {

using OrderRange = std::pair<int, int>;

/// Polynomial phase of one region: coeffs[shot] is packed by degree l, then k,
/// with entry (l, k) multiplying x^k y^(l-k). x runs along readout, y along
/// phase encoding, both normalized to [-1, 1].
struct RegionPhase
{
  int region_id = 0;
  int order = 0;
  std::vector<std::vector<double>> coeffs;

  double coeff(int shot, int l, int k) const;
  double &coeff(int shot, int l, int k);
};

struct PhaseSpec
{
  int n_shots = 1;
  std::vector<RegionPhase> regions;

  static constexpr std::size_t coeff_count(int order) { return static_cast<std::size_t>(order + 1) * (order + 2) / 2; }
  static constexpr std::size_t coeff_index(int l, int k) { return static_cast<std::size_t>(l) * (l + 1) / 2 + k; }

  RegionPhase const *find(int region_id) const;
  void validate() const;
};

struct PhaseSampling
{
  OrderRange order_range{1, 1};
  double coeff_scale = std::numbers::pi;
  /// Per-region order ranges replacing order_range.
  std::map<int, OrderRange> overrides;
  bool zero_first_shot = false;
};

/// Independent order per region, uniform in its range; coefficients uniform in
/// [-coeff_scale, coeff_scale] per shot.
PhaseSpec sample_phase_spec(Phantom const &phantom, int n_shots, PhaseSampling const &sampling, std::uint64_t seed);

/// Phase angle (radians) of shot `shot` (0-based); zero outside every region.
RealImage render_shot_phase(PhaseSpec const &spec, Phantom const &phantom, int shot);

/// shot_j = magnitude * exp(i * phase_j).
ShotArray apply_phase(Phantom const &phantom, PhaseSpec const &spec);
ShotArray apply_phase(RealImage const &magnitude, Phantom const &phantom, PhaseSpec const &spec);

void to_json(nlohmann::json &j, PhaseSpec const &spec);
void from_json(nlohmann::json const &j, PhaseSpec &spec);

} // namespace losp
