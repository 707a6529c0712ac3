#pragma once

#include "losp/types.hpp"

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

namespace losp {

/// Ellipse in pixel units; rotation in radians, counter-clockwise from the readout axis.
struct Ellipse
{
  double center_ro = 0;
  double center_pe = 0;
  double semi_ro = 1;
  double semi_pe = 1;
  double rotation = 0;

  bool contains(double ro, double pe) const;
};

struct OrganRegion
{
  int id = 0;
  MaskImage mask;
  double magnitude_value = 0;
  Ellipse shape;

  long pixel_count() const { return mask.count(); }
};

/// Region 1 is always the large liver-like structure.
inline constexpr int kLiverRegion = 1;

struct Phantom
{
  int size_ro = 0;
  int size_pe = 0;
  std::vector<OrganRegion> regions;
  RealImage magnitude;

  /// 0 = background, otherwise the region id.
  LabelImage labels() const;
  OrganRegion const *find(int id) const;
  OrganRegion const &region(int id) const;
};

struct PhantomOptions
{
  /// Raw (pre-normalization) magnitude per region, overriding the random draw.
  std::optional<std::vector<double>> magnitudes;
  /// When n_regions >= 3 the last region is a body outline enclosing the organs.
  bool body_outline = true;
  int placement_budget = 400;
};

/// Seeded random-ellipse phantom with pairwise disjoint organ masks. Later regions
/// are clipped by earlier ones. Throws Error when placement fails within budget.
Phantom generate_phantom(int size_ro, int size_pe, int n_regions, std::uint64_t seed,
                         PhantomOptions const &options = {});

/// Magnitude image attenuated per region by exp(-b * adc[o]), no renormalization.
/// adc is indexed by region position (regions[i] uses adc[i]); units s/mm^2 and mm^2/s.
RealImage diffusion_weighted(Phantom const &phantom, std::span<double const> adc, double b_value);

} // namespace losp
