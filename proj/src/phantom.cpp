#include "losp/phantom.hpp"

#include "losp/rng.hpp"

#include <cmath>
#include <numbers>
#include <string>

namespace losp {

bool Ellipse::contains(double ro, double pe) const
{
  double const dx = ro - center_ro;
  double const dy = pe - center_pe;
  double const c = std::cos(rotation);
  double const s = std::sin(rotation);
  double const u = (dx * c + dy * s) / semi_ro;
  double const v = (-dx * s + dy * c) / semi_pe;
  return u * u + v * v <= 1.0;
}

LabelImage Phantom::labels() const
{
  LabelImage out = LabelImage::Zero(size_ro, size_pe);
  for (auto const &r : regions) {
    out = r.mask.select(LabelImage::Constant(size_ro, size_pe, static_cast<std::uint8_t>(r.id)), out);
  }
  return out;
}

OrganRegion const *Phantom::find(int id) const
{
  for (auto const &r : regions) {
    if (r.id == id) {
      return &r;
    }
  }
  return nullptr;
}

OrganRegion const &Phantom::region(int id) const
{
  auto const *r = find(id);
  if (!r) {
    throw Error("phantom has no region " + std::to_string(id));
  }
  return *r;
}

namespace {

MaskImage rasterize(Ellipse const &e, MaskImage const &occupied)
{
  MaskImage m(occupied.rows(), occupied.cols());
  for (Eigen::Index j = 0; j < m.cols(); ++j) {
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
      m(i, j) = !occupied(i, j) && e.contains(static_cast<double>(i), static_cast<double>(j));
    }
  }
  return m;
}

} // namespace

Phantom generate_phantom(int size_ro, int size_pe, int n_regions, std::uint64_t seed,
                         PhantomOptions const &options)
{
  if (size_ro < 8 || size_pe < 8) {
    throw ConfigError("phantom sizes must be >= 8");
  }
  if (n_regions < 1 || n_regions > 255) {
    throw ConfigError("n_regions must be in [1, 255]");
  }
  if (options.magnitudes && static_cast<int>(options.magnitudes->size()) != n_regions) {
    throw ConfigError("magnitude override count must equal n_regions");
  }

  Rng rng(derive_seed(seed, 0x5048414e));  // "PHAN"
  double const M = size_ro;
  double const N = size_pe;
  long const total = static_cast<long>(size_ro) * size_pe;
  long const min_pixels = std::max<long>(2, total / 200);
  bool const with_body = options.body_outline && n_regions >= 3;
  int const n_organs = with_body ? n_regions - 1 : n_regions;

  MaskImage occupied = MaskImage::Constant(size_ro, size_pe, false);
  Phantom ph;
  ph.size_ro = size_ro;
  ph.size_pe = size_pe;

  Ellipse body;
  if (with_body) {
    body.center_ro = (M - 1) / 2 + uniform(rng, -0.02, 0.02) * M;
    body.center_pe = (N - 1) / 2 + uniform(rng, -0.02, 0.02) * N;
    body.semi_ro = uniform(rng, 0.43, 0.48) * M;
    body.semi_pe = uniform(rng, 0.40, 0.46) * N;
    body.rotation = uniform(rng, -0.1, 0.1);
  }

  auto place = [&](int id, auto &&draw, long required) {
    for (int attempt = 0; attempt < options.placement_budget; ++attempt) {
      Ellipse e = draw();
      MaskImage m = rasterize(e, occupied);
      if (m.count() >= required) {
        occupied = occupied || m;
        ph.regions.push_back(OrganRegion{id, std::move(m), 0.0, e});
        return;
      }
    }
    throw Error("phantom generation failed: could not place region " + std::to_string(id) +
                " within the placement budget");
  };

  // Liver-like structure, upper part of the field of view.
  place(
      kLiverRegion,
      [&] {
        Ellipse e;
        e.center_ro = uniform(rng, 0.38, 0.62) * M;
        e.center_pe = uniform(rng, 0.30, 0.42) * N;
        e.semi_ro = uniform(rng, 0.24, 0.32) * M;
        e.semi_pe = uniform(rng, 0.16, 0.21) * N;
        e.rotation = uniform(rng, -0.3, 0.3);
        return e;
      },
      std::max(min_pixels, (total + 9) / 10));

  for (int id = 2; id <= n_organs; ++id) {
    place(
        id,
        [&] {
          Ellipse e;
          for (;;) {
            e.center_ro = uniform(rng, 0.12, 0.88) * M;
            e.center_pe = uniform(rng, 0.12, 0.88) * N;
            if (!with_body || body.contains(e.center_ro, e.center_pe)) {
              break;
            }
          }
          e.semi_ro = uniform(rng, 0.05, 0.15) * M;
          e.semi_pe = uniform(rng, 0.05, 0.15) * N;
          e.rotation = uniform(rng, 0.0, std::numbers::pi);
          return e;
        },
        min_pixels);
  }

  if (with_body) {
    place(n_regions, [&] { return body; }, min_pixels);
  }

  std::vector<double> values(n_regions);
  for (int i = 0; i < n_regions; ++i) {
    values[i] = uniform(rng, 0.2, 1.0);
  }
  if (options.magnitudes) {
    values = *options.magnitudes;
  }
  double peak = 0;
  for (double v : values) {
    if (v < 0 || !std::isfinite(v)) {
      throw ConfigError("region magnitudes must be finite and non-negative");
    }
    peak = std::max(peak, v);
  }
  ph.magnitude = RealImage::Zero(size_ro, size_pe);
  for (int i = 0; i < n_regions; ++i) {
    auto &r = ph.regions[i];
    r.magnitude_value = peak > 0 ? values[i] / peak : 0.0;
    ph.magnitude = r.mask.select(RealImage::Constant(size_ro, size_pe, r.magnitude_value), ph.magnitude);
  }
  return ph;
}

RealImage diffusion_weighted(Phantom const &phantom, std::span<double const> adc, double b_value)
{
  if (adc.size() != phantom.regions.size()) {
    throw ConfigError("need one ADC value per phantom region");
  }
  RealImage out = RealImage::Zero(phantom.size_ro, phantom.size_pe);
  for (std::size_t i = 0; i < adc.size(); ++i) {
    auto const &r = phantom.regions[i];
    double const v = r.magnitude_value * std::exp(-b_value * adc[i]);
    out = r.mask.select(RealImage::Constant(out.rows(), out.cols(), v), out);
  }
  return out;
}

} // namespace losp
