#pragma once

#include "losp/hankel.hpp"
#include "losp/types.hpp"

#include <filesystem>
#include <optional>
#include <span>
#include <utility>
#include <vector>

namespace losp {

/// 10 log10(n_pixels / ||recon - reference||^2), capped at kPsnrCap. The
/// reference is assumed peak-normalized.
double image_psnr(RealImage const &recon, RealImage const &reference);
/// image_psnr after dividing both images by the reference peak.
double normalized_psnr(RealImage const &recon, RealImage const &reference);

inline constexpr double kAdcSentinel = -1.0;

/// Per-pixel least-squares fit of ln S = ln S0 - b D. Pixels with fewer than two
/// positive samples get kAdcSentinel. `mask`, when given, limits the fit.
RealImage adc_fit(std::span<RealImage const> signals, std::span<double const> b_values,
                  MaskImage const *mask = nullptr);

struct SvCurveRow
{
  int index = 0;  ///< 1-based
  double sigma = 0;
  double normalized = 0;
};

std::vector<SvCurveRow> sv_curve(std::span<CxVector const> signals, HankelSpec const &spec);
/// CSV with header "index,sigma,normalized", numbers in %.17g.
void export_sv_curve(std::span<CxVector const> signals, HankelSpec const &spec, std::filesystem::path const &path);
void write_sv_curve(std::vector<SvCurveRow> const &rows, std::filesystem::path const &path);
std::vector<SvCurveRow> read_sv_curve(std::filesystem::path const &path);

using Window = std::pair<double, double>;
using Gray16 = Eigen::Array<std::uint16_t, Eigen::Dynamic, Eigen::Dynamic>;

/// Linear quantization of [lo, hi] onto 0..65535 (clamped).
Gray16 quantize(RealImage const &img, Window window);
/// 16-bit binary P5 graymap, one file row per readout index (size_pe wide,
/// size_ro tall). Auto window is [min, max].
void export_image(RealImage const &img, std::filesystem::path const &path, std::optional<Window> window = {});
Gray16 read_pgm16(std::filesystem::path const &path);

/// 8-bit P5 graymap of region ids.
void export_label_image(LabelImage const &labels, std::filesystem::path const &path);
LabelImage read_label_image(std::filesystem::path const &path);

} // namespace losp
