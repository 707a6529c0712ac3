#pragma once

#include "losp/hankel.hpp"
#include "losp/phase.hpp"
#include "losp/types.hpp"

#include <cstdint>
#include <filesystem>
#include <numbers>
#include <vector>

namespace losp {

/// J shot signals of one hybrid-space line.
///
/// RO lines come from the inverse transform along phase encoding: line n is the
/// k_ro profile at image column n (length M, N lines). PE lines come from the
/// inverse transform along readout: line m is the k_pe profile at image row m
/// (length N, M lines).
struct HybridLine
{
  Direction direction = Direction::RO;
  int position = 0;
  ShotSignals signals;
  /// signals = raw / scale.
  double scale = 1.0;

  int length() const { return signals.empty() ? 0 : static_cast<int>(signals.front().size()); }
  int n_shots() const { return static_cast<int>(signals.size()); }
  double peak() const;
};

/// Hybrid-space array for a direction: inverse 1D transform across the lines.
ShotArray to_hybrid(ShotArray const &X, Direction direction);
ShotArray from_hybrid(ShotArray const &hybrid, Direction direction);

HybridLine line_from_hybrid(ShotArray const &hybrid, Direction direction, int position);
void line_to_hybrid(ShotSignals const &signals, ShotArray &hybrid, Direction direction, int position);

/// Extracts every line of one direction. With normalize, each line is divided by
/// its own peak magnitude (lines with zero peak keep scale 1).
std::vector<HybridLine> extract_lines(ShotArray const &X, Direction direction, bool normalize = true);
/// Inverse of extract_lines (undoes the scale and the 1D transform).
ShotArray assemble_lines(std::vector<HybridLine> const &lines, int size_ro, int size_pe);

/// Lift, truncate to rank r, de-lift.
ShotSignals hsvd_recover(ShotSignals const &signals, int r, HankelSpec const &spec);
ShotSignals hsvd_recover(HybridLine const &line, int r, HankelSpec const &spec);

/// 10 log10(E / ||H(clean) - H(recovered)||_F^2) with unit peak and E lifted
/// entries; exact equality returns kPsnrCap.
double line_psnr(ShotSignals const &recovered, ShotSignals const &clean, HankelSpec const &spec);

struct RankSweep
{
  int best_rank = 1;
  /// psnr[r-1] for r = 1..r_max.
  std::vector<double> psnr;
};

/// Exhaustive traversal r = 1..r_max of HSVD recovery PSNR; ties go to the smaller r.
RankSweep optimal_rank(ShotSignals const &noisy, ShotSignals const &clean, HankelSpec const &spec);
RankSweep optimal_rank(HybridLine const &noisy, HybridLine const &clean, HankelSpec const &spec);

struct TrainingSample
{
  HybridLine noisy;
  HybridLine clean;
  int label = 1;
  double snr_db = 0;
  std::uint64_t seed = 0;
  int phantom_id = 0;
};

struct LabeledDataset
{
  static constexpr std::uint32_t kVersion = 1;

  HankelSpec spec;
  std::vector<TrainingSample> samples;
  std::uint32_t version = kVersion;
};

struct SynthConfig
{
  int size = 64;        ///< square images (RO and PE lines share one length)
  int n_regions = 6;
  PhaseSampling phase{{0, 5}, std::numbers::pi, {}, false};
  std::vector<int> shot_counts{2};
  double snr_min_db = 1;
  double snr_max_db = 15;
  int n_images = 16;
  int window = 10;
  std::uint64_t seed = 0;
};

/// Phantom -> phase -> k-space -> noise -> lines -> labels for one shot count.
/// Yields n_images * 2 * size samples, RO lines before PE lines per image.
LabeledDataset synthesize_dataset(SynthConfig const &config, int n_shots);

void write_dataset(LabeledDataset const &dataset, std::filesystem::path const &path);
LabeledDataset read_dataset(std::filesystem::path const &path);

} // namespace losp
