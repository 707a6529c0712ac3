#include "losp/label_oracle.hpp"

#include "losp/encoding.hpp"
#include "losp/fft.hpp"
#include "losp/parallel.hpp"
#include "losp/phantom.hpp"
#include "losp/rng.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>

namespace losp {

double HybridLine::peak() const
{
  double p = 0;
  for (auto const &s : signals) {
    if (s.size() > 0) {
      p = std::max(p, s.cwiseAbs().maxCoeff());
    }
  }
  return p;
}

ShotArray to_hybrid(ShotArray const &X, Direction direction)
{
  // RO lines run along k_ro, so the transform goes along phase encoding (axis 1).
  int const axis = direction == Direction::RO ? 1 : 0;
  ShotArray out(X.size());
  parallel_for(X.size(), [&](std::size_t j) { out[j] = ifft1c(X[j], axis); });
  return out;
}

ShotArray from_hybrid(ShotArray const &hybrid, Direction direction)
{
  int const axis = direction == Direction::RO ? 1 : 0;
  ShotArray out(hybrid.size());
  parallel_for(hybrid.size(), [&](std::size_t j) { out[j] = fft1c(hybrid[j], axis); });
  return out;
}

HybridLine line_from_hybrid(ShotArray const &hybrid, Direction direction, int position)
{
  HybridLine line;
  line.direction = direction;
  line.position = position;
  line.signals.reserve(hybrid.size());
  for (auto const &h : hybrid) {
    line.signals.push_back(direction == Direction::RO ? CxVector(h.col(position)) : CxVector(h.row(position).transpose()));
  }
  return line;
}

void line_to_hybrid(ShotSignals const &signals, ShotArray &hybrid, Direction direction, int position)
{
  for (std::size_t j = 0; j < hybrid.size(); ++j) {
    if (direction == Direction::RO) {
      hybrid[j].col(position) = signals[j].array();
    } else {
      hybrid[j].row(position) = signals[j].array().transpose();
    }
  }
}

std::vector<HybridLine> extract_lines(ShotArray const &X, Direction direction, bool normalize)
{
  if (X.empty()) {
    return {};
  }
  ShotArray const hybrid = to_hybrid(X, direction);
  int const count = static_cast<int>(direction == Direction::RO ? X.front().cols() : X.front().rows());
  std::vector<HybridLine> lines(count);
  for (int p = 0; p < count; ++p) {
    HybridLine line = line_from_hybrid(hybrid, direction, p);
    if (normalize) {
      double const peak = line.peak();
      if (peak > 0) {
        line.scale = peak;
        for (auto &s : line.signals) {
          s /= peak;
        }
      }
    }
    lines[p] = std::move(line);
  }
  return lines;
}

ShotArray assemble_lines(std::vector<HybridLine> const &lines, int size_ro, int size_pe)
{
  if (lines.empty()) {
    return {};
  }
  Direction const dir = lines.front().direction;
  int const J = lines.front().n_shots();
  ShotArray hybrid(J, CxImage::Zero(size_ro, size_pe));
  for (auto const &line : lines) {
    ShotSignals raw = line.signals;
    for (auto &s : raw) {
      s *= line.scale;
    }
    line_to_hybrid(raw, hybrid, dir, line.position);
  }
  return from_hybrid(hybrid, dir);
}

ShotSignals hsvd_recover(ShotSignals const &signals, int r, HankelSpec const &spec)
{
  return delift(truncate_svd(lift(signals, spec), r).matrix, spec);
}

ShotSignals hsvd_recover(HybridLine const &line, int r, HankelSpec const &spec)
{
  return hsvd_recover(line.signals, r, spec);
}

namespace {

// ||H(a) - H(b)||_F^2 without forming either lift (H*H is the weight diagonal).
double lifted_error(ShotSignals const &a, ShotSignals const &b, Eigen::VectorXd const &weights)
{
  double err = 0;
  for (std::size_t j = 0; j < a.size(); ++j) {
    err += (weights.array() * (a[j] - b[j]).array().abs2()).sum();
  }
  return err;
}

double psnr_from_error(double err, long entries)
{
  if (err <= 0) {
    return kPsnrCap;
  }
  return std::min(kPsnrCap, 10.0 * std::log10(static_cast<double>(entries) / err));
}

} // namespace

double line_psnr(ShotSignals const &recovered, ShotSignals const &clean, HankelSpec const &spec)
{
  if (recovered.size() != clean.size()) {
    throw ConfigError("recovered and clean lines differ in shot count");
  }
  for (std::size_t j = 0; j < clean.size(); ++j) {
    if (recovered[j].size() != spec.length || clean[j].size() != spec.length) {
      throw ConfigError("line length does not match the Hankel spec");
    }
  }
  Eigen::VectorXd const w = frame_weights(spec).cast<double>();
  return psnr_from_error(lifted_error(recovered, clean, w), spec.entries());
}

RankSweep optimal_rank(ShotSignals const &noisy, ShotSignals const &clean, HankelSpec const &spec)
{
  Svd const svd = thin_svd(lift(noisy, spec));
  Eigen::VectorXd const w = frame_weights(spec).cast<double>();
  int const r_max = spec.max_rank();
  int const available = static_cast<int>(svd.S.size());

  RankSweep sweep;
  sweep.psnr.resize(r_max);
  ShotSignals recovered(noisy.size(), CxVector::Zero(spec.length));
  double best = -std::numeric_limits<double>::infinity();
  for (int r = 1; r <= r_max; ++r) {
    if (r <= available) {
      CxMatrix const component = (svd.S(r - 1) * svd.U.col(r - 1)) * svd.V.col(r - 1).adjoint();
      ShotSignals const part = delift(component, spec);
      for (std::size_t j = 0; j < recovered.size(); ++j) {
        recovered[j] += part[j];
      }
    }
    double const p = psnr_from_error(lifted_error(recovered, clean, w), spec.entries());
    sweep.psnr[r - 1] = p;
    if (p > best) {
      best = p;
      sweep.best_rank = r;
    }
  }
  return sweep;
}

RankSweep optimal_rank(HybridLine const &noisy, HybridLine const &clean, HankelSpec const &spec)
{
  return optimal_rank(noisy.signals, clean.signals, spec);
}

LabeledDataset synthesize_dataset(SynthConfig const &config, int n_shots)
{
  if (config.n_images < 1) {
    throw ConfigError("n_images must be >= 1");
  }
  if (!(config.snr_min_db <= config.snr_max_db)) {
    throw ConfigError("snr range must satisfy min <= max");
  }
  LabeledDataset ds;
  ds.spec = HankelSpec{config.window, config.size, n_shots, HankelLayout::ComplexShotConcat};
  ds.spec.validate();

  int const per_image = 2 * config.size;
  std::vector<std::vector<TrainingSample>> per(config.n_images);
  parallel_for(config.n_images, [&](std::size_t img) {
    std::uint64_t const seed = derive_seed(config.seed, 0x53594e54 + static_cast<std::uint64_t>(n_shots), img);
    Rng rng(seed);
    double const snr = uniform(rng, config.snr_min_db, config.snr_max_db);
    Phantom const ph = generate_phantom(config.size, config.size, config.n_regions, derive_seed(seed, 1));
    PhaseSpec const phase = sample_phase_spec(ph, n_shots, config.phase, derive_seed(seed, 2));
    ShotArray const X_gt = fft2c(apply_phase(ph, phase));
    MultiShotKSpace const noisy = add_complex_noise(as_fully_sampled(X_gt), snr, derive_seed(seed, 3));
    ShotArray X_inp;
    for (auto const &shot : noisy.data) {
      X_inp.push_back(shot.front());
    }

    auto &out = per[img];
    out.reserve(per_image);
    for (Direction dir : {Direction::RO, Direction::PE}) {
      auto clean_lines = extract_lines(X_gt, dir, false);
      auto noisy_lines = extract_lines(X_inp, dir, false);
      for (std::size_t p = 0; p < clean_lines.size(); ++p) {
        TrainingSample s;
        s.noisy = std::move(noisy_lines[p]);
        s.clean = std::move(clean_lines[p]);
        double const peak = s.noisy.peak();
        double const scale = peak > 0 ? peak : 1.0;
        for (auto *line : {&s.noisy, &s.clean}) {
          line->scale = scale;
          for (auto &sig : line->signals) {
            sig /= scale;
          }
        }
        s.label = optimal_rank(s.noisy, s.clean, ds.spec).best_rank;
        s.snr_db = snr;
        s.seed = seed;
        s.phantom_id = static_cast<int>(img);
        out.push_back(std::move(s));
      }
    }
  });
  for (auto &v : per) {
    for (auto &s : v) {
      ds.samples.push_back(std::move(s));
    }
  }
  return ds;
}

namespace {

constexpr char kDatasetMagic[8] = {'L', 'O', 'S', 'P', 'D', 'S', '0', '1'};

template <class T>
void put(std::ostream &os, T v)
{
  static_assert(std::endian::native == std::endian::little, "little-endian host required");
  os.write(reinterpret_cast<char const *>(&v), sizeof(T));
}

template <class T>
T get(std::istream &is)
{
  T v{};
  is.read(reinterpret_cast<char *>(&v), sizeof(T));
  if (!is) {
    throw ConfigError("dataset file is truncated");
  }
  return v;
}

void put_signals(std::ostream &os, ShotSignals const &s)
{
  for (auto const &v : s) {
    for (Eigen::Index k = 0; k < v.size(); ++k) {
      put(os, static_cast<float>(v(k).real()));
      put(os, static_cast<float>(v(k).imag()));
    }
  }
}

ShotSignals get_signals(std::istream &is, int J, int L)
{
  ShotSignals s(J, CxVector(L));
  for (auto &v : s) {
    for (int k = 0; k < L; ++k) {
      float const re = get<float>(is);
      float const im = get<float>(is);
      v(k) = Cx(re, im);
    }
  }
  return s;
}

} // namespace

void write_dataset(LabeledDataset const &dataset, std::filesystem::path const &path)
{
  std::ofstream os(path, std::ios::binary);
  if (!os) {
    throw Error("cannot open " + path.string() + " for writing");
  }
  auto const &spec = dataset.spec;
  os.write(kDatasetMagic, 8);
  put<std::uint32_t>(os, dataset.version);
  put<std::uint32_t>(os, spec.n_shots);
  put<std::uint32_t>(os, spec.window);
  put<std::uint32_t>(os, spec.length);
  put<std::uint64_t>(os, dataset.samples.size());
  for (auto const &s : dataset.samples) {
    if (s.noisy.n_shots() != spec.n_shots || s.noisy.length() != spec.length) {
      throw ConfigError("sample does not match the dataset Hankel spec");
    }
    put<std::uint8_t>(os, static_cast<std::uint8_t>(s.noisy.direction));
    put<std::uint32_t>(os, static_cast<std::uint32_t>(s.noisy.position));
    put<float>(os, static_cast<float>(s.snr_db));
    put<std::uint16_t>(os, static_cast<std::uint16_t>(s.label));
    put_signals(os, s.clean.signals);
    put_signals(os, s.noisy.signals);
  }
  if (!os) {
    throw Error("failed writing " + path.string());
  }
}

LabeledDataset read_dataset(std::filesystem::path const &path)
{
  std::ifstream is(path, std::ios::binary);
  if (!is) {
    throw ConfigError("cannot open dataset " + path.string());
  }
  char magic[8];
  is.read(magic, 8);
  if (!is || std::memcmp(magic, kDatasetMagic, 8) != 0) {
    throw ConfigError(path.string() + " is not a LOSPDS01 dataset");
  }
  LabeledDataset ds;
  ds.version = get<std::uint32_t>(is);
  if (ds.version != LabeledDataset::kVersion) {
    throw ConfigError("unsupported dataset version " + std::to_string(ds.version));
  }
  ds.spec.n_shots = static_cast<int>(get<std::uint32_t>(is));
  ds.spec.window = static_cast<int>(get<std::uint32_t>(is));
  ds.spec.length = static_cast<int>(get<std::uint32_t>(is));
  ds.spec.validate();
  auto const count = get<std::uint64_t>(is);
  int const J = ds.spec.n_shots;
  int const L = ds.spec.length;
  for (std::uint64_t i = 0; i < count; ++i) {
    TrainingSample s;
    auto const dir = static_cast<Direction>(get<std::uint8_t>(is));
    auto const pos = static_cast<int>(get<std::uint32_t>(is));
    s.snr_db = get<float>(is);
    s.label = get<std::uint16_t>(is);
    s.clean.signals = get_signals(is, J, L);
    s.noisy.signals = get_signals(is, J, L);
    for (auto *line : {&s.clean, &s.noisy}) {
      line->direction = dir;
      line->position = pos;
    }
    if (s.label < 1 || s.label > ds.spec.max_rank()) {
      throw ConfigError("dataset label out of range");
    }
    ds.samples.push_back(std::move(s));
  }
  return ds;
}

} // namespace losp
