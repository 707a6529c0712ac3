#include "losp/encoding.hpp"

#include "losp/fft.hpp"
#include "losp/parallel.hpp"
#include "losp/rng.hpp"

#include <cmath>
#include <limits>
#include <numbers>

namespace losp {

std::string to_string(SamplingPattern p)
{
  switch (p) {
  case SamplingPattern::Interleaved: return "interleaved";
  case SamplingPattern::InterleavedUniform: return "interleaved+uniform";
  case SamplingPattern::InterleavedPartialFourier: return "interleaved+partial-fourier";
  case SamplingPattern::Full: return "full";
  }
  return "?";
}

SamplingPattern sampling_pattern_from_string(std::string const &s)
{
  for (auto p : {SamplingPattern::Interleaved, SamplingPattern::InterleavedUniform,
                 SamplingPattern::InterleavedPartialFourier, SamplingPattern::Full}) {
    if (s == to_string(p)) {
      return p;
    }
  }
  throw ConfigError("unknown sampling pattern '" + s + "'");
}

std::vector<int> ShotSampling::lines(int shot) const
{
  std::vector<int> out;
  for (int k = 0; k < n_pe; ++k) {
    if (masks[shot][k]) {
      out.push_back(k);
    }
  }
  return out;
}

long ShotSampling::sampled_count(int shot) const
{
  return std::count(masks[shot].begin(), masks[shot].end(), true);
}

ShotSampling make_shot_masks(int n_shots, int n_pe, SamplingPattern pattern, double rate)
{
  if (n_shots < 1 || n_shots > n_pe) {
    throw ConfigError("need 1 <= n_shots <= n_pe");
  }
  if (!(rate > 0 && rate <= 1)) {
    throw ConfigError("sampling rate must be in (0, 1]");
  }
  ShotSampling s;
  s.n_shots = n_shots;
  s.n_pe = n_pe;
  s.pattern = pattern;
  s.rate = rate;
  s.masks.assign(n_shots, std::vector<bool>(n_pe, false));

  switch (pattern) {
  case SamplingPattern::Full:
    for (auto &m : s.masks) {
      std::fill(m.begin(), m.end(), true);
    }
    break;
  case SamplingPattern::Interleaved:
    for (int k = 0; k < n_pe; ++k) {
      s.masks[k % n_shots][k] = true;
    }
    break;
  case SamplingPattern::InterleavedUniform: {
    double const inv = 1.0 / rate;
    int const R = static_cast<int>(std::lround(inv));
    if (std::abs(inv - R) > 1e-9 || R * n_shots > n_pe) {
      throw ConfigError("uniform undersampling needs rate = 1/R with R integer and R*n_shots <= n_pe");
    }
    // Acquired lines 0, R, 2R, ... are distributed round-robin over the shots.
    for (int t = 0; t * R < n_pe; ++t) {
      s.masks[t % n_shots][t * R] = true;
    }
    break;
  }
  case SamplingPattern::InterleavedPartialFourier: {
    int const keep = static_cast<int>(std::lround(rate * n_pe));
    if (keep <= n_pe / 2 || keep < n_shots) {
      throw ConfigError("partial Fourier rate must keep more than half of the lines");
    }
    for (int k = n_pe - keep; k < n_pe; ++k) {
      s.masks[k % n_shots][k] = true;
    }
    break;
  }
  }
  return s;
}

void to_json(nlohmann::json &j, ShotSampling const &s)
{
  j = nlohmann::json::object();
  j["n_shots"] = s.n_shots;
  j["n_pe"] = s.n_pe;
  j["pattern"] = to_string(s.pattern);
  j["rate"] = s.rate;
  auto lines = nlohmann::json::array();
  for (int i = 0; i < s.n_shots; ++i) {
    lines.push_back(s.lines(i));
  }
  j["lines"] = std::move(lines);
}

void from_json(nlohmann::json const &j, ShotSampling &s)
{
  try {
    s = ShotSampling{};
    s.n_shots = j.at("n_shots").get<int>();
    s.n_pe = j.at("n_pe").get<int>();
    s.pattern = sampling_pattern_from_string(j.at("pattern").get<std::string>());
    s.rate = j.at("rate").get<double>();
    auto const lines = j.at("lines").get<std::vector<std::vector<int>>>();
    if (static_cast<int>(lines.size()) != s.n_shots || s.n_pe < 1) {
      throw ConfigError("sampling document has inconsistent shot count");
    }
    s.masks.assign(s.n_shots, std::vector<bool>(s.n_pe, false));
    for (int i = 0; i < s.n_shots; ++i) {
      for (int k : lines[i]) {
        if (k < 0 || k >= s.n_pe) {
          throw ConfigError("sampled line index out of range");
        }
        s.masks[i][k] = true;
      }
    }
  } catch (nlohmann::json::exception const &e) {
    throw ConfigError(std::string("malformed sampling document: ") + e.what());
  }
}

CoilMaps simulate_coils(int size_ro, int size_pe, int n_coils, std::uint64_t seed)
{
  if (n_coils < 1) {
    throw ConfigError("n_coils must be >= 1");
  }
  CoilMaps coils;
  if (n_coils == 1) {
    coils.maps.push_back(CxImage::Constant(size_ro, size_pe, Cx(1, 0)));
    return coils;
  }
  Rng rng(derive_seed(seed, 0x434f494c));  // "COIL"
  double const M = size_ro;
  double const N = size_pe;
  for (int c = 0; c < n_coils; ++c) {
    double const angle = 2 * std::numbers::pi * c / n_coils + uniform(rng, -0.2, 0.2);
    double const cr = (M - 1) / 2 + 0.6 * M * std::cos(angle);
    double const cp = (N - 1) / 2 + 0.6 * N * std::sin(angle);
    double const width = uniform(rng, 0.45, 0.6) * std::max(M, N);
    double const phase0 = uniform(rng, -std::numbers::pi, std::numbers::pi);
    double const slope_ro = uniform(rng, -1.0, 1.0);
    double const slope_pe = uniform(rng, -1.0, 1.0);
    CxImage map(size_ro, size_pe);
    for (int j = 0; j < size_pe; ++j) {
      for (int i = 0; i < size_ro; ++i) {
        double const d2 = (i - cr) * (i - cr) + (j - cp) * (j - cp);
        double const mag = std::exp(-d2 / (2 * width * width));
        double const ph = phase0 + slope_ro * (i / M - 0.5) + slope_pe * (j / N - 0.5);
        map(i, j) = std::polar(mag, ph);
      }
    }
    coils.maps.push_back(std::move(map));
  }
  RealImage sos = RealImage::Zero(size_ro, size_pe);
  for (auto const &m : coils.maps) {
    sos += m.abs2();
  }
  sos = sos.sqrt();
  for (auto &m : coils.maps) {
    m /= sos.cast<Cx>();
  }
  return coils;
}

namespace {

void check_shapes(ShotArray const &X, CoilMaps const &coils, ShotSampling const &sampling)
{
  if (X.empty() || static_cast<int>(X.size()) != sampling.n_shots) {
    throw ConfigError("shot count does not match the sampling");
  }
  if (coils.maps.empty()) {
    throw ConfigError("no coil maps");
  }
  for (auto const &x : X) {
    if (x.cols() != sampling.n_pe || x.rows() != coils.maps.front().rows() || x.cols() != coils.maps.front().cols()) {
      throw ConfigError("k-space, coil and sampling shapes disagree");
    }
  }
}

void apply_mask(CxImage &k, ShotSampling const &sampling, int shot)
{
  for (int p = 0; p < sampling.n_pe; ++p) {
    if (!sampling.masks[shot][p]) {
      k.col(p).setZero();
    }
  }
}

} // namespace

MultiShotKSpace forward_encode(ShotArray const &X, CoilMaps const &coils, ShotSampling const &sampling)
{
  check_shapes(X, coils, sampling);
  int const J = sampling.n_shots;
  int const C = coils.n_coils();
  ShotArray images(J);
  parallel_for(J, [&](std::size_t j) { images[j] = ifft2c(X[j]); });
  MultiShotKSpace Y;
  Y.sampling = sampling;
  Y.data.assign(J, std::vector<CxImage>(C));
  parallel_for(static_cast<std::size_t>(J) * C, [&](std::size_t idx) {
    int const j = static_cast<int>(idx / C);
    int const c = static_cast<int>(idx % C);
    CxImage k = fft2c(CxImage(coils.maps[c] * images[j]));
    apply_mask(k, sampling, j);
    Y.data[j][c] = std::move(k);
  });
  return Y;
}

ShotArray adjoint_encode(MultiShotKSpace const &Y, CoilMaps const &coils)
{
  int const J = Y.n_shots();
  int const C = Y.n_coils();
  if (J != Y.sampling.n_shots || C != coils.n_coils()) {
    throw ConfigError("k-space data does not match coils/sampling");
  }
  ShotArray X(J);
  parallel_for(J, [&](std::size_t j) {
    CxImage acc = CxImage::Zero(coils.maps.front().rows(), coils.maps.front().cols());
    for (int c = 0; c < C; ++c) {
      CxImage k = Y.data[j][c];
      if (k.rows() != acc.rows() || k.cols() != acc.cols()) {
        throw ConfigError("k-space and coil map shapes disagree");
      }
      apply_mask(k, Y.sampling, static_cast<int>(j));
      acc += coils.maps[c].conjugate() * ifft2c(k);
    }
    X[j] = fft2c(acc);
  });
  return X;
}

CxImage normal_encode_shot(CxImage const &X, CoilMaps const &coils, ShotSampling const &sampling, int shot)
{
  CxImage const img = ifft2c(X);
  CxImage acc = CxImage::Zero(img.rows(), img.cols());
  for (int c = 0; c < coils.n_coils(); ++c) {
    CxImage k = fft2c(CxImage(coils.maps[c] * img));
    apply_mask(k, sampling, shot);
    acc += coils.maps[c].conjugate() * ifft2c(k);
  }
  return fft2c(acc);
}

ShotArray normal_encode(ShotArray const &X, CoilMaps const &coils, ShotSampling const &sampling)
{
  check_shapes(X, coils, sampling);
  ShotArray out(X.size());
  parallel_for(X.size(), [&](std::size_t j) { out[j] = normal_encode_shot(X[j], coils, sampling, static_cast<int>(j)); });
  return out;
}

double sampled_signal_power(MultiShotKSpace const &data)
{
  double energy = 0;
  long count = 0;
  for (int j = 0; j < data.n_shots(); ++j) {
    for (auto const &k : data.data[j]) {
      for (int p = 0; p < data.sampling.n_pe; ++p) {
        if (data.sampling.masks[j][p]) {
          energy += k.col(p).abs2().sum();
          count += k.rows();
        }
      }
    }
  }
  return count > 0 ? energy / count : 0.0;
}

double noise_sigma_for_snr(MultiShotKSpace const &data, double snr_db)
{
  if (std::isinf(snr_db) && snr_db > 0) {
    return 0.0;
  }
  if (!std::isfinite(snr_db)) {
    throw ConfigError("snr_db must be finite or +inf");
  }
  double const power = sampled_signal_power(data);
  if (!(power > 0)) {
    throw NumericalError("cannot add noise at a finite SNR to data with zero energy");
  }
  return std::sqrt(power / std::pow(10.0, snr_db / 10.0));
}

MultiShotKSpace add_complex_noise_sigma(MultiShotKSpace const &data, double sigma, std::uint64_t seed)
{
  MultiShotKSpace out = data;
  if (sigma == 0) {
    return out;
  }
  double const component = sigma / std::sqrt(2.0);
  int const C = data.n_coils();
  parallel_for(static_cast<std::size_t>(data.n_shots()) * C, [&](std::size_t idx) {
    int const j = static_cast<int>(idx / C);
    Rng rng(derive_seed(seed, 0x4e4f4953, idx));  // "NOIS"
    std::normal_distribution<double> g(0.0, component);
    auto &k = out.data[j][idx % C];
    for (int p = 0; p < data.sampling.n_pe; ++p) {
      if (!data.sampling.masks[j][p]) {
        continue;
      }
      for (Eigen::Index i = 0; i < k.rows(); ++i) {
        double const re = g(rng);
        double const im = g(rng);
        k(i, p) += Cx(re, im);
      }
    }
  });
  return out;
}

MultiShotKSpace add_complex_noise(MultiShotKSpace const &data, double snr_db, std::uint64_t seed)
{
  return add_complex_noise_sigma(data, noise_sigma_for_snr(data, snr_db), seed);
}

MultiShotKSpace as_fully_sampled(ShotArray const &X)
{
  if (X.empty()) {
    throw ConfigError("no shots");
  }
  MultiShotKSpace Y;
  Y.sampling = make_shot_masks(static_cast<int>(X.size()), static_cast<int>(X.front().cols()), SamplingPattern::Full);
  for (auto const &x : X) {
    Y.data.push_back({x});
  }
  return Y;
}

} // namespace losp
