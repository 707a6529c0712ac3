#include "losp/metrics.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <tuple>

namespace losp {

double image_psnr(RealImage const &recon, RealImage const &reference)
{
  if (recon.rows() != reference.rows() || recon.cols() != reference.cols()) {
    throw ConfigError("image_psnr: shape mismatch");
  }
  if (recon.size() == 0) {
    throw ConfigError("image_psnr: empty images");
  }
  double const err = (recon - reference).abs2().sum();
  if (err <= 0) {
    return kPsnrCap;
  }
  return std::min(kPsnrCap, 10.0 * std::log10(static_cast<double>(recon.size()) / err));
}

double normalized_psnr(RealImage const &recon, RealImage const &reference)
{
  double const peak = reference.abs().maxCoeff();
  if (!(peak > 0)) {
    throw NumericalError("reference image has zero peak");
  }
  return image_psnr(recon / peak, reference / peak);
}

RealImage adc_fit(std::span<RealImage const> signals, std::span<double const> b_values, MaskImage const *mask)
{
  if (signals.size() != b_values.size()) {
    throw ConfigError("adc_fit: one image per b-value required");
  }
  if (signals.size() < 2) {
    throw ConfigError("adc_fit: at least two b-values required");
  }
  auto const rows = signals.front().rows();
  auto const cols = signals.front().cols();
  for (auto const &s : signals) {
    if (s.rows() != rows || s.cols() != cols) {
      throw ConfigError("adc_fit: image shapes differ");
    }
  }
  RealImage adc = RealImage::Constant(rows, cols, kAdcSentinel);
  for (Eigen::Index c = 0; c < cols; ++c) {
    for (Eigen::Index r = 0; r < rows; ++r) {
      if (mask && !(*mask)(r, c)) {
        continue;
      }
      // Regress y = ln S on x = -b.
      double sx = 0, sy = 0, sxx = 0, sxy = 0;
      int n = 0;
      for (std::size_t i = 0; i < signals.size(); ++i) {
        double const s = signals[i](r, c);
        if (!(s > 0) || !std::isfinite(s)) {
          continue;
        }
        double const x = -b_values[i];
        double const y = std::log(s);
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
        ++n;
      }
      if (n < 2) {
        continue;
      }
      double const den = n * sxx - sx * sx;
      if (den <= 0) {
        continue;
      }
      adc(r, c) = (n * sxy - sx * sy) / den;
    }
  }
  return adc;
}

std::vector<SvCurveRow> sv_curve(std::span<CxVector const> signals, HankelSpec const &spec)
{
  Eigen::VectorXd const sv = singular_values(signals, spec);
  std::vector<SvCurveRow> rows(sv.size());
  double const first = sv.size() > 0 ? sv(0) : 0.0;
  for (Eigen::Index i = 0; i < sv.size(); ++i) {
    rows[i] = SvCurveRow{static_cast<int>(i + 1), sv(i), first > 0 ? sv(i) / first : 0.0};
  }
  return rows;
}

void write_sv_curve(std::vector<SvCurveRow> const &rows, std::filesystem::path const &path)
{
  std::ofstream os(path);
  if (!os) {
    throw Error("cannot open " + path.string() + " for writing");
  }
  os << "index,sigma,normalized\n";
  char buf[96];
  for (auto const &r : rows) {
    std::snprintf(buf, sizeof buf, "%d,%.17g,%.17g\n", r.index, r.sigma, r.normalized);
    os << buf;
  }
  if (!os) {
    throw Error("failed writing " + path.string());
  }
}

void export_sv_curve(std::span<CxVector const> signals, HankelSpec const &spec, std::filesystem::path const &path)
{
  write_sv_curve(sv_curve(signals, spec), path);
}

std::vector<SvCurveRow> read_sv_curve(std::filesystem::path const &path)
{
  std::ifstream is(path);
  if (!is) {
    throw ConfigError("cannot open " + path.string());
  }
  std::string line;
  std::getline(is, line);
  if (line != "index,sigma,normalized") {
    throw ConfigError(path.string() + " is not a singular-value curve");
  }
  std::vector<SvCurveRow> rows;
  while (std::getline(is, line)) {
    if (line.empty()) {
      continue;
    }
    SvCurveRow r;
    if (std::sscanf(line.c_str(), "%d,%lf,%lf", &r.index, &r.sigma, &r.normalized) != 3) {
      throw ConfigError("malformed curve row: " + line);
    }
    rows.push_back(r);
  }
  return rows;
}

Gray16 quantize(RealImage const &img, Window window)
{
  auto const [lo, hi] = window;
  Gray16 q(img.rows(), img.cols());
  double const span = hi - lo;
  for (Eigen::Index i = 0; i < img.size(); ++i) {
    double const t = span > 0 ? (img(i) - lo) / span : 0.0;
    q(i) = static_cast<std::uint16_t>(std::lround(std::clamp(t, 0.0, 1.0) * 65535.0));
  }
  return q;
}

namespace {

void write_pgm_header(std::ostream &os, Eigen::Index width, Eigen::Index height, int maxval)
{
  os << "P5\n" << width << " " << height << "\n" << maxval << "\n";
}

/// Returns (width, height, maxval) and leaves the stream at the pixel data.
std::tuple<long, long, int> read_pgm_header(std::istream &is)
{
  std::string magic;
  is >> magic;
  if (magic != "P5") {
    throw ConfigError("not a binary P5 graymap");
  }
  long dims[3];
  for (long &d : dims) {
    is >> std::ws;
    while (is.peek() == '#') {
      std::string comment;
      std::getline(is, comment);
      is >> std::ws;
    }
    if (!(is >> d)) {
      throw ConfigError("malformed graymap header");
    }
  }
  is.get();
  if (dims[0] <= 0 || dims[1] <= 0 || dims[2] <= 0 || dims[2] > 65535) {
    throw ConfigError("invalid graymap dimensions");
  }
  return {dims[0], dims[1], static_cast<int>(dims[2])};
}

} // namespace

void export_image(RealImage const &img, std::filesystem::path const &path, std::optional<Window> window)
{
  if (img.size() == 0) {
    throw ConfigError("export_image: empty image");
  }
  if (!img.allFinite()) {
    throw NumericalError("export_image: non-finite pixels");
  }
  Window const w = window.value_or(Window{img.minCoeff(), img.maxCoeff()});
  Gray16 const q = quantize(img, w);
  std::ofstream os(path, std::ios::binary);
  if (!os) {
    throw Error("cannot open " + path.string() + " for writing");
  }
  write_pgm_header(os, q.cols(), q.rows(), 65535);
  for (Eigen::Index r = 0; r < q.rows(); ++r) {
    for (Eigen::Index c = 0; c < q.cols(); ++c) {
      unsigned char const bytes[2] = {static_cast<unsigned char>(q(r, c) >> 8), static_cast<unsigned char>(q(r, c) & 0xff)};
      os.write(reinterpret_cast<char const *>(bytes), 2);
    }
  }
  if (!os) {
    throw Error("failed writing " + path.string());
  }
}

Gray16 read_pgm16(std::filesystem::path const &path)
{
  std::ifstream is(path, std::ios::binary);
  if (!is) {
    throw ConfigError("cannot open " + path.string());
  }
  auto const [width, height, maxval] = read_pgm_header(is);
  if (maxval < 256) {
    throw ConfigError(path.string() + " is not a 16-bit graymap");
  }
  Gray16 q(height, width);
  for (long r = 0; r < height; ++r) {
    for (long c = 0; c < width; ++c) {
      unsigned char bytes[2];
      is.read(reinterpret_cast<char *>(bytes), 2);
      q(r, c) = static_cast<std::uint16_t>((bytes[0] << 8) | bytes[1]);
    }
  }
  if (!is) {
    throw ConfigError(path.string() + " is truncated");
  }
  return q;
}

void export_label_image(LabelImage const &labels, std::filesystem::path const &path)
{
  if (labels.size() == 0) {
    throw ConfigError("export_label_image: empty image");
  }
  std::ofstream os(path, std::ios::binary);
  if (!os) {
    throw Error("cannot open " + path.string() + " for writing");
  }
  write_pgm_header(os, labels.cols(), labels.rows(), 255);
  for (Eigen::Index r = 0; r < labels.rows(); ++r) {
    for (Eigen::Index c = 0; c < labels.cols(); ++c) {
      os.put(static_cast<char>(labels(r, c)));
    }
  }
  if (!os) {
    throw Error("failed writing " + path.string());
  }
}

LabelImage read_label_image(std::filesystem::path const &path)
{
  std::ifstream is(path, std::ios::binary);
  if (!is) {
    throw ConfigError("cannot open " + path.string());
  }
  auto const [width, height, maxval] = read_pgm_header(is);
  if (maxval > 255) {
    throw ConfigError(path.string() + " is not an 8-bit graymap");
  }
  LabelImage labels(height, width);
  for (long r = 0; r < height; ++r) {
    for (long c = 0; c < width; ++c) {
      labels(r, c) = static_cast<std::uint8_t>(is.get());
    }
  }
  if (!is) {
    throw ConfigError(path.string() + " is truncated");
  }
  return labels;
}

} // namespace losp
