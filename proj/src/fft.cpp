#include "losp/fft.hpp"

#include <unsupported/Eigen/FFT>

#include <cmath>
#include <vector>

namespace losp {

namespace {

Eigen::FFT<double> &engine()
{
  thread_local Eigen::FFT<double> fft = [] {
    Eigen::FFT<double> f;
    f.SetFlag(Eigen::FFT<double>::Unscaled);
    return f;
  }();
  return fft;
}

// In-place centered unitary transform of a strided 1D view.
template <class View>
void transform(View &&v, bool inverse, std::vector<Cx> &in, std::vector<Cx> &out)
{
  auto const n = static_cast<Eigen::Index>(v.size());
  auto const h = n / 2;
  in.resize(n);
  for (Eigen::Index k = 0; k < n; ++k) {  // ifftshift
    in[k] = v((k + h) % n);
  }
  if (inverse) {
    engine().inv(out, in);
  } else {
    engine().fwd(out, in);
  }
  double const scale = 1.0 / std::sqrt(static_cast<double>(n));
  for (Eigen::Index k = 0; k < n; ++k) {  // fftshift
    v((k + h) % n) = out[k] * scale;
  }
}

CxImage along(CxImage arr, int axis, bool inverse)
{
  if (axis != 0 && axis != 1) {
    throw Error("fft axis must be 0 or 1");
  }
  std::vector<Cx> in, out;
  if (axis == 0) {
    for (Eigen::Index j = 0; j < arr.cols(); ++j) {
      transform(arr.col(j), inverse, in, out);
    }
  } else {
    for (Eigen::Index i = 0; i < arr.rows(); ++i) {
      transform(arr.row(i), inverse, in, out);
    }
  }
  return arr;
}

} // namespace

CxImage fft1c(CxImage const &arr, int axis) { return along(arr, axis, false); }
CxImage ifft1c(CxImage const &arr, int axis) { return along(arr, axis, true); }
CxImage fft2c(CxImage const &img) { return along(along(img, 0, false), 1, false); }
CxImage ifft2c(CxImage const &ksp) { return along(along(ksp, 0, true), 1, true); }

CxVector fft1c(CxVector const &v)
{
  CxVector out = v;
  std::vector<Cx> in, tmp;
  transform(out, false, in, tmp);
  return out;
}

CxVector ifft1c(CxVector const &v)
{
  CxVector out = v;
  std::vector<Cx> in, tmp;
  transform(out, true, in, tmp);
  return out;
}

ShotArray fft2c(ShotArray const &shots)
{
  ShotArray out;
  out.reserve(shots.size());
  for (auto const &s : shots) {
    out.push_back(fft2c(s));
  }
  return out;
}

ShotArray ifft2c(ShotArray const &shots)
{
  ShotArray out;
  out.reserve(shots.size());
  for (auto const &s : shots) {
    out.push_back(ifft2c(s));
  }
  return out;
}

} // namespace losp
