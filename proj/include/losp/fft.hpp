#pragma once

#include "losp/types.hpp"

namespace losp {

// Centered (DC at index n/2), unitary transforms. Axis 0 is readout, axis 1 is
// phase encoding.

CxImage fft2c(CxImage const &img);
CxImage ifft2c(CxImage const &ksp);
CxImage fft1c(CxImage const &arr, int axis);
CxImage ifft1c(CxImage const &arr, int axis);

CxVector fft1c(CxVector const &v);
CxVector ifft1c(CxVector const &v);

ShotArray fft2c(ShotArray const &shots);
ShotArray ifft2c(ShotArray const &shots);

} // namespace losp
