#pragma once

#include "skoop/image.h"

namespace skoop {

/// PSNR reported when the two images are identical.
inline constexpr double kPsnrSaturationDb = 99.0;

struct Psnr {
  double db = 0.0;
  /// True when mse == 0; `db` then holds kPsnrSaturationDb.
  bool exact = false;
};

double mse(const Image& a, const Image& b);
Psnr psnr(const Image& a, const Image& ref, double peak = 1.0);
double l2_distance(const Image& a, const Image& b);

}  // namespace skoop
