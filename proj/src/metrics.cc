#include "skoop/metrics.h"

#include <cmath>

#include "skoop/error.h"

namespace skoop {

namespace {

double squared_distance(const Image& a, const Image& b, const char* what) {
  require_same_shape(a, b, what);
  auto x = a.data();
  auto y = b.data();
  double sum = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double d = x[i] - y[i];
    sum += d * d;
  }
  return sum;
}

}  // namespace

double mse(const Image& a, const Image& b) {
  return squared_distance(a, b, "mse") / static_cast<double>(a.size());
}

Psnr psnr(const Image& a, const Image& ref, double peak) {
  if (!(peak > 0.0)) throw InvalidArgument("psnr peak must be positive");
  const double err = mse(a, ref);
  if (err == 0.0) return {kPsnrSaturationDb, true};
  return {10.0 * std::log10(peak * peak / err), false};
}

double l2_distance(const Image& a, const Image& b) {
  return std::sqrt(squared_distance(a, b, "l2_distance"));
}

}  // namespace skoop
