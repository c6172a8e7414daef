#include "skoop/features.h"

#include <cmath>
#include <numbers>

#include "skoop/error.h"

namespace skoop {

namespace {

// Start index of band i when n items are split into 4 bands, larger first.
int band_start(int n, int i) {
  const int base = n / 4, extra = n % 4;
  return i * base + std::min(i, extra);
}

}  // namespace

PlaneView plane_view(const Image& img, int c) {
  return {img.plane(c), img.height(), img.width()};
}

ChannelStats channel_stats(PlaneView p) {
  if (p.data.empty()) throw InvalidArgument("channel_stats: empty plane");
  const double n = static_cast<double>(p.data.size());
  double sum = 0.0;
  for (double v : p.data) sum += v;
  const double mean = sum / n;
  double sq = 0.0;
  for (double v : p.data) sq += (v - mean) * (v - mean);
  return {mean, std::sqrt(sq / n)};
}

std::array<double, 16> grid_pool_means(PlaneView p) {
  if (p.height < 4 || p.width < 4) {
    throw ShapeError("grid_pool_means: plane " + std::to_string(p.height) +
                     "x" + std::to_string(p.width) + " smaller than 4x4");
  }
  std::array<double, 16> out{};
  for (int gy = 0; gy < 4; ++gy) {
    const int y0 = band_start(p.height, gy), y1 = band_start(p.height, gy + 1);
    for (int gx = 0; gx < 4; ++gx) {
      const int x0 = band_start(p.width, gx), x1 = band_start(p.width, gx + 1);
      double sum = 0.0;
      for (int y = y0; y < y1; ++y) {
        for (int x = x0; x < x1; ++x) sum += p.at(y, x);
      }
      out[gy * 4 + gx] = sum / ((y1 - y0) * (x1 - x0));
    }
  }
  return out;
}

std::array<double, 4> dct_lowfreq(PlaneView p) {
  if (p.height < 2 || p.width < 2) {
    throw ShapeError("dct_lowfreq: plane smaller than 2x2");
  }
  const int h = p.height, w = p.width;
  // Only basis index 1 needs a cosine table; index 0 is constant.
  std::vector<double> cos_y(h), cos_x(w);
  for (int y = 0; y < h; ++y) cos_y[y] = std::cos(std::numbers::pi * (2 * y + 1) / (2.0 * h));
  for (int x = 0; x < w; ++x) cos_x[x] = std::cos(std::numbers::pi * (2 * x + 1) / (2.0 * w));

  double s00 = 0.0, s01 = 0.0, s10 = 0.0, s11 = 0.0;
  for (int y = 0; y < h; ++y) {
    double row = 0.0, row_c = 0.0;
    for (int x = 0; x < w; ++x) {
      const double v = p.at(y, x);
      row += v;
      row_c += v * cos_x[x];
    }
    s00 += row;
    s01 += row_c;
    s10 += row * cos_y[y];
    s11 += row_c * cos_y[y];
  }
  const double a0y = std::sqrt(1.0 / h), a1y = std::sqrt(2.0 / h);
  const double a0x = std::sqrt(1.0 / w), a1x = std::sqrt(2.0 / w);
  return {a0y * a0x * s00, a0y * a1x * s01, a1y * a0x * s10, a1y * a1x * s11};
}

FeatureVector extract_features(const Image& x) {
  if (x.height() < 4 || x.width() < 4) {
    throw ShapeError("extract_features: image " + x.shape().to_string() +
                     " smaller than 4x4");
  }
  FeatureVector out;
  out.reserve(static_cast<std::size_t>(kFeaturesPerChannel) * x.channels());
  for (int c = 0; c < x.channels(); ++c) {
    const PlaneView p = plane_view(x, c);
    const ChannelStats s = channel_stats(p);
    out.push_back(s.mean);
    out.push_back(s.std);
    for (double g : grid_pool_means(p)) out.push_back(g);
    for (double d : dct_lowfreq(p)) out.push_back(d);
  }
  return out;
}

}  // namespace skoop
