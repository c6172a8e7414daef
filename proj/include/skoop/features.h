#pragma once

#include <array>
#include <span>
#include <vector>

#include "skoop/image.h"

namespace skoop {

/// Entries per channel: mean, std, 16 grid means, 4 DCT coefficients.
inline constexpr int kFeaturesPerChannel = 22;

/// Low-dimensional observable of an image, channel-major:
/// [mean, std, grid(0,0) .. grid(3,3), dct(0,0), dct(0,1), dct(1,0), dct(1,1)]
/// per channel.
using FeatureVector = std::vector<double>;

struct ChannelStats {
  double mean = 0.0;
  /// Population standard deviation (divides by N).
  double std = 0.0;
};

/// Row-major view of one image plane.
struct PlaneView {
  std::span<const double> data;
  int height = 0;
  int width = 0;

  double at(int y, int x) const {
    return data[static_cast<std::size_t>(y) * width + x];
  }
};

PlaneView plane_view(const Image& img, int c);

ChannelStats channel_stats(PlaneView p);

/// Means over a 4 x 4 grid of contiguous bands, row-major. Band sizes differ
/// by at most one, larger bands first. Requires H, W >= 4.
std::array<double, 16> grid_pool_means(PlaneView p);

/// Orthonormal DCT-II coefficients (0,0), (0,1), (1,0), (1,1).
/// Requires H, W >= 2.
std::array<double, 4> dct_lowfreq(PlaneView p);

/// Requires H, W >= 4. Length is 22 * channels.
FeatureVector extract_features(const Image& x);

}  // namespace skoop
