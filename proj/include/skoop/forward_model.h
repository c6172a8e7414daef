#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "skoop/image.h"

namespace skoop {

/// 2-D filter taps, row-major. The tap at (height/2, width/2) is the origin.
struct Kernel {
  int height = 0;
  int width = 0;
  std::vector<double> taps;

  double at(int r, int c) const { return taps[r * width + c]; }
  double sum() const;

  static Kernel identity();
  /// Normalized, centered Gaussian of odd `size`.
  static Kernel gaussian(int size, double sigma);
};

/// Rescales taps to sum 1. Throws if the sum is zero or non-finite.
Kernel normalized(Kernel k);

/// Parses the text kernel format: "H W" header, H rows of W floats,
/// '#' comment lines ignored. Normalizes when `blur` is set.
Kernel parse_kernel(const std::string& text, bool blur);
Kernel load_kernel(const std::filesystem::path& path, bool blur);

/// Linear measurement operator with circular boundaries.
///
/// Deblur: A x = k * x. Superresolve: A x = S_s(k * x), where S_s keeps rows
/// and columns 0, s, 2s, ...
class ForwardModel {
 public:
  enum class Kind { kDeblur, kSuperresolve };

  static ForwardModel deblur(Kernel k);
  static ForwardModel superresolve(Kernel k, int factor);
  static ForwardModel identity() { return deblur(Kernel::identity()); }

  Kind kind() const { return kind_; }
  const Kernel& kernel() const { return kernel_; }
  int factor() const { return factor_; }

  /// Measurement-space shape for a clean image of shape `x`.
  Shape output_shape(const Shape& x) const;
  /// Clean-image shape for a measurement of shape `y`.
  Shape input_shape(const Shape& y) const;

 private:
  ForwardModel(Kind kind, Kernel k, int factor);

  Kind kind_;
  Kernel kernel_;
  int factor_ = 1;
};

/// Per-channel 2-D circular convolution; output has the input's shape.
Image convolve_circular(const Image& x, const Kernel& k);
/// Adjoint of convolve_circular (circular correlation).
Image correlate_circular(const Image& x, const Kernel& k);

Image apply_forward(const ForwardModel& m, const Image& x);
Image apply_adjoint(const ForwardModel& m, const Image& y);
/// A^T (A x - b), the gradient of 0.5 ||A x - b||^2.
Image data_gradient(const ForwardModel& m, const Image& x, const Image& b);

struct Measurement {
  Image b;
  double noise_sigma = 0.0;
  std::uint64_t seed = 0;
};

Measurement simulate_measurement(const ForwardModel& m, const Image& x_clean,
                                 double sigma_n, std::uint64_t seed);

/// Power-iteration estimate of lambda_max(A^T A) for images of shape `x`.
/// The Rayleigh quotient is non-decreasing in `iterations` and never
/// exceeds the true value.
double estimate_gradient_lipschitz(const ForwardModel& m, const Shape& x,
                                   int iterations, std::uint64_t seed);

/// Periodic Catmull-Rom upsampling by `factor`. Output sample (s*i, s*j)
/// coincides with input sample (i, j).
Image bicubic_upsample(const Image& y, int factor);

}  // namespace skoop
