#include "skoop/denoiser.h"

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "skoop/error.h"

namespace skoop {

namespace {

void require_finite(const Image& x) {
  if (!x.all_finite()) throw NonFiniteError("denoiser input is not finite");
}

// Folds a centered kernel onto an h x w torus so that circular convolution
// with the result equals circular convolution with the original.
Kernel fold_to(const Kernel& k, int h, int w) {
  if (k.height <= h && k.width <= w) return k;
  const int fh = std::min(k.height, h), fw = std::min(k.width, w);
  Kernel out{fh, fw, std::vector<double>(static_cast<std::size_t>(fh) * fw)};
  const int cy = k.height / 2, cx = k.width / 2;
  for (int u = 0; u < k.height; ++u) {
    for (int v = 0; v < k.width; ++v) {
      const int ry = (((u - cy) + fh / 2) % fh + fh) % fh;
      const int rx = (((v - cx) + fw / 2) % fw + fw) % fw;
      out.taps[ry * fw + rx] += k.at(u, v);
    }
  }
  return out;
}

Image smooth(const Image& x, const Kernel& k) {
  return convolve_circular(x, fold_to(k, x.height(), x.width()));
}

class IdentityDenoiser : public Denoiser {
 public:
  Image denoise(const Image& x) override {
    require_finite(x);
    return x;
  }
  std::string name() const override { return "identity"; }
};

class KernelDenoiser : public Denoiser {
 public:
  KernelDenoiser(Kernel k, std::string name)
      : kernel_(std::move(k)), name_(std::move(name)) {}

  Image denoise(const Image& x) override {
    require_finite(x);
    return smooth(x, kernel_);
  }
  std::string name() const override { return name_; }

 private:
  Kernel kernel_;
  std::string name_;
};

class MedianDenoiser : public Denoiser {
 public:
  explicit MedianDenoiser(int radius) : radius_(radius) {}

  Image denoise(const Image& x) override {
    require_finite(x);
    Image out(x.shape());
    const int h = x.height(), w = x.width();
    std::vector<double> window;
    window.reserve(static_cast<std::size_t>(2 * radius_ + 1) * (2 * radius_ + 1));
    for (int c = 0; c < x.channels(); ++c) {
      for (int y = 0; y < h; ++y) {
        for (int xx = 0; xx < w; ++xx) {
          window.clear();
          for (int dy = -radius_; dy <= radius_; ++dy) {
            const int sy = std::clamp(y + dy, 0, h - 1);
            for (int dx = -radius_; dx <= radius_; ++dx) {
              window.push_back(x.at(c, sy, std::clamp(xx + dx, 0, w - 1)));
            }
          }
          auto mid = window.begin() + window.size() / 2;
          std::nth_element(window.begin(), mid, window.end());
          out.at(c, y, xx) = *mid;
        }
      }
    }
    return out;
  }
  std::string name() const override { return "median"; }

 private:
  int radius_;
};

class UnsharpExpansive : public Denoiser {
 public:
  UnsharpExpansive(double alpha, double sigma)
      : alpha_(alpha), kernel_(smoothing_kernel(sigma)) {}

  Image denoise(const Image& x) override {
    require_finite(x);
    const Image blurred = smooth(x, kernel_);
    Image out(x.shape());
    auto src = x.data();
    auto low = blurred.data();
    auto dst = out.data();
    for (std::size_t i = 0; i < src.size(); ++i) {
      dst[i] = src[i] + alpha_ * (src[i] - low[i]);
    }
    return out;
  }
  std::string name() const override { return "unsharp"; }

 private:
  double alpha_;
  Kernel kernel_;
};

// Quarter turn: out(y, x) = in(x, n - 1 - y) on an n x n plane.
Image rotate90(const Image& x) {
  const int n = x.height();
  Image out(x.shape());
  for (int c = 0; c < x.channels(); ++c) {
    for (int y = 0; y < n; ++y) {
      for (int xx = 0; xx < n; ++xx) out.at(c, y, xx) = x.at(c, xx, n - 1 - y);
    }
  }
  return out;
}

Image rotate180(const Image& x) {
  Image out(x.shape());
  const int h = x.height(), w = x.width();
  for (int c = 0; c < x.channels(); ++c) {
    for (int y = 0; y < h; ++y) {
      for (int xx = 0; xx < w; ++xx) {
        out.at(c, y, xx) = x.at(c, h - 1 - y, w - 1 - xx);
      }
    }
  }
  return out;
}

Image flip_horizontal(const Image& x) {
  Image out(x.shape());
  const int h = x.height(), w = x.width();
  for (int c = 0; c < x.channels(); ++c) {
    for (int y = 0; y < h; ++y) {
      for (int xx = 0; xx < w; ++xx) out.at(c, y, xx) = x.at(c, y, w - 1 - xx);
    }
  }
  return out;
}

Image rotate(const Image& x, int quarter_turns) {
  const int k = ((quarter_turns % 4) + 4) % 4;
  if (k == 0) return x;
  if (k == 2) return rotate180(x);
  if (x.height() != x.width()) {
    throw InvalidArgument("quarter-turn rotation needs a square image, got " +
                          x.shape().to_string());
  }
  Image out = rotate90(x);
  for (int i = 1; i < k; ++i) out = rotate90(out);
  return out;
}

}  // namespace

Kernel smoothing_kernel(double sigma) {
  if (!(sigma > 0.0)) throw InvalidArgument("smoothing sigma must be > 0");
  const int radius = static_cast<int>(std::ceil(4.0 * sigma));
  return Kernel::gaussian(2 * radius + 1, sigma);
}

std::unique_ptr<Denoiser> make_identity_denoiser() {
  return std::make_unique<IdentityDenoiser>();
}

std::unique_ptr<Denoiser> make_gaussian_smooth(double sigma) {
  return std::make_unique<KernelDenoiser>(smoothing_kernel(sigma), "gaussian");
}

std::unique_ptr<Denoiser> make_box_blur(int radius) {
  if (radius < 0) throw InvalidArgument("box radius must be >= 0");
  const int size = 2 * radius + 1;
  Kernel k{size, size, std::vector<double>(static_cast<std::size_t>(size) * size,
                                           1.0 / (size * size))};
  return std::make_unique<KernelDenoiser>(std::move(k), "box");
}

std::unique_ptr<Denoiser> make_median(int radius) {
  if (radius < 1) throw InvalidArgument("median radius must be >= 1");
  return std::make_unique<MedianDenoiser>(radius);
}

std::unique_ptr<Denoiser> make_unsharp_expansive(double alpha, double sigma) {
  if (!(alpha > 0.0)) throw InvalidArgument("unsharp alpha must be > 0");
  return std::make_unique<UnsharpExpansive>(alpha, sigma);
}

Image apply_transform(const Image& x, Transform g) {
  return rotate(g.flip ? flip_horizontal(x) : x, g.rotations);
}

Image apply_inverse_transform(const Image& x, Transform g) {
  Image unrotated = rotate(x, -g.rotations);
  return g.flip ? flip_horizontal(unrotated) : unrotated;
}

EquivariantDenoiser::EquivariantDenoiser(std::shared_ptr<Denoiser> inner,
                                         std::uint64_t seed)
    : inner_(std::move(inner)), seed_(seed) {
  if (!inner_) throw InvalidArgument("equivariant_wrap: null denoiser");
}

Transform EquivariantDenoiser::transform_for_call(std::uint64_t call,
                                                  bool square) const {
  std::seed_seq seq{static_cast<std::uint32_t>(seed_),
                    static_cast<std::uint32_t>(seed_ >> 32),
                    static_cast<std::uint32_t>(call),
                    static_cast<std::uint32_t>(call >> 32)};
  std::mt19937_64 rng(seq);
  if (square) {
    const int g = std::uniform_int_distribution<int>(0, 7)(rng);
    return {g % 4, g >= 4};
  }
  // identity, 180-degree rotation, horizontal flip, vertical flip
  static constexpr Transform kRectangular[] = {
      {0, false}, {2, false}, {0, true}, {2, true}};
  return kRectangular[std::uniform_int_distribution<int>(0, 3)(rng)];
}

Image EquivariantDenoiser::denoise(const Image& x) {
  require_finite(x);
  const Transform g = transform_for_call(calls_++, x.height() == x.width());
  return apply_inverse_transform(inner_->denoise(apply_transform(x, g)), g);
}

std::string EquivariantDenoiser::name() const {
  return "equivariant(" + inner_->name() + ")";
}

std::unique_ptr<Denoiser> equivariant_wrap(std::shared_ptr<Denoiser> inner,
                                           std::uint64_t seed) {
  return std::make_unique<EquivariantDenoiser>(std::move(inner), seed);
}

Image denoiser_residual(Denoiser& d, const Image& x) {
  return subtract(x, d.denoise(x));
}

}  // namespace skoop
