#pragma once

#include <cstdint>
#include <memory>
#include <string>

#include "skoop/forward_model.h"
#include "skoop/image.h"

namespace skoop {

/// The denoising operator D of a RED iteration.
///
/// Implementations may hold state (call counters, a subprocess connection),
/// so `denoise` is non-const and a single instance must not be shared across
/// concurrently running solvers.
class Denoiser {
 public:
  virtual ~Denoiser() = default;

  /// Shape-preserving. Throws NonFiniteError on non-finite input.
  virtual Image denoise(const Image& x) = 0;
  virtual std::string name() const = 0;
};

std::unique_ptr<Denoiser> make_identity_denoiser();
/// Circular Gaussian smoothing; support radius ceil(4 sigma), taps sum to 1.
std::unique_ptr<Denoiser> make_gaussian_smooth(double sigma);
/// Circular (2r+1)^2 mean filter.
std::unique_ptr<Denoiser> make_box_blur(int radius);
/// (2r+1)^2 median with neighborhoods clamped to the image edge.
std::unique_ptr<Denoiser> make_median(int radius);
/// x + alpha (x - G_sigma x): a sharpening map with Lipschitz constant > 1.
std::unique_ptr<Denoiser> make_unsharp_expansive(double alpha, double sigma);

/// Gaussian kernel used by the smoothing denoisers.
Kernel smoothing_kernel(double sigma);

/// Element of the dihedral group of the square acting on image planes:
/// `rotations` quarter turns applied after an optional horizontal flip.
struct Transform {
  int rotations = 0;
  bool flip = false;

  friend bool operator==(const Transform&, const Transform&) = default;
};

Image apply_transform(const Image& x, Transform g);
Image apply_inverse_transform(const Image& x, Transform g);

/// Wraps `inner` so each call computes g^-1(D(g(x))) for a random g.
///
/// g is drawn uniformly from the 8-element dihedral group for square images
/// and from {identity, 180-degree rotation, horizontal flip, vertical flip}
/// otherwise. The draw depends only on (seed, call index).
class EquivariantDenoiser : public Denoiser {
 public:
  EquivariantDenoiser(std::shared_ptr<Denoiser> inner, std::uint64_t seed);

  Image denoise(const Image& x) override;
  std::string name() const override;

  Transform transform_for_call(std::uint64_t call, bool square) const;
  std::uint64_t calls() const { return calls_; }

 private:
  std::shared_ptr<Denoiser> inner_;
  std::uint64_t seed_;
  std::uint64_t calls_ = 0;
};

std::unique_ptr<Denoiser> equivariant_wrap(std::shared_ptr<Denoiser> inner,
                                           std::uint64_t seed);

/// x - D(x)
Image denoiser_residual(Denoiser& d, const Image& x);

}  // namespace skoop
