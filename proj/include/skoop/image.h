#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace skoop {

/// Extents of a planar image: channels x height x width.
struct Shape {
  int channels = 0;
  int height = 0;
  int width = 0;

  std::size_t size() const {
    return static_cast<std::size_t>(channels) * height * width;
  }
  std::size_t plane_size() const {
    return static_cast<std::size_t>(height) * width;
  }
  std::string to_string() const;

  friend bool operator==(const Shape&, const Shape&) = default;
};

/// Planar multi-channel raster of doubles in (channel, row, column) order.
///
/// Samples are nominally in [0, 1] but are never clamped here; iterates are
/// allowed to leave the range. Construction rejects non-finite samples.
class Image {
 public:
  Image() = default;
  /// Zero-filled image.
  explicit Image(Shape shape);
  Image(Shape shape, double fill);
  Image(Shape shape, std::vector<double> data);

  const Shape& shape() const { return shape_; }
  int channels() const { return shape_.channels; }
  int height() const { return shape_.height; }
  int width() const { return shape_.width; }
  std::size_t size() const { return data_.size(); }

  std::span<const double> data() const { return data_; }
  std::span<double> data() { return data_; }
  std::span<const double> plane(int c) const;
  std::span<double> plane(int c);

  double at(int c, int y, int x) const {
    return data_[(static_cast<std::size_t>(c) * shape_.height + y) *
                     shape_.width + x];
  }
  double& at(int c, int y, int x) {
    return data_[(static_cast<std::size_t>(c) * shape_.height + y) *
                     shape_.width + x];
  }

  bool all_finite() const;

 private:
  Shape shape_;
  std::vector<double> data_;
};

/// Throws ShapeError naming both shapes when they differ.
void require_same_shape(const Image& a, const Image& b, const char* what);

// Elementwise helpers. All are shape-preserving and throw on mismatch.
Image add(const Image& a, const Image& b);
Image subtract(const Image& a, const Image& b);
Image scale(const Image& a, double s);
/// a + s * b
Image axpy(const Image& a, double s, const Image& b);
double dot(const Image& a, const Image& b);
double norm(const Image& a);

/// Smooth deterministic test pattern (sinusoids plus a disc) in [0, 1].
Image make_test_pattern(Shape shape);

}  // namespace skoop
