#include "skoop/image.h"

#include <cmath>
#include <numeric>
#include <sstream>

#include "skoop/error.h"

namespace skoop {

std::string Shape::to_string() const {
  std::ostringstream os;
  os << channels << "x" << height << "x" << width;
  return os.str();
}

namespace {

void validate_shape(const Shape& shape) {
  if (shape.channels < 1 || shape.height < 1 || shape.width < 1) {
    throw InvalidArgument("image shape must be positive, got " +
                          shape.to_string());
  }
}

}  // namespace

Image::Image(Shape shape) : shape_(shape) {
  validate_shape(shape_);
  data_.assign(shape_.size(), 0.0);
}

Image::Image(Shape shape, double fill) : shape_(shape) {
  validate_shape(shape_);
  if (!std::isfinite(fill)) throw NonFiniteError("non-finite fill value");
  data_.assign(shape_.size(), fill);
}

Image::Image(Shape shape, std::vector<double> data)
    : shape_(shape), data_(std::move(data)) {
  validate_shape(shape_);
  if (data_.size() != shape_.size()) {
    throw ShapeError("image " + shape_.to_string() + " needs " +
                     std::to_string(shape_.size()) + " samples, got " +
                     std::to_string(data_.size()));
  }
  if (!all_finite()) throw NonFiniteError("image contains NaN or Inf");
}

std::span<const double> Image::plane(int c) const {
  return std::span<const double>(data_).subspan(c * shape_.plane_size(),
                                                shape_.plane_size());
}

std::span<double> Image::plane(int c) {
  return std::span<double>(data_).subspan(c * shape_.plane_size(),
                                          shape_.plane_size());
}

bool Image::all_finite() const {
  for (double v : data_) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

void require_same_shape(const Image& a, const Image& b, const char* what) {
  if (a.shape() != b.shape()) {
    throw ShapeError(std::string(what) + ": shape mismatch " +
                     a.shape().to_string() + " vs " + b.shape().to_string());
  }
}

Image add(const Image& a, const Image& b) { return axpy(a, 1.0, b); }

Image subtract(const Image& a, const Image& b) { return axpy(a, -1.0, b); }

Image scale(const Image& a, double s) {
  Image out(a.shape());
  auto src = a.data();
  auto dst = out.data();
  for (std::size_t i = 0; i < src.size(); ++i) dst[i] = s * src[i];
  return out;
}

Image axpy(const Image& a, double s, const Image& b) {
  require_same_shape(a, b, "axpy");
  Image out(a.shape());
  auto x = a.data();
  auto y = b.data();
  auto dst = out.data();
  for (std::size_t i = 0; i < x.size(); ++i) dst[i] = x[i] + s * y[i];
  return out;
}

double dot(const Image& a, const Image& b) {
  require_same_shape(a, b, "dot");
  auto x = a.data();
  auto y = b.data();
  return std::inner_product(x.begin(), x.end(), y.begin(), 0.0);
}

double norm(const Image& a) {
  double sum = 0.0;
  for (double v : a.data()) sum += v * v;
  return std::sqrt(sum);
}

Image make_test_pattern(Shape shape) {
  Image img(shape);
  constexpr double kTwoPi = 6.283185307179586;
  for (int c = 0; c < shape.channels; ++c) {
    const double phase = 0.7 * c;
    for (int y = 0; y < shape.height; ++y) {
      const double v = static_cast<double>(y) / shape.height;
      for (int x = 0; x < shape.width; ++x) {
        const double u = static_cast<double>(x) / shape.width;
        double s = 0.5 + 0.25 * std::sin(kTwoPi * 2 * u + phase) *
                             std::cos(kTwoPi * 3 * v);
        const double du = u - 0.5, dv = v - 0.35;
        if (du * du + dv * dv < 0.04) s += 0.2;
        if (u > 0.1 && u < 0.3 && v > 0.6 && v < 0.85) s -= 0.25;
        img.at(c, y, x) = s;
      }
    }
  }
  return img;
}

}  // namespace skoop
