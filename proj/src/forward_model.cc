#include "skoop/forward_model.h"

#include <array>
#include <cmath>
#include <fstream>
#include <random>
#include <sstream>

#include "skoop/error.h"

namespace skoop {

double Kernel::sum() const {
  double s = 0.0;
  for (double t : taps) s += t;
  return s;
}

Kernel Kernel::identity() { return Kernel{1, 1, {1.0}}; }

Kernel Kernel::gaussian(int size, double sigma) {
  if (size < 1 || size % 2 == 0) {
    throw InvalidArgument("gaussian kernel size must be odd and positive");
  }
  if (!(sigma > 0.0)) throw InvalidArgument("gaussian sigma must be > 0");
  Kernel k{size, size, std::vector<double>(size * size)};
  const int r = size / 2;
  for (int y = 0; y < size; ++y) {
    for (int x = 0; x < size; ++x) {
      const double dy = y - r, dx = x - r;
      k.taps[y * size + x] = std::exp(-(dx * dx + dy * dy) / (2 * sigma * sigma));
    }
  }
  return normalized(std::move(k));
}

Kernel normalized(Kernel k) {
  const double s = k.sum();
  if (s == 0.0 || !std::isfinite(s)) {
    throw InvalidArgument("cannot normalize kernel with tap sum " +
                          std::to_string(s));
  }
  for (double& t : k.taps) t /= s;
  return k;
}

Kernel parse_kernel(const std::string& text, bool blur) {
  std::istringstream in(text);
  std::string line;
  std::vector<std::string> rows;
  while (std::getline(in, line)) {
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    rows.push_back(line);
  }
  if (rows.empty()) throw IoError("kernel: missing 'H W' header");

  Kernel k;
  {
    std::istringstream header(rows[0]);
    std::string extra;
    if (!(header >> k.height >> k.width) || (header >> extra)) {
      throw IoError("kernel: malformed header '" + rows[0] + "'");
    }
  }
  if (k.height < 1 || k.width < 1) {
    throw IoError("kernel: extents must be positive");
  }
  if (static_cast<int>(rows.size()) - 1 != k.height) {
    throw IoError("kernel: expected " + std::to_string(k.height) +
                  " rows, found " + std::to_string(rows.size() - 1));
  }
  k.taps.reserve(static_cast<std::size_t>(k.height) * k.width);
  for (int r = 0; r < k.height; ++r) {
    std::istringstream row(rows[r + 1]);
    double v;
    int n = 0;
    while (row >> v) {
      if (!std::isfinite(v)) throw IoError("kernel: non-finite tap");
      k.taps.push_back(v);
      ++n;
    }
    if (!row.eof() || n != k.width) {
      throw IoError("kernel: row " + std::to_string(r) + " must hold " +
                    std::to_string(k.width) + " numbers");
    }
  }
  return blur ? normalized(std::move(k)) : k;
}

Kernel load_kernel(const std::filesystem::path& path, bool blur) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open kernel file " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_kernel(ss.str(), blur);
}

ForwardModel::ForwardModel(Kind kind, Kernel k, int factor)
    : kind_(kind), kernel_(std::move(k)), factor_(factor) {
  if (kernel_.height < 1 || kernel_.width < 1 ||
      kernel_.taps.size() !=
          static_cast<std::size_t>(kernel_.height) * kernel_.width) {
    throw InvalidArgument("kernel taps do not match its extents");
  }
  for (double t : kernel_.taps) {
    if (!std::isfinite(t)) throw InvalidArgument("kernel has non-finite tap");
  }
}

ForwardModel ForwardModel::deblur(Kernel k) {
  return ForwardModel(Kind::kDeblur, std::move(k), 1);
}

ForwardModel ForwardModel::superresolve(Kernel k, int factor) {
  if (factor < 2) throw InvalidArgument("superresolution factor must be >= 2");
  return ForwardModel(Kind::kSuperresolve, std::move(k), factor);
}

Shape ForwardModel::output_shape(const Shape& x) const {
  if (kind_ == Kind::kDeblur) return x;
  if (x.height % factor_ != 0 || x.width % factor_ != 0) {
    throw ShapeError("superresolve: image " + x.to_string() +
                     " not divisible by factor " + std::to_string(factor_));
  }
  return {x.channels, x.height / factor_, x.width / factor_};
}

Shape ForwardModel::input_shape(const Shape& y) const {
  if (kind_ == Kind::kDeblur) return y;
  return {y.channels, y.height * factor_, y.width * factor_};
}

namespace {

// sign = +1: convolution, out[i] = sum k[u] x[i - (u - c)].
// sign = -1: correlation, out[i] = sum k[u] x[i + (u - c)].
Image filter_circular(const Image& x, const Kernel& k, int sign) {
  const int h = x.height(), w = x.width();
  if (k.height > h || k.width > w) {
    throw ShapeError("kernel " + std::to_string(k.height) + "x" +
                     std::to_string(k.width) + " larger than image " +
                     x.shape().to_string());
  }
  Image out(x.shape());
  const int cy = k.height / 2, cx = k.width / 2;
  for (int c = 0; c < x.channels(); ++c) {
    auto src = x.plane(c);
    auto dst = out.plane(c);
    for (int u = 0; u < k.height; ++u) {
      for (int v = 0; v < k.width; ++v) {
        const double tap = k.at(u, v);
        if (tap == 0.0) continue;
        // Source offset relative to the output index.
        const int dy = ((-sign * (u - cy)) % h + h) % h;
        const int dx = ((-sign * (v - cx)) % w + w) % w;
        for (int y = 0; y < h; ++y) {
          const double* srow = src.data() + static_cast<std::size_t>((y + dy) % h) * w;
          double* drow = dst.data() + static_cast<std::size_t>(y) * w;
          const int split = w - dx;
          for (int xx = 0; xx < split; ++xx) drow[xx] += tap * srow[xx + dx];
          for (int xx = split; xx < w; ++xx) drow[xx] += tap * srow[xx - split];
        }
      }
    }
  }
  return out;
}

Image decimate(const Image& x, int s) {
  Shape out_shape{x.channels(), x.height() / s, x.width() / s};
  Image out(out_shape);
  for (int c = 0; c < x.channels(); ++c) {
    for (int y = 0; y < out_shape.height; ++y) {
      for (int xx = 0; xx < out_shape.width; ++xx) {
        out.at(c, y, xx) = x.at(c, y * s, xx * s);
      }
    }
  }
  return out;
}

Image zero_insert(const Image& y, int s) {
  Image out({y.channels(), y.height() * s, y.width() * s});
  for (int c = 0; c < y.channels(); ++c) {
    for (int r = 0; r < y.height(); ++r) {
      for (int xx = 0; xx < y.width(); ++xx) {
        out.at(c, r * s, xx * s) = y.at(c, r, xx);
      }
    }
  }
  return out;
}

}  // namespace

Image convolve_circular(const Image& x, const Kernel& k) {
  return filter_circular(x, k, +1);
}

Image correlate_circular(const Image& x, const Kernel& k) {
  return filter_circular(x, k, -1);
}

Image apply_forward(const ForwardModel& m, const Image& x) {
  m.output_shape(x.shape());  // divisibility check
  Image blurred = convolve_circular(x, m.kernel());
  if (m.kind() == ForwardModel::Kind::kDeblur) return blurred;
  return decimate(blurred, m.factor());
}

Image apply_adjoint(const ForwardModel& m, const Image& y) {
  if (m.kind() == ForwardModel::Kind::kDeblur) {
    return correlate_circular(y, m.kernel());
  }
  return correlate_circular(zero_insert(y, m.factor()), m.kernel());
}

Image data_gradient(const ForwardModel& m, const Image& x, const Image& b) {
  const Shape expected = m.output_shape(x.shape());
  if (b.shape() != expected) {
    throw ShapeError("data_gradient: measurement " + b.shape().to_string() +
                     " does not match A x of shape " + expected.to_string());
  }
  Image residual = apply_forward(m, x);
  auto r = residual.data();
  auto bd = b.data();
  for (std::size_t i = 0; i < r.size(); ++i) r[i] -= bd[i];
  return apply_adjoint(m, residual);
}

Measurement simulate_measurement(const ForwardModel& m, const Image& x_clean,
                                 double sigma_n, std::uint64_t seed) {
  if (!(sigma_n >= 0.0)) throw InvalidArgument("noise sigma must be >= 0");
  Image b = apply_forward(m, x_clean);
  if (sigma_n > 0.0) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> noise(0.0, sigma_n);
    for (double& v : b.data()) v += noise(rng);
  }
  return {std::move(b), sigma_n, seed};
}

double estimate_gradient_lipschitz(const ForwardModel& m, const Shape& x,
                                   int iterations, std::uint64_t seed) {
  if (iterations < 1) throw InvalidArgument("iterations must be >= 1");
  Image v(x);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  for (double& s : v.data()) s = gauss(rng);
  v = scale(v, 1.0 / norm(v));

  double rayleigh = 0.0;
  for (int it = 0; it < iterations; ++it) {
    Image w = apply_adjoint(m, apply_forward(m, v));
    rayleigh = dot(v, w);
    const double n = norm(w);
    if (n == 0.0) break;
    v = scale(w, 1.0 / n);
  }
  return rayleigh;
}

namespace {

// Catmull-Rom weights for taps at offsets -1, 0, 1, 2 and fraction t.
std::array<double, 4> catmull_rom(double t) {
  const double t2 = t * t, t3 = t2 * t;
  return {0.5 * (-t3 + 2 * t2 - t), 0.5 * (3 * t3 - 5 * t2 + 2),
          0.5 * (-3 * t3 + 4 * t2 + t), 0.5 * (t3 - t2)};
}

// Upsamples along one axis of a row-major (rows x cols) plane.
void upsample_rows(std::span<const double> src, int rows, int cols, int s,
                   std::span<double> dst) {
  for (int r = 0; r < rows * s; ++r) {
    const int base = r / s;
    const auto w = catmull_rom(static_cast<double>(r % s) / s);
    for (int c = 0; c < cols; ++c) {
      double acc = 0.0;
      for (int k = 0; k < 4; ++k) {
        const int rr = ((base + k - 1) % rows + rows) % rows;
        acc += w[k] * src[static_cast<std::size_t>(rr) * cols + c];
      }
      dst[static_cast<std::size_t>(r) * cols + c] = acc;
    }
  }
}

}  // namespace

Image bicubic_upsample(const Image& y, int factor) {
  if (factor < 2) throw InvalidArgument("upsampling factor must be >= 2");
  const int h = y.height(), w = y.width();
  Image out({y.channels(), h * factor, w * factor});
  std::vector<double> tall(static_cast<std::size_t>(h) * factor * w);
  for (int c = 0; c < y.channels(); ++c) {
    upsample_rows(y.plane(c), h, w, factor, tall);
    auto dst = out.plane(c);
    const int H = h * factor, W = w * factor;
    for (int r = 0; r < H; ++r) {
      const double* row = tall.data() + static_cast<std::size_t>(r) * w;
      for (int x = 0; x < W; ++x) {
        const int base = x / factor;
        const auto wt = catmull_rom(static_cast<double>(x % factor) / factor);
        double acc = 0.0;
        for (int k = 0; k < 4; ++k) {
          acc += wt[k] * row[((base + k - 1) % w + w) % w];
        }
        dst[static_cast<std::size_t>(r) * W + x] = acc;
      }
    }
  }
  return out;
}

}  // namespace skoop
