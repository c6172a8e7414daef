#include <doctest.h>

#include <cmath>
#include <complex>
#include <numbers>
#include <random>

#include "skoop/error.h"
#include "skoop/forward_model.h"
#include "support.h"

using namespace skoop;
using skoop::testing::max_abs_diff;
using skoop::testing::random_image;

namespace {

using cd = std::complex<double>;
using Grid = std::vector<std::vector<cd>>;

Grid dft2(const Grid& a, int sign) {
  const int h = static_cast<int>(a.size());
  const int w = static_cast<int>(a[0].size());
  Grid out(h, std::vector<cd>(w));
  for (int u = 0; u < h; ++u) {
    for (int v = 0; v < w; ++v) {
      cd acc = 0.0;
      for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
          const double ph = sign * 2.0 * std::numbers::pi *
                            (double(u) * y / h + double(v) * x / w);
          acc += a[y][x] * std::polar(1.0, ph);
        }
      }
      out[u][v] = acc;
    }
  }
  return out;
}

// Kernel embedded in an h x w periodic grid with its centre tap at (0, 0).
Grid kernel_grid(const Kernel& k, int h, int w) {
  Grid g(h, std::vector<cd>(w, 0.0));
  for (int a = 0; a < k.height; ++a) {
    for (int b = 0; b < k.width; ++b) {
      const int y = ((a - k.height / 2) % h + h) % h;
      const int x = ((b - k.width / 2) % w + w) % w;
      g[y][x] += k.at(a, b);
    }
  }
  return g;
}

// Circular convolution of one plane through the DFT.
Image dft_convolve(const Image& img, const Kernel& k) {
  const int h = img.height(), w = img.width();
  const Grid kf = dft2(kernel_grid(k, h, w), -1);
  Image out(img.shape());
  for (int c = 0; c < img.channels(); ++c) {
    Grid g(h, std::vector<cd>(w));
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) g[y][x] = img.at(c, y, x);
    Grid f = dft2(g, -1);
    for (int u = 0; u < h; ++u)
      for (int v = 0; v < w; ++v) f[u][v] *= kf[u][v];
    const Grid r = dft2(f, +1);
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) out.at(c, y, x) = r[y][x].real() / (h * w);
  }
  return out;
}

double max_transfer_power(const Kernel& k, int h, int w) {
  const Grid kf = dft2(kernel_grid(k, h, w), -1);
  double m = 0.0;
  for (const auto& row : kf)
    for (const cd& z : row) m = std::max(m, std::norm(z));
  return m;
}

Kernel random_kernel(int h, int w, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Kernel k{h, w, std::vector<double>(h * w)};
  for (double& t : k.taps) t = u(rng);
  return k;
}

const char* kMotionText =
    "# 3x5 diagonal streak\n"
    "3 5\n"
    "1 2 0 0 0\n"
    "0 0 3 0 0\n"
    "0 0 0 2 2\n";

}  // namespace

TEST_CASE("gaussian kernel is normalized and symmetric") {
  const Kernel k = Kernel::gaussian(9, 1.0);
  CHECK(k.height == 9);
  CHECK(k.sum() == doctest::Approx(1.0).epsilon(1e-14));
  for (int a = 0; a < 9; ++a)
    for (int b = 0; b < 9; ++b) CHECK(k.at(a, b) == doctest::Approx(k.at(8 - a, b)));
  CHECK(k.at(4, 4) > k.at(4, 3));
  CHECK_THROWS_AS(Kernel::gaussian(8, 1.0), InvalidArgument);
  CHECK_THROWS_AS(Kernel::gaussian(9, 0.0), InvalidArgument);
}

TEST_CASE("kernel text format") {
  const Kernel k = parse_kernel(kMotionText, /*blur=*/true);
  CHECK(k.height == 3);
  CHECK(k.width == 5);
  CHECK(k.sum() == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(k.at(1, 2) == doctest::Approx(0.3));
  const Kernel raw = parse_kernel(kMotionText, /*blur=*/false);
  CHECK(raw.at(1, 2) == 3.0);

  CHECK_THROWS_AS(parse_kernel("2 2\n1 2\n3\n", false), IoError);
  CHECK_THROWS_AS(parse_kernel("2 2\n1 2\n3 4\n5 6\n", false), IoError);
  CHECK_THROWS_AS(parse_kernel("2 x\n", false), IoError);
  CHECK_THROWS_AS(parse_kernel("1 2\n1 nan\n", false), IoError);
  CHECK_THROWS_AS(parse_kernel("1 2\n1 -1\n", true), InvalidArgument);
  CHECK_THROWS_AS(load_kernel("/nonexistent/kernel.txt", true), IoError);
}

TEST_CASE("convolution: identity and DC preservation") {
  const Image x = random_image({2, 6, 7}, 11);
  CHECK(max_abs_diff(convolve_circular(x, Kernel::identity()), x) == 0.0);
  const Image c({1, 9, 9}, 0.37);
  const Image y = convolve_circular(c, Kernel::gaussian(5, 1.3));
  for (double v : y.data()) CHECK(v == doctest::Approx(0.37).epsilon(1e-14));
}

TEST_CASE("convolution: impulse response wraps around the origin") {
  Image delta({1, 4, 4});
  delta.at(0, 0, 0) = 1.0;
  const Kernel k{3, 3, {1, 2, 3, 4, 5, 6, 7, 8, 9}};
  const Image y = convolve_circular(delta, k);
  for (int a = 0; a < 3; ++a) {
    for (int b = 0; b < 3; ++b) {
      CHECK(y.at(0, (a - 1 + 4) % 4, (b - 1 + 4) % 4) == k.at(a, b));
    }
  }
  CHECK(y.at(0, 2, 2) == 0.0);
}

TEST_CASE("convolution matches the DFT oracle") {
  int trial = 0;
  for (Shape s : {Shape{1, 8, 8}, Shape{2, 7, 10}, Shape{1, 9, 5}}) {
    for (auto [kh, kw] : {std::pair{3, 3}, std::pair{5, 3}, std::pair{4, 2}}) {
      const Image x = random_image(s, 100 + trial);
      const Kernel k = random_kernel(kh, kw, 200 + trial++);
      CHECK(max_abs_diff(convolve_circular(x, k), dft_convolve(x, k)) < 1e-10);
    }
  }
}

TEST_CASE("kernel larger than the image is rejected") {
  CHECK_THROWS_AS(convolve_circular(Image({1, 4, 4}), Kernel::gaussian(5, 1.0)),
                  ShapeError);
  CHECK_THROWS_AS(correlate_circular(Image({1, 8, 4}), Kernel::gaussian(5, 1.0)),
                  ShapeError);
}

TEST_CASE("superresolution forward model") {
  std::vector<double> ramp(16);
  for (int i = 0; i < 16; ++i) ramp[i] = i;
  const Image x({1, 4, 4}, ramp);
  const ForwardModel sr = ForwardModel::superresolve(Kernel::identity(), 2);
  const Image y = apply_forward(sr, x);
  CHECK(y.shape() == Shape{1, 2, 2});
  CHECK(y.at(0, 0, 0) == 0.0);
  CHECK(y.at(0, 0, 1) == 2.0);
  CHECK(y.at(0, 1, 0) == 8.0);
  CHECK(y.at(0, 1, 1) == 10.0);

  const ForwardModel blur_sr = ForwardModel::superresolve(Kernel::gaussian(5, 1.0), 2);
  const Image yc = apply_forward(blur_sr, Image({3, 8, 6}, 0.25));
  CHECK(yc.shape() == Shape{3, 4, 3});
  for (double v : yc.data()) CHECK(v == doctest::Approx(0.25).epsilon(1e-14));

  CHECK_THROWS_AS(apply_forward(sr, Image({1, 5, 4})), ShapeError);
  CHECK_THROWS_AS(ForwardModel::superresolve(Kernel::identity(), 1), InvalidArgument);
  CHECK(sr.input_shape({1, 3, 5}) == Shape{1, 6, 10});
}

TEST_CASE("adjoints satisfy the inner-product identity") {
  const std::vector<ForwardModel> models = {
      ForwardModel::identity(),
      ForwardModel::deblur(Kernel::gaussian(5, 1.0)),
      ForwardModel::deblur(random_kernel(3, 4, 7)),
      ForwardModel::deblur(parse_kernel(kMotionText, true)),
      ForwardModel::superresolve(Kernel::gaussian(5, 1.0), 2),
      ForwardModel::superresolve(random_kernel(3, 3, 8), 3)};
  std::uint64_t seed = 0;
  for (const auto& m : models) {
    for (int i = 0; i < 10; ++i) {
      const Shape xs{2, 12, 18};
      const Image x = random_image(xs, ++seed, -1, 1);
      const Image y = random_image(m.output_shape(xs), ++seed, -1, 1);
      const Image ax = apply_forward(m, x);
      const double lhs = dot(ax, y);
      const double rhs = dot(x, apply_adjoint(m, y));
      CHECK(std::abs(lhs - rhs) <= 1e-12 * (norm(ax) * norm(y) + 1e-300));
    }
  }
  const ForwardModel sr = ForwardModel::superresolve(Kernel::identity(), 2);
  CHECK_THROWS_AS(data_gradient(sr, Image({1, 6, 6}), Image({1, 6, 6})), ShapeError);
}

TEST_CASE("identity adjoint and linearity") {
  const Image y = random_image({1, 5, 5}, 31);
  CHECK(max_abs_diff(apply_adjoint(ForwardModel::identity(), y), y) == 0.0);
  const ForwardModel m = ForwardModel::superresolve(Kernel::gaussian(3, 0.8), 2);
  const Image zero_y({1, 4, 4});
  const Image back = apply_adjoint(m, zero_y);
  for (double v : back.data()) CHECK(v == 0.0);

  const Image a = random_image({1, 8, 8}, 32);
  const Image b = random_image({1, 8, 8}, 33);
  const Image lhs = apply_forward(m, axpy(scale(a, 0.7), -1.9, b));
  const Image rhs = axpy(scale(apply_forward(m, a), 0.7), -1.9, apply_forward(m, b));
  CHECK(max_abs_diff(lhs, rhs) < 1e-14);
}

TEST_CASE("data gradient") {
  const Image x = random_image({1, 6, 6}, 41);
  const Image b = random_image({1, 6, 6}, 42);
  CHECK(max_abs_diff(data_gradient(ForwardModel::identity(), x, b), subtract(x, b)) == 0.0);

  const ForwardModel m = ForwardModel::deblur(Kernel::gaussian(3, 1.0));
  const Image consistent = apply_forward(m, x);
  CHECK(norm(data_gradient(m, x, consistent)) < 1e-15);

  // Central finite differences of f(x) = 0.5 ||Ax - b||^2 along random directions.
  const ForwardModel sr = ForwardModel::superresolve(Kernel::gaussian(3, 1.0), 2);
  const Image bs = random_image({1, 3, 3}, 43);
  auto f = [&](const Image& z) {
    const Image r = subtract(apply_forward(sr, z), bs);
    return 0.5 * dot(r, r);
  };
  for (int i = 0; i < 5; ++i) {
    const Image z = random_image({1, 6, 6}, 50 + i);
    const Image d = random_image({1, 6, 6}, 60 + i, -1, 1);
    const double h = 1e-5;
    const double fd = (f(axpy(z, h, d)) - f(axpy(z, -h, d))) / (2 * h);
    const double an = dot(data_gradient(sr, z, bs), d);
    CHECK(std::abs(fd - an) <= 1e-6 * std::max(1.0, std::abs(an)));
  }
}

TEST_CASE("simulate_measurement") {
  const ForwardModel m = ForwardModel::deblur(Kernel::gaussian(5, 1.0));
  const Image x = random_image({1, 16, 16}, 71);
  CHECK(max_abs_diff(simulate_measurement(m, x, 0.0, 9).b, apply_forward(m, x)) == 0.0);
  const Measurement a = simulate_measurement(m, x, 0.1, 9);
  const Measurement b = simulate_measurement(m, x, 0.1, 9);
  const Measurement c = simulate_measurement(m, x, 0.1, 10);
  CHECK(max_abs_diff(a.b, b.b) == 0.0);
  CHECK(max_abs_diff(a.b, c.b) > 0.0);
  CHECK_THROWS_AS(simulate_measurement(m, x, -1.0, 0), InvalidArgument);

  const double sigma = 5.0 / 255.0;
  const Image big({1, 256, 256}, 0.5);
  const Image noisy = simulate_measurement(ForwardModel::identity(), big, sigma, 3).b;
  double ss = 0.0;
  for (double v : noisy.data()) ss += (v - 0.5) * (v - 0.5);
  CHECK(std::abs(ss / noisy.size() / (sigma * sigma) - 1.0) < 0.05);
}

TEST_CASE("gradient Lipschitz estimate") {
  const Shape s{1, 16, 16};
  CHECK(estimate_gradient_lipschitz(ForwardModel::identity(), s, 50, 0) ==
        doctest::Approx(1.0).epsilon(1e-10));
  CHECK(estimate_gradient_lipschitz(ForwardModel::superresolve(Kernel::identity(), 2), s,
                                    50, 0) == doctest::Approx(1.0).epsilon(1e-10));

  const Kernel k = Kernel::gaussian(5, 1.0);
  const double exact = max_transfer_power(k, 16, 16);
  const ForwardModel m = ForwardModel::deblur(k);
  double prev = 0.0;
  for (int it : {1, 5, 20, 80}) {
    const double est = estimate_gradient_lipschitz(m, s, it, 4);
    CHECK(est <= 1.0 + 1e-10);
    CHECK(est <= exact * (1 + 1e-12));
    CHECK(est >= prev * (1 - 1e-12));
    prev = est;
  }
  CHECK(prev == doctest::Approx(exact).epsilon(1e-6));
  CHECK_THROWS_AS(estimate_gradient_lipschitz(m, s, 0, 0), InvalidArgument);
}

TEST_CASE("bicubic upsampling") {
  const Image c({2, 5, 6}, 0.4);
  const Image up = bicubic_upsample(c, 2);
  CHECK(up.shape() == Shape{2, 10, 12});
  for (double v : up.data()) CHECK(v == doctest::Approx(0.4).epsilon(1e-14));

  const Image y = random_image({1, 6, 7}, 81);
  for (int s : {2, 3}) {
    const Image back =
        apply_forward(ForwardModel::superresolve(Kernel::identity(), s), bicubic_upsample(y, s));
    CHECK(max_abs_diff(back, y) < 1e-9);
  }

  // Degree-1 polynomials are reproduced away from the periodic seam.
  Image ramp({1, 10, 10});
  for (int i = 0; i < 10; ++i)
    for (int j = 0; j < 10; ++j) ramp.at(0, i, j) = 0.1 * i + 0.03 * j;
  const Image r2 = bicubic_upsample(ramp, 2);
  for (int i = 2; i <= 14; ++i) {
    for (int j = 2; j <= 14; ++j) {
      CHECK(r2.at(0, i, j) == doctest::Approx(0.05 * i + 0.015 * j).epsilon(1e-12));
    }
  }
  CHECK_THROWS_AS(bicubic_upsample(y, 1), InvalidArgument);
}
