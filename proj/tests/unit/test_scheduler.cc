#include <doctest.h>

#include <cmath>
#include <set>

#include "skoop/error.h"
#include "skoop/scheduler.h"

using namespace skoop;

TEST_CASE("checkpoint membership") {
  const CheckpointRule defaults{30, 10};
  CHECK(is_checkpoint(defaults, 40));
  CHECK_FALSE(is_checkpoint(defaults, 30));
  CHECK_FALSE(is_checkpoint(defaults, 45));
  CHECK_FALSE(is_checkpoint(defaults, 0));

  const CheckpointRule every{30, 1};
  for (int t = 0; t <= 200; ++t) CHECK(is_checkpoint(every, t) == (t >= 31));
}

TEST_CASE("checkpoint membership matches set enumeration") {
  for (int w : {2, 30, 40}) {
    for (int r : {1, 7, 10, 20}) {
      std::set<long> omega;
      for (long k = 1; w + k * r <= 10000; ++k) omega.insert(w + k * r);
      for (long t = 0; t <= 10000; ++t) {
        if (is_checkpoint({w, r}, t) != omega.contains(t)) {
          FAIL("w=" << w << " r=" << r << " t=" << t);
        }
      }
    }
  }
  CHECK_THROWS_AS(validate(CheckpointRule{1, 10}), InvalidArgument);
  CHECK_THROWS_AS(validate(CheckpointRule{30, 0}), InvalidArgument);
  CHECK_NOTHROW(validate(CheckpointRule{2, 1}));
}

TEST_CASE("shrink factor") {
  CHECK(shrink_factor(1.0, 2.0) == 1.0);
  CHECK(shrink_factor(0.8, 2.0) == 1.0);
  CHECK(shrink_factor(0.0, 2.0) == 1.0);
  CHECK(std::abs(shrink_factor(1.5, 2.0) - std::exp(-1.0)) < 1e-12);
  double prev = 1.0;
  for (int i = 1; i <= 200; ++i) {
    const double eta = shrink_factor(1.0 + 0.01 * i, 2.0);
    CHECK(eta < prev);
    CHECK(eta > 0.0);
    prev = eta;
  }
  // Continuity from above at the threshold.
  CHECK(shrink_factor(1.0 + 1e-12, 2.0) == doctest::Approx(1.0).epsilon(1e-11));
  CHECK(fallback_shrink_factor(2.0) == doctest::Approx(std::exp(-0.2)).epsilon(1e-15));
}

TEST_CASE("schedule updates") {
  StepSchedule s(0.8, 2.0);
  const auto& noop = s.apply_checkpoint(40, 0.9);
  CHECK_FALSE(noop.shrunk);
  CHECK(noop.gamma_after == 0.8);
  CHECK(s.gamma() == 0.8);

  s.apply_checkpoint(50, 1.5);
  s.apply_checkpoint(60, 1.5);
  CHECK(s.gamma() == doctest::Approx(0.8 * std::exp(-2.0)).epsilon(1e-14));
  CHECK(s.history().size() == 3);
  CHECK(s.history()[1].shrunk);
  CHECK(s.history()[2].gamma_before == s.history()[1].gamma_after);

  const auto& failed = s.apply_checkpoint(70, std::nullopt);
  CHECK(failed.shrunk);
  CHECK_FALSE(failed.rho.has_value());
  CHECK(failed.gamma_after ==
        doctest::Approx(failed.gamma_before * std::exp(-0.2)).epsilon(1e-15));
  CHECK_THROWS_AS(s.apply_checkpoint(80, -0.1), InvalidArgument);
}

TEST_CASE("floor clamp and monotonicity") {
  StepSchedule s(1e-11, 2.0, 1e-12);
  s.apply_checkpoint(40, 3.0);
  CHECK(s.gamma() == 1e-12);
  CHECK(s.history().back().clamped);
  s.apply_checkpoint(50, 3.0);
  CHECK(s.gamma() == 1e-12);

  StepSchedule m(1.0, 0.5);
  double prev = m.gamma();
  for (int k = 1; k < 50; ++k) {
    m.apply_checkpoint(30 + 10 * k, 0.5 + 0.05 * k);
    CHECK(m.gamma() <= prev);
    prev = m.gamma();
  }
  CHECK_THROWS_AS(StepSchedule(0.0), InvalidArgument);
  CHECK_THROWS_AS(StepSchedule(1.0, 0.0), InvalidArgument);
  CHECK_THROWS_AS(StepSchedule(1.0, 2.0, 0.0), InvalidArgument);
  CHECK_THROWS_AS(StepSchedule(1.0, 2.0, 1e-12, -1.0), InvalidArgument);
}

TEST_CASE("radii inside the stability tolerance keep gamma") {
  StepSchedule s(0.5, 2.0, 1e-12, 1e-6);
  s.apply_checkpoint(40, 1.0 + 1e-9);
  s.apply_checkpoint(50, 1.0 + 1e-6);
  CHECK(s.gamma() == 0.5);
  s.apply_checkpoint(60, 1.0 + 1e-3);
  CHECK(s.gamma() == doctest::Approx(0.5 * std::exp(-2e-3)).epsilon(1e-15));

  StepSchedule exact(0.5, 2.0);
  exact.apply_checkpoint(40, 1.0 + 1e-9);
  CHECK(exact.gamma() < 0.5);
}
