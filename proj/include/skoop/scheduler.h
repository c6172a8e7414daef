#pragma once

#include <cstdint>
#include <optional>
#include <vector>

namespace skoop {

/// Checkpoints at t = w + k r for k >= 1.
struct CheckpointRule {
  int w = 30;
  int r = 10;
};

void validate(const CheckpointRule& rule);
bool is_checkpoint(const CheckpointRule& rule, std::int64_t t);

/// exp(-beta (rho - 1)) for rho > 1, else 1.
double shrink_factor(double rho, double beta);

/// Shrink used when no spectral radius is available (eigen failure).
double fallback_shrink_factor(double beta);

struct CheckpointEvent {
  std::int64_t iteration = 0;
  double gamma_before = 0.0;
  double gamma_after = 0.0;
  /// Empty when the spectral radius could not be computed.
  std::optional<double> rho;
  bool shrunk = false;
  bool clamped = false;
};

/// Shrink-only step-size state driven by checkpoint spectral radii.
class StepSchedule {
 public:
  /// Radii within `rho_tolerance` of 1 count as stable. A converged
  /// trajectory yields rho = 1 up to rounding, which must not shrink gamma.
  StepSchedule(double gamma0, double beta = 2.0, double gamma_floor = 1e-12,
               double rho_tolerance = 0.0);

  double gamma() const { return gamma_; }
  double beta() const { return beta_; }
  double gamma_floor() const { return gamma_floor_; }
  double rho_tolerance() const { return rho_tolerance_; }
  const std::vector<CheckpointEvent>& history() const { return history_; }

  /// gamma <- max(gamma * shrink_factor(rho, beta), gamma_floor) when
  /// rho > 1 + rho_tolerance. With no rho, applies fallback_shrink_factor.
  const CheckpointEvent& apply_checkpoint(std::int64_t iteration,
                                          std::optional<double> rho);

 private:
  double gamma_;
  double beta_;
  double gamma_floor_;
  double rho_tolerance_;
  std::vector<CheckpointEvent> history_;
};

}  // namespace skoop
