#include "skoop/scheduler.h"

#include <algorithm>
#include <cmath>
#include <string>

#include "skoop/error.h"

namespace skoop {

void validate(const CheckpointRule& rule) {
  if (rule.w < 2) throw InvalidArgument("window size w must be >= 2");
  if (rule.r < 1) throw InvalidArgument("checkpoint stride r must be >= 1");
}

bool is_checkpoint(const CheckpointRule& rule, std::int64_t t) {
  return t > rule.w && (t - rule.w) % rule.r == 0;
}

double shrink_factor(double rho, double beta) {
  if (!(rho > 1.0)) return 1.0;
  return std::exp(-beta * (rho - 1.0));
}

double fallback_shrink_factor(double beta) { return std::exp(-beta * 0.1); }

StepSchedule::StepSchedule(double gamma0, double beta, double gamma_floor,
                           double rho_tolerance)
    : gamma_(gamma0),
      beta_(beta),
      gamma_floor_(gamma_floor),
      rho_tolerance_(rho_tolerance) {
  if (!(gamma0 > 0.0)) throw InvalidArgument("gamma0 must be > 0");
  if (!(beta > 0.0)) throw InvalidArgument("beta must be > 0");
  if (!(gamma_floor > 0.0)) throw InvalidArgument("gamma_floor must be > 0");
  if (!(rho_tolerance >= 0.0)) throw InvalidArgument("rho_tolerance must be >= 0");
  gamma_ = std::max(gamma_, gamma_floor_);
}

const CheckpointEvent& StepSchedule::apply_checkpoint(std::int64_t iteration,
                                                      std::optional<double> rho) {
  if (rho && !(*rho >= 0.0)) {
    throw InvalidArgument("spectral radius must be >= 0, got " +
                          std::to_string(*rho));
  }
  CheckpointEvent ev;
  ev.iteration = iteration;
  ev.gamma_before = gamma_;
  ev.rho = rho;
  double eta = 1.0;
  if (!rho) {
    eta = fallback_shrink_factor(beta_);
  } else if (*rho > 1.0 + rho_tolerance_) {
    eta = shrink_factor(*rho, beta_);
  }
  if (eta < 1.0) {
    const double target = gamma_ * eta;
    ev.clamped = target < gamma_floor_;
    gamma_ = std::max(target, gamma_floor_);
    ev.shrunk = true;
  }
  ev.gamma_after = gamma_;
  history_.push_back(ev);
  return history_.back();
}

}  // namespace skoop
