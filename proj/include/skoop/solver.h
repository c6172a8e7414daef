#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "skoop/denoiser.h"
#include "skoop/forward_model.h"
#include "skoop/image.h"
#include "skoop/koopman.h"
#include "skoop/scheduler.h"

namespace skoop {

enum class Mode { kVanilla, kEquivariant, kSkoop };
enum class Init { kObserved, kBicubic, kProvided };

std::string to_string(Mode m);
Mode parse_mode(const std::string& s);

struct RunConfig {
  ForwardModel model = ForwardModel::identity();
  std::shared_ptr<Denoiser> denoiser;
  Image measurement;
  Mode mode = Mode::kSkoop;
  double lambda = 0.5;
  /// Empty: 1 / (L + lambda) with L from estimate_gradient_lipschitz.
  std::optional<double> gamma0;
  int lipschitz_iterations = 50;
  double beta = 2.0;
  double gamma_floor = 1e-12;
  /// See StepSchedule: radii up to 1 + rho_tolerance do not shrink gamma.
  double rho_tolerance = 1e-6;
  CheckpointRule checkpoints;
  /// Push features every `window_stride` iterations (1 = consecutive).
  int window_stride = 1;
  KoopmanOptions koopman;
  int max_iters = 1000;
  std::uint64_t seed = 0;
  std::optional<Image> ground_truth;
  double divergence_guard = 1e8;
  Init init = Init::kObserved;
  std::optional<Image> init_image;
  /// Keep the window contents of the last checkpoint in the result.
  bool keep_snapshots = false;
};

/// Throws InvalidArgument describing the first violated invariant.
void validate(const RunConfig& cfg);

struct PhaseTimes {
  double denoise = 0.0;
  double forward = 0.0;
  double feature = 0.0;
  double koopman = 0.0;
  /// PSNR and bookkeeping outside the four named phases.
  double other = 0.0;
  /// Measured independently around the whole iteration.
  double total = 0.0;
};

/// Loop iteration t: the step x_t -> x_{t+1}.
struct TrajectoryRow {
  std::int64_t t = 0;
  /// Step size used for this update (gamma_{t+1}).
  double gamma = 0.0;
  /// Spectral radius estimated at checkpoint t (SKOOP only).
  std::optional<double> rho;
  bool eigen_failure = false;
  /// PSNR of x_{t+1}; present when ground truth is known.
  std::optional<double> psnr_db;
  /// ||x_{t+1} - x_t||
  double residual_norm = 0.0;
  /// ||x_{t+1}||
  double iterate_norm = 0.0;
  PhaseTimes seconds;
};

enum class RunStatus { kCompleted, kDivergenceGuardTripped, kBridgeError };

std::string to_string(RunStatus s);

struct TrajectoryRecord {
  std::vector<TrajectoryRow> rows;
  RunStatus status = RunStatus::kCompleted;
  /// Iteration at which a guard trip or bridge error occurred.
  std::int64_t status_iteration = -1;
  std::string message;
  std::vector<CheckpointEvent> checkpoints;
  Mode mode = Mode::kVanilla;
  double gamma0 = 0.0;
  double initial_norm = 0.0;
  std::optional<double> initial_psnr_db;
  /// Identifies model, denoiser, lambda and image shape.
  std::string fingerprint;
};

struct RunResult {
  TrajectoryRecord trajectory;
  Image final_image;
  /// d x w snapshot matrix at the last checkpoint (keep_snapshots only).
  std::optional<Eigen::MatrixXd> snapshots;
};

/// x - gamma (grad f(x) + lambda (x - D(x)))
Image red_step(const Image& x, double gamma, double lambda,
               const ForwardModel& model, Denoiser& denoiser, const Image& b);

Image initial_iterate(const RunConfig& cfg);
double resolve_gamma0(const RunConfig& cfg, const Shape& x_shape);

/// Runs RED gradient descent in the configured mode. Guard trips and bridge
/// failures end the run early and are reported in the status, not thrown.
RunResult run(const RunConfig& cfg);

struct PhaseShare {
  double denoise = 0.0, forward = 0.0, feature = 0.0, koopman = 0.0,
         other = 0.0;
};

struct OverheadReport {
  /// Mean seconds per iteration.
  PhaseTimes vanilla;
  PhaseTimes skoop;
  /// (skoop.total / vanilla.total - 1) * 100
  double overhead_pct = 0.0;
  /// Sum of skoop phases divided by skoop.total.
  double parts_over_total = 0.0;
  /// Percent of the SKOOP per-iteration total spent in each phase.
  PhaseShare skoop_share_pct;
  std::int64_t checkpoints = 0;
  /// Mean koopman-phase seconds per checkpoint.
  double koopman_s_per_checkpoint = 0.0;
};

PhaseTimes mean_phase_times(const TrajectoryRecord& r);
OverheadReport overhead_report(const TrajectoryRecord& vanilla,
                               const TrajectoryRecord& skoop);

}  // namespace skoop
