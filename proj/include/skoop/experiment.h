#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "skoop/config.h"
#include "skoop/koopman.h"
#include "skoop/solver.h"

namespace skoop {

// Process exit codes of the CLI.
inline constexpr int kExitOk = 0;
inline constexpr int kExitConfigInvalid = 2;
inline constexpr int kExitDiverged = 3;
inline constexpr int kExitBridgeError = 4;

int exit_code(RunStatus status);

/// Clean image from a path or a "synthetic:C:H:W" test pattern.
Image resolve_input(const std::string& input);
ForwardModel build_model(const ExperimentSpec& spec);

struct PreparedProblem {
  ForwardModel model = ForwardModel::identity();
  Image measurement;
  std::optional<Image> ground_truth;
};

/// Builds the forward model and the (simulated or loaded) measurement.
PreparedProblem prepare(const ExperimentSpec& spec);
/// Creates a fresh denoiser instance for every call.
RunConfig make_run_config(const ExperimentSpec& spec, const PreparedProblem& p,
                          Mode mode);

struct ModeSummary {
  Mode mode = Mode::kVanilla;
  RunStatus status = RunStatus::kCompleted;
  std::int64_t status_iteration = -1;
  std::string message;
  std::int64_t iterations = 0;
  double gamma0 = 0.0;
  double final_gamma = 0.0;
  std::optional<double> peak_psnr_db;
  std::int64_t peak_iteration = -1;
  std::optional<double> final_psnr_db;
  std::int64_t checkpoints = 0;
  std::int64_t shrinks = 0;
};

ModeSummary summarize(const TrajectoryRecord& rec);

struct ExperimentOutcome {
  std::vector<ModeSummary> modes;
  /// Worst status across modes: bridge error > divergence > ok.
  int exit_code() const;
};

/// Writes measurement, reconstructions, one trajectory CSV per mode,
/// summary.csv and (optionally) snapshot dumps into spec.output_dir.
ExperimentOutcome run_experiment(const ExperimentSpec& spec);

/// Runs Vanilla and SKOOP on the same problem and writes overhead.csv.
OverheadReport benchmark_overhead(const ExperimentSpec& spec);

// CSV emitters. Numbers use a fixed, round-trip format.
inline constexpr const char* kTrajectoryHeader =
    "t,gamma,rho,psnr_db,residual_norm,t_denoise_s,t_forward_s,t_feature_s,"
    "t_koopman_s";
void write_trajectory_csv(const TrajectoryRecord& rec, std::ostream& out);
void write_summary_csv(const std::vector<ModeSummary>& modes, std::ostream& out);
void write_overhead_csv(const OverheadReport& rep, std::ostream& out);
void write_snapshots_csv(const Eigen::MatrixXd& snapshots, std::ostream& out);
/// Loads a snapshot dump into a full window (capacity = number of rows).
SnapshotWindow read_snapshots_csv(const std::filesystem::path& path);

std::string format_number(double v);

}  // namespace skoop
