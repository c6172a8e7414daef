#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "skoop/solver.h"

namespace skoop {

enum class Task { kGaussianDeblur, kMotionDeblur, kSuperresolution };
enum class DenoiserKind { kIdentity, kGaussian, kBox, kMedian, kUnsharp, kExternal };

struct DenoiserSpec {
  DenoiserKind kind = DenoiserKind::kGaussian;
  /// Smoothing sigma for gaussian/unsharp; strength sent to external peers.
  double sigma = 1.0;
  int radius = 1;
  double alpha = 1.0;
  std::string external_cmd;
};

std::shared_ptr<Denoiser> make_denoiser(const DenoiserSpec& spec);

/// One experiment, parsed from a flat JSON object (see README for the
/// schema). Paths are taken relative to the working directory.
struct ExperimentSpec {
  Task task = Task::kGaussianDeblur;
  /// Clean image path or "synthetic:C:H:W". Optional when `measurement` is
  /// given; then PSNR is logged only if `input` is present too.
  std::string input;
  std::string measurement;
  std::filesystem::path output_dir;

  int kernel_size = 9;
  double kernel_sigma = 1.0;
  std::string kernel_path;
  int sr_factor = 2;
  double noise_sigma = 1.0 / 255.0;

  std::vector<Mode> modes = {Mode::kVanilla, Mode::kSkoop};
  DenoiserSpec denoiser;

  double lambda = 0.5;
  std::optional<double> gamma0;
  double beta = 2.0;
  int w = 30;
  int r = 10;
  int max_iters = 1000;
  std::uint64_t seed = 0;
  double divergence_guard = 1e8;
  double gamma_floor = 1e-12;
  double rho_tolerance = 1e-6;
  int window_stride = 1;
  bool center_features = false;
  double rank_tol = 1e-10;
  int lipschitz_iters = 50;
  std::optional<Init> init;
  std::string init_path;

  bool save_png = true;
  bool dump_snapshots = false;
};

/// Keys accepted in a config document, in documentation order.
const std::vector<std::string>& config_keys();

/// Validates every key and collects all problems into one ConfigError.
ExperimentSpec parse_experiment(const nlohmann::json& doc);
ExperimentSpec load_experiment(const std::filesystem::path& path);
nlohmann::json read_config(const std::filesystem::path& path);

}  // namespace skoop
