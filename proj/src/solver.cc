#include "skoop/solver.h"

#include <chrono>
#include <cmath>
#include <functional>
#include <sstream>

#include "skoop/error.h"
#include "skoop/external_denoiser.h"
#include "skoop/features.h"
#include "skoop/metrics.h"

namespace skoop {

std::string to_string(Mode m) {
  switch (m) {
    case Mode::kVanilla: return "vanilla";
    case Mode::kEquivariant: return "equivariant";
    case Mode::kSkoop: return "skoop";
  }
  return "?";
}

Mode parse_mode(const std::string& s) {
  if (s == "vanilla") return Mode::kVanilla;
  if (s == "equivariant") return Mode::kEquivariant;
  if (s == "skoop") return Mode::kSkoop;
  throw InvalidArgument("unknown mode '" + s +
                        "' (expected vanilla, equivariant or skoop)");
}

std::string to_string(RunStatus s) {
  switch (s) {
    case RunStatus::kCompleted: return "completed";
    case RunStatus::kDivergenceGuardTripped: return "divergence_guard_tripped";
    case RunStatus::kBridgeError: return "bridge_error";
  }
  return "?";
}

void validate(const RunConfig& cfg) {
  if (!cfg.denoiser) throw InvalidArgument("run: no denoiser configured");
  if (cfg.max_iters < 1) throw InvalidArgument("max_iters must be >= 1");
  if (!(cfg.lambda > 0.0)) throw InvalidArgument("lambda must be > 0");
  if (cfg.gamma0 && !(*cfg.gamma0 > 0.0)) throw InvalidArgument("gamma0 must be > 0");
  if (!(cfg.beta > 0.0)) throw InvalidArgument("beta must be > 0");
  if (!(cfg.gamma_floor > 0.0)) throw InvalidArgument("gamma_floor must be > 0");
  if (!(cfg.rho_tolerance >= 0.0)) throw InvalidArgument("rho_tolerance must be >= 0");
  if (!(cfg.divergence_guard > 0.0)) {
    throw InvalidArgument("divergence_guard must be > 0");
  }
  if (cfg.window_stride < 1) throw InvalidArgument("window_stride must be >= 1");
  if (cfg.lipschitz_iterations < 1) {
    throw InvalidArgument("lipschitz_iterations must be >= 1");
  }
  validate(cfg.checkpoints);
  if (cfg.init == Init::kProvided && !cfg.init_image) {
    throw InvalidArgument("init = provided but no initial image given");
  }
  if (cfg.model.kind() == ForwardModel::Kind::kSuperresolve &&
      cfg.init == Init::kObserved) {
    throw InvalidArgument(
        "superresolution must start from the bicubic or a provided image");
  }
  const Shape x_shape = cfg.model.input_shape(cfg.measurement.shape());
  if (cfg.ground_truth && cfg.ground_truth->shape() != x_shape) {
    throw ShapeError("ground truth " + cfg.ground_truth->shape().to_string() +
                     " does not match reconstruction shape " + x_shape.to_string());
  }
  if (cfg.init_image && cfg.init == Init::kProvided &&
      cfg.init_image->shape() != x_shape) {
    throw ShapeError("initial image " + cfg.init_image->shape().to_string() +
                     " does not match reconstruction shape " + x_shape.to_string());
  }
}

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

// x - gamma (grad + lambda reg); also returns ||x_next - x|| and ||x_next||.
Image combine(const Image& x, double gamma, double lambda, const Image& grad,
              const Image& reg, double* residual_norm, double* next_norm) {
  Image next(x.shape());
  auto xs = x.data();
  auto g = grad.data();
  auto r = reg.data();
  auto out = next.data();
  double step_sq = 0.0, norm_sq = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    out[i] = xs[i] - gamma * (g[i] + lambda * r[i]);
    const double d = out[i] - xs[i];
    step_sq += d * d;
    norm_sq += out[i] * out[i];
  }
  if (residual_norm) *residual_norm = std::sqrt(step_sq);
  if (next_norm) *next_norm = std::sqrt(norm_sq);
  return next;
}

std::string fingerprint(const RunConfig& cfg) {
  const Kernel& k = cfg.model.kernel();
  std::size_t h = 0;
  for (double t : k.taps) h = h * 1000003u ^ std::hash<double>{}(t);
  std::ostringstream os;
  os << (cfg.model.kind() == ForwardModel::Kind::kDeblur ? "deblur" : "superresolve")
     << "/k" << k.height << "x" << k.width << "#" << std::hex << h << std::dec
     << "/s" << cfg.model.factor() << "/" << cfg.denoiser->name() << "/lambda="
     << cfg.lambda << "/b=" << cfg.measurement.shape().to_string();
  return os.str();
}

}  // namespace

Image red_step(const Image& x, double gamma, double lambda,
               const ForwardModel& model, Denoiser& denoiser, const Image& b) {
  if (!(gamma >= 0.0) || !(lambda >= 0.0)) {
    throw InvalidArgument("red_step: gamma and lambda must be >= 0");
  }
  const Image reg = denoiser_residual(denoiser, x);
  const Image grad = data_gradient(model, x, b);
  require_same_shape(x, reg, "red_step");
  return combine(x, gamma, lambda, grad, reg, nullptr, nullptr);
}

Image initial_iterate(const RunConfig& cfg) {
  switch (cfg.init) {
    case Init::kProvided:
      return *cfg.init_image;
    case Init::kBicubic:
      if (cfg.model.kind() == ForwardModel::Kind::kSuperresolve) {
        return bicubic_upsample(cfg.measurement, cfg.model.factor());
      }
      return cfg.measurement;
    case Init::kObserved:
      break;
  }
  return cfg.measurement;
}

double resolve_gamma0(const RunConfig& cfg, const Shape& x_shape) {
  if (cfg.gamma0) return *cfg.gamma0;
  const double lip = estimate_gradient_lipschitz(
      cfg.model, x_shape, cfg.lipschitz_iterations, cfg.seed);
  return 1.0 / (lip + cfg.lambda);
}

RunResult run(const RunConfig& cfg) {
  validate(cfg);
  Image x = initial_iterate(cfg);
  const double gamma0 = resolve_gamma0(cfg, x.shape());

  std::shared_ptr<Denoiser> denoiser = cfg.denoiser;
  if (cfg.mode == Mode::kEquivariant) {
    denoiser = std::shared_ptr<Denoiser>(equivariant_wrap(cfg.denoiser, cfg.seed));
  }
  const bool skoop = cfg.mode == Mode::kSkoop;

  RunResult result;
  TrajectoryRecord& rec = result.trajectory;
  rec.mode = cfg.mode;
  rec.gamma0 = gamma0;
  rec.fingerprint = fingerprint(cfg);
  rec.initial_norm = norm(x);
  if (cfg.ground_truth) rec.initial_psnr_db = psnr(x, *cfg.ground_truth).db;
  rec.rows.reserve(cfg.max_iters);

  StepSchedule schedule(gamma0, cfg.beta, cfg.gamma_floor, cfg.rho_tolerance);
  SnapshotWindow window(cfg.checkpoints.w, kFeaturesPerChannel * x.channels());

  for (std::int64_t t = 0; t < cfg.max_iters; ++t) {
    const auto iter_start = Clock::now();
    TrajectoryRow row;
    row.t = t;
    try {
      if (skoop) {
        auto start = Clock::now();
        if (t % cfg.window_stride == 0) window.push(extract_features(x));
        row.seconds.feature = seconds_since(start);

        if (is_checkpoint(cfg.checkpoints, t) && window.full()) {
          start = Clock::now();
          std::optional<double> rho;
          try {
            rho = estimate_koopman(window, cfg.koopman).spectral_radius;
          } catch (const EigenSolverError&) {
            row.eigen_failure = true;
          }
          schedule.apply_checkpoint(t, rho);
          row.seconds.koopman = seconds_since(start);
          row.rho = rho;
          if (cfg.keep_snapshots) result.snapshots = window.as_matrix();
        }
      }
      row.gamma = schedule.gamma();

      auto start = Clock::now();
      const Image reg = denoiser_residual(*denoiser, x);
      row.seconds.denoise = seconds_since(start);

      start = Clock::now();
      const Image grad = data_gradient(cfg.model, x, cfg.measurement);
      Image next = combine(x, row.gamma, cfg.lambda, grad, reg,
                           &row.residual_norm, &row.iterate_norm);
      row.seconds.forward = seconds_since(start);
      x = std::move(next);
    } catch (const BridgeError& e) {
      rec.status = RunStatus::kBridgeError;
      rec.status_iteration = t;
      rec.message = e.what();
      break;
    }

    const auto other_start = Clock::now();
    const bool blown = !std::isfinite(row.iterate_norm) ||
                       row.iterate_norm > cfg.divergence_guard;
    if (cfg.ground_truth && !blown) row.psnr_db = psnr(x, *cfg.ground_truth).db;
    row.seconds.other = seconds_since(other_start);
    row.seconds.total = seconds_since(iter_start);
    rec.rows.push_back(row);

    if (blown) {
      rec.status = RunStatus::kDivergenceGuardTripped;
      rec.status_iteration = t;
      std::ostringstream os;
      os << "||x|| = " << row.iterate_norm << " exceeds guard "
         << cfg.divergence_guard << " at t = " << t;
      rec.message = os.str();
      break;
    }
  }
  rec.checkpoints = schedule.history();
  result.final_image = std::move(x);
  return result;
}

PhaseTimes mean_phase_times(const TrajectoryRecord& r) {
  PhaseTimes m;
  if (r.rows.empty()) return m;
  for (const auto& row : r.rows) {
    m.denoise += row.seconds.denoise;
    m.forward += row.seconds.forward;
    m.feature += row.seconds.feature;
    m.koopman += row.seconds.koopman;
    m.other += row.seconds.other;
    m.total += row.seconds.total;
  }
  const double n = static_cast<double>(r.rows.size());
  m.denoise /= n;
  m.forward /= n;
  m.feature /= n;
  m.koopman /= n;
  m.other /= n;
  m.total /= n;
  return m;
}

OverheadReport overhead_report(const TrajectoryRecord& vanilla,
                               const TrajectoryRecord& skoop) {
  if (vanilla.fingerprint != skoop.fingerprint) {
    throw InvalidArgument("overhead_report: runs differ (" +
                          vanilla.fingerprint + " vs " + skoop.fingerprint + ")");
  }
  if (vanilla.rows.empty() || skoop.rows.empty()) {
    throw InvalidArgument("overhead_report: empty trajectory");
  }
  OverheadReport rep;
  rep.vanilla = mean_phase_times(vanilla);
  rep.skoop = mean_phase_times(skoop);
  if (rep.vanilla.total > 0.0) {
    rep.overhead_pct = (rep.skoop.total / rep.vanilla.total - 1.0) * 100.0;
  }
  const PhaseTimes& s = rep.skoop;
  const double parts = s.denoise + s.forward + s.feature + s.koopman + s.other;
  if (s.total > 0.0) {
    rep.parts_over_total = parts / s.total;
    rep.skoop_share_pct = {100 * s.denoise / s.total, 100 * s.forward / s.total,
                           100 * s.feature / s.total, 100 * s.koopman / s.total,
                           100 * s.other / s.total};
  }
  double koopman_sum = 0.0;
  for (const auto& row : skoop.rows) {
    if (row.rho || row.eigen_failure) {
      ++rep.checkpoints;
      koopman_sum += row.seconds.koopman;
    }
  }
  if (rep.checkpoints > 0) rep.koopman_s_per_checkpoint = koopman_sum / rep.checkpoints;
  return rep;
}

}  // namespace skoop
