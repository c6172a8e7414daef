#include "skoop/experiment.h"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "skoop/error.h"
#include "skoop/image_io.h"

namespace skoop {

namespace fs = std::filesystem;

int exit_code(RunStatus status) {
  switch (status) {
    case RunStatus::kCompleted: return kExitOk;
    case RunStatus::kDivergenceGuardTripped: return kExitDiverged;
    case RunStatus::kBridgeError: return kExitBridgeError;
  }
  return kExitOk;
}

int ExperimentOutcome::exit_code() const {
  int code = kExitOk;
  for (const auto& m : modes) {
    const int c = skoop::exit_code(m.status);
    if (c == kExitBridgeError || (c == kExitDiverged && code == kExitOk)) code = c;
  }
  return code;
}

std::string format_number(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

Image resolve_input(const std::string& input) {
  if (input.rfind("synthetic:", 0) == 0) {
    Shape s;
    char tail = 0;
    if (std::sscanf(input.c_str(), "synthetic:%d:%d:%d%c", &s.channels, &s.height,
                    &s.width, &tail) != 3 ||
        s.channels < 1 || s.height < 1 || s.width < 1) {
      throw ConfigError("malformed synthetic input '" + input +
                        "' (expected synthetic:C:H:W)");
    }
    return make_test_pattern(s);
  }
  return load_image(input);
}

ForwardModel build_model(const ExperimentSpec& spec) {
  switch (spec.task) {
    case Task::kGaussianDeblur:
      return ForwardModel::deblur(Kernel::gaussian(spec.kernel_size, spec.kernel_sigma));
    case Task::kMotionDeblur:
      return ForwardModel::deblur(load_kernel(spec.kernel_path, /*blur=*/true));
    case Task::kSuperresolution:
      return ForwardModel::superresolve(
          Kernel::gaussian(spec.kernel_size, spec.kernel_sigma), spec.sr_factor);
  }
  throw InvalidArgument("unknown task");
}

PreparedProblem prepare(const ExperimentSpec& spec) {
  PreparedProblem p;
  p.model = build_model(spec);
  if (!spec.input.empty()) p.ground_truth = resolve_input(spec.input);
  if (!spec.measurement.empty()) {
    p.measurement = load_image(spec.measurement);
  } else {
    p.measurement =
        simulate_measurement(p.model, *p.ground_truth, spec.noise_sigma, spec.seed).b;
  }
  return p;
}

RunConfig make_run_config(const ExperimentSpec& spec, const PreparedProblem& p,
                          Mode mode) {
  RunConfig cfg;
  cfg.model = p.model;
  cfg.denoiser = make_denoiser(spec.denoiser);
  cfg.measurement = p.measurement;
  cfg.mode = mode;
  cfg.lambda = spec.lambda;
  cfg.gamma0 = spec.gamma0;
  cfg.lipschitz_iterations = spec.lipschitz_iters;
  cfg.beta = spec.beta;
  cfg.gamma_floor = spec.gamma_floor;
  cfg.rho_tolerance = spec.rho_tolerance;
  cfg.checkpoints = {spec.w, spec.r};
  cfg.window_stride = spec.window_stride;
  cfg.koopman = {spec.rank_tol, spec.center_features};
  cfg.max_iters = spec.max_iters;
  cfg.seed = spec.seed;
  cfg.ground_truth = p.ground_truth;
  cfg.divergence_guard = spec.divergence_guard;
  const bool sr = spec.task == Task::kSuperresolution;
  cfg.init = spec.init.value_or(sr ? Init::kBicubic : Init::kObserved);
  if (cfg.init == Init::kProvided) cfg.init_image = load_image(spec.init_path);
  cfg.keep_snapshots = spec.dump_snapshots;
  return cfg;
}

ModeSummary summarize(const TrajectoryRecord& rec) {
  ModeSummary s;
  s.mode = rec.mode;
  s.status = rec.status;
  s.status_iteration = rec.status_iteration;
  s.message = rec.message;
  s.iterations = static_cast<std::int64_t>(rec.rows.size());
  s.gamma0 = rec.gamma0;
  s.final_gamma = rec.rows.empty() ? rec.gamma0 : rec.rows.back().gamma;
  for (const auto& row : rec.rows) {
    if (!row.psnr_db) continue;
    if (!s.peak_psnr_db || *row.psnr_db > *s.peak_psnr_db) {
      s.peak_psnr_db = row.psnr_db;
      s.peak_iteration = row.t;
    }
  }
  if (!rec.rows.empty()) s.final_psnr_db = rec.rows.back().psnr_db;
  for (const auto& ev : rec.checkpoints) {
    ++s.checkpoints;
    if (ev.shrunk) ++s.shrinks;
  }
  return s;
}

void write_trajectory_csv(const TrajectoryRecord& rec, std::ostream& out) {
  out << kTrajectoryHeader << '\n';
  char timing[160];
  for (const auto& row : rec.rows) {
    out << row.t << ',' << format_number(row.gamma) << ','
        << (row.rho ? format_number(*row.rho) : "") << ','
        << (row.psnr_db ? format_number(*row.psnr_db) : "") << ','
        << format_number(row.residual_norm);
    std::snprintf(timing, sizeof(timing), ",%.9f,%.9f,%.9f,%.9f",
                  row.seconds.denoise, row.seconds.forward, row.seconds.feature,
                  row.seconds.koopman);
    out << timing << '\n';
  }
}

void write_summary_csv(const std::vector<ModeSummary>& modes, std::ostream& out) {
  out << "mode,status,status_iteration,iterations,gamma0,final_gamma,"
         "peak_psnr_db,peak_iteration,final_psnr_db,checkpoints,shrinks\n";
  for (const auto& m : modes) {
    out << to_string(m.mode) << ',' << to_string(m.status) << ','
        << m.status_iteration << ',' << m.iterations << ','
        << format_number(m.gamma0) << ',' << format_number(m.final_gamma) << ','
        << (m.peak_psnr_db ? format_number(*m.peak_psnr_db) : "") << ','
        << m.peak_iteration << ','
        << (m.final_psnr_db ? format_number(*m.final_psnr_db) : "") << ','
        << m.checkpoints << ',' << m.shrinks << '\n';
  }
}

void write_overhead_csv(const OverheadReport& rep, std::ostream& out) {
  auto ms = [](double s) { return format_number(s * 1e3); };
  out << "phase,vanilla_ms_per_iter,skoop_ms_per_iter,skoop_share_pct\n";
  const std::tuple<const char*, double, double, double> rows[] = {
      {"denoise", rep.vanilla.denoise, rep.skoop.denoise, rep.skoop_share_pct.denoise},
      {"forward", rep.vanilla.forward, rep.skoop.forward, rep.skoop_share_pct.forward},
      {"feature", rep.vanilla.feature, rep.skoop.feature, rep.skoop_share_pct.feature},
      {"koopman", rep.vanilla.koopman, rep.skoop.koopman, rep.skoop_share_pct.koopman},
      {"other", rep.vanilla.other, rep.skoop.other, rep.skoop_share_pct.other},
      {"total", rep.vanilla.total, rep.skoop.total, 100.0}};
  for (const auto& [name, v, s, share] : rows) {
    out << name << ',' << ms(v) << ',' << ms(s) << ',' << format_number(share) << '\n';
  }
  out << "overhead_pct,,," << format_number(rep.overhead_pct) << '\n';
  out << "parts_over_total,,," << format_number(rep.parts_over_total) << '\n';
  out << "checkpoints,,," << rep.checkpoints << '\n';
  out << "koopman_ms_per_checkpoint,,," << ms(rep.koopman_s_per_checkpoint) << '\n';
}

void write_snapshots_csv(const Eigen::MatrixXd& snapshots, std::ostream& out) {
  for (Eigen::Index i = 0; i < snapshots.rows(); ++i) {
    out << (i ? "," : "") << 'f' << i;
  }
  out << '\n';
  for (Eigen::Index j = 0; j < snapshots.cols(); ++j) {
    for (Eigen::Index i = 0; i < snapshots.rows(); ++i) {
      out << (i ? "," : "") << format_number(snapshots(i, j));
    }
    out << '\n';
  }
}

SnapshotWindow read_snapshots_csv(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open snapshot dump " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw IoError(path.string() + ": empty file");
  std::vector<FeatureVector> rows;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    FeatureVector v;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
      double x = 0.0;
      const auto res = std::from_chars(cell.data(), cell.data() + cell.size(), x);
      if (res.ec != std::errc() || res.ptr != cell.data() + cell.size()) {
        throw IoError(path.string() + ":" + std::to_string(line_no) +
                      ": bad number '" + cell + "'");
      }
      v.push_back(x);
    }
    if (!rows.empty() && v.size() != rows.front().size()) {
      throw IoError(path.string() + ":" + std::to_string(line_no) +
                    ": ragged row");
    }
    rows.push_back(std::move(v));
  }
  if (rows.size() < 2) throw IoError(path.string() + ": need at least 2 snapshots");
  SnapshotWindow window(static_cast<int>(rows.size()));
  for (const auto& v : rows) window.push(v);
  return window;
}

namespace {

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream f(path, std::ios::trunc);
  if (!f) throw IoError("cannot write " + path.string());
  f << text;
}

}  // namespace

ExperimentOutcome run_experiment(const ExperimentSpec& spec) {
  fs::create_directories(spec.output_dir);
  const PreparedProblem problem = prepare(spec);
  save_image(problem.measurement, spec.output_dir / "measurement.skimg");
  if (spec.save_png) save_image(problem.measurement, spec.output_dir / "measurement.png");

  ExperimentOutcome outcome;
  for (Mode mode : spec.modes) {
    const RunResult res = run(make_run_config(spec, problem, mode));
    const std::string tag = to_string(mode);

    std::ostringstream csv;
    write_trajectory_csv(res.trajectory, csv);
    write_text(spec.output_dir / ("trajectory_" + tag + ".csv"), csv.str());
    save_image(res.final_image, spec.output_dir / ("recon_" + tag + ".skimg"));
    if (spec.save_png && res.final_image.all_finite()) {
      save_image(res.final_image, spec.output_dir / ("recon_" + tag + ".png"));
    }
    if (spec.dump_snapshots && res.snapshots) {
      std::ostringstream snaps;
      write_snapshots_csv(*res.snapshots, snaps);
      write_text(spec.output_dir / ("snapshots_" + tag + ".csv"), snaps.str());
    }
    outcome.modes.push_back(summarize(res.trajectory));
  }
  std::ostringstream summary;
  write_summary_csv(outcome.modes, summary);
  write_text(spec.output_dir / "summary.csv", summary.str());
  return outcome;
}

OverheadReport benchmark_overhead(const ExperimentSpec& spec) {
  fs::create_directories(spec.output_dir);
  const PreparedProblem problem = prepare(spec);
  const RunResult vanilla = run(make_run_config(spec, problem, Mode::kVanilla));
  const RunResult skoop = run(make_run_config(spec, problem, Mode::kSkoop));
  const OverheadReport rep = overhead_report(vanilla.trajectory, skoop.trajectory);
  std::ostringstream csv;
  write_overhead_csv(rep, csv);
  write_text(spec.output_dir / "overhead.csv", csv.str());
  return rep;
}

}  // namespace skoop
