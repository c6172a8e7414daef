// Command-line front end: run / sweep / bench / inspect.

#include <algorithm>
#include <atomic>
#include <complex>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "skoop/config.h"
#include "skoop/error.h"
#include "skoop/experiment.h"
#include "skoop/koopman.h"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kExitUnexpected = 1;

struct Overrides {
  std::optional<std::string> mode;
  std::optional<std::string> gamma0;
  std::optional<double> lambda;
  std::optional<double> beta;
  std::optional<int> w;
  std::optional<int> r;
  std::optional<int> max_iters;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> denoiser;
  std::optional<std::string> external_cmd;
  std::vector<std::string> set;  // generic key=value, value parsed as JSON

  void add_to(CLI::App* app) {
    app->add_option("--mode", mode, "Comma-separated modes (vanilla, equivariant, skoop)");
    app->add_option("--gamma0", gamma0, "Initial step size or 'auto'");
    app->add_option("--lambda", lambda, "Regularization weight");
    app->add_option("--beta", beta, "Shrink sharpness");
    app->add_option("--w", w, "Snapshot window length");
    app->add_option("--r", r, "Checkpoint stride");
    app->add_option("--max-iters", max_iters, "Iteration budget");
    app->add_option("--seed", seed, "Seed for noise and randomized denoisers");
    app->add_option("--denoiser", denoiser, "identity|gaussian|box|median|unsharp|external");
    app->add_option("--external-denoiser-cmd", external_cmd,
                    "Shell command of an external denoiser peer");
    app->add_option("--set", set, "Override any config key: key=value (value is JSON)");
  }

  void apply(json& doc) const {
    if (mode) doc["modes"] = *mode;
    if (gamma0) {
      if (*gamma0 == "auto") {
        doc["gamma0"] = "auto";
      } else {
        try {
          doc["gamma0"] = std::stod(*gamma0);
        } catch (const std::exception&) {
          throw skoop::ConfigError("--gamma0: expected a number or 'auto', got '" +
                                   *gamma0 + "'");
        }
      }
    }
    if (lambda) doc["lambda"] = *lambda;
    if (beta) doc["beta"] = *beta;
    if (w) doc["w"] = *w;
    if (r) doc["r"] = *r;
    if (max_iters) doc["max_iters"] = *max_iters;
    if (seed) doc["seed"] = *seed;
    if (denoiser) doc["denoiser"] = *denoiser;
    if (external_cmd) {
      doc["external_denoiser_cmd"] = *external_cmd;
      if (!denoiser) doc["denoiser"] = "external";
    }
    for (const auto& kv : set) {
      const auto eq = kv.find('=');
      if (eq == std::string::npos || eq == 0) {
        throw skoop::ConfigError("--set expects key=value, got '" + kv + "'");
      }
      const std::string key = kv.substr(0, eq);
      const std::string value = kv.substr(eq + 1);
      // Bare words are taken as strings so that --set task=motion_deblur works.
      json parsed = json::parse(value, nullptr, /*allow_exceptions=*/false);
      doc[key] = parsed.is_discarded() ? json(value) : parsed;
    }
  }
};

skoop::ExperimentSpec load_spec(const fs::path& path, const Overrides& ov) {
  json doc = skoop::read_config(path);
  ov.apply(doc);
  return skoop::parse_experiment(doc);
}

void print_summary(const std::string& label, const skoop::ExperimentOutcome& out,
                   std::ostream& os) {
  auto opt = [](const std::optional<double>& v) {
    if (!v) return std::string("-");
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", *v);
    return std::string(buf);
  };
  for (const auto& m : out.modes) {
    os << label << skoop::to_string(m.mode) << ": " << skoop::to_string(m.status);
    if (m.status != skoop::RunStatus::kCompleted) {
      os << " at t=" << m.status_iteration;
      if (!m.message.empty()) os << " (" << m.message << ")";
    }
    os << ", iters=" << m.iterations << ", peak=" << opt(m.peak_psnr_db) << " dB @"
       << m.peak_iteration << ", final=" << opt(m.final_psnr_db) << " dB"
       << ", gamma " << m.gamma0 << " -> " << m.final_gamma << " (" << m.shrinks
       << "/" << m.checkpoints << " checkpoints shrank)\n";
  }
}

int cmd_run(const fs::path& config, const Overrides& ov) {
  const skoop::ExperimentSpec spec = load_spec(config, ov);
  const skoop::ExperimentOutcome out = skoop::run_experiment(spec);
  print_summary("", out, std::cout);
  std::cout << "outputs: " << spec.output_dir.string() << "\n";
  return out.exit_code();
}

int cmd_sweep(const fs::path& dir, const Overrides& ov, int jobs) {
  if (!fs::is_directory(dir)) throw skoop::ConfigError("not a directory: " + dir.string());
  std::vector<fs::path> configs;
  for (const auto& e : fs::directory_iterator(dir)) {
    if (e.is_regular_file() && e.path().extension() == ".json") configs.push_back(e.path());
  }
  std::sort(configs.begin(), configs.end());
  if (configs.empty()) throw skoop::ConfigError("no *.json specs in " + dir.string());

  // Validate everything up front so that a typo fails fast.
  std::vector<skoop::ExperimentSpec> specs;
  std::vector<std::string> problems;
  for (const auto& c : configs) {
    try {
      specs.push_back(load_spec(c, ov));
    } catch (const skoop::ConfigError& e) {
      problems.push_back(c.string() + ": " + e.what());
    }
  }
  if (!problems.empty()) {
    std::string msg = "invalid specs in sweep:";
    for (const auto& p : problems) msg += "\n" + p;
    throw skoop::ConfigError(msg);
  }

  std::vector<int> codes(specs.size(), skoop::kExitOk);
  std::atomic<std::size_t> next{0};
  std::mutex io;
  auto worker = [&] {
    for (std::size_t i = next++; i < specs.size(); i = next++) {
      const std::string label = configs[i].filename().string() + " ";
      try {
        const auto out = skoop::run_experiment(specs[i]);
        codes[i] = out.exit_code();
        std::lock_guard lock(io);
        print_summary(label, out, std::cout);
      } catch (const std::exception& e) {
        codes[i] = kExitUnexpected;
        std::lock_guard lock(io);
        std::cerr << label << "error: " << e.what() << "\n";
      }
    }
  };
  const int n = std::clamp<int>(jobs, 1, static_cast<int>(specs.size()));
  std::vector<std::thread> pool;
  for (int k = 0; k < n; ++k) pool.emplace_back(worker);
  for (auto& t : pool) t.join();

  int code = skoop::kExitOk;
  for (int c : codes) {
    auto rank = [](int x) {
      return x == skoop::kExitOk ? 0 : x == skoop::kExitDiverged ? 1 : 2;
    };
    if (rank(c) > rank(code)) code = c;
  }
  return code;
}

int cmd_bench(const fs::path& config, const Overrides& ov) {
  const skoop::ExperimentSpec spec = load_spec(config, ov);
  const skoop::OverheadReport rep = skoop::benchmark_overhead(spec);
  skoop::write_overhead_csv(rep, std::cout);
  const double koopman_fraction = rep.skoop_share_pct.koopman;
  std::printf("koopman share of SKOOP runtime: %.4f%% (published reference: < 0.1%%)\n",
              koopman_fraction);
  std::printf("koopman cost per checkpoint: %.4f ms over %lld checkpoints\n",
              rep.koopman_s_per_checkpoint * 1e3,
              static_cast<long long>(rep.checkpoints));
  std::cout << "written: " << (spec.output_dir / "overhead.csv").string() << "\n";
  return skoop::kExitOk;
}

int cmd_inspect(const fs::path& dump, double rank_tol, bool center) {
  const skoop::SnapshotWindow window = skoop::read_snapshots_csv(dump);
  const skoop::KoopmanEstimate est = skoop::estimate_koopman(window, {rank_tol, center});
  std::printf("snapshots: %d x %d, pairs: %d, effective rank: %d%s\n", window.size(),
              window.dim(), est.pairs_used, est.effective_rank,
              est.degenerate ? " (degenerate)" : "");
  std::printf("spectral radius: %.17g\n", est.spectral_radius);
  auto eig = est.eigenvalues;
  std::sort(eig.begin(), eig.end(), [](const auto& a, const auto& b) {
    return std::abs(a) > std::abs(b);
  });
  std::printf("%4s %22s %22s %22s\n", "#", "real", "imag", "modulus");
  for (std::size_t i = 0; i < eig.size(); ++i) {
    std::printf("%4zu %22.15g %22.15g %22.15g\n", i, eig[i].real(), eig[i].imag(),
                std::abs(eig[i]));
  }
  return skoop::kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"RED gradient descent with Koopman-spectrum step-size control"};
  app.require_subcommand(1);

  Overrides ov;
  std::string config_path;
  std::string sweep_dir;
  int jobs = 1;
  std::string dump_path;
  double rank_tol = 1e-10;
  bool center = false;

  auto* run = app.add_subcommand("run", "Run one experiment spec");
  run->add_option("config", config_path, "JSON experiment spec")->required();
  ov.add_to(run);

  auto* sweep = app.add_subcommand("sweep", "Run every *.json spec in a directory");
  sweep->add_option("dir", sweep_dir, "Directory of specs")->required();
  sweep->add_option("-j,--jobs", jobs, "Worker threads")->check(CLI::PositiveNumber);
  ov.add_to(sweep);

  auto* bench = app.add_subcommand("bench", "Per-phase overhead of SKOOP vs Vanilla");
  bench->add_option("config", config_path, "JSON experiment spec")->required();
  ov.add_to(bench);

  auto* inspect = app.add_subcommand("inspect", "Print the DMD spectrum of a snapshot dump");
  inspect->add_option("dump", dump_path, "snapshots_<mode>.csv")->required();
  inspect->add_option("--rank-tol", rank_tol, "Relative singular-value cutoff");
  inspect->add_flag("--center", center, "Subtract the snapshot mean first");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : skoop::kExitConfigInvalid;
  }

  try {
    if (*run) return cmd_run(config_path, ov);
    if (*sweep) return cmd_sweep(sweep_dir, ov, jobs);
    if (*bench) return cmd_bench(config_path, ov);
    if (*inspect) return cmd_inspect(dump_path, rank_tol, center);
  } catch (const skoop::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return skoop::kExitConfigInvalid;
  } catch (const skoop::BridgeError& e) {
    std::cerr << "external denoiser error: " << e.what() << "\n";
    return skoop::kExitBridgeError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUnexpected;
  }
  return kExitUnexpected;
}
