#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "skoop/config.h"
#include "skoop/error.h"
#include "skoop/experiment.h"
#include "skoop/image_io.h"
#include "support.h"

using namespace skoop;
using nlohmann::json;
using skoop::testing::random_image;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    char tmpl[] = "/tmp/skoop_exp_XXXXXX";
    path = ::mkdtemp(tmpl);
  }
  ~TempDir() { fs::remove_all(path); }
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::vector<std::string> lines(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  for (std::string l; std::getline(ss, l);) out.push_back(l);
  return out;
}

std::vector<std::string> cells(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  for (std::string c; std::getline(ss, c, ',');) out.push_back(c);
  if (!line.empty() && line.back() == ',') out.push_back("");
  return out;
}

// Trajectory CSV with the four timing columns cut off.
std::string without_timings(const std::string& csv) {
  std::string out;
  for (const auto& l : lines(csv)) {
    auto c = cells(l);
    c.resize(5);
    for (std::size_t i = 0; i < c.size(); ++i) out += (i ? "," : "") + c[i];
    out += '\n';
  }
  return out;
}

ExperimentSpec small_spec(const fs::path& out) {
  json doc = {{"task", "gaussian_deblur"},
              {"input", "synthetic:1:24:24"},
              {"output_dir", out.string()},
              {"modes", "vanilla,equivariant,skoop"},
              {"max_iters", 80},
              {"seed", 7},
              {"dump_snapshots", true}};
  return parse_experiment(doc);
}

}  // namespace

TEST_CASE("single iteration with identity model and denoiser is one gradient step") {
  TempDir dir;
  const Image b = random_image({1, 8, 8}, 1);
  const Image x0 = random_image({1, 8, 8}, 2);
  save_image(b, dir.path / "b.skimg");
  save_image(x0, dir.path / "x0.skimg");
  const Image bf = load_image(dir.path / "b.skimg");  // f32-rounded copies
  const Image x0f = load_image(dir.path / "x0.skimg");

  json doc = {{"task", "gaussian_deblur"},
              {"kernel_size", 1},
              {"measurement", (dir.path / "b.skimg").string()},
              {"output_dir", (dir.path / "out").string()},
              {"noise_sigma", 0.0},
              {"denoiser", "identity"},
              {"modes", "vanilla"},
              {"gamma0", 0.25},
              {"max_iters", 1},
              {"init", "provided"},
              {"init_path", (dir.path / "x0.skimg").string()}};
  const ExperimentOutcome out = run_experiment(parse_experiment(doc));
  CHECK(out.exit_code() == kExitOk);
  const Image recon = load_image(dir.path / "out" / "recon_vanilla.skimg");
  for (std::size_t i = 0; i < recon.size(); ++i) {
    const double step = x0f.data()[i] - 0.25 * (x0f.data()[i] - bf.data()[i]);
    CHECK(recon.data()[i] == static_cast<float>(step));
  }
  // No ground truth: PSNR columns stay empty.
  const auto rows = lines(slurp(dir.path / "out" / "trajectory_vanilla.csv"));
  REQUIRE(rows.size() == 2);
  CHECK(cells(rows[1])[3].empty());
}

TEST_CASE("artifacts, schemas and summary") {
  TempDir dir;
  const ExperimentSpec spec = small_spec(dir.path / "run");
  const ExperimentOutcome out = run_experiment(spec);
  REQUIRE(out.modes.size() == 3);
  for (const char* f :
       {"measurement.skimg", "measurement.png", "summary.csv", "recon_vanilla.skimg",
        "recon_vanilla.png", "trajectory_equivariant.csv", "trajectory_skoop.csv",
        "snapshots_skoop.csv"}) {
    CAPTURE(f);
    CHECK(fs::exists(spec.output_dir / f));
  }
  CHECK_FALSE(fs::exists(spec.output_dir / "snapshots_vanilla.csv"));

  const auto traj = lines(slurp(spec.output_dir / "trajectory_skoop.csv"));
  REQUIRE(traj.size() == 81);
  CHECK(traj[0] == kTrajectoryHeader);
  int with_rho = 0;
  for (std::size_t i = 1; i < traj.size(); ++i) {
    const auto c = cells(traj[i]);
    REQUIRE(c.size() == 9);
    CHECK(c[0] == std::to_string(i - 1));
    if (!c[2].empty()) ++with_rho;
    CHECK_FALSE(c[3].empty());
  }
  CHECK(with_rho == 4);  // t = 40, 50, 60, 70 with w = 30, r = 10

  for (const auto& m : out.modes) {
    CAPTURE(to_string(m.mode));
    REQUIRE(m.peak_psnr_db);
    REQUIRE(m.final_psnr_db);
    CHECK(*m.peak_psnr_db >= *m.final_psnr_db);
    CHECK(m.iterations == 80);
  }

  const auto summary = lines(slurp(spec.output_dir / "summary.csv"));
  REQUIRE(summary.size() == 4);
  CHECK(summary[0] ==
        "mode,status,status_iteration,iterations,gamma0,final_gamma,peak_psnr_db,"
        "peak_iteration,final_psnr_db,checkpoints,shrinks");
  CHECK(summary[3].rfind("skoop,completed,-1,80,", 0) == 0);
}

TEST_CASE("rerun with the same seed is reproducible") {
  TempDir dir;
  const ExperimentSpec a = small_spec(dir.path / "a");
  const ExperimentSpec b = small_spec(dir.path / "b");
  run_experiment(a);
  run_experiment(b);
  for (const char* mode : {"vanilla", "equivariant", "skoop"}) {
    CAPTURE(mode);
    const std::string name = std::string("trajectory_") + mode + ".csv";
    CHECK(without_timings(slurp(a.output_dir / name)) ==
          without_timings(slurp(b.output_dir / name)));
    const std::string recon = std::string("recon_") + mode + ".skimg";
    CHECK(slurp(a.output_dir / recon) == slurp(b.output_dir / recon));
  }
  CHECK(slurp(a.output_dir / "summary.csv") == slurp(b.output_dir / "summary.csv"));
  CHECK(slurp(a.output_dir / "snapshots_skoop.csv") ==
        slurp(b.output_dir / "snapshots_skoop.csv"));

  ExperimentSpec c = small_spec(dir.path / "c");
  c.seed = 8;
  run_experiment(c);
  CHECK(slurp(a.output_dir / "measurement.skimg") !=
        slurp(c.output_dir / "measurement.skimg"));
}

TEST_CASE("snapshot CSV round trip") {
  Eigen::MatrixXd m = Eigen::MatrixXd::Random(4, 6);
  m(0, 0) = 1e-300;
  m(1, 2) = -0.1;
  std::ostringstream os;
  write_snapshots_csv(m, os);
  TempDir dir;
  std::ofstream(dir.path / "s.csv") << os.str();
  const SnapshotWindow w = read_snapshots_csv(dir.path / "s.csv");
  CHECK(w.size() == 6);
  CHECK(w.dim() == 4);
  CHECK(w.as_matrix() == m);

  std::ofstream(dir.path / "ragged.csv") << "f0,f1\n1,2\n3\n";
  CHECK_THROWS_AS(read_snapshots_csv(dir.path / "ragged.csv"), IoError);
  std::ofstream(dir.path / "word.csv") << "f0\n1\nabc\n";
  CHECK_THROWS_AS(read_snapshots_csv(dir.path / "word.csv"), IoError);
  std::ofstream(dir.path / "one.csv") << "f0\n1\n";
  CHECK_THROWS_AS(read_snapshots_csv(dir.path / "one.csv"), IoError);
}

TEST_CASE("number formatting round trips") {
  for (double v : {0.1, 1.0 / 3.0, -2.5e-17, 123456789.0, 0.0}) {
    CHECK(std::stod(format_number(v)) == v);
  }
  CHECK(format_number(0.5) == "0.5");
}

TEST_CASE("exit codes") {
  CHECK(exit_code(RunStatus::kCompleted) == 0);
  CHECK(exit_code(RunStatus::kDivergenceGuardTripped) == 3);
  CHECK(exit_code(RunStatus::kBridgeError) == 4);
  ExperimentOutcome o;
  o.modes.resize(3);
  CHECK(o.exit_code() == 0);
  o.modes[0].status = RunStatus::kDivergenceGuardTripped;
  CHECK(o.exit_code() == 3);
  o.modes[2].status = RunStatus::kBridgeError;
  CHECK(o.exit_code() == 4);
  o.modes[1].status = RunStatus::kDivergenceGuardTripped;
  CHECK(o.exit_code() == 4);
}

TEST_CASE("diverging run writes its artifacts") {
  TempDir dir;
  json doc = {{"task", "gaussian_deblur"},
              {"input", "synthetic:1:16:16"},
              {"output_dir", (dir.path / "o").string()},
              {"modes", "vanilla"},
              {"gamma0", 50.0},
              {"divergence_guard", 1e3},
              {"max_iters", 200}};
  const ExperimentOutcome out = run_experiment(parse_experiment(doc));
  CHECK(out.exit_code() == kExitDiverged);
  CHECK(out.modes[0].iterations == out.modes[0].status_iteration + 1);
  CHECK(fs::exists(dir.path / "o" / "trajectory_vanilla.csv"));
}

TEST_CASE("synthetic input syntax") {
  CHECK(resolve_input("synthetic:3:8:5").shape() == Shape{3, 8, 5});
  CHECK_THROWS_AS(resolve_input("synthetic:3:8"), ConfigError);
  CHECK_THROWS_AS(resolve_input("synthetic:3:8:5x"), ConfigError);
  CHECK_THROWS_AS(resolve_input("synthetic:0:8:5"), ConfigError);
}

TEST_CASE("benchmark writes the overhead table") {
  TempDir dir;
  ExperimentSpec spec = small_spec(dir.path / "bench");
  spec.max_iters = 60;
  const OverheadReport rep = benchmark_overhead(spec);
  CHECK(rep.checkpoints == 2);  // t = 40, 50
  const auto rows = lines(slurp(spec.output_dir / "overhead.csv"));
  REQUIRE(rows.size() == 11);
  CHECK(rows[0] == "phase,vanilla_ms_per_iter,skoop_ms_per_iter,skoop_share_pct");
  CHECK(rows[9] == "checkpoints,,,2");
}
