#include "skoop/config.h"

#include <fstream>
#include <set>
#include <sstream>

#include "skoop/error.h"
#include "skoop/external_denoiser.h"

namespace skoop {

namespace fs = std::filesystem;
using nlohmann::json;

const std::vector<std::string>& config_keys() {
  static const std::vector<std::string> keys = {
      "task",          "input",          "measurement",
      "output_dir",    "kernel_size",    "kernel_sigma",
      "kernel_path",   "sr_factor",      "noise_sigma",
      "modes",         "denoiser",       "denoiser_sigma",
      "denoiser_radius", "denoiser_alpha", "external_denoiser_cmd",
      "lambda",        "gamma0",         "beta",
      "w",             "r",              "max_iters",
      "seed",          "divergence_guard", "gamma_floor",
      "rho_tolerance", "window_stride",  "center_features",
      "rank_tol",      "lipschitz_iters", "init",
      "init_path",     "save_png",       "dump_snapshots"};
  return keys;
}

std::shared_ptr<Denoiser> make_denoiser(const DenoiserSpec& spec) {
  switch (spec.kind) {
    case DenoiserKind::kIdentity: return make_identity_denoiser();
    case DenoiserKind::kGaussian: return make_gaussian_smooth(spec.sigma);
    case DenoiserKind::kBox: return make_box_blur(spec.radius);
    case DenoiserKind::kMedian: return make_median(spec.radius);
    case DenoiserKind::kUnsharp: return make_unsharp_expansive(spec.alpha, spec.sigma);
    case DenoiserKind::kExternal:
      return make_external_denoiser(spec.external_cmd, spec.sigma);
  }
  throw InvalidArgument("unknown denoiser kind");
}

namespace {

// Reads typed keys from a flat object, recording every problem instead of
// stopping at the first.
class Reader {
 public:
  explicit Reader(const json& doc) : doc_(doc) {}

  std::vector<std::string>& errors() { return errors_; }
  void fail(const std::string& msg) { errors_.push_back(msg); }
  bool has(const std::string& key) const { return doc_.contains(key); }

  void number(const std::string& key, double& out) {
    if (!has(key)) return;
    const json& v = doc_.at(key);
    if (!v.is_number()) return type_error(key, "a number", v);
    out = v.get<double>();
  }

  void integer(const std::string& key, int& out) {
    if (!has(key)) return;
    const json& v = doc_.at(key);
    if (!v.is_number_integer()) return type_error(key, "an integer", v);
    out = v.get<int>();
  }

  void unsigned64(const std::string& key, std::uint64_t& out) {
    if (!has(key)) return;
    const json& v = doc_.at(key);
    if (!v.is_number_integer() || (!v.is_number_unsigned() && v.get<std::int64_t>() < 0)) {
      return type_error(key, "a non-negative integer", v);
    }
    out = v.get<std::uint64_t>();
  }

  void string(const std::string& key, std::string& out) {
    if (!has(key)) return;
    const json& v = doc_.at(key);
    if (!v.is_string()) return type_error(key, "a string", v);
    out = v.get<std::string>();
  }

  void boolean(const std::string& key, bool& out) {
    if (!has(key)) return;
    const json& v = doc_.at(key);
    if (!v.is_boolean()) return type_error(key, "true or false", v);
    out = v.get<bool>();
  }

  template <typename Pred>
  void check(bool present, Pred ok, const std::string& msg) {
    if (present && !ok()) fail(msg);
  }

 private:
  void type_error(const std::string& key, const char* want, const json& got) {
    fail("'" + key + "' must be " + want + ", got " + got.dump());
  }

  const json& doc_;
  std::vector<std::string> errors_;
};

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto b = item.find_first_not_of(" \t");
    const auto e = item.find_last_not_of(" \t");
    if (b != std::string::npos) out.push_back(item.substr(b, e - b + 1));
  }
  return out;
}

bool is_synthetic(const std::string& s) { return s.rfind("synthetic:", 0) == 0; }

}  // namespace

ExperimentSpec parse_experiment(const json& doc) {
  if (!doc.is_object()) throw ConfigError("config must be a JSON object");
  ExperimentSpec spec;
  Reader in(doc);

  const auto& known = config_keys();
  const std::set<std::string> known_set(known.begin(), known.end());
  for (const auto& [key, value] : doc.items()) {
    if (!known_set.count(key)) in.fail("unknown key '" + key + "'");
    if (value.is_object() || value.is_array()) {
      in.fail("'" + key + "' must be a scalar (config is flat)");
    }
  }

  std::string task;
  if (!in.has("task")) in.fail("missing required key 'task'");
  in.string("task", task);
  if (task == "gaussian_deblur") {
    spec.task = Task::kGaussianDeblur;
  } else if (task == "motion_deblur") {
    spec.task = Task::kMotionDeblur;
  } else if (task == "superresolution") {
    spec.task = Task::kSuperresolution;
    spec.kernel_size = 25;
  } else if (!task.empty()) {
    in.fail("'task' must be gaussian_deblur, motion_deblur or superresolution, got '" +
            task + "'");
  }

  in.string("input", spec.input);
  in.string("measurement", spec.measurement);
  std::string out_dir;
  if (!in.has("output_dir")) in.fail("missing required key 'output_dir'");
  in.string("output_dir", out_dir);
  spec.output_dir = out_dir;

  in.integer("kernel_size", spec.kernel_size);
  in.number("kernel_sigma", spec.kernel_sigma);
  in.string("kernel_path", spec.kernel_path);
  in.integer("sr_factor", spec.sr_factor);
  in.number("noise_sigma", spec.noise_sigma);

  std::string modes;
  in.string("modes", modes);
  if (in.has("modes")) {
    spec.modes.clear();
    for (const auto& m : split_list(modes)) {
      try {
        spec.modes.push_back(parse_mode(m));
      } catch (const InvalidArgument& e) {
        in.fail(std::string("'modes': ") + e.what());
      }
    }
    if (spec.modes.empty() && doc.at("modes").is_string()) {
      in.fail("'modes' must list at least one mode");
    }
  }

  std::string denoiser;
  in.string("denoiser", denoiser);
  static const std::pair<const char*, DenoiserKind> kDenoisers[] = {
      {"identity", DenoiserKind::kIdentity}, {"gaussian", DenoiserKind::kGaussian},
      {"box", DenoiserKind::kBox},           {"median", DenoiserKind::kMedian},
      {"unsharp", DenoiserKind::kUnsharp},   {"external", DenoiserKind::kExternal}};
  if (!denoiser.empty()) {
    bool found = false;
    for (const auto& [name, kind] : kDenoisers) {
      if (denoiser == name) {
        spec.denoiser.kind = kind;
        found = true;
      }
    }
    if (!found) {
      in.fail("'denoiser' must be identity, gaussian, box, median, unsharp or "
              "external, got '" + denoiser + "'");
    }
  }
  in.number("denoiser_sigma", spec.denoiser.sigma);
  in.integer("denoiser_radius", spec.denoiser.radius);
  in.number("denoiser_alpha", spec.denoiser.alpha);
  in.string("external_denoiser_cmd", spec.denoiser.external_cmd);

  in.number("lambda", spec.lambda);
  if (in.has("gamma0")) {
    const json& g = doc.at("gamma0");
    if (g.is_string() && g.get<std::string>() == "auto") {
      spec.gamma0.reset();
    } else if (g.is_number()) {
      spec.gamma0 = g.get<double>();
    } else {
      in.fail("'gamma0' must be a number or \"auto\", got " + g.dump());
    }
  }
  in.number("beta", spec.beta);
  in.integer("w", spec.w);
  in.integer("r", spec.r);
  in.integer("max_iters", spec.max_iters);
  in.unsigned64("seed", spec.seed);
  in.number("divergence_guard", spec.divergence_guard);
  in.number("gamma_floor", spec.gamma_floor);
  in.number("rho_tolerance", spec.rho_tolerance);
  in.integer("window_stride", spec.window_stride);
  in.boolean("center_features", spec.center_features);
  in.number("rank_tol", spec.rank_tol);
  in.integer("lipschitz_iters", spec.lipschitz_iters);

  std::string init;
  in.string("init", init);
  if (init == "observed") {
    spec.init = Init::kObserved;
  } else if (init == "bicubic") {
    spec.init = Init::kBicubic;
  } else if (init == "provided") {
    spec.init = Init::kProvided;
  } else if (!init.empty()) {
    in.fail("'init' must be observed, bicubic or provided, got '" + init + "'");
  }
  in.string("init_path", spec.init_path);
  in.boolean("save_png", spec.save_png);
  in.boolean("dump_snapshots", spec.dump_snapshots);

  // Ranges and cross-key rules.
  auto positive = [&](const char* key, double v) {
    if (!(v > 0.0)) in.fail(std::string("'") + key + "' must be > 0");
  };
  positive("lambda", spec.lambda);
  positive("beta", spec.beta);
  positive("divergence_guard", spec.divergence_guard);
  positive("gamma_floor", spec.gamma_floor);
  if (!(spec.rho_tolerance >= 0.0)) in.fail("'rho_tolerance' must be >= 0");
  positive("kernel_sigma", spec.kernel_sigma);
  positive("denoiser_sigma", spec.denoiser.sigma);
  if (spec.gamma0 && !(*spec.gamma0 > 0.0)) in.fail("'gamma0' must be > 0 or \"auto\"");
  if (!(spec.noise_sigma >= 0.0)) in.fail("'noise_sigma' must be >= 0");
  if (!(spec.rank_tol >= 0.0)) in.fail("'rank_tol' must be >= 0");
  if (spec.w < 2) in.fail("'w' must be >= 2");
  if (spec.r < 1) in.fail("'r' must be >= 1");
  if (spec.max_iters < 1) in.fail("'max_iters' must be >= 1");
  if (spec.window_stride < 1) in.fail("'window_stride' must be >= 1");
  if (spec.lipschitz_iters < 1) in.fail("'lipschitz_iters' must be >= 1");
  if (spec.sr_factor < 2) in.fail("'sr_factor' must be >= 2");
  if (spec.kernel_size < 1 || spec.kernel_size % 2 == 0) {
    in.fail("'kernel_size' must be a positive odd integer");
  }
  if (spec.denoiser.kind == DenoiserKind::kMedian && spec.denoiser.radius < 1) {
    in.fail("'denoiser_radius' must be >= 1 for the median denoiser");
  }
  if (spec.denoiser.kind == DenoiserKind::kBox && spec.denoiser.radius < 0) {
    in.fail("'denoiser_radius' must be >= 0 for the box denoiser");
  }
  if (spec.denoiser.kind == DenoiserKind::kUnsharp && !(spec.denoiser.alpha > 0.0)) {
    in.fail("'denoiser_alpha' must be > 0 for the unsharp denoiser");
  }
  if (spec.denoiser.kind == DenoiserKind::kExternal && spec.denoiser.external_cmd.empty()) {
    in.fail("denoiser 'external' requires 'external_denoiser_cmd'");
  }

  if (spec.input.empty() && spec.measurement.empty()) {
    in.fail("one of 'input' or 'measurement' is required");
  }
  for (const auto& [key, path] : {std::pair<const char*, std::string>{"input", spec.input},
                                  {"measurement", spec.measurement},
                                  {"init_path", spec.init_path},
                                  {"kernel_path", spec.kernel_path}}) {
    if (!path.empty() && !is_synthetic(path) && !fs::exists(path)) {
      in.fail(std::string("'") + key + "' does not exist: " + path);
    }
  }
  if (is_synthetic(spec.measurement)) {
    in.fail("'measurement' cannot be synthetic; use 'input'");
  }
  if (spec.task == Task::kMotionDeblur && spec.kernel_path.empty()) {
    in.fail("task motion_deblur requires 'kernel_path'");
  }
  if (spec.init == Init::kProvided && spec.init_path.empty()) {
    in.fail("init 'provided' requires 'init_path'");
  }
  if (spec.task == Task::kSuperresolution && spec.init == Init::kObserved) {
    in.fail("superresolution cannot start from the observed image; use bicubic");
  }

  if (!out_dir.empty()) {
    std::error_code ec;
    fs::create_directories(spec.output_dir, ec);
    const fs::path probe = spec.output_dir / ".skoop_write_probe";
    std::ofstream f(probe);
    if (ec || !f) {
      in.fail("'output_dir' is not writable: " + out_dir);
    } else {
      f.close();
      fs::remove(probe, ec);
    }
  }

  if (!in.errors().empty()) {
    std::string msg = "invalid experiment config:";
    for (const auto& e : in.errors()) msg += "\n  - " + e;
    throw ConfigError(msg);
  }
  return spec;
}

json read_config(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path.string());
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

ExperimentSpec load_experiment(const fs::path& path) {
  return parse_experiment(read_config(path));
}

}  // namespace skoop
