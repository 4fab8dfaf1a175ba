#include "phasectl/config.hpp"

#include "csvnum.hpp"
#include "fileio.hpp"
#include "phasectl/parallel.hpp"

#include <charconv>
#include <cmath>
#include <random>
#include <sstream>

namespace phasectl {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  return s.substr(b, s.find_last_not_of(" \t\r") - b + 1);
}

// Typed lookups; errors name the key and the offending text.
class Reader {
 public:
  explicit Reader(const FlatConfig& c) : c_(c) {}

  const std::string& str(const std::string& key) const { return c_.at(key); }

  double real(const std::string& key) const {
    double v = 0.0;
    if (!csvnum::parse(str(key), v) || !std::isfinite(v)) bad(key, "a finite number");
    return v;
  }

  int integer(const std::string& key) const {
    const std::string& s = str(key);
    long long v = 0;
    auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc() || res.ptr != s.data() + s.size() || v < -2147483647LL ||
        v > 2147483647LL) {
      bad(key, "an integer");
    }
    return static_cast<int>(v);
  }

  std::uint64_t seed(const std::string& key) const {
    const std::string& s = str(key);
    std::uint64_t v = 0;
    auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc() || res.ptr != s.data() + s.size()) bad(key, "an unsigned 64-bit integer");
    return v;
  }

  bool flag(const std::string& key) const {
    const std::string& s = str(key);
    if (s == "true" || s == "1" || s == "yes") return true;
    if (s == "false" || s == "0" || s == "no") return false;
    bad(key, "true or false");
  }

  // Wraps enum parsers so their message carries the key.
  template <typename F>
  auto parsed(const std::string& key, F&& parse) const {
    try {
      return parse(str(key));
    } catch (const ConfigError& e) {
      throw ConfigError(key + ": " + e.what());
    }
  }

 private:
  [[noreturn]] void bad(const std::string& key, const char* want) const {
    throw ConfigError(key + " = '" + str(key) + "' is not " + want);
  }

  const FlatConfig& c_;
};

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
  std::filesystem::path path(p);
  return path.is_absolute() ? path : base / path;
}

InitialKind parse_initial_kind(const std::string& name) {
  if (name == "zero") return InitialKind::zero;
  if (name == "constant") return InitialKind::constant;
  if (name == "random") return InitialKind::random;
  if (name == "file") return InitialKind::file;
  throw ConfigError("unknown initial kind '" + name + "' (zero, constant, random, file)");
}

}  // namespace

FlatConfig default_config() {
  return {
      {"grid.n", "10"},
      {"grid.dx", "1"},
      {"model.pde", "allen-cahn"},
      {"model.mobility", "1"},
      {"model.gamma", "0.01"},
      {"model.dt", "auto"},
      {"model.integrator", "euler"},
      {"model.t_max", "5"},
      {"model.h_max", "5"},
      {"cost.q_run", "1"},
      {"cost.r_ctrl", "0.001"},
      {"cost.q_term", "100"},
      {"goal.kind", "banded"},
      {"goal.partitions", "auto"},
      {"goal.file", ""},
      {"initial.kind", "zero"},
      {"initial.value", "0"},
      {"initial.amplitude", "0.01"},
      {"initial.seed", "3"},
      {"initial.file", ""},
      {"ilqr.horizon", "10"},
      {"ilqr.max_iters", "100"},
      {"ilqr.eps", "0.001"},
      {"ilqr.mu_init", "1e-06"},
      {"ilqr.mu_factor", "10"},
      {"ilqr.mu_min", "1e-09"},
      {"ilqr.max_rejected", "5"},
      {"ilqr.jacobians", "lls-cd"},
      {"jacobian.sigma", "0.0001"},
      {"jacobian.samples", "0"},
      {"jacobian.seed", "1"},
      {"jacobian.diagonal_gram", "false"},
      {"sysid.mode", "lls-cd-reuse"},
      {"sysid.sigma", "0.0001"},
      {"sysid.rollouts", "0"},
      {"sysid.seed", "2"},
      {"lqr.max_state_dim", "1024"},
      {"mpc.inner_iters", "10"},
      {"mpc.jacobians", "lls-cd"},
      {"sweep.levels", "0,0.1,0.2,0.3,0.4,0.5,0.6,0.7,0.8,0.9,1"},
      {"sweep.rollouts", "100"},
      {"sweep.strategies", "open-loop,closed-loop"},
      {"sweep.seed", "7"},
      {"sweep.baseline_steps", "0"},
      {"simulate.steps", "100"},
      {"simulate.stride", "10"},
      {"simulate.control", "zero"},
      {"simulate.t", "0"},
      {"simulate.h", "0"},
      {"simulate.control_file", ""},
      {"output.dir", "out"},
      {"run.threads", "0"},
  };
}

FlatConfig parse_config_text(const std::string& text, const std::string& source, FlatConfig base) {
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    const std::string body = trim(line);
    if (body.empty()) continue;
    const auto where = source + ":" + std::to_string(lineno) + ": ";
    const auto eq = body.find('=');
    if (eq == std::string::npos) throw ConfigError(where + "expected key = value");
    const std::string key = trim(body.substr(0, eq));
    if (key.empty()) throw ConfigError(where + "empty key");
    if (!base.contains(key)) throw ConfigError(where + "unknown key '" + key + "'");
    base[key] = trim(body.substr(eq + 1));
  }
  return base;
}

FlatConfig load_config_file(const std::filesystem::path& path) {
  return parse_config_text(fileio::slurp(path), path.string());
}

void apply_override(FlatConfig& config, const std::string& assignment) {
  config = parse_config_text(assignment, "--set '" + assignment + "'", std::move(config));
}

std::string encode_config_text(const FlatConfig& config) {
  std::string out;
  for (const auto& [key, value] : config) out += key + " = " + value + "\n";
  return out;
}

DesignSettings RunConfig::design() const {
  DesignSettings s;
  s.model = model;
  s.cost = cost;
  s.initial = initial;
  s.ilqr = ilqr;
  s.sysid = sysid;
  s.lqr = lqr;
  return s;
}

SweepProblem RunConfig::sweep_problem() const {
  SweepProblem p;
  p.model = model;
  p.cost = cost;
  p.initial = initial;
  p.goal = goal;
  p.mpc = mpc;
  p.baseline_steps = baseline_steps;
  return p;
}

RunConfig build_run_config(const FlatConfig& config, const std::filesystem::path& base_dir) {
  for (const auto& [key, value] : config) {
    (void)value;
    if (!default_config().contains(key)) throw ConfigError("unknown key '" + key + "'");
  }
  FlatConfig full = default_config();
  for (const auto& [key, value] : config) full[key] = value;
  const Reader r(full);

  RunConfig rc;
  rc.flat = full;
  rc.threads = resolve_threads(r.integer("run.threads"));

  ModelParams& m = rc.model;
  m.grid.n = r.integer("grid.n");
  m.grid.dx = r.real("grid.dx");
  m.pde = r.parsed("model.pde", parse_pde);
  m.mobility = r.real("model.mobility");
  m.gamma = r.real("model.gamma");
  m.dt = r.str("model.dt") == "auto" ? 0.0 : r.real("model.dt");
  if (r.str("model.dt") != "auto" && !(m.dt > 0.0)) {
    throw ConfigError("model.dt must be positive or 'auto'");
  }
  m.integrator = r.parsed("model.integrator", parse_integrator);
  m.bounds.t_max = r.real("model.t_max");
  m.bounds.h_max = r.real("model.h_max");
  m = m.resolved();

  const GoalKind kind = r.parsed("goal.kind", parse_goal_kind);
  if (kind == GoalKind::custom) {
    if (r.str("goal.file").empty()) throw ConfigError("goal.kind = file needs goal.file");
    rc.goal = load_goal(resolve(base_dir, r.str("goal.file")), m.grid.dx).field;
    if (!(rc.goal.spec() == m.grid)) {
      throw ConfigError("goal file is " + std::to_string(rc.goal.spec().n) + "x" +
                        std::to_string(rc.goal.spec().n) + " but grid.n = " +
                        std::to_string(m.grid.n));
    }
  } else {
    // auto: two bands, or four blocks per axis for the checkerboard.
    const int parts = r.str("goal.partitions") == "auto" ? (kind == GoalKind::banded ? 2 : 4)
                                                          : r.integer("goal.partitions");
    rc.goal = make_goal(m.grid, kind, parts).field;
  }

  switch (r.parsed("initial.kind", parse_initial_kind)) {
    case InitialKind::zero:
      rc.initial = PhaseField::zeros(m.grid);
      break;
    case InitialKind::constant:
      rc.initial = PhaseField::constant(m.grid, r.real("initial.value"));
      break;
    case InitialKind::random: {
      std::mt19937_64 rng(r.seed("initial.seed"));
      std::normal_distribution<double> normal(0.0, 1.0);
      Vector v(m.grid.cells());
      const double amp = r.real("initial.amplitude");
      const double base = r.real("initial.value");
      for (Eigen::Index k = 0; k < v.size(); ++k) v[k] = base + amp * normal(rng);
      rc.initial = PhaseField(m.grid, v);
      break;
    }
    case InitialKind::file:
      if (r.str("initial.file").empty()) throw ConfigError("initial.kind = file needs initial.file");
      rc.initial = read_field(resolve(base_dir, r.str("initial.file")), m.grid.dx);
      if (!(rc.initial.spec() == m.grid)) throw ConfigError("initial field does not match grid.n");
      break;
  }

  rc.cost.goal = rc.goal.values();
  rc.cost.q_run = r.real("cost.q_run");
  rc.cost.r_ctrl = r.real("cost.r_ctrl");
  rc.cost.q_term = r.real("cost.q_term");
  rc.cost.validate(m.grid.cells());

  ILQROptions& o = rc.ilqr;
  o.horizon = r.integer("ilqr.horizon");
  o.max_iters = r.integer("ilqr.max_iters");
  o.eps = r.real("ilqr.eps");
  o.mu_init = r.real("ilqr.mu_init");
  o.mu_factor = r.real("ilqr.mu_factor");
  o.mu_min = r.real("ilqr.mu_min");
  o.max_rejected = r.integer("ilqr.max_rejected");
  o.jacobians = r.parsed("ilqr.jacobians", parse_jacobian_source);
  o.lls_cd.sigma = r.real("jacobian.sigma");
  o.lls_cd.n_samples = r.integer("jacobian.samples");
  o.lls_cd.seed = r.seed("jacobian.seed");
  o.lls_cd.diagonal_gram = r.flag("jacobian.diagonal_gram");
  o.threads = rc.threads;
  o.validate();

  rc.sysid.mode = r.parsed("sysid.mode", parse_sysid_mode);
  rc.sysid.sigma = r.real("sysid.sigma");
  rc.sysid.n_rollouts = r.integer("sysid.rollouts");
  rc.sysid.seed = r.seed("sysid.seed");
  rc.sysid.threads = rc.threads;
  rc.lqr.max_state_dim = r.integer("lqr.max_state_dim");

  rc.mpc.inner = o;
  rc.mpc.inner.jacobians = r.parsed("mpc.jacobians", parse_jacobian_source);
  rc.mpc.inner_iters = r.integer("mpc.inner_iters");
  if (rc.mpc.inner_iters < 1) throw ConfigError("mpc.inner_iters must be >= 1");

  rc.sweep.noise_levels = r.parsed("sweep.levels", parse_level_list);
  rc.sweep.rollouts_per_level = r.integer("sweep.rollouts");
  rc.sweep.strategies = r.parsed("sweep.strategies", parse_strategy_list);
  rc.sweep.base_seed = r.seed("sweep.seed");
  rc.sweep.threads = rc.threads;
  rc.sweep.validate();
  const int bsteps = r.integer("sweep.baseline_steps");
  if (bsteps < 0) throw ConfigError("sweep.baseline_steps must be >= 0");
  rc.baseline_steps = bsteps > 0 ? bsteps : o.horizon;

  rc.simulate.steps = r.integer("simulate.steps");
  rc.simulate.stride = r.integer("simulate.stride");
  rc.simulate.control = r.str("simulate.control");
  rc.simulate.t = r.real("simulate.t");
  rc.simulate.h = r.real("simulate.h");
  if (!r.str("simulate.control_file").empty()) {
    rc.simulate.control_file = resolve(base_dir, r.str("simulate.control_file")).string();
  }
  if (rc.simulate.steps < 0) throw ConfigError("simulate.steps must be >= 0");
  if (rc.simulate.stride < 1) throw ConfigError("simulate.stride must be >= 1");
  if (rc.simulate.control != "zero" && rc.simulate.control != "uniform" &&
      rc.simulate.control != "file") {
    throw ConfigError("simulate.control must be zero, uniform or file");
  }

  rc.output_dir = r.str("output.dir");
  return rc;
}

}  // namespace phasectl
