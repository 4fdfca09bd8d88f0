#include <algorithm>
#include <fstream>
#include <set>

#include "hyperinv/cli.hpp"
#include "hyperinv/presets.hpp"

namespace hyperinv::cli {

ExperimentKind parse_experiment_kind(const std::string& name) {
  if (name == "forward") return ExperimentKind::kForward;
  if (name == "dot-test") return ExperimentKind::kDotTest;
  if (name == "taylor-test") return ExperimentKind::kTaylorTest;
  if (name == "illposed") return ExperimentKind::kIllposed;
  if (name == "svd") return ExperimentKind::kSvd;
  if (name == "invert") return ExperimentKind::kInvert;
  if (name == "convergence") return ExperimentKind::kConvergence;
  throw Error(ErrorCode::kConfig, "experiment.kind: unknown experiment '" + name + "'");
}

std::string to_string(ExperimentKind kind) {
  switch (kind) {
    case ExperimentKind::kForward: return "forward";
    case ExperimentKind::kDotTest: return "dot-test";
    case ExperimentKind::kTaylorTest: return "taylor-test";
    case ExperimentKind::kIllposed: return "illposed";
    case ExperimentKind::kSvd: return "svd";
    case ExperimentKind::kInvert: return "invert";
    case ExperimentKind::kConvergence: return "convergence";
  }
  return "";
}

namespace {

// JSON object with its dotted path, for error messages.
class Node {
 public:
  Node(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) fail("expected an object");
  }

  [[noreturn]] void fail(const std::string& what) const {
    throw Error(ErrorCode::kConfig, (path_.empty() ? std::string("<root>") : path_) + ": " + what);
  }

  std::string at(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

  bool has(const std::string& key) const { return j_.contains(key); }

  void allow(std::initializer_list<const char*> keys) const {
    std::set<std::string> ok(keys.begin(), keys.end());
    for (auto it = j_.begin(); it != j_.end(); ++it) {
      if (!ok.count(it.key())) {
        throw Error(ErrorCode::kConfig, at(it.key()) + ": unknown field");
      }
    }
  }

  const json& raw(const std::string& key) const {
    if (!j_.contains(key)) throw Error(ErrorCode::kConfig, at(key) + ": missing required field");
    return j_.at(key);
  }

  Node child(const std::string& key) const { return Node(raw(key), at(key)); }

  double number(const std::string& key) const {
    const json& v = raw(key);
    if (!v.is_number()) throw Error(ErrorCode::kConfig, at(key) + ": expected a number");
    return v.get<double>();
  }
  double number(const std::string& key, double def) const { return has(key) ? number(key) : def; }

  long long integer(const std::string& key) const {
    const json& v = raw(key);
    if (!v.is_number_integer()) throw Error(ErrorCode::kConfig, at(key) + ": expected an integer");
    return v.get<long long>();
  }
  long long integer(const std::string& key, long long def) const {
    return has(key) ? integer(key) : def;
  }

  std::string str(const std::string& key) const {
    const json& v = raw(key);
    if (!v.is_string()) throw Error(ErrorCode::kConfig, at(key) + ": expected a string");
    return v.get<std::string>();
  }
  std::string str(const std::string& key, const std::string& def) const {
    return has(key) ? str(key) : def;
  }

  bool boolean(const std::string& key, bool def) const {
    if (!has(key)) return def;
    const json& v = raw(key);
    if (!v.is_boolean()) throw Error(ErrorCode::kConfig, at(key) + ": expected true or false");
    return v.get<bool>();
  }

  std::vector<double> numbers(const std::string& key) const {
    const json& v = raw(key);
    if (!v.is_array()) throw Error(ErrorCode::kConfig, at(key) + ": expected an array of numbers");
    std::vector<double> out;
    for (size_t i = 0; i < v.size(); ++i) {
      if (!v[i].is_number()) {
        throw Error(ErrorCode::kConfig, at(key) + "[" + std::to_string(i) + "]: expected a number");
      }
      out.push_back(v[i].get<double>());
    }
    return out;
  }

  std::vector<int> integers(const std::string& key) const {
    const json& v = raw(key);
    if (!v.is_array()) throw Error(ErrorCode::kConfig, at(key) + ": expected an array of integers");
    std::vector<int> out;
    for (size_t i = 0; i < v.size(); ++i) {
      if (!v[i].is_number_integer()) {
        throw Error(ErrorCode::kConfig, at(key) + "[" + std::to_string(i) + "]: expected an integer");
      }
      out.push_back(v[i].get<int>());
    }
    return out;
  }

  std::vector<std::string> strings(const std::string& key) const {
    const json& v = raw(key);
    if (!v.is_array()) throw Error(ErrorCode::kConfig, at(key) + ": expected an array of strings");
    std::vector<std::string> out;
    for (size_t i = 0; i < v.size(); ++i) {
      if (!v[i].is_string()) {
        throw Error(ErrorCode::kConfig, at(key) + "[" + std::to_string(i) + "]: expected a string");
      }
      out.push_back(v[i].get<std::string>());
    }
    return out;
  }

  std::array<double, 2> pair(const std::string& key, std::array<double, 2> def) const {
    if (!has(key)) return def;
    const auto v = numbers(key);
    if (v.empty() || v.size() > 2) {
      throw Error(ErrorCode::kConfig, at(key) + ": expected one or two numbers");
    }
    return {v[0], v.size() > 1 ? v[1] : 0.0};
  }

  const std::string& path() const { return path_; }
  const json& value() const { return j_; }

 private:
  const json& j_;
  std::string path_;
};

void require(bool ok, const Node& n, const std::string& key, const std::string& what) {
  if (!ok) throw Error(ErrorCode::kConfig, n.at(key) + ": " + what);
}

void check_name(const Node& n, const std::string& key, const std::string& name, ProblemKind kind) {
  const auto& names = field_names(kind);
  if (std::find(names.begin(), names.end(), name) == names.end()) {
    throw Error(ErrorCode::kConfig, n.at(key) + ": no field '" + name + "' in " +
                                        std::string(to_string(kind)));
  }
}

double default_value(ProblemKind kind, const std::string& name) {
  if (kind == ProblemKind::kWave1d && (name == "b" || name == "q")) return 0.0;
  return 1.0;
}

ParameterField parse_field(const Node& f, const Discretization& disc, const TimeGrid& grid,
                           const fs::path& base_dir) {
  const std::string type = f.str("type");
  if (type == "constant") {
    f.allow({"type", "value"});
    return ParameterField::constant(grid, disc.num_nodes(), f.number("value"));
  }
  if (type == "csv") {
    f.allow({"type", "path"});
    fs::path p = f.str("path");
    if (p.is_relative()) p = base_dir / p;
    if (!fs::exists(p)) {
      throw Error(ErrorCode::kConfig, f.at("path") + ": file not found '" + p.string() + "'");
    }
    try {
      return io::read_field_csv(p, grid, disc.num_nodes());
    } catch (const Error& e) {
      throw Error(ErrorCode::kConfig, f.at("path") + ": " + e.what());
    }
  }
  if (type == "bump") {
    f.allow({"type", "base", "amplitude", "center", "width"});
    const double width = f.number("width");
    require(width > 0.0, f, "width", "must be positive");
    return bump_field(disc, grid, f.number("base"), f.number("amplitude"),
                      f.pair("center", {0.5, 0.5}), width);
  }
  if (type == "layered") {
    f.allow({"type", "top", "bottom", "interface", "transition"});
    const double tr = f.number("transition");
    require(tr > 0.0, f, "transition", "must be positive");
    return layered_field(disc, grid, f.number("top"), f.number("bottom"), f.number("interface"), tr);
  }
  throw Error(ErrorCode::kConfig, f.at("type") + ": unknown field type '" + type +
                                      "' (constant, csv, bump, layered)");
}

ParameterPoint parse_fields(const Node& root, const std::string& key, const Discretization& disc,
                            const TimeGrid& grid, const fs::path& base_dir,
                            const ParameterPoint* base) {
  ParameterPoint p;
  if (base) {
    p = *base;
  } else {
    std::map<std::string, double> defaults;
    for (const auto& name : field_names(disc.kind)) defaults[name] = default_value(disc.kind, name);
    p = ParameterPoint::constant(disc.kind, grid, disc.num_nodes(), defaults);
  }
  if (!root.has(key)) return p;
  const Node fields = root.child(key);
  for (auto it = fields.value().begin(); it != fields.value().end(); ++it) {
    check_name(fields, it.key(), it.key(), disc.kind);
    p.field(it.key()) = parse_field(fields.child(it.key()), disc, grid, base_dir);
  }
  return p;
}

SourceTerm parse_source(const Node& root, const Discretization& disc, const TimeGrid& grid) {
  if (!root.has("source")) return SourceTerm::zeros(grid, disc.num_free());
  const Node s = root.child("source");
  const std::string type = s.str("type");
  auto profile = [&](const std::string& def) {
    try {
      return parse_time_profile(s.str("profile", def));
    } catch (const Error&) {
      throw Error(ErrorCode::kConfig, s.at("profile") + ": unknown profile (sin2, ramp, constant)");
    }
  };
  if (type == "zero") {
    s.allow({"type"});
    return SourceTerm::zeros(grid, disc.num_free());
  }
  if (type == "pulse") {
    s.allow({"type", "center", "width", "amplitude", "profile", "direction"});
    const double width = s.number("width", 0.1);
    require(width > 0.0, s, "width", "must be positive");
    return pulse_source(disc, grid, s.pair("center", {0.5, 0.5}), width, s.number("amplitude", 1.0),
                        profile("sin2"), s.pair("direction", {1.0, 0.0}));
  }
  if (type == "uniform") {
    s.allow({"type", "value", "profile", "direction"});
    const auto dir = s.pair("direction", {1.0, 0.0});
    const TimeProfile prof = profile("constant");
    Vec g(disc.num_free());
    for (int i = 0; i < disc.num_free(); ++i) {
      g(i) = disc.components == 2 ? dir[disc.free_dofs[i] % 2] : 1.0;
    }
    const Vec load = s.number("value") * (disc.M * g);
    SourceTerm f = SourceTerm::zeros(grid, disc.num_free());
    for (int n = 0; n <= grid.N; ++n) {
      f.values.row(n) = (time_profile(prof, grid.t(n), grid.T) * load).transpose();
    }
    return f;
  }
  throw Error(ErrorCode::kConfig, s.at("type") + ": unknown source type '" + type +
                                      "' (zero, pulse, uniform)");
}

AdmissibleBounds parse_bounds(const Node& root) {
  AdmissibleBounds b;
  if (!root.has("bounds")) return b;
  const Node n = root.child("bounds");
  n.allow({"eps_hat", "a0", "c0", "rho0", "alpha0", "mu_min", "mu0", "mu1", "eps0"});
  b.eps_hat = n.number("eps_hat", b.eps_hat);
  b.a0 = n.number("a0", b.a0);
  b.c0 = n.number("c0", b.c0);
  b.rho0 = n.number("rho0", b.rho0);
  b.alpha0 = n.number("alpha0", b.alpha0);
  b.elastic_mu_min = n.number("mu_min", b.elastic_mu_min);
  b.mu0 = n.number("mu0", b.mu0);
  b.mu1 = n.number("mu1", b.mu1);
  b.eps0 = n.number("eps0", b.eps0);
  require(b.eps_hat >= 0.0, n, "eps_hat", "must be nonnegative");
  return b;
}

std::vector<std::string> parse_targets(const Node& e, const std::string& key, ProblemKind kind) {
  if (!e.has(key)) return {};
  auto out = e.strings(key);
  for (const auto& t : out) check_name(e, key, t, kind);
  return out;
}

ExperimentOptions parse_experiment(const Node& root, const ExperimentConfig& cfg,
                                   const fs::path& base_dir) {
  ExperimentOptions o;
  const Node e = root.child("experiment");
  o.kind = parse_experiment_kind(e.str("kind"));
  const ProblemKind pk = cfg.problem.disc.kind;

  if (e.has("observation")) {
    const Node ob = e.child("observation");
    ob.allow({"type", "indices"});
    const std::string t = ob.str("type", "full-field");
    if (t == "node-subset") {
      o.observation.full_field = false;
      o.observation.indices = ob.integers("indices");
      for (int i : o.observation.indices) {
        require(i >= 0 && i < cfg.problem.disc.num_free(), ob, "indices",
                "index " + std::to_string(i) + " outside 0.." +
                    std::to_string(cfg.problem.disc.num_free() - 1));
      }
    } else if (t != "full-field") {
      throw Error(ErrorCode::kConfig, ob.at("type") + ": unknown observation '" + t + "'");
    }
  }

  switch (o.kind) {
    case ExperimentKind::kForward:
      e.allow({"kind", "observation", "dump_operators", "energy"});
      if (e.has("dump_operators")) o.dump_operators = e.integers("dump_operators");
      for (int n : o.dump_operators) {
        require(n >= 0 && n <= cfg.problem.grid.N, e, "dump_operators", "time node out of range");
      }
      o.energy = e.boolean("energy", false);
      break;
    case ExperimentKind::kDotTest:
      e.allow({"kind", "observation", "mode", "pairs", "targets"});
      try {
        o.mode = parse_adjoint_mode(e.str("mode", "discrete"));
      } catch (const Error&) {
        throw Error(ErrorCode::kConfig, e.at("mode") + ": expected discrete or continuous");
      }
      o.pairs = static_cast<int>(e.integer("pairs", 20));
      require(o.pairs >= 1, e, "pairs", "must be at least 1");
      o.targets = parse_targets(e, "targets", pk);
      require(o.mode == AdjointMode::kDiscrete || o.observation.full_field, e, "observation",
              "the continuous adjoint needs full-field data");
      break;
    case ExperimentKind::kTaylorTest:
      e.allow({"kind", "observation", "steps", "targets"});
      if (e.has("steps")) o.steps = e.numbers("steps");
      require(o.steps.size() >= 2, e, "steps", "need at least two step sizes");
      for (double s : o.steps) require(s > 0.0, e, "steps", "step sizes must be positive");
      o.targets = parse_targets(e, "targets", pk);
      break;
    case ExperimentKind::kIllposed:
      e.allow({"kind", "targets", "delta", "j", "t0"});
      o.targets = parse_targets(e, "targets", pk);
      o.delta = e.number("delta", 0.2);
      require(o.delta >= 0.0, e, "delta", "must be nonnegative");
      if (e.has("j")) o.j = e.integers("j");
      require(!o.j.empty(), e, "j", "need at least one index");
      o.t0 = e.number("t0", -1.0);
      break;
    case ExperimentKind::kSvd:
      e.allow({"kind", "target", "n_sing", "px", "py"});
      o.target = e.str("target");
      check_name(e, "target", o.target, pk);
      o.n_sing = static_cast<int>(e.integer("n_sing", 30));
      require(o.n_sing >= 1, e, "n_sing", "must be at least 1");
      o.basis.px = static_cast<int>(e.integer("px", 29));
      o.basis.py = static_cast<int>(e.integer("py", pk == ProblemKind::kElastic2d ? 4 : 0));
      break;
    case ExperimentKind::kInvert: {
      e.allow({"kind", "observation", "method", "targets", "truth", "noise", "tau", "omega",
               "max_iter", "outer", "linearized", "snapshot_every", "discrepancy_stop"});
      auto& c = o.inversion;
      try {
        c.method = parse_inversion_method(e.str("method", "landweber"));
      } catch (const Error&) {
        throw Error(ErrorCode::kConfig, e.at("method") + ": expected landweber or cgne");
      }
      o.targets = parse_targets(e, "targets", pk);
      c.targets = o.targets;
      o.noise = e.number("noise", 0.0);
      require(o.noise >= 0.0, e, "noise", "must be nonnegative");
      c.tau = e.number("tau", 1.5);
      require(c.tau > 1.0, e, "tau", "must exceed 1");
      c.omega = e.number("omega", 0.0);
      c.max_iter = static_cast<int>(e.integer("max_iter", 100));
      require(c.max_iter >= 0, e, "max_iter", "must be nonnegative");
      c.outer = static_cast<int>(e.integer("outer", 1));
      require(c.outer >= 1, e, "outer", "must be at least 1");
      c.linearized = e.boolean("linearized", false);
      c.discrepancy_stop = e.boolean("discrepancy_stop", true);
      c.snapshot_every = static_cast<int>(e.integer("snapshot_every", 0));
      c.bounds = cfg.problem.bounds;
      o.truth = parse_fields(e, "truth", cfg.problem.disc, cfg.problem.grid, base_dir, &cfg.point);
      break;
    }
    case ExperimentKind::kConvergence:
      e.allow({"kind", "study", "levels", "mode"});
      o.study = e.str("study", "adjoint-gap");
      require(o.study == "adjoint-gap" || o.study == "forward", e, "study",
              "expected adjoint-gap or forward");
      o.levels = static_cast<int>(e.integer("levels", 4));
      require(o.levels >= 2, e, "levels", "need at least two levels");
      break;
  }
  return o;
}

}  // namespace

ExperimentConfig parse_config(const json& j, const fs::path& base_dir) {
  ExperimentConfig cfg;
  cfg.raw = j;
  cfg.base_dir = base_dir;
  const Node root(j, "");
  root.allow({"problem", "mesh", "time", "k", "bounds", "fields", "source", "experiment", "seed",
              "output"});
  ProblemKind kind;
  try {
    kind = parse_problem_kind(root.str("problem"));
  } catch (const Error&) {
    throw Error(ErrorCode::kConfig, "problem: expected wave1d, elastic2d or maxwell1d");
  }

  const Node mesh = root.child("mesh");
  mesh.allow({"nx", "ny", "lx", "ly"});
  GridSpec gs;
  gs.nx = static_cast<int>(mesh.integer("nx"));
  gs.ny = static_cast<int>(mesh.integer("ny", kind == ProblemKind::kElastic2d ? gs.nx : 0));
  gs.lx = mesh.number("lx", 1.0);
  gs.ly = mesh.number("ly", 1.0);
  require(gs.nx >= 2, mesh, "nx", "need at least 2 elements");
  require(kind != ProblemKind::kElastic2d || gs.ny >= 2, mesh, "ny", "need at least 2 elements");
  require(gs.lx > 0.0, mesh, "lx", "must be positive");
  require(gs.ly > 0.0, mesh, "ly", "must be positive");

  const Node time = root.child("time");
  time.allow({"T", "N"});
  const double T = time.number("T");
  const long long N = time.integer("N");
  require(T > 0.0, time, "T", "must be positive");
  require(N >= 1, time, "N", "must be at least 1");

  cfg.problem.disc = build_grid(kind, gs);
  cfg.problem.grid = TimeGrid{T, static_cast<int>(N)};
  cfg.problem.k = static_cast<int>(root.integer("k", 2));
  require(cfg.problem.k >= 0 && cfg.problem.k <= 2, root, "k", "must be 0, 1 or 2");
  cfg.problem.bounds = parse_bounds(root);
  cfg.point = parse_fields(root, "fields", cfg.problem.disc, cfg.problem.grid, base_dir, nullptr);
  cfg.problem.source = parse_source(root, cfg.problem.disc, cfg.problem.grid);
  const long long seed = root.integer("seed", 0);
  require(seed >= 0, root, "seed", "must be nonnegative");
  cfg.seed = static_cast<std::uint64_t>(seed);
  cfg.experiment = parse_experiment(root, cfg, base_dir);
  return cfg;
}

ExperimentConfig load_config(const fs::path& path) {
  if (!fs::exists(path)) throw Error(ErrorCode::kIo, "config file not found '" + path.string() + "'");
  std::ifstream is(path, std::ios::binary);
  const std::string text((std::istreambuf_iterator<char>(is)), std::istreambuf_iterator<char>());
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::kConfig, "<root>: not valid JSON (" + std::string(e.what()) + ")");
  }
  ExperimentConfig cfg = parse_config(j, path.parent_path());
  cfg.config_sha256 = io::sha256_string(text);
  return cfg;
}

ValidationReport validate_config(const fs::path& path) {
  ValidationReport rep;
  ExperimentConfig cfg;
  try {
    cfg = load_config(path);
    rep.passed.push_back("schema");
  } catch (const Error& e) {
    rep.ok = false;
    rep.failures.push_back(std::string("schema: ") + e.what());
    return rep;
  }
  auto admissible = [&](const ParameterPoint& p, const std::string& label) {
    try {
      check_admissible(p, cfg.problem.bounds);
      rep.passed.push_back(label);
    } catch (const Error& e) {
      rep.ok = false;
      rep.failures.push_back(label + ": " + e.what());
    }
  };
  admissible(cfg.point, "admissible set (fields)");
  if (cfg.experiment.kind == ExperimentKind::kInvert) {
    admissible(cfg.experiment.truth, "admissible set (experiment.truth)");
  }
  const auto compat = compatibility_check(cfg.problem.source, Vec(), Vec(), cfg.problem.k,
                                          cfg.problem.grid);
  if (compat.pass) {
    rep.passed.push_back("compatibility (k=" + std::to_string(cfg.problem.k) + ")");
  } else {
    rep.ok = false;
    for (const auto& f : compat.failures) {
      rep.failures.push_back("compatibility (k=" + std::to_string(cfg.problem.k) + "): " + f);
    }
  }
  return rep;
}

}  // namespace hyperinv::cli
