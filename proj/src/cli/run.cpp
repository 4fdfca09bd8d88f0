#include <chrono>
#include <iostream>
#include <random>

#include <CLI11.hpp>

#include "hyperinv/cli.hpp"

namespace hyperinv::cli {

namespace {

constexpr const char* kVersion = "0.1.0";

struct Context {
  const ExperimentConfig& cfg;
  fs::path out;
  int threads;
  std::uint64_t seed;
  io::Manifest& manifest;
  json summary;
};

ObservationSpec make_spec(const ExperimentConfig& cfg, const ForwardProblem& problem) {
  const auto& o = cfg.experiment.observation;
  return o.full_field ? full_field(problem.disc, problem.grid)
                      : node_subset(problem.disc, problem.grid, o.indices);
}

ParameterPoint random_direction(const ParameterPoint& like, const std::vector<std::string>& targets,
                                std::mt19937_64& rng) {
  std::uniform_real_distribution<double> uni(-1.0, 1.0);
  ParameterPoint h = like.zeros_like();
  for (auto& [name, f] : h.fields) {
    if (!targets.empty() && std::find(targets.begin(), targets.end(), name) == targets.end()) continue;
    for (Eigen::Index i = 0; i < f.values.size(); ++i) f.values.data()[i] = uni(rng);
  }
  return h;
}

DataVector random_data(const ObservationSpec& spec, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> uni(-1.0, 1.0);
  DataVector v = DataVector::zeros(spec);
  for (Eigen::Index i = 0; i < v.values.size(); ++i) v.values.data()[i] = uni(rng);
  return v;
}

std::vector<std::string> all_or(const std::vector<std::string>& targets, ProblemKind kind) {
  return targets.empty() ? field_names(kind) : targets;
}

void run_forward(Context& c) {
  const auto& p = c.cfg.problem;
  const ForwardState st = forward_map(p, c.cfg.point);
  const fs::path mesh = c.out / "mesh.json";
  io::write_json(mesh, io::mesh_to_json(p.disc));
  c.manifest.add(mesh);
  c.manifest.add(io::write_trajectory(c.out, st.traj, p.disc));
  const ObservationSpec spec = make_spec(c.cfg, p);
  const DataVector d = observe(st.traj, spec);
  io::write_data(c.out / "data.csv", c.out / "data.json", d, p.disc);
  c.manifest.add({c.out / "data.csv", c.out / "data.json"});
  for (int n : c.cfg.experiment.dump_operators) {
    const fs::path op = c.out / ("operators_" + std::to_string(n) + ".json");
    io::write_json(op, io::operators_to_json(*st.timeline, n));
    c.manifest.add(op);
  }
  if (c.cfg.experiment.energy) {
    const EnergyReport e = energy_monitor(st.traj, *st.timeline, &p.source);
    Vec t(p.grid.nodes());
    for (int n = 0; n <= p.grid.N; ++n) t(n) = p.grid.t(n);
    const Mat E = Eigen::Map<const Vec>(e.energy.data(), static_cast<Eigen::Index>(e.energy.size()));
    io::write_csv(c.out / "energy.csv", {"t", "energy"}, E, t);
    c.manifest.add(c.out / "energy.csv");
    c.summary["energy_nonincreasing"] = e.nonincreasing;
    c.summary["energy_max_rel_increase"] = e.max_rel_increase;
  }
  c.summary["max_abs_u"] = st.traj.u.size() ? st.traj.u.cwiseAbs().maxCoeff() : 0.0;
  c.summary["data_norm"] = data_norm(d);
  c.summary["ndof"] = p.disc.num_free();
}

void run_dot_test(Context& c) {
  const auto& p = c.cfg.problem;
  const auto& e = c.cfg.experiment;
  const ForwardState st = forward_map(p, c.cfg.point);
  const ObservationSpec spec = make_spec(c.cfg, p);
  std::mt19937_64 rng(c.seed);
  std::vector<ParameterPoint> hs;
  std::vector<DataVector> vs;
  for (int i = 0; i < e.pairs; ++i) {
    hs.push_back(random_direction(c.cfg.point, e.targets, rng));
    vs.push_back(random_data(spec, rng));
  }
  const auto res = dot_test_batch(p, st, hs, vs, e.mode, c.threads);
  json records = json::array();
  double worst = 0.0;
  for (const auto& r : res) {
    records.push_back(io::dot_test_record(r, e.mode, p.grid.dt()));
    worst = std::max(worst, r.mismatch);
  }
  const fs::path rep = c.out / "dot_test.json";
  io::write_json(rep, json{{"records", records}, {"max_mismatch", worst}});
  c.manifest.add(rep);
  const GradientFields g = e.mode == AdjointMode::kDiscrete
                               ? adjoint_apply_discrete(p, st, vs.front())
                               : adjoint_apply_continuous(p, st, vs.front());
  c.manifest.add(io::write_gradient(c.out, "gradient", g, p.disc));
  c.summary["max_mismatch"] = worst;
  c.summary["mode"] = to_string(e.mode);
}

void run_taylor(Context& c) {
  const auto& p = c.cfg.problem;
  const auto& e = c.cfg.experiment;
  const ForwardState st = forward_map(p, c.cfg.point);
  const ObservationSpec spec = make_spec(c.cfg, p);
  std::mt19937_64 rng(c.seed);
  json worst = json::object();
  for (const auto& name : all_or(e.targets, p.disc.kind)) {
    // scale the direction so the largest step keeps the point admissible
    ParameterPoint h = random_direction(c.cfg.point, {name}, rng);
    const double base = c.cfg.point.field(name).values.cwiseAbs().maxCoeff();
    const double scale = 0.1 * std::max(base, 1e-3) / e.steps.front();
    for (auto& [n, f] : h.fields) f.values *= scale;
    const TaylorResult t = taylor_test(p, st, h, spec, e.steps);
    Mat m(static_cast<Eigen::Index>(t.steps.size()), 3);
    double min_order = std::numeric_limits<double>::infinity();
    for (size_t i = 0; i < t.steps.size(); ++i) {
      const double order = i == 0 ? std::numeric_limits<double>::quiet_NaN() : t.orders[i - 1];
      m.row(i) << t.steps[i], t.remainders[i], order;
      if (i > 0) min_order = std::min(min_order, order);
    }
    const fs::path f = c.out / ("taylor_" + name + ".csv");
    io::write_csv(f, {"s", "remainder", "order"}, m);
    c.manifest.add(f);
    worst[name] = min_order;
  }
  c.summary["min_order"] = worst;
}

void run_illposed(Context& c) {
  const auto& p = c.cfg.problem;
  const auto& e = c.cfg.experiment;
  json rows = json::object();
  for (const auto& name : all_or(e.targets, p.disc.kind)) {
    const IllposedResult r = illposed_experiment(p, c.cfg.point, name, e.delta, e.j, e.t0, c.threads);
    const fs::path f = c.out / ("illposed_" + name + ".csv");
    io::write_illposed_table(f, r);
    c.manifest.add(f);
    rows[name] = {{"gamma", r.gamma},
                  {"param_bounded_below", r.param_bounded_below},
                  {"output_decreasing", r.output_decreasing},
                  {"output_ratio", r.output_ratio}};
  }
  c.summary["targets"] = rows;
}

void run_svd(Context& c) {
  const auto& p = c.cfg.problem;
  const auto& e = c.cfg.experiment;
  const SvdProbeResult r = svd_probe(p, c.cfg.point, e.target, e.n_sing, e.basis, c.threads);
  const fs::path f = c.out / "singular_values.csv";
  io::write_singular_values(f, r);
  c.manifest.add(f);
  c.summary["numerical_rank"] = r.numerical_rank;
  c.summary["parameter_dofs"] = r.parameter_dofs;
  if (r.decay_ratios.size() >= 20) c.summary["ratio_20"] = r.decay_ratios[19];
}

double relative_error(const ParameterPoint& x, const ParameterPoint& truth, const ParameterPoint& x0,
                      const std::vector<std::string>& targets) {
  double num = 0.0, den = 0.0;
  for (const auto& name : targets) {
    num += (x.field(name).values - truth.field(name).values).squaredNorm();
    den += (truth.field(name).values - x0.field(name).values).squaredNorm();
  }
  return den > 0.0 ? std::sqrt(num / den) : std::sqrt(num);
}

void run_invert(Context& c) {
  const auto& p = c.cfg.problem;
  const auto& e = c.cfg.experiment;
  const ObservationSpec spec = make_spec(c.cfg, p);
  const DataVector clean = observe(forward_map(p, e.truth).traj, spec);
  const DataVector data = add_noise(clean, e.noise, c.seed);
  InversionConfig ic = e.inversion;
  ic.noise_level = e.noise * data_norm(clean);
  const InversionResult r = invert(p, data, c.cfg.point, ic);
  io::write_history(c.out / "history.csv", r.history);
  c.manifest.add(c.out / "history.csv");
  io::write_data(c.out / "data.csv", c.out / "data.json", data, p.disc);
  c.manifest.add({c.out / "data.csv", c.out / "data.json"});
  c.manifest.add(io::write_gradient(c.out, "final", r.point, p.disc));
  const auto targets = all_or(e.targets, p.disc.kind);
  c.summary["stop_reason"] = r.history.stop_reason;
  c.summary["stop_index"] = r.history.stop_index;
  c.summary["omega"] = r.history.omega;
  c.summary["final_residual"] = r.history.records.back().residual;
  c.summary["noise_level"] = ic.noise_level;
  c.summary["relative_error"] = relative_error(r.point, e.truth, c.cfg.point, targets);
}

ForwardProblem refined_in_time(const ExperimentConfig& cfg, int factor, ParameterPoint& point) {
  // re-samples the configured fields and source on a finer time grid
  json j = cfg.raw;
  j["time"]["N"] = cfg.problem.grid.N * factor;
  j["experiment"] = json{{"kind", "forward"}};
  ExperimentConfig fine = parse_config(j, cfg.base_dir);
  point = fine.point;
  return fine.problem;
}

void run_convergence(Context& c) {
  const auto& e = c.cfg.experiment;
  const int levels = e.levels;
  Mat table(levels, 3);
  std::vector<double> values;
  std::vector<Trajectory> trajs;
  std::vector<ForwardProblem> problems;
  for (int l = 0; l < levels; ++l) {
    ParameterPoint pt;
    const ForwardProblem p = refined_in_time(c.cfg, 1 << l, pt);
    const ForwardState st = forward_map(p, pt);
    if (e.study == "adjoint-gap") {
      const ObservationSpec spec = full_field(p.disc, p.grid);
      // smooth direction and data so that every level samples the same functions
      ParameterPoint h = pt.zeros_like();
      for (auto& [name, f] : h.fields) {
        for (int n = 0; n <= p.grid.N; ++n) {
          const double t = p.grid.t(n) / p.grid.T;
          for (int i = 0; i < p.disc.num_nodes(); ++i) {
            const double x = p.disc.nodes[i][0];
            f.values(n, i) = std::sin(3.0 * x + 1.0) * (1.0 + t * t);
          }
        }
      }
      DataVector v = DataVector::zeros(spec);
      for (int n = 0; n <= p.grid.N; ++n) {
        const double t = p.grid.t(n) / p.grid.T;
        for (int i = 0; i < spec.ndof; ++i) {
          const double x = p.disc.nodes[p.disc.free_dofs[i] / p.disc.components][0];
          v.values(n, i) = std::cos(2.0 * x) * std::sin(3.0 * t + 0.5);
        }
      }
      values.push_back(dot_test(p, st, h, v, AdjointMode::kContinuous).mismatch);
    } else {
      trajs.push_back(st.traj);
      problems.push_back(p);
    }
  }
  if (e.study == "forward") {
    // self-convergence against the finest level at the coarse time nodes
    const auto& fine = trajs.back();
    for (int l = 0; l < levels; ++l) {
      const int stride = 1 << (levels - 1 - l);
      Trajectory d = trajs[l];
      for (int n = 0; n <= d.grid.N; ++n) {
        d.u.row(n) -= fine.u.row(n * stride);
        d.du.row(n) -= fine.du.row(n * stride);
      }
      d.has_ddu = false;
      values.push_back(l + 1 < levels ? y_norm(d, problems[l].disc, 0) : 0.0);
    }
  }
  for (int l = 0; l < levels; ++l) {
    const double dt = c.cfg.problem.grid.dt() / (1 << l);
    double order = std::numeric_limits<double>::quiet_NaN();
    if (l > 0 && values[l] > 0.0 && values[l - 1] > 0.0) order = std::log2(values[l - 1] / values[l]);
    table.row(l) << dt, values[l], order;
  }
  const fs::path f = c.out / "convergence.csv";
  io::write_csv(f, {"dt", e.study == "forward" ? "error" : "mismatch", "order"}, table);
  c.manifest.add(f);
  c.summary["study"] = e.study;
  c.summary["values"] = values;
}

}  // namespace

RunResult run(const RunOptions& options) {
  const auto t0 = std::chrono::steady_clock::now();
  const ExperimentConfig cfg = load_config(options.config);
  fs::path out = options.out;
  if (out.empty()) {
    out = cfg.raw.contains("output") && cfg.raw["output"].is_string()
              ? fs::path(cfg.raw["output"].get<std::string>())
              : fs::path("out");
  }
  fs::create_directories(out);
  const std::uint64_t seed = options.seed.value_or(cfg.seed);
  io::Manifest manifest(out);

  Context ctx{cfg, out, std::max(1, options.threads), seed, manifest, json::object()};
  switch (cfg.experiment.kind) {
    case ExperimentKind::kForward: run_forward(ctx); break;
    case ExperimentKind::kDotTest: run_dot_test(ctx); break;
    case ExperimentKind::kTaylorTest: run_taylor(ctx); break;
    case ExperimentKind::kIllposed: run_illposed(ctx); break;
    case ExperimentKind::kSvd: run_svd(ctx); break;
    case ExperimentKind::kInvert: run_invert(ctx); break;
    case ExperimentKind::kConvergence: run_convergence(ctx); break;
  }
  const fs::path cfg_copy = out / "config.json";
  io::write_json(cfg_copy, cfg.raw);
  manifest.add(cfg_copy);
  const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  json meta{{"tool", "hyperinv"},
            {"version", kVersion},
            {"command", "run"},
            {"config_path", options.config.string()},
            {"config_sha256", cfg.config_sha256},
            {"experiment", to_string(cfg.experiment.kind)},
            {"problem", std::string(to_string(cfg.problem.disc.kind))},
            {"seed", seed},
            {"threads", ctx.threads},
            {"wall_time_s", wall},
            {"summary", ctx.summary}};
  RunResult res;
  res.manifest = manifest.write(meta);
  res.summary = ctx.summary;
  return res;
}

int main_entry(int argc, char** argv) {
  CLI::App app{"Coefficient identification for second-order evolution equations"};
  app.set_version_flag("--version", kVersion);
  app.require_subcommand(1);

  RunOptions ro;
  std::uint64_t seed = 0;
  auto* run_cmd = app.add_subcommand("run", "run the experiment described by a config file");
  run_cmd->add_option("--config", ro.config, "JSON config")->required()->check(CLI::ExistingFile);
  run_cmd->add_option("--out", ro.out, "output directory");
  auto* seed_opt = run_cmd->add_option("--seed", seed, "random seed (overrides the config)");
  run_cmd->add_option("--threads", ro.threads, "worker threads")->check(CLI::PositiveNumber);

  fs::path vpath;
  auto* val_cmd = app.add_subcommand("validate", "check a config without solving");
  val_cmd->add_option("--config", vpath, "JSON config")->required()->check(CLI::ExistingFile);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  if (*val_cmd) {
    const ValidationReport rep = validate_config(vpath);
    for (const auto& p : rep.passed) std::cout << "ok    " << p << '\n';
    for (const auto& f : rep.failures) std::cout << "FAIL  " << f << '\n';
    std::cout << (rep.ok ? "valid" : "invalid") << '\n';
    return rep.ok ? 0 : 1;
  }

  if (*seed_opt) ro.seed = seed;
  try {
    const RunResult r = run(ro);
    std::cout << r.summary.dump(2) << '\n' << "manifest: " << r.manifest.string() << '\n';
    return 0;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return e.code() == ErrorCode::kConfig ? 2 : 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}

}  // namespace hyperinv::cli
