#include "trafficmix/cli.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <random>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "trafficmix/config.hpp"
#include "trafficmix/csv.hpp"
#include "trafficmix/diagrams.hpp"
#include "trafficmix/integrator.hpp"
#include "trafficmix/oracle.hpp"

namespace trafficmix {

namespace {

using nlohmann::json;

class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Flags that change the model or the numerics; they are folded into the
// effective config and are not needed again once it exists.
struct Overrides {
  std::string config_path;
  double alpha = 0, gamma = 0, eta = 0, v_max = 0, tol = 0, t_max = 0;
  int nc = 0, nt = 0, n = 0, samples = 0, s_steps = 0;
  std::uint64_t seed = 0;
  bool single = false, normalized = false;
  bool has_alpha = false, has_gamma = false, has_eta = false, has_v_max = false, has_tol = false,
       has_t_max = false, has_seed = false, has_samples = false, has_s_steps = false;
};

// Everything else a subcommand needs; stored verbatim in the manifest.
struct RunParams {
  std::string command;
  double rho_c = std::nan(""), rho_t = std::nan("");
  bool naive = false;
  double perturb = 0.0;
  std::string init = "uniform";
  int record_every = 1;
  std::string mode = "table2";
  std::string diagram = "flux-density";
  int bins = 50;
  double s = std::nan("");
  int jobs = 1;
};

json params_to_json(const RunParams& p) {
  json j = {{"command", p.command}, {"naive", p.naive}, {"perturb", p.perturb}, {"init", p.init},
            {"record_every", p.record_every}, {"mode", p.mode}, {"diagram", p.diagram}, {"bins", p.bins},
            {"jobs", p.jobs}};
  j["rho_c"] = std::isnan(p.rho_c) ? json(nullptr) : json(p.rho_c);
  j["rho_t"] = std::isnan(p.rho_t) ? json(nullptr) : json(p.rho_t);
  j["s"] = std::isnan(p.s) ? json(nullptr) : json(p.s);
  return j;
}

RunParams params_from_json(const json& j) {
  auto num = [&](const char* key) {
    return j.contains(key) && !j[key].is_null() ? j[key].get<double>() : std::nan("");
  };
  RunParams p;
  p.command = j.at("command").get<std::string>();
  p.rho_c = num("rho_c");
  p.rho_t = num("rho_t");
  p.s = num("s");
  p.naive = j.value("naive", false);
  p.perturb = j.value("perturb", 0.0);
  p.init = j.value("init", std::string("uniform"));
  p.record_every = j.value("record_every", 1);
  p.mode = j.value("mode", std::string("table2"));
  p.diagram = j.value("diagram", std::string("flux-density"));
  p.bins = j.value("bins", 50);
  p.jobs = j.value("jobs", 1);
  return p;
}

void rescale_speeds(PopulationSpec& pop, double factor) {
  std::vector<double> v(pop.lattice.speeds().begin(), pop.lattice.speeds().end());
  for (double& x : v) x *= factor;
  pop = PopulationSpec::make(pop.name, pop.length, SpeedLattice(std::move(v)));
}

Config effective_config(const Overrides& o) {
  Config cfg = o.config_path.empty() ? default_config() : load_config_file(o.config_path);
  ModelParams& m = cfg.model;
  if (o.has_alpha) m.alpha = o.alpha;
  if (o.has_gamma) m.gamma = o.gamma;
  if (o.has_eta) m.eta = o.eta;
  if (o.single) m.populations.resize(1);
  if (o.normalized)
    for (auto& pop : m.populations) pop = PopulationSpec::make(pop.name, 1.0, pop.lattice);

  double v_max = m.populations[0].lattice.max_speed();
  if (o.normalized && !o.has_v_max) v_max = 1.0;
  if (o.has_v_max) v_max = o.v_max;
  if (v_max != m.populations[0].lattice.max_speed()) {
    if (!(v_max > 0.0)) throw ConfigError("v_max", "maximum speed must be positive");
    const double factor = v_max / m.populations[0].lattice.max_speed();
    for (auto& pop : m.populations) rescale_speeds(pop, factor);
  }

  if (o.n && o.nc && o.n != o.nc) throw ConfigError("n", "--n and --nc disagree");
  if (const int nc = o.n ? o.n : o.nc) {
    auto& cars = m.populations[0];
    cars = PopulationSpec::make(cars.name, cars.length, SpeedLattice::equispaced(nc, v_max));
    if (m.populations.size() == 2 && !o.nt) {
      auto& trucks = m.populations[1];
      const int keep = std::min(trucks.lattice.size(), nc);
      trucks = PopulationSpec::make(trucks.name, trucks.length, cars.lattice.prefix(keep));
    }
  }
  if (o.nt) {
    if (m.populations.size() != 2) throw ConfigError("nt", "needs a two-population model");
    if (o.nt > m.populations[0].lattice.size())
      throw ConfigError("nt", "trucks cannot have more speed classes than cars");
    auto& trucks = m.populations[1];
    trucks = PopulationSpec::make(trucks.name, trucks.length, m.populations[0].lattice.prefix(o.nt));
  }

  NumericsParams& num = cfg.numerics;
  if (o.has_tol) num.tol = o.tol;
  if (o.has_t_max) num.t_max = o.t_max;
  if (o.has_seed) num.seed = o.seed;
  if (o.has_samples) num.samples_per_s = o.samples;
  if (o.has_s_steps) num.s_steps = o.s_steps;

  cfg.warnings.clear();
  validate(cfg.model, &cfg.warnings);
  validate(cfg.numerics);
  return cfg;
}

// Output file or the provided stream.
class Sink {
 public:
  Sink(const std::string& path, std::ostream& fallback) {
    if (!path.empty()) {
      file_.open(path, std::ios::binary);
      if (!file_) throw ValidationError("cannot open " + path + " for writing");
    }
    stream_ = path.empty() ? &fallback : &file_;
  }
  std::ostream& get() { return *stream_; }

 private:
  std::ofstream file_;
  std::ostream* stream_;
};

std::string join(std::span<const double> v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? ";" : "") + csv::number(v[i]);
  return s;
}

MixtureState initial_state(const ModelParams& model, std::span<const double> masses, const std::string& init,
                           std::uint64_t seed) {
  MixtureState state = MixtureState::zeros(model);
  std::mt19937_64 gen(seed);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  for (int p = 0; p < state.populations(); ++p) {
    auto f = state[p];
    const double m = masses[static_cast<std::size_t>(p)];
    const auto n = f.size();
    if (init == "uniform") {
      std::fill(f.begin(), f.end(), m / static_cast<double>(n));
    } else if (init == "stopped") {
      f[0] = m;
    } else if (init == "top") {
      f[n - 1] = m;
    } else if (init == "random") {
      double sum = 0.0;
      for (auto& x : f) sum += (x = unif(gen));
      for (auto& x : f) x *= m / sum;
    } else {
      throw ValidationError("unknown --init '" + init + "' (uniform, stopped, top, random)");
    }
  }
  return state;
}

int cmd_relax(const Config& cfg, const RunParams& p, std::ostream& trajectory, std::ostream& out,
              std::ostream& err) {
  const ModelParams& model = cfg.model;
  const int np = static_cast<int>(model.populations.size());
  if (std::isnan(p.rho_c)) throw ValidationError("--rho-c is required");
  const double rho_t = std::isnan(p.rho_t) ? 0.0 : p.rho_t;
  if (!(p.rho_c >= 0.0) || !std::isfinite(p.rho_c)) throw ValidationError("--rho-c must be a nonnegative number");
  if (!(rho_t >= 0.0) || !std::isfinite(rho_t)) throw ValidationError("--rho-t must be a nonnegative number");
  if (np == 1 && rho_t > 0.0) throw ValidationError("--rho-t given for a single-population model");
  if (!(p.perturb >= 0.0 && p.perturb < 1.0)) throw ValidationError("--perturb must lie in [0, 1)");
  if (p.record_every < 1) throw ValidationError("--record-every must be at least 1");
  if (p.naive && np != 1) throw ValidationError("--naive needs a single-population model (--single)");

  std::vector<double> nominal{p.rho_c};
  if (np == 2) nominal.push_back(rho_t);
  if (!admissible(nominal, model.populations))
    throw ValidationError("densities are not admissible: occupancy " +
                          csv::number(occupancy(nominal, model.populations)) + " exceeds 1");

  std::vector<double> masses = nominal;
  for (double& m : masses) m *= 1.0 - p.perturb;
  const MixtureState init = initial_state(model, masses, p.init, cfg.numerics.seed);

  csv::TrajectoryWriter writer(trajectory, model);
  std::int64_t calls = 0;
  bool last_written = false;
  RelaxOptions options;
  if (p.naive) {
    options.formulation = Formulation::naive;
    options.rho_param = p.rho_c;
  }
  options.observer = [&](double t, const MixtureState& state, double residual) {
    last_written = calls++ % p.record_every == 0;
    if (last_written) writer.row(t, state, residual);
  };

  const RelaxationResult r = relax_to_equilibrium(init, model, cfg.numerics, options);
  if (!last_written) writer.row(r.t_final, r.final_state, r.residual);

  out << "converged=" << (r.converged ? 1 : 0) << '\n'
      << "mass_conserved=" << (r.mass_conserved ? 1 : 0) << '\n'
      << "formulation=" << (p.naive ? "naive" : "well-balanced") << '\n'
      << "steps=" << r.steps << '\n'
      << "dt=" << csv::number(r.dt) << '\n'
      << "t_final=" << csv::number(r.t_final) << '\n'
      << "residual=" << csv::number(r.residual) << '\n';
  const auto mom = moments(r.final_state, model.populations);
  for (int q = 0; q < np; ++q) {
    const auto& name = model.populations[static_cast<std::size_t>(q)].name;
    const auto& pm = mom.populations[static_cast<std::size_t>(q)];
    out << "f." << name << '=' << join(r.final_state[q]) << '\n'
        << "rho." << name << '=' << csv::number(pm.rho) << '\n'
        << "q." << name << '=' << csv::number(pm.q) << '\n'
        << "u." << name << '=' << csv::number(pm.u) << '\n'
        << "mass_drift." << name << '=' << csv::number(r.mass_drift[static_cast<std::size_t>(q)]) << '\n';
  }
  out << "rho_total=" << csv::number(mom.total.rho) << '\n' << "q_total=" << csv::number(mom.total.q) << '\n';

  if (!r.mass_conserved) err << "relax: mass not conserved\n";
  if (!r.converged) {
    err << "relax: no equilibrium within t_max (residual " << csv::number(r.residual) << ")\n";
    return kExitNotConverged;
  }
  return kExitOk;
}

int cmd_sweep(const Config& cfg, const RunParams& p, std::ostream& sink, const std::string& stats_path,
              std::ostream& err) {
  SweepSpec spec;
  try {
    spec.mode = parse_sweep_mode(p.mode);
  } catch (const std::invalid_argument& e) {
    throw ValidationError(e.what());
  }
  if (p.diagram != "flux-density" && p.diagram != "flux-space")
    throw ValidationError("--diagram must be flux-density or flux-space");
  if (p.bins < 1) throw ValidationError("--bins must be positive");
  if (p.jobs < 1) throw ValidationError("--jobs must be positive");
  spec.s_steps = cfg.numerics.s_steps;
  spec.samples_per_s = cfg.numerics.samples_per_s;
  spec.seed = cfg.numerics.seed;
  spec.gamma = cfg.model.gamma;
  spec.alpha = cfg.model.alpha;
  spec.jobs = p.jobs;

  std::vector<DiagramPoint> points;
  try {
    points = run_sweep(spec, cfg.model, cfg.numerics);
  } catch (const std::invalid_argument& e) {
    throw ValidationError(e.what());
  }
  csv::write_diagram(sink, points);

  const auto unconverged = std::count_if(points.begin(), points.end(), [](const auto& pt) { return !pt.converged; });
  if (unconverged) err << "sweep: " << unconverged << " of " << points.size() << " points did not converge\n";

  if (!stats_path.empty()) {
    std::ofstream st(stats_path, std::ios::binary);
    if (!st) throw ValidationError("cannot open " + stats_path + " for writing");
    const auto report = scatter_statistics(points, p.bins, cfg.model.populations[0].rho_max,
                                           critical_space(cfg.model.gamma));
    csv::write_scatter(st, report);
  }
  return kExitOk;
}

int cmd_oracle(const Config& cfg, const RunParams& p, std::ostream& sink, std::ostream& err) {
  const ModelParams& model = cfg.model;
  if (model.alpha != 1.0) throw ValidationError("the closed forms assume alpha = 1");
  const auto& cars = model.populations[0];
  sink << "s_c=" << csv::number(critical_space(model.gamma)) << '\n'
       << "q_max=" << csv::number(max_flux(model.gamma, cars.lattice.max_speed(), cars.rho_max)) << '\n';

  const bool has_densities = !std::isnan(p.rho_c) || !std::isnan(p.rho_t);
  if (!has_densities && std::isnan(p.s)) return kExitOk;

  std::vector<double> rho{std::isnan(p.rho_c) ? 0.0 : p.rho_c};
  if (model.two_population()) rho.push_back(std::isnan(p.rho_t) ? 0.0 : p.rho_t);
  else if (!std::isnan(p.rho_t) && p.rho_t != 0.0) throw ValidationError("--rho-t given for a single-population model");
  if (has_densities && !admissible(rho, model.populations)) throw ValidationError("densities are not admissible");

  const double s = std::isnan(p.s) ? occupancy(rho, model.populations) : p.s;
  if (!(s >= 0.0 && s <= 1.0)) throw ValidationError("--s must lie in [0, 1]");
  const double stay = std::pow(s, model.gamma);
  sink << "s=" << csv::number(s) << '\n' << "R=" << csv::number(stay) << '\n';
  const bool in_scope = stay <= 0.5;
  if (!in_scope) err << "oracle: warning: R = " << csv::number(stay) << " > 1/2, no closed-form free phase\n";

  if (!has_densities) {
    sink << "valid=" << (in_scope ? 1 : 0) << '\n';
    return kExitOk;
  }
  if (!model.two_population()) {
    if (cars.lattice.size() != 2 || model.gamma != 1.0)
      throw ValidationError("the single-population closed form needs two speed classes and gamma = 1");
    const auto [f1, f2] = single_pop_equilibrium_two_speeds(rho[0], cars.rho_max);
    sink << "valid=1\n"
         << "f." << cars.name << '=' << csv::number(f1) << ';' << csv::number(f2) << '\n'
         << "flux=" << csv::number(f2 * cars.lattice.max_speed()) << '\n';
    return kExitOk;
  }
  const auto eq = free_phase_equilibrium(rho[0], rho[1], cars.lattice, model.populations[1].lattice, stay);
  sink << "valid=" << (eq.valid ? 1 : 0) << '\n';
  if (!eq.valid) return kExitOk;
  sink << "f." << cars.name << '=' << join(eq.f_cars) << '\n'
       << "f." << model.populations[1].name << '=' << join(eq.f_trucks) << '\n'
       << "flux=" << csv::number(eq.flux) << '\n'
       << "discriminants=" << join(eq.discriminants) << '\n';
  return kExitOk;
}

int dispatch(const Config& cfg, const RunParams& p, const std::string& out_path, const std::string& stats_path,
             std::ostream& out, std::ostream& err) {
  for (const auto& w : cfg.warnings) err << "warning: " << w << '\n';
  const auto start = std::chrono::steady_clock::now();
  int code = kExitOk;
  {
    Sink sink(out_path, out);
    if (p.command == "relax") {
      // Without --out only the summary is printed.
      std::ostringstream discard;
      code = cmd_relax(cfg, p, out_path.empty() ? static_cast<std::ostream&>(discard) : sink.get(), out, err);
    } else if (p.command == "sweep") {
      code = cmd_sweep(cfg, p, sink.get(), stats_path, err);
    } else if (p.command == "oracle") {
      code = cmd_oracle(cfg, p, sink.get(), err);
    } else {
      throw ValidationError("unknown subcommand " + p.command);
    }
  }
  if (!out_path.empty()) {
    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    json manifest = {{"tool", "trafficmix"},
                     {"version", kToolVersion},
                     {"subcommand", p.command},
                     {"config", to_json(cfg)},
                     {"parameters", params_to_json(p)},
                     {"seed", cfg.numerics.seed},
                     {"output", out_path},
                     {"exit_code", code},
                     {"wall_clock_seconds", seconds}};
    std::ofstream mf(out_path + ".manifest.json", std::ios::binary);
    if (!mf) throw ValidationError("cannot write manifest for " + out_path);
    mf << manifest.dump(2) << '\n';
  }
  return code;
}

void add_model_flags(CLI::App* cmd, Overrides& o) {
  cmd->add_option("--config", o.config_path, "JSON config file (defaults to the built-in parameters)");
  cmd->add_option("--alpha", o.alpha, "Road-condition parameter in [0,1]")->each([&](const std::string&) {
    o.has_alpha = true;
  });
  cmd->add_option("--gamma", o.gamma, "Exponent of the acceleration law")->each([&](const std::string&) {
    o.has_gamma = true;
  });
  cmd->add_option("--eta", o.eta, "Interaction rate")->each([&](const std::string&) { o.has_eta = true; });
  cmd->add_option("--v-max", o.v_max, "Top speed of the first population")->each([&](const std::string&) {
    o.has_v_max = true;
  });
  cmd->add_option("--nc", o.nc, "Speed classes of the first population (equispaced)");
  cmd->add_option("--nt", o.nt, "Speed classes of the second population (prefix of the first)");
  cmd->add_option("--n", o.n, "Alias of --nc, for single-population runs");
  cmd->add_flag("--single", o.single, "Drop the second population");
  cmd->add_flag("--normalized", o.normalized, "Unit vehicle length and unit top speed");
  cmd->add_option("--tol", o.tol, "Scaled residual at which relaxation stops")->each([&](const std::string&) {
    o.has_tol = true;
  });
  cmd->add_option("--t-max", o.t_max, "Model time limit per relaxation")->each([&](const std::string&) {
    o.has_t_max = true;
  });
  cmd->add_option("--seed", o.seed, "Random seed")->each([&](const std::string&) { o.has_seed = true; });
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Kinetic traffic model for mixtures of cars and trucks", "trafficmix"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kToolVersion);

  Overrides o;
  RunParams p;
  std::string out_path, stats_path, manifest_path;

  auto* relax = app.add_subcommand("relax", "Relax a homogeneous state to equilibrium");
  auto* sweep = app.add_subcommand("sweep", "Equilibrium diagrams over a grid of occupancies");
  auto* oracle = app.add_subcommand("oracle", "Closed-form critical values and free-phase equilibria");
  auto* replay = app.add_subcommand("replay", "Re-run the command recorded in a manifest");

  for (auto* cmd : {relax, sweep, oracle}) {
    add_model_flags(cmd, o);
    cmd->add_option("--out", out_path, "Output file; a manifest is written next to it");
  }
  relax->add_option("--rho-c", p.rho_c, "Density of the first population (veh/km)");
  relax->add_option("--rho-t", p.rho_t, "Density of the second population (veh/km)");
  relax->add_flag("--naive", p.naive, "Loss term with a frozen density instead of the current mass");
  relax->add_option("--perturb", p.perturb, "Relative initial mass deficit");
  relax->add_option("--init", p.init, "Initial distribution: uniform, stopped, top or random");
  relax->add_option("--record-every", p.record_every, "Trajectory row every k steps");

  sweep->add_option("--mode", p.mode, "table2, random, single-pop, ablation-speeds, ablation-lengths, macroscopic");
  sweep->add_option("--diagram", p.diagram, "flux-density or flux-space (both are in every row)");
  sweep->add_option("--samples", o.samples, "Random mixtures per occupancy")->each([&](const std::string&) {
    o.has_samples = true;
  });
  sweep->add_option("--s-steps", o.s_steps, "Occupancy grid intervals")->each([&](const std::string&) {
    o.has_s_steps = true;
  });
  sweep->add_option("--jobs", p.jobs, "Worker threads");
  sweep->add_option("--stats", stats_path, "Write per-bin scatter statistics to this file");
  sweep->add_option("--bins", p.bins, "Density bins for --stats");

  oracle->add_option("--rho-c", p.rho_c, "Density of the first population (veh/km)");
  oracle->add_option("--rho-t", p.rho_t, "Density of the second population (veh/km)");
  oracle->add_option("--s", p.s, "Occupancy used for the transition probabilities");

  replay->add_option("manifest", manifest_path, "Manifest written by a previous run")->required();
  replay->add_option("--out", out_path, "Where to write the reproduced output");
  replay->add_option("--jobs", p.jobs, "Worker threads for a replayed sweep");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitValidation;
  }

  try {
    if (replay->parsed()) {
      std::ifstream in(manifest_path);
      if (!in) throw ValidationError("cannot open manifest " + manifest_path);
      json manifest;
      try {
        manifest = json::parse(in);
      } catch (const json::exception& e) {
        throw ValidationError(std::string("bad manifest: ") + e.what());
      }
      const Config cfg = load_config(manifest.at("config").dump());
      RunParams recorded = params_from_json(manifest.at("parameters"));
      if (replay->count("--jobs")) recorded.jobs = p.jobs;
      return dispatch(cfg, recorded, out_path, "", out, err);
    }
    p.command = app.get_subcommands().front()->get_name();
    const Config cfg = effective_config(o);
    return dispatch(cfg, p, out_path, stats_path, out, err);
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << '\n';
    return kExitValidation;
  } catch (const ValidationError& e) {
    err << "error: " << e.what() << '\n';
    return kExitValidation;
  } catch (const NumericalFailure& e) {
    err << "numerical failure: " << e.what() << '\n';
    return kExitNumericalFailure;
  } catch (const json::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitValidation;
  } catch (const std::invalid_argument& e) {
    err << "error: " << e.what() << '\n';
    return kExitValidation;
  }
}

}  // namespace trafficmix
