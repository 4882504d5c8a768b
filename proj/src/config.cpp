#include "trafficmix/config.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

namespace trafficmix {

using nlohmann::json;

SpeedLattice::SpeedLattice(std::vector<double> speeds) : speeds_(std::move(speeds)) {
  if (speeds_.size() < 2) throw ConfigError("speeds", "a lattice needs at least two speed classes");
  if (speeds_.front() != 0.0) throw ConfigError("speeds", "the lowest speed class must be 0");
  for (std::size_t j = 1; j < speeds_.size(); ++j) {
    if (!(speeds_[j] > speeds_[j - 1]) || !std::isfinite(speeds_[j]))
      throw ConfigError("speeds", "speed classes must be finite and strictly increasing");
  }
}

SpeedLattice SpeedLattice::equispaced(int n, double v_max) {
  if (n < 2) throw ConfigError("classes", "a lattice needs at least two speed classes");
  if (!(v_max > 0.0)) throw ConfigError("v_max", "maximum speed must be positive");
  std::vector<double> v(static_cast<std::size_t>(n));
  for (int j = 0; j < n; ++j) v[static_cast<std::size_t>(j)] = v_max * j / (n - 1);
  v.back() = v_max;
  return SpeedLattice(std::move(v));
}

SpeedLattice SpeedLattice::prefix(int n) const {
  if (n < 2 || n > size()) throw ConfigError("classes", "prefix length out of range");
  return SpeedLattice(std::vector<double>(speeds_.begin(), speeds_.begin() + n));
}

bool SpeedLattice::is_prefix_of(const SpeedLattice& other) const {
  if (size() > other.size()) return false;
  for (int j = 0; j < size(); ++j)
    if ((*this)[j] != other[j]) return false;
  return true;
}

PopulationSpec PopulationSpec::make(std::string name, double length, SpeedLattice lattice) {
  if (!(length > 0.0) || !std::isfinite(length)) throw ConfigError("length", "vehicle length must be positive");
  return PopulationSpec{std::move(name), length, std::move(lattice), 1.0 / length};
}

void validate(ModelParams& model, std::vector<std::string>* warnings) {
  if (!(model.alpha >= 0.0 && model.alpha <= 1.0)) throw ConfigError("model.alpha", "must lie in [0, 1]");
  if (!(model.gamma > 0.0) || !std::isfinite(model.gamma)) throw ConfigError("model.gamma", "must be positive");
  if (!(model.eta > 0.0) || !std::isfinite(model.eta)) throw ConfigError("model.eta", "must be positive");
  if (model.populations.empty() || model.populations.size() > 2)
    throw ConfigError("model.populations", "one or two populations are supported");

  for (std::size_t p = 0; p < model.populations.size(); ++p) {
    auto& pop = model.populations[p];
    const std::string where = "model.populations[" + std::to_string(p) + "]";
    if (!(pop.length > 0.0)) throw ConfigError(where + ".length", "must be positive");
    if (pop.lattice.size() < 2) throw ConfigError(where + ".speeds", "a lattice needs at least two speed classes");
    pop.rho_max = 1.0 / pop.length;
  }

  if (model.two_population()) {
    const auto& cars = model.populations[0];
    const auto& trucks = model.populations[1];
    if (!trucks.lattice.is_prefix_of(cars.lattice))
      throw ConfigError("model.populations[1].speeds", "truck lattice is not a prefix of the car lattice");
    if (warnings) {
      if (cars.length > trucks.length)
        warnings->push_back("population 0 is longer than population 1 (l^C > l^T)");
      if (cars.lattice.max_speed() < trucks.lattice.max_speed())
        warnings->push_back("population 0 is slower than population 1 (V^C < V^T)");
    }
  }
}

void validate(const NumericsParams& n) {
  if (!(n.dt >= 0.0) || !std::isfinite(n.dt)) throw ConfigError("numerics.dt", "must be positive or \"auto\"");
  if (!(n.dt_safety > 0.0)) throw ConfigError("numerics.dt_safety", "must be positive");
  if (!(n.tol > 0.0)) throw ConfigError("numerics.tol", "must be positive");
  if (!(n.t_max > 0.0)) throw ConfigError("numerics.t_max", "must be positive");
  if (n.s_steps < 2) throw ConfigError("numerics.s_steps", "must be at least 2");
  if (n.samples_per_s < 1) throw ConfigError("numerics.samples_per_s", "must be at least 1");
}

namespace {

template <typename T>
T get_or(const json& obj, const char* key, T fallback, const std::string& where) {
  if (!obj.contains(key)) return fallback;
  try {
    return obj.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(where + "." + key, e.what());
  }
}

PopulationSpec parse_population(const json& node, std::size_t index, double v_max,
                                const SpeedLattice* reference) {
  const std::string where = "model.populations[" + std::to_string(index) + "]";
  if (!node.is_object()) throw ConfigError(where, "expected an object");

  auto name = get_or<std::string>(node, "name", index == 0 ? "cars" : "trucks", where);
  if (!node.contains("length")) throw ConfigError(where + ".length", "missing");
  const double length = get_or<double>(node, "length", 0.0, where);
  if (!(length > 0.0) || !std::isfinite(length)) throw ConfigError(where + ".length", "must be positive");

  SpeedLattice lattice;
  try {
    if (node.contains("speeds")) {
      lattice = SpeedLattice(get_or<std::vector<double>>(node, "speeds", {}, where));
    } else if (node.contains("classes")) {
      const int n = get_or<int>(node, "classes", 0, where);
      // The second population shares the first one's lower speed classes.
      lattice = reference ? reference->prefix(n) : SpeedLattice::equispaced(n, v_max);
    } else {
      throw ConfigError("", "either speeds or classes is required");
    }
  } catch (const ConfigError& e) {
    throw ConfigError(where + (node.contains("speeds") ? ".speeds" : ".classes"), e.what());
  }

  auto spec = PopulationSpec::make(std::move(name), length, std::move(lattice));
  if (node.contains("rho_max")) {
    const double stored = get_or<double>(node, "rho_max", 0.0, where);
    if (!(std::abs(stored - spec.rho_max) <= 1e-3 * spec.rho_max))
      throw ConfigError(where + ".rho_max", "inconsistent with 1/length (" + std::to_string(spec.rho_max) + ")");
  }
  return spec;
}

}  // namespace

Config load_config(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text, nullptr, true, /*ignore_comments=*/true);
  } catch (const json::parse_error& e) {
    throw ConfigError("", std::string("parse error: ") + e.what());
  }
  if (!doc.is_object()) throw ConfigError("", "top level must be an object");

  Config cfg;
  const json model = doc.value("model", json::object());
  const json numerics = doc.value("numerics", json::object());

  cfg.model.alpha = get_or<double>(model, "alpha", 1.0, "model");
  cfg.model.gamma = get_or<double>(model, "gamma", 1.0, "model");
  cfg.model.eta = get_or<double>(model, "eta", 1.0, "model");
  const double v_max = get_or<double>(model, "v_max", 100.0, "model");

  if (!model.contains("populations") || !model["populations"].is_array())
    throw ConfigError("model.populations", "missing or not an array");
  const auto& pops = model["populations"];
  if (pops.empty() || pops.size() > 2) throw ConfigError("model.populations", "one or two populations are supported");
  for (std::size_t p = 0; p < pops.size(); ++p) {
    const SpeedLattice* reference = p == 0 ? nullptr : &cfg.model.populations[0].lattice;
    cfg.model.populations.push_back(parse_population(pops[p], p, v_max, reference));
  }

  if (numerics.contains("dt") && numerics["dt"].is_string()) {
    if (numerics["dt"].get<std::string>() != "auto") throw ConfigError("numerics.dt", "must be a number or \"auto\"");
  } else {
    cfg.numerics.dt = get_or<double>(numerics, "dt", 0.0, "numerics");
    if (numerics.contains("dt") && !(cfg.numerics.dt > 0.0)) throw ConfigError("numerics.dt", "must be positive");
  }
  cfg.numerics.dt_safety = get_or<double>(numerics, "dt_safety", cfg.numerics.dt_safety, "numerics");
  cfg.numerics.tol = get_or<double>(numerics, "tol", cfg.numerics.tol, "numerics");
  cfg.numerics.t_max = get_or<double>(numerics, "t_max", cfg.numerics.t_max, "numerics");
  cfg.numerics.seed = get_or<std::uint64_t>(numerics, "seed", cfg.numerics.seed, "numerics");
  cfg.numerics.s_steps = get_or<int>(numerics, "s_steps", cfg.numerics.s_steps, "numerics");
  cfg.numerics.samples_per_s = get_or<int>(numerics, "samples_per_s", cfg.numerics.samples_per_s, "numerics");

  validate(cfg.model, &cfg.warnings);
  validate(cfg.numerics);
  return cfg;
}

Config load_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("", "cannot open config file " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return load_config(buf.str());
}

json to_json(const Config& cfg) {
  json pops = json::array();
  for (const auto& p : cfg.model.populations) {
    pops.push_back({{"name", p.name},
                    {"length", p.length},
                    {"rho_max", p.rho_max},
                    {"speeds", std::vector<double>(p.lattice.speeds().begin(), p.lattice.speeds().end())}});
  }
  json numerics = {{"dt_safety", cfg.numerics.dt_safety},
                   {"tol", cfg.numerics.tol},
                   {"t_max", cfg.numerics.t_max},
                   {"seed", cfg.numerics.seed},
                   {"s_steps", cfg.numerics.s_steps},
                   {"samples_per_s", cfg.numerics.samples_per_s}};
  if (cfg.numerics.dt > 0.0)
    numerics["dt"] = cfg.numerics.dt;
  else
    numerics["dt"] = "auto";
  return {{"model",
           {{"alpha", cfg.model.alpha},
            {"gamma", cfg.model.gamma},
            {"eta", cfg.model.eta},
            {"populations", pops}}},
          {"numerics", numerics}};
}

Config default_config() {
  Config cfg;
  const auto cars = SpeedLattice::equispaced(3, 100.0);
  cfg.model.populations.push_back(PopulationSpec::make("cars", 0.004, cars));
  cfg.model.populations.push_back(PopulationSpec::make("trucks", 0.012, cars.prefix(2)));
  validate(cfg.model, &cfg.warnings);
  return cfg;
}

double occupancy(std::span<const double> densities, std::span<const PopulationSpec> specs) {
  double s = 0.0;
  const std::size_t n = std::min(densities.size(), specs.size());
  for (std::size_t p = 0; p < n; ++p) s += densities[p] * specs[p].length;
  return s;
}

bool admissible(std::span<const double> densities, std::span<const PopulationSpec> specs) {
  if (densities.size() != specs.size()) return false;
  for (double rho : densities)
    if (!(rho >= 0.0) || !std::isfinite(rho)) return false;
  const double s = occupancy(densities, specs);
  return s >= 0.0 && s <= 1.0;
}

}  // namespace trafficmix
