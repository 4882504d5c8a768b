#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

namespace trafficmix {

// Raised for malformed documents and invariant violations. field() names the
// offending key (dotted path) when one is known.
class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::string field, const std::string& what)
      : std::runtime_error(field.empty() ? what : field + ": " + what), field_(std::move(field)) {}
  const std::string& field() const { return field_; }

 private:
  std::string field_;
};

// Ordered speed classes of one population, km/h. speeds.front() == 0 and
// speeds.back() is the population's maximum speed.
class SpeedLattice {
 public:
  SpeedLattice() = default;
  explicit SpeedLattice(std::vector<double> speeds);

  // v_j = (j-1)/(n-1) * v_max, j = 1..n
  static SpeedLattice equispaced(int n, double v_max);

  int size() const { return static_cast<int>(speeds_.size()); }
  double max_speed() const { return speeds_.back(); }
  double operator[](int j) const { return speeds_[static_cast<std::size_t>(j)]; }
  std::span<const double> speeds() const { return speeds_; }

  // First n classes of this lattice.
  SpeedLattice prefix(int n) const;
  bool is_prefix_of(const SpeedLattice& other) const;

  bool operator==(const SpeedLattice&) const = default;

 private:
  std::vector<double> speeds_;
};

struct PopulationSpec {
  std::string name;
  double length = 0.0;   // km per vehicle
  SpeedLattice lattice;
  double rho_max = 0.0;  // vehicles/km, always 1/length

  static PopulationSpec make(std::string name, double length, SpeedLattice lattice);
};

struct ModelParams {
  double alpha = 1.0;
  double gamma = 1.0;
  double eta = 1.0;
  std::vector<PopulationSpec> populations;  // one or two

  bool two_population() const { return populations.size() == 2; }
};

struct NumericsParams {
  double dt = 0.0;         // fixed step; 0 selects dt_safety/(eta*rho_total)
  double dt_safety = 0.5;
  double tol = 1e-10;
  double t_max = 1000.0;
  std::uint64_t seed = 20160301;
  int s_steps = 200;
  int samples_per_s = 3;
};

struct Config {
  ModelParams model;
  NumericsParams numerics;
  std::vector<std::string> warnings;
};

// Throws ConfigError on the first violated invariant.
void validate(ModelParams& model, std::vector<std::string>* warnings = nullptr);
void validate(const NumericsParams& numerics);

Config load_config(const std::string& text);
Config load_config_file(const std::string& path);
nlohmann::json to_json(const Config& config);

// Parameters common to the two-population experiments: 4 m cars, 12 m trucks,
// V_max = 100 km/h, alpha = 1, lattices {0,50,100} / {0,50}.
Config default_config();

double occupancy(std::span<const double> densities, std::span<const PopulationSpec> specs);
bool admissible(std::span<const double> densities, std::span<const PopulationSpec> specs);

}  // namespace trafficmix
