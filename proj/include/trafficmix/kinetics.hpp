#pragma once

#include <span>
#include <vector>

#include "trafficmix/config.hpp"
#include "trafficmix/tables.hpp"

namespace trafficmix {

// Per-population distributions f^p_j (vehicles/km per speed class), stored
// contiguously so that time steppers can treat the state as one vector.
class MixtureState {
 public:
  MixtureState() = default;
  explicit MixtureState(std::span<const int> classes_per_population);
  // Zero state shaped after the model's lattices.
  static MixtureState zeros(const ModelParams& model);
  static MixtureState from(std::vector<std::vector<double>> distributions);

  int populations() const { return static_cast<int>(offsets_.size()) - 1; }
  int classes(int p) const { return offsets_[p + 1] - offsets_[p]; }

  std::span<double> operator[](int p) { return {values_.data() + offsets_[p], static_cast<std::size_t>(classes(p))}; }
  std::span<const double> operator[](int p) const {
    return {values_.data() + offsets_[p], static_cast<std::size_t>(classes(p))};
  }

  std::span<double> flat() { return values_; }
  std::span<const double> flat() const { return values_; }

  double mass(int p) const;
  double total_mass() const;
  bool same_shape(const MixtureState& other) const { return offsets_ == other.offsets_; }

 private:
  std::vector<double> values_;
  std::vector<int> offsets_{0};
};

// Well-balanced single-population operator: the loss term uses the current
// sum of f, never a frozen density.
void rhs_single(std::span<const double> f, const GameTable& table, double eta, std::span<double> out);
std::vector<double> rhs_single(std::span<const double> f, const GameTable& table, double eta);

// Loss term written as -rho_param * f_j. Only for demonstrating the drift of
// the total mass away from rho_param under round-off.
void rhs_single_naive(std::span<const double> f, const GameTable& table, double eta, double rho_param,
                      std::span<double> out);
std::vector<double> rhs_single_naive(std::span<const double> f, const GameTable& table, double eta,
                                     double rho_param);

// Self- plus cross-interaction operator for every population, well-balanced.
// Works for one population as well (no cross terms).
void rhs_mixture(const MixtureState& state, const GameTables& tables, double eta, MixtureState& out);
MixtureState rhs_two_population(const MixtureState& state, const GameTables& tables, double eta);

struct PopulationMoments {
  double rho = 0.0;  // vehicles/km
  double q = 0.0;    // vehicles/h
  double u = 0.0;    // km/h, NaN when rho == 0
  bool has_speed() const { return rho > 0.0; }
};

struct Moments {
  std::vector<PopulationMoments> populations;
  PopulationMoments total;
};

PopulationMoments moments(std::span<const double> f, const SpeedLattice& lattice);
Moments moments(const MixtureState& state, std::span<const PopulationSpec> specs);

}  // namespace trafficmix
