#pragma once

#include <utility>
#include <vector>

#include "trafficmix/config.hpp"

namespace trafficmix {

// Occupancy at which the free phase ends for P = 1 - s^gamma: (1/2)^(1/gamma).
double critical_space(double gamma);

// Road capacity, reached by cars alone at the critical occupancy.
double max_flux(double gamma, double v_max, double rho_max_cars);

struct FreePhaseEquilibrium {
  bool valid = false;            // false when R > 1/2; nothing else is filled in then
  std::vector<double> f_cars;    // length n^C
  std::vector<double> f_trucks;  // length n^T
  double flux = 0.0;             // total flux, vehicles/h
  std::vector<double> discriminants;  // one per quadratic solved
};

// Closed-form free-phase equilibrium of the two-population model for alpha = 1
// (Q = 0) and R = 1 - P <= 1/2. Trucks all travel at their top class; the car
// classes from the trucks' top class upward come from a chain of quadratics,
// and the top car class closes the mass balance.
FreePhaseEquilibrium free_phase_equilibrium(double rho_cars, double rho_trucks, const SpeedLattice& cars,
                                            const SpeedLattice& trucks, double stay_probability);

// Stable equilibrium of the single-population model with two speed classes,
// alpha = gamma = 1: (0, rho) below half the jam density, otherwise
// f_1 = (2R - 1) rho / R with R = rho / rho_max.
std::pair<double, double> single_pop_equilibrium_two_speeds(double rho, double rho_max);

// Positive root of -a x^2 + b x + c = 0 with a > 0 and c >= 0, computed
// without cancellation. Exposed for testing.
double positive_root(double a, double b, double c);

}  // namespace trafficmix
