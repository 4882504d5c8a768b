#include "trafficmix/oracle.hpp"

#include <cmath>
#include <stdexcept>

namespace trafficmix {

double critical_space(double gamma) {
  if (!(gamma > 0.0)) throw std::domain_error("gamma must be positive");
  return std::pow(0.5, 1.0 / gamma);
}

double max_flux(double gamma, double v_max, double rho_max_cars) {
  return v_max * rho_max_cars * critical_space(gamma);
}

double positive_root(double a, double b, double c) {
  const double disc = b * b + 4.0 * a * c;
  if (disc < 0.0) throw std::logic_error("negative discriminant in free-phase recursion");
  const double sq = std::sqrt(disc);
  if (b > 0.0) {
    if (a == 0.0) throw std::domain_error("degenerate quadratic with no finite positive root");
    return (b + sq) / (2.0 * a);
  }
  // b + sqrt(disc) = 4ac / (sqrt(disc) - b)
  const double denom = sq - b;
  return denom > 0.0 ? 2.0 * c / denom : 0.0;
}

FreePhaseEquilibrium free_phase_equilibrium(double rho_c, double rho_t, const SpeedLattice& cars,
                                            const SpeedLattice& trucks, double R) {
  if (!trucks.is_prefix_of(cars)) throw std::invalid_argument("truck lattice is not a prefix of the car lattice");
  if (!(rho_c >= 0.0) || !(rho_t >= 0.0)) throw std::invalid_argument("densities must be nonnegative");

  FreePhaseEquilibrium eq;
  if (!(R >= 0.0 && R <= 0.5)) return eq;
  eq.valid = true;

  const int nc = cars.size();
  const int nt = trucks.size();
  eq.f_cars.assign(static_cast<std::size_t>(nc), 0.0);
  eq.f_trucks.assign(static_cast<std::size_t>(nt), 0.0);
  eq.f_trucks.back() = rho_t;

  const std::size_t base = static_cast<std::size_t>(nt - 1);
  if (nt == nc || R == 0.0) {
    eq.f_cars.back() = rho_c;
  } else {
    auto& f = eq.f_cars;
    const double rho = rho_c + rho_t;
    const double b0 = (2.0 * R - 1.0) * rho_c - rho_t;
    eq.discriminants.push_back(b0 * b0 + 4.0 * R * R * rho_c * rho_t);
    f[base] = positive_root(R, b0, R * rho_c * rho_t);

    double below = f[base];  // sum of f_k for k = base .. j-1
    for (std::size_t j = base + 1; j + 1 < f.size(); ++j) {
      const double cj = j == base + 1 ? f[base] * rho : f[j - 1] * (rho_c - (below - f[j - 1]));
      const double b = (1.0 - 3.0 * R) * below + (2.0 * R - 1.0) * rho_c - R * rho_t;
      eq.discriminants.push_back(b * b + 4.0 * R * (1.0 - R) * cj);
      f[j] = positive_root(R, b, (1.0 - R) * cj);
      below += f[j];
    }
    f.back() = rho_c - below;
  }

  eq.flux = rho_t * trucks.max_speed();
  for (std::size_t j = base; j < eq.f_cars.size(); ++j) eq.flux += cars[static_cast<int>(j)] * eq.f_cars[j];
  return eq;
}

std::pair<double, double> single_pop_equilibrium_two_speeds(double rho, double rho_max) {
  const double R = rho / rho_max;
  if (R <= 0.5) return {0.0, rho};
  const double f1 = (2.0 * R - 1.0) * rho / R;
  return {f1, rho - f1};
}

}  // namespace trafficmix
