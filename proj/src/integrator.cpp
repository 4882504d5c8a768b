#include "trafficmix/integrator.hpp"

#include <algorithm>
#include <cmath>

namespace trafficmix {

double stable_dt(double eta, double rho_total, double safety) {
  if (!(rho_total > 0.0)) return safety / eta;
  return safety / (eta * rho_total);
}

Rk4Stepper::Rk4Stepper(const MixtureState& shape)
    : k1_(shape), k2_(shape), k3_(shape), k4_(shape), tmp_(shape) {}

namespace {

void axpy(std::span<const double> base, double a, std::span<const double> x, std::span<double> out) {
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = base[i] + a * x[i];
}

void require_finite(std::span<const double> v) {
  for (double x : v)
    if (!std::isfinite(x)) throw NumericalFailure("non-finite value in the distribution");
}

double max_abs(std::span<const double> v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}

}  // namespace

void Rk4Stepper::step(MixtureState& state, double dt, const RhsFunction& rhs, const MixtureState* k1) {
  const MixtureState& s1 = k1 ? *k1 : (rhs(state, k1_), k1_);
  auto y = state.flat();
  axpy(y, 0.5 * dt, s1.flat(), tmp_.flat());
  rhs(tmp_, k2_);
  axpy(y, 0.5 * dt, k2_.flat(), tmp_.flat());
  rhs(tmp_, k3_);
  axpy(y, dt, k3_.flat(), tmp_.flat());
  rhs(tmp_, k4_);
  const std::span<const double> a = s1.flat(), b = k2_.flat(), c = k3_.flat(), d = k4_.flat();
  for (std::size_t i = 0; i < y.size(); ++i) y[i] += dt / 6.0 * (a[i] + 2.0 * (b[i] + c[i]) + d[i]);
  require_finite(y);
}

MixtureState step(const MixtureState& state, double dt, const RhsFunction& rhs) {
  MixtureState next = state;
  Rk4Stepper(state).step(next, dt, rhs);
  return next;
}

MixtureState euler_step(const MixtureState& state, double dt, const RhsFunction& rhs) {
  MixtureState k = state;
  rhs(state, k);
  MixtureState next = state;
  axpy(state.flat(), dt, k.flat(), next.flat());
  require_finite(next.flat());
  return next;
}

RelaxationResult relax_to_equilibrium(const MixtureState& initial, const ModelParams& model,
                                      const NumericsParams& numerics, const RelaxOptions& options) {
  const int np = initial.populations();
  if (np != static_cast<int>(model.populations.size()))
    throw std::invalid_argument("initial state does not match the model's populations");
  for (double x : initial.flat())
    if (!(x >= 0.0) || !std::isfinite(x)) throw std::invalid_argument("initial distribution must be nonnegative");

  std::vector<double> masses;
  for (int p = 0; p < np; ++p) masses.push_back(initial.mass(p));

  const bool naive = options.formulation == Formulation::naive;
  if (naive && np != 1) throw std::invalid_argument("the naive formulation is single-population only");
  const double rho_param = naive && options.rho_param >= 0.0 ? options.rho_param : initial.total_mass();

  // Occupancy fixes the tables; for the naive run the nominal density does.
  const double s = naive ? rho_param * model.populations[0].length : occupancy(masses, model.populations);
  if (!(s <= 1.0 + 1e-12)) throw std::invalid_argument("initial densities are not admissible (occupancy > 1)");
  const GameTables tables = build_game_tables(model, std::min(s, 1.0));

  const double eta = model.eta;
  RhsFunction rhs;
  if (naive) {
    rhs = [&](const MixtureState& x, MixtureState& out) {
      rhs_single_naive(x[0], tables.self[0], eta, rho_param, out[0]);
    };
  } else {
    rhs = [&](const MixtureState& x, MixtureState& out) { rhs_mixture(x, tables, eta, out); };
  }

  const double rho_scale = naive ? rho_param : initial.total_mass();
  const double dt_max = stable_dt(eta, rho_scale, numerics.dt_safety);
  double dt = dt_max;
  if (numerics.dt > 0.0) {
    if (numerics.dt > dt_max * (1.0 + 1e-12))
      throw std::invalid_argument("dt exceeds the stability bound " + std::to_string(dt_max));
    dt = numerics.dt;
  }
  const double residual_scale = rho_scale > 0.0 ? eta * rho_scale * rho_scale : 1.0;

  RelaxationResult result;
  result.final_state = initial;
  result.dt = dt;
  MixtureState& state = result.final_state;
  MixtureState k1 = initial;
  Rk4Stepper stepper(initial);

  for (;;) {
    rhs(state, k1);
    result.residual = max_abs(k1.flat()) / residual_scale;
    result.t_final = static_cast<double>(result.steps) * dt;
    if (options.observer) options.observer(result.t_final, state, result.residual);
    if (result.residual <= numerics.tol) {
      result.converged = true;
      break;
    }
    if (result.t_final >= numerics.t_max) break;
    stepper.step(state, dt, rhs, &k1);
    ++result.steps;
  }

  for (int p = 0; p < np; ++p) {
    result.mass_drift.push_back(std::abs(state.mass(p) - masses[static_cast<std::size_t>(p)]));
    if (result.mass_drift.back() > kMassDriftTolerance) result.mass_conserved = false;
  }
  if (!result.mass_conserved) result.converged = false;
  return result;
}

}  // namespace trafficmix
