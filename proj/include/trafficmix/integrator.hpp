#pragma once

#include <cstdint>
#include <functional>
#include <stdexcept>
#include <vector>

#include "trafficmix/config.hpp"
#include "trafficmix/kinetics.hpp"

namespace trafficmix {

class NumericalFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

using RhsFunction = std::function<void(const MixtureState&, MixtureState&)>;

// Largest step used by the relaxation: safety / (eta * rho_total). The
// operator is quadratic with Lipschitz constant of order eta * rho.
double stable_dt(double eta, double rho_total, double safety = 0.5);

// Explicit fourth-order Runge-Kutta with preallocated stage buffers.
class Rk4Stepper {
 public:
  explicit Rk4Stepper(const MixtureState& shape);

  // Advances `state` by dt. If `k1` is given it must hold rhs(state) already.
  void step(MixtureState& state, double dt, const RhsFunction& rhs, const MixtureState* k1 = nullptr);

 private:
  MixtureState k1_, k2_, k3_, k4_, tmp_;
};

// One RK4 step. Throws NumericalFailure if the result is not finite.
MixtureState step(const MixtureState& state, double dt, const RhsFunction& rhs);
// One explicit Euler step, same failure semantics.
MixtureState euler_step(const MixtureState& state, double dt, const RhsFunction& rhs);

enum class Formulation { well_balanced, naive };

struct RelaxOptions {
  Formulation formulation = Formulation::well_balanced;
  // Frozen density in the naive loss term (single population only). When
  // unset, the initial mass is used.
  double rho_param = -1.0;
  // Called before every step and once at exit with (t, state, residual).
  std::function<void(double, const MixtureState&, double)> observer;
};

struct RelaxationResult {
  MixtureState final_state;
  bool converged = false;
  bool mass_conserved = true;
  double residual = 0.0;  // max_j |df_j/dt| / (eta * rho_total^2)
  double t_final = 0.0;
  std::int64_t steps = 0;
  double dt = 0.0;
  std::vector<double> mass_drift;  // |rho^p(t_final) - rho^p(0)|
};

inline constexpr double kMassDriftTolerance = 1e-9;

// Integrates until the scaled residual drops to numerics.tol or t reaches
// numerics.t_max. Non-convergence is reported in the result, not thrown. The
// tables of games are built once from the initial occupancy, which the
// dynamics conserve.
RelaxationResult relax_to_equilibrium(const MixtureState& initial, const ModelParams& model,
                                      const NumericsParams& numerics, const RelaxOptions& options = {});

}  // namespace trafficmix
