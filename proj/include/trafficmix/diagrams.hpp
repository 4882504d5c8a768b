#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "trafficmix/config.hpp"

namespace trafficmix {

struct DiagramPoint {
  double s = 0.0;
  double rho_c = 0.0, rho_t = 0.0, rho_total = 0.0;
  double q_c = 0.0, q_t = 0.0, q_total = 0.0;
  double u_c = 0.0, u_t = 0.0, u_total = 0.0;  // NaN for empty populations
  bool converged = false;
  double residual = 0.0;
  double t_final = 0.0;
  int sample_id = 0;
  std::string combo_label;
};

enum class SweepMode { table2, random, single_pop, ablation_speeds, ablation_lengths, macroscopic };

SweepMode parse_sweep_mode(const std::string& name);
std::string to_string(SweepMode mode);

struct SweepSpec {
  SweepMode mode = SweepMode::table2;
  int s_steps = 200;  // grid s_i = s_min + (s_max - s_min) i / s_steps, i = 0..s_steps
  double s_min = 0.0;
  double s_max = 1.0;
  int samples_per_s = 3;
  std::uint64_t seed = 0;
  double gamma = 1.0;
  double alpha = 1.0;
  int jobs = 1;

  std::vector<double> grid() const;
};

struct Mixture {
  double rho_c = 0.0;
  double rho_t = 0.0;
  std::string label;
};

// Cars-heavy, even and trucks-heavy splits of occupancy s.
std::array<Mixture, 3> table2_mixtures(double s, double length_cars, double length_trucks);

// Uniform split theta of occupancy s between the populations; sample i is a
// pure function of (seed, s, i).
double mixture_split(std::uint64_t seed, double s, int sample);
std::vector<Mixture> random_mixtures(double s, int count, std::uint64_t seed, double length_cars,
                                     double length_trucks);

struct MacroscopicFlux {
  double f1 = 0.0, f2 = 0.0, total = 0.0;
};

// Two-class Greenshields closure: F_p = rho_p (1 - s) V_p.
MacroscopicFlux macroscopic_flux(double rho_1, double rho_2, std::array<double, 2> lengths,
                                 std::array<double, 2> v_max);

// Copy of the model with the populations overridden for the ablation modes;
// other modes return the model unchanged (with alpha/gamma from the spec).
ModelParams sweep_model(const SweepSpec& spec, const ModelParams& base);

// Relaxes every (s, mixture) pair and returns points sorted by (s, sample_id).
// Results do not depend on spec.jobs.
std::vector<DiagramPoint> run_sweep(const SweepSpec& spec, const ModelParams& model, const NumericsParams& numerics);

// One relaxed point for explicit densities (second density ignored for a
// single-population model).
DiagramPoint relax_point(const ModelParams& model, const NumericsParams& numerics, double rho_c, double rho_t);

enum class Phase { free, congested };

struct BinStatistics {
  int bin = 0;
  double rho_lo = 0.0, rho_hi = 0.0;
  Phase phase = Phase::free;
  int count = 0;
  double mean = 0.0, min = 0.0, max = 0.0, stddev = 0.0;
  // Spread of q_total about the bin's least-squares line in rho_total. Needs
  // three points; NaN otherwise.
  double detrended_range = 0.0, detrended_stddev = 0.0;

  double range() const { return max - min; }
};

struct ScatterReport {
  std::vector<BinStatistics> bins;
  std::vector<std::string> notes;  // bins skipped for lack of points
  double rho_max = 0.0;
  double s_critical = 0.0;
  int bin_count = 0;
};

// Per total-density bin and per phase (s <= s_c or s > s_c) dispersion of the
// total flux. Bins are uniform over [0, rho_max]; a (bin, phase) group with
// fewer than two points is skipped.
ScatterReport scatter_statistics(const std::vector<DiagramPoint>& points, int bins, double rho_max,
                                 double s_critical, bool converged_only = true);

}  // namespace trafficmix
