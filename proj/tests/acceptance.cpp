// Acceptance checks. One line per criterion; the process fails if any does.
#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>
#include <limits>
#include <numeric>
#include <random>
#include <string>
#include <vector>

#include "trafficmix/config.hpp"
#include "trafficmix/diagrams.hpp"
#include "trafficmix/integrator.hpp"
#include "trafficmix/kinetics.hpp"
#include "trafficmix/oracle.hpp"
#include "trafficmix/tables.hpp"

using namespace trafficmix;

namespace {

struct Verdict {
  bool pass = true;
  std::string detail;

  void require(bool ok, const std::string& what) {
    if (!ok) pass = false;
    if (!detail.empty()) detail += "; ";
    detail += what + (ok ? "" : " [failed]");
  }
};

std::string fmt(const char* f, double a) {
  char buf[128];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

std::string fmt(const char* f, double a, double b) {
  char buf[160];
  std::snprintf(buf, sizeof buf, f, a, b);
  return buf;
}

std::string fmt(const char* f, double a, double b, double c) {
  char buf[200];
  std::snprintf(buf, sizeof buf, f, a, b, c);
  return buf;
}

void info(const std::string& text) { std::printf("    info: %s\n", text.c_str()); }

ModelParams table1(double gamma = 1.0) {
  ModelParams m = default_config().model;
  m.gamma = gamma;
  return m;
}

ModelParams normalized_two_speeds() {
  ModelParams m;
  m.populations = {PopulationSpec::make("vehicles", 1.0, SpeedLattice::equispaced(2, 1.0))};
  return m;
}

double max_abs_diff(std::span<const double> a, std::span<const double> b) {
  double d = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) d = std::max(d, std::abs(a[i] - b[i]));
  return d;
}

std::vector<DiagramPoint> sweep(SweepMode mode, const ModelParams& model, double gamma, int samples = 3) {
  SweepSpec spec;
  spec.mode = mode;
  spec.gamma = gamma;
  spec.alpha = model.alpha;
  spec.s_steps = 200;
  spec.samples_per_s = samples;
  spec.seed = NumericsParams{}.seed;
  spec.jobs = 1;
  return run_sweep(spec, model, NumericsParams{});
}

// ---------------------------------------------------------------------------

Verdict critical_space_check() {
  Verdict v;
  for (double gamma : {1.0, 0.5}) {
    const double expected = critical_space(gamma);
    const auto pts = sweep(SweepMode::table2, table1(gamma), gamma);
    for (const char* label : {"cars-heavy", "even", "trucks-heavy"}) {
      double best = -1.0, at = -1.0;
      for (const auto& p : pts)
        if (p.combo_label == label && p.q_total > best) best = p.q_total, at = p.s;
      v.require(std::abs(at - expected) <= 0.005 + 1e-12,
                std::string(label) + fmt(" gamma=%.1f peak at s=%.3f", gamma, at));
    }
  }
  return v;
}

Verdict maximum_flow_check() {
  Verdict v;
  const auto model = table1();
  const auto pts = sweep(SweepMode::random, model, 1.0);
  const DiagramPoint* best = nullptr;
  for (const auto& p : pts)
    if (!std::isnan(p.q_total) && (!best || p.q_total > best->q_total)) best = &p;
  const double target = max_flux(1.0, 100.0, 250.0);
  v.require(std::abs(best->q_total - target) <= 0.01 * target, fmt("max q_total=%.1f (target %.0f)", best->q_total, target));
  v.require(best->rho_t < 1.0, fmt("rho_t=%.3f at the maximum", best->rho_t));
  v.require(std::abs(best->rho_total - 125.0) <= 2.0, fmt("rho_total=%.2f at the maximum", best->rho_total));

  // How close to pure cars a sample must be for the tolerance to be reachable.
  const auto& cars = model.populations[0].lattice;
  const auto& trucks = model.populations[1].lattice;
  double lo = 0.0, hi = 1.0;
  for (int it = 0; it < 60; ++it) {
    const double rt = 0.5 * (lo + hi);
    const double rc = (0.5 - rt * 0.012) / 0.004;
    (free_phase_equilibrium(rc, rt, cars, trucks, 0.5).flux >= 0.99 * target ? lo : hi) = rt;
  }
  info(fmt("at s=0.5 the closed-form flux stays within 1%% only for rho_t < %.4f, i.e. a split theta > %.5f;"
           " sweep draws %.0f samples per occupancy",
           lo, 1.0 - lo * 0.012 / 0.5, 3.0));
  const auto pure = relax_point(model, NumericsParams{}, 125.0, 0.0);
  info(fmt("cars alone at s=0.5 relax to q_total=%.2f", pure.q_total));
  return v;
}

Verdict oracle_equivalence_check() {
  Verdict v;
  const auto model = table1();
  const auto& cars = model.populations[0];
  const auto& trucks = model.populations[1];
  double worst_entry = 0.0, worst_flux = 0.0;
  int unconverged = 0, points = 0;
  for (int i = 0; i < 10; ++i) {
    for (int j = 0; j < 10; ++j) {
      const double rc = i * 0.025 / cars.length, rt = j * 0.025 / trucks.length;
      const double s = rc * cars.length + rt * trucks.length;
      const auto eq = free_phase_equilibrium(rc, rt, cars.lattice, trucks.lattice, s);
      std::vector<double> fc(3, rc / 3), ft(2, rt / 2);
      const auto r = relax_to_equilibrium(MixtureState::from({fc, ft}), model, NumericsParams{});
      if (!r.converged) ++unconverged;
      worst_entry = std::max(worst_entry, max_abs_diff(r.final_state[0], eq.f_cars));
      worst_entry = std::max(worst_entry, max_abs_diff(r.final_state[1], eq.f_trucks));
      const double q = moments(r.final_state, model.populations).total.q;
      if (eq.flux > 0.0) worst_flux = std::max(worst_flux, std::abs(q - eq.flux) / eq.flux);
      ++points;
    }
  }
  v.require(unconverged == 0, fmt("%.0f of %.0f grid points converged", points - unconverged, points));
  v.require(worst_entry <= 1e-6, fmt("max entry error %.2e", worst_entry));
  v.require(worst_flux <= 1e-6, fmt("max relative flux error %.2e", worst_flux));
  return v;
}

Verdict single_population_check() {
  Verdict v;
  const auto model = normalized_two_speeds();
  for (double rho : {0.1, 0.3, 0.5, 0.7}) {
    NumericsParams num;
    if (rho == 0.5) {
      // R = 1/2 exactly: f_1 decays like 2/t, so 1e-8 needs t of order 2e8.
      num.tol = 1.5e-16;
      num.t_max = 5e8;
    }
    const auto r = relax_to_equilibrium(MixtureState::from({{rho / 2, rho / 2}}), model, num);
    const auto [e1, e2] = single_pop_equilibrium_two_speeds(rho, 1.0);
    const double err = std::max(std::abs(r.final_state[0][0] - e1), std::abs(r.final_state[0][1] - e2));
    v.require(err <= 1e-8, fmt("rho=%.1f error %.1e", rho, err) + (r.converged ? "" : " (t_max reached)"));
  }
  return v;
}

Verdict well_balanced_check() {
  Verdict v;
  const auto model = normalized_two_speeds();
  const double rho = 0.3, m = rho * (1 - 1e-6);
  RelaxOptions naive;
  naive.formulation = Formulation::naive;
  naive.rho_param = rho;
  const auto bad = relax_to_equilibrium(MixtureState::from({{m / 2, m / 2}}), model, NumericsParams{}, naive);
  v.require(bad.final_state.total_mass() < 0.01 * rho,
            fmt("naive terminal mass %.2e at t=%.0f", bad.final_state.total_mass(), bad.t_final));

  // Same perturbed data: the mass it starts with is kept.
  const auto kept = relax_to_equilibrium(MixtureState::from({{m / 2, m / 2}}), model, NumericsParams{});
  v.require(kept.mass_drift[0] <= 1e-9, fmt("well-balanced mass drift from the perturbed data %.1e", kept.mass_drift[0]));
  const double kept_err = std::max(std::abs(kept.final_state[0][0]), std::abs(kept.final_state[0][1] - m));
  v.require(kept.converged && kept_err <= 1e-8, fmt("perturbed data relax to (0, %.7f)", m));

  const auto good = relax_to_equilibrium(MixtureState::from({{rho / 2, rho / 2}}), model, NumericsParams{});
  v.require(good.mass_drift[0] <= 1e-9, fmt("well-balanced mass drift %.1e", good.mass_drift[0]));
  const double err = std::max(std::abs(good.final_state[0][0]), std::abs(good.final_state[0][1] - rho));
  v.require(good.converged && err <= 1e-8, fmt("distance to (0, 0.3) %.1e", err));
  return v;
}

Verdict indifferentiability_check() {
  Verdict v;
  std::mt19937_64 gen(7);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  double worst = 0.0;
  std::size_t compared = 0;
  for (int c = 0; c < 100; ++c) {
    const int n = 2 + c % 4;
    const double length = 0.004;
    const auto lattice = SpeedLattice::equispaced(n, 100.0);
    ModelParams two;
    two.alpha = u(gen);
    two.populations = {PopulationSpec::make("a", length, lattice), PopulationSpec::make("b", length, lattice)};
    ModelParams one = two;
    one.populations.resize(1);

    std::vector<double> f(static_cast<std::size_t>(n)), fa(f.size()), fb(f.size());
    for (auto& x : f) x = u(gen);
    const double target = (0.05 + 0.9 * u(gen)) / length;
    const double sum = std::accumulate(f.begin(), f.end(), 0.0);
    for (std::size_t j = 0; j < f.size(); ++j) {
      f[j] *= target / sum;
      const double split = u(gen);
      fa[j] = split * f[j];
      fb[j] = f[j] - fa[j];
    }

    NumericsParams num;
    num.t_max = 10.0;
    num.tol = std::numeric_limits<double>::min();
    // One step size for both runs; the mass sums may differ in the last bit.
    num.dt = stable_dt(1.0, target);
    std::vector<std::vector<double>> a, b;
    RelaxOptions oa, ob;
    oa.observer = [&](double, const MixtureState& s, double) {
      std::vector<double> row(s[0].begin(), s[0].end());
      for (int j = 0; j < n; ++j) row[static_cast<std::size_t>(j)] += s[1][j];
      a.push_back(std::move(row));
    };
    ob.observer = [&](double, const MixtureState& s, double) { b.emplace_back(s[0].begin(), s[0].end()); };
    relax_to_equilibrium(MixtureState::from({fa, fb}), two, num, oa);
    relax_to_equilibrium(MixtureState::from({f}), one, num, ob);
    // A run stops early only when its right-hand side is exactly zero; RK4
    // keeps such a state fixed, so the shorter record is extended with it.
    const std::size_t steps = std::max(a.size(), b.size());
    for (std::size_t k = 0; k < steps; ++k)
      worst = std::max(worst, max_abs_diff(a[std::min(k, a.size() - 1)], b[std::min(k, b.size() - 1)]));
    compared += steps;
  }
  v.require(worst <= 1e-10, fmt("max deviation over 100 trajectories (%.0f steps), t in [0,10]: %.2e", static_cast<double>(compared), worst));
  return v;
}

Verdict property_suite_check() {
  Verdict v;
  std::mt19937_64 gen(1234);
  std::uniform_real_distribution<double> u(0.0, 1.0);

  // Stochasticity and acceleration bound.
  int defects = 0, bound_violations = 0, tables_checked = 0;
  for (int nc = 2; nc <= 5; ++nc) {
    for (int nt = 2; nt <= nc; ++nt) {
      ModelParams m;
      const auto cars = SpeedLattice::equispaced(nc, 100.0);
      m.populations = {PopulationSpec::make("c", 0.004, cars), PopulationSpec::make("t", 0.012, cars.prefix(nt))};
      for (double alpha : {0.0, 0.5, 1.0}) {
        for (double gamma : {0.5, 1.0, 2.0}) {
          m.alpha = alpha;
          m.gamma = gamma;
          for (int i = 0; i <= 100; ++i) {
            const auto tables = build_game_tables(m, i / 100.0);
            defects += static_cast<int>(check_stochastic(tables, 1e-12).size());
            auto scan = [&](const GameTable& t) {
              for (int h = 0; h < t.candidate_classes(); ++h)
                for (int k = 0; k < t.field_classes(); ++k)
                  for (int j = h + 2; j < t.candidate_classes(); ++j)
                    if (t.at(j, h, k) != 0.0) ++bound_violations;
            };
            for (const auto& t : tables.self) scan(t);
            scan(tables.cross[0][1]);
            scan(tables.cross[1][0]);
            ++tables_checked;
          }
        }
      }
    }
  }
  v.require(defects == 0, fmt("stochasticity: %.0f defects in %.0f table sets", defects, tables_checked));
  v.require(bound_violations == 0, fmt("acceleration bound: %.0f violations", bound_violations));

  // Mass conservation of the operator on random states, relative to rho^2.
  double worst_mass = 0.0;
  for (int trial = 0; trial < 1000; ++trial) {
    const int nc = 2 + trial % 5;
    const int nt = 2 + trial % (nc - 1);
    ModelParams m;
    m.alpha = u(gen);
    const auto cars = SpeedLattice::equispaced(nc, 100.0);
    m.populations = {PopulationSpec::make("c", 0.004, cars), PopulationSpec::make("t", 0.012, cars.prefix(nt))};
    auto state = MixtureState::zeros(m);
    for (auto& x : state.flat()) x = 50.0 * u(gen);
    const auto tables = build_game_tables(m, u(gen));
    const auto r = rhs_two_population(state, tables, 1.0);
    const double scale = state.total_mass() * state.total_mass();
    for (int p = 0; p < 2; ++p) {
      const auto rp = r[p];
      worst_mass = std::max(worst_mass, std::abs(std::accumulate(rp.begin(), rp.end(), 0.0)) / scale);
    }
  }
  v.require(worst_mass <= 1e-12, fmt("mass conservation: max |sum rhs|/rho^2 = %.1e over 1000 states", worst_mass));

  // Nonnegativity under Euler and RK4 steps at the stability bound.
  double most_negative = 0.0;
  for (int trial = 0; trial < 300; ++trial) {
    const int nc = 2 + trial % 4;
    ModelParams m;
    m.alpha = u(gen);
    const auto cars = SpeedLattice::equispaced(nc, 100.0);
    m.populations = {PopulationSpec::make("c", 0.004, cars),
                     PopulationSpec::make("t", 0.012, cars.prefix(2 + trial % (nc - 1)))};
    auto state = MixtureState::zeros(m);
    for (auto& x : state.flat()) x = u(gen) < 0.4 ? 0.0 : u(gen);
    const double s = occupancy(std::array{state.mass(0), state.mass(1)}, m.populations);
    const double scale = (0.05 + 0.9 * u(gen)) / std::max(s, 1e-300);
    for (auto& x : state.flat()) x *= scale;
    const auto tables = build_game_tables(m, std::min(1.0, s * scale));
    RhsFunction rhs = [&](const MixtureState& x, MixtureState& out) { rhs_mixture(x, tables, 1.0, out); };
    const double dt = stable_dt(1.0, state.total_mass());
    auto e = state, r = state;
    for (int k = 0; k < 50; ++k) {
      e = euler_step(e, dt, rhs);
      r = step(r, dt, rhs);
      for (double x : e.flat()) most_negative = std::min(most_negative, x / state.total_mass());
      for (double x : r.flat()) most_negative = std::min(most_negative, x / state.total_mass());
    }
  }
  v.require(most_negative >= -1e-14, fmt("nonnegativity: most negative entry %.1e (relative)", most_negative));

  // Equilibria independent of the initial distribution.
  const auto model = table1();
  const double occupancies[] = {0.1, 0.2, 0.3, 0.4, 0.45, 0.6, 0.7, 0.8, 0.9, 0.95};
  double worst_spread = 0.0;
  int unconverged = 0;
  for (double s : occupancies) {
    const double theta = 0.1 + 0.8 * u(gen);
    const double rc = theta * s / 0.004, rt = (1 - theta) * s / 0.012;
    std::vector<MixtureState> finals;
    for (int k = 0; k < 5; ++k) {
      std::vector<double> fc(3), ft(2);
      for (auto& x : fc) x = u(gen) + 1e-3;
      for (auto& x : ft) x = u(gen) + 1e-3;
      const double sc = std::accumulate(fc.begin(), fc.end(), 0.0), st = ft[0] + ft[1];
      for (auto& x : fc) x *= rc / sc;
      for (auto& x : ft) x *= rt / st;
      const auto r = relax_to_equilibrium(MixtureState::from({fc, ft}), model, NumericsParams{});
      if (!r.converged) ++unconverged;
      finals.push_back(r.final_state);
    }
    for (int k = 1; k < 5; ++k) worst_spread = std::max(worst_spread, max_abs_diff(finals[k].flat(), finals[0].flat()));
  }
  v.require(unconverged == 0 && worst_spread <= 1e-6,
            fmt("initial-condition independence: max spread %.1e over 5 x 10 runs", worst_spread));
  return v;
}

double max_over(const ScatterReport& r, Phase phase, double (*metric)(const BinStatistics&), double rho_hi = 1e300) {
  double m = 0.0;
  for (const auto& b : r.bins) {
    if (b.phase != phase || b.rho_hi > rho_hi + 1e-9) continue;
    const double x = metric(b);
    if (!std::isnan(x)) m = std::max(m, x);
  }
  return m;
}

double raw_range(const BinStatistics& b) { return b.range(); }
double detrended(const BinStatistics& b) { return b.detrended_range; }

Verdict scattering_check() {
  Verdict v;
  const auto model = table1();

  // Random sweep with one shared lattice and the table-1 lengths.
  const auto equal = sweep(SweepMode::ablation_lengths, model, 1.0);
  const auto er = scatter_statistics(equal, 50, 250.0, 0.5);
  const double free_range = max_over(er, Phase::free, raw_range);
  const double cong_range = max_over(er, Phase::congested, raw_range);
  v.require(cong_range > 10.0 * free_range,
            fmt("equal-lattice random sweep: congested range %.0f vs free range %.0f (x%.1f)", cong_range, free_range,
                cong_range / free_range));

  double worst_gap = 0.0;
  int congested = 0;
  for (const auto& p : equal) {
    if (!p.converged || p.s <= 0.5 || p.rho_c == 0.0 || p.rho_t == 0.0) continue;
    worst_gap = std::max(worst_gap, std::abs(p.u_c - p.u_t));
    ++congested;
  }
  v.require(congested > 0 && worst_gap <= 1e-3 * 100.0,
            fmt("speed collapse: max |u_C - u_T| = %.1e km/h over %.0f congested points", worst_gap, congested));

  ModelParams single = normalized_two_speeds();
  const auto sp = sweep(SweepMode::single_pop, single, 1.0);
  const auto sr = scatter_statistics(sp, 50, 1.0, 0.5);
  const double single_disp = std::max(max_over(sr, Phase::free, detrended), max_over(sr, Phase::congested, detrended));
  v.require(single_disp <= 1e-6 * 0.5, fmt("single population (n=2): max detrended per-bin range %.1e", single_disp));

  const auto dflt = sweep(SweepMode::random, model, 1.0);
  const auto dr = scatter_statistics(dflt, 50, 250.0, 0.5);
  info(fmt("default lattices {0,50,100}/{0,50}: congested range %.0f vs free range %.0f (x%.1f)",
           max_over(dr, Phase::congested, raw_range), max_over(dr, Phase::free, raw_range),
           max_over(dr, Phase::congested, raw_range) / max_over(dr, Phase::free, raw_range)));
  const auto s3 = sweep(SweepMode::single_pop, model, 1.0);
  const auto s3r = scatter_statistics(s3, 50, 250.0, 0.5);
  info(fmt("single population n=3: max detrended per-bin range free %.1e, congested %.1e veh/h",
           max_over(s3r, Phase::free, detrended), max_over(s3r, Phase::congested, detrended)));
  return v;
}

Verdict macroscopic_check() {
  Verdict v;
  std::mt19937_64 gen(99);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  double worst = 0.0;
  for (int i = 0; i < 100000; ++i) {
    const std::array l{0.001 + 0.02 * u(gen), 0.001 + 0.02 * u(gen)};
    const std::array vmax{200 * u(gen), 200 * u(gen)};
    const double theta = u(gen), s = u(gen);
    const double r1 = theta * s / l[0], r2 = (1 - theta) * s / l[1];
    const auto f = macroscopic_flux(r1, r2, l, vmax);
    const double occ = r1 * l[0] + r2 * l[1];
    const double e1 = r1 * (1 - occ) * vmax[0], e2 = r2 * (1 - occ) * vmax[1];
    const double scale = std::max({std::abs(e1) + std::abs(e2), std::numeric_limits<double>::min()});
    worst = std::max({worst, std::abs(f.f1 - e1) / scale, std::abs(f.f2 - e2) / scale,
                      std::abs(f.total - (e1 + e2)) / scale});
  }
  v.require(worst <= 4 * std::numeric_limits<double>::epsilon(), fmt("closed form: max relative deviation %.1e", worst));

  const auto model = table1();
  const auto pts = sweep(SweepMode::macroscopic, model, 1.0);
  int multivalued = 0;
  for (std::size_t i = 0; i + 2 < pts.size(); i += 3) {
    const double lo = std::min({pts[i].q_total, pts[i + 1].q_total, pts[i + 2].q_total});
    const double hi = std::max({pts[i].q_total, pts[i + 1].q_total, pts[i + 2].q_total});
    if (hi - lo > 1e-6 * hi) ++multivalued;
  }
  v.require(multivalued > 0, fmt("%.0f occupancies with different total flux across splits", multivalued));

  const double low = 0.25 * 250.0;
  const auto mr = scatter_statistics(pts, 50, 250.0, 0.5);
  const double macro_low = max_over(mr, Phase::free, detrended, low);
  const auto kinetic = sweep(SweepMode::ablation_lengths, model, 1.0);
  const auto kr = scatter_statistics(kinetic, 50, 250.0, 0.5);
  const double kinetic_free = max_over(kr, Phase::free, detrended);
  v.require(macro_low > 1.0, fmt("macroscopic detrended per-bin range below rho=%.1f: %.1f veh/h", low, macro_low));
  v.require(kinetic_free <= 1e-6 * max_flux(1.0, 100.0, 250.0),
            fmt("kinetic equal-lattice free phase: %.1e veh/h", kinetic_free));
  return v;
}

}  // namespace

int main() {
  struct Criterion {
    int id;
    const char* name;
    std::function<Verdict()> run;
  };
  const std::vector<Criterion> criteria = {
      {1, "critical space", critical_space_check},
      {2, "maximum flow", maximum_flow_check},
      {3, "oracle equivalence", oracle_equivalence_check},
      {4, "single-population regression", single_population_check},
      {5, "well-balanced demonstration", well_balanced_check},
      {6, "indifferentiability", indifferentiability_check},
      {7, "property suite", property_suite_check},
      {8, "scattering structure", scattering_check},
      {9, "macroscopic comparison", macroscopic_check},
  };
  int failed = 0;
  for (const auto& c : criteria) {
    Verdict v;
    try {
      v = c.run();
    } catch (const std::exception& e) {
      v.pass = false;
      v.detail = std::string("exception: ") + e.what();
    }
    std::printf("criterion %d (%s): %s  %s\n", c.id, c.name, v.pass ? "PASS" : "FAIL", v.detail.c_str());
    std::fflush(stdout);
    if (!v.pass) ++failed;
  }
  std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
