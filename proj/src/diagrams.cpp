#include "trafficmix/diagrams.hpp"

#include <algorithm>
#include <atomic>
#include <bit>
#include <cmath>
#include <limits>
#include <random>
#include <stdexcept>
#include <thread>

#include "trafficmix/integrator.hpp"
#include "trafficmix/kinetics.hpp"

namespace trafficmix {

namespace {
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

struct ModeName {
  SweepMode mode;
  const char* name;
};
constexpr ModeName kModeNames[] = {{SweepMode::table2, "table2"},
                                   {SweepMode::random, "random"},
                                   {SweepMode::single_pop, "single-pop"},
                                   {SweepMode::ablation_speeds, "ablation-speeds"},
                                   {SweepMode::ablation_lengths, "ablation-lengths"},
                                   {SweepMode::macroscopic, "macroscopic"}};
}  // namespace

SweepMode parse_sweep_mode(const std::string& name) {
  for (const auto& m : kModeNames)
    if (name == m.name) return m.mode;
  throw std::invalid_argument("unknown sweep mode: " + name);
}

std::string to_string(SweepMode mode) {
  for (const auto& m : kModeNames)
    if (mode == m.mode) return m.name;
  return "?";
}

std::vector<double> SweepSpec::grid() const {
  if (s_steps < 1) throw std::invalid_argument("the occupancy grid needs at least one step");
  if (!(s_min >= 0.0 && s_max <= 1.0 && s_min <= s_max)) throw std::invalid_argument("occupancy grid outside [0, 1]");
  std::vector<double> g(static_cast<std::size_t>(s_steps) + 1);
  for (int i = 0; i <= s_steps; ++i) g[static_cast<std::size_t>(i)] = s_min + (s_max - s_min) * i / s_steps;
  return g;
}

std::array<Mixture, 3> table2_mixtures(double s, double lc, double lt) {
  return {Mixture{2.0 * s / (3.0 * lc), s / (3.0 * lt), "cars-heavy"},
          Mixture{s / (2.0 * lc), s / (2.0 * lt), "even"},
          Mixture{s / (3.0 * lc), 2.0 * s / (3.0 * lt), "trucks-heavy"}};
}

double mixture_split(std::uint64_t seed, double s, int sample) {
  const auto bits = std::bit_cast<std::uint64_t>(s);
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(bits), static_cast<std::uint32_t>(bits >> 32),
                    static_cast<std::uint32_t>(sample)};
  std::mt19937_64 gen(seq);
  return static_cast<double>(gen() >> 11) * 0x1.0p-53;
}

std::vector<Mixture> random_mixtures(double s, int count, std::uint64_t seed, double lc, double lt) {
  if (count < 1) throw std::invalid_argument("at least one mixture per occupancy value is required");
  std::vector<Mixture> out;
  out.reserve(static_cast<std::size_t>(count));
  for (int i = 0; i < count; ++i) {
    const double theta = mixture_split(seed, s, i);
    out.push_back({theta * s / lc, (1.0 - theta) * s / lt, "random"});
  }
  return out;
}

MacroscopicFlux macroscopic_flux(double rho_1, double rho_2, std::array<double, 2> lengths,
                                 std::array<double, 2> v_max) {
  const double free_space = 1.0 - (rho_1 * lengths[0] + rho_2 * lengths[1]);
  MacroscopicFlux f;
  f.f1 = rho_1 * free_space * v_max[0];
  f.f2 = rho_2 * free_space * v_max[1];
  f.total = f.f1 + f.f2;
  return f;
}

ModelParams sweep_model(const SweepSpec& spec, const ModelParams& base) {
  ModelParams model = base;
  model.alpha = spec.alpha;
  model.gamma = spec.gamma;
  if (spec.mode == SweepMode::single_pop) {
    model.populations.resize(1);
  } else if (model.populations.size() != 2) {
    throw std::invalid_argument("sweep mode " + to_string(spec.mode) + " needs two populations");
  }
  if (spec.mode == SweepMode::ablation_speeds) {
    model.populations[1] = PopulationSpec::make(model.populations[1].name, model.populations[0].length,
                                                model.populations[1].lattice);
  } else if (spec.mode == SweepMode::ablation_lengths) {
    model.populations[1] = PopulationSpec::make(model.populations[1].name, model.populations[1].length,
                                                model.populations[0].lattice);
  }
  validate(model);
  return model;
}

DiagramPoint relax_point(const ModelParams& model, const NumericsParams& numerics, double rho_c, double rho_t) {
  const bool two = model.two_population();
  MixtureState init = MixtureState::zeros(model);
  const double rho[2] = {rho_c, two ? rho_t : 0.0};
  for (int p = 0; p < init.populations(); ++p) {
    auto f = init[p];
    std::fill(f.begin(), f.end(), rho[p] / static_cast<double>(f.size()));
  }

  const auto result = relax_to_equilibrium(init, model, numerics);
  const auto m = moments(result.final_state, model.populations);

  DiagramPoint pt;
  pt.s = occupancy(std::span<const double>(rho, init.populations()), model.populations);
  pt.rho_c = m.populations[0].rho;
  pt.q_c = m.populations[0].q;
  pt.u_c = m.populations[0].u;
  if (two) {
    pt.rho_t = m.populations[1].rho;
    pt.q_t = m.populations[1].q;
    pt.u_t = m.populations[1].u;
  } else {
    pt.u_t = kNaN;
  }
  pt.rho_total = pt.rho_c + pt.rho_t;
  pt.q_total = pt.q_c + pt.q_t;
  pt.u_total = m.total.u;
  pt.converged = result.converged;
  pt.residual = result.residual;
  pt.t_final = result.t_final;
  return pt;
}

namespace {

struct Task {
  double s;
  Mixture mixture;
  int sample;
};

DiagramPoint macroscopic_point(const ModelParams& model, const Task& task) {
  const auto& c = model.populations[0];
  const auto& t = model.populations[1];
  const auto flux = macroscopic_flux(task.mixture.rho_c, task.mixture.rho_t, {c.length, t.length},
                                     {c.lattice.max_speed(), t.lattice.max_speed()});
  const double free_space = 1.0 - task.s;
  DiagramPoint pt;
  pt.rho_c = task.mixture.rho_c;
  pt.rho_t = task.mixture.rho_t;
  pt.rho_total = pt.rho_c + pt.rho_t;
  pt.q_c = flux.f1;
  pt.q_t = flux.f2;
  pt.q_total = flux.total;
  pt.u_c = pt.rho_c > 0.0 ? free_space * c.lattice.max_speed() : kNaN;
  pt.u_t = pt.rho_t > 0.0 ? free_space * t.lattice.max_speed() : kNaN;
  pt.u_total = pt.rho_total > 0.0 ? pt.q_total / pt.rho_total : kNaN;
  pt.converged = true;
  return pt;
}

}  // namespace

std::vector<DiagramPoint> run_sweep(const SweepSpec& spec, const ModelParams& base, const NumericsParams& numerics) {
  const ModelParams model = sweep_model(spec, base);
  const auto grid = spec.grid();

  std::vector<Task> tasks;
  for (double s : grid) {
    switch (spec.mode) {
      case SweepMode::single_pop:
        tasks.push_back({s, Mixture{s / model.populations[0].length, 0.0, "single"}, 0});
        break;
      case SweepMode::table2: {
        const auto mixes = table2_mixtures(s, model.populations[0].length, model.populations[1].length);
        for (int i = 0; i < 3; ++i) tasks.push_back({s, mixes[static_cast<std::size_t>(i)], i});
        break;
      }
      default: {
        auto mixes = random_mixtures(s, spec.samples_per_s, spec.seed, model.populations[0].length,
                                     model.populations[1].length);
        for (std::size_t i = 0; i < mixes.size(); ++i) {
          if (spec.mode == SweepMode::macroscopic) mixes[i].label = "macroscopic";
          else if (spec.mode != SweepMode::random) mixes[i].label = to_string(spec.mode);
          tasks.push_back({s, mixes[i], static_cast<int>(i)});
        }
      }
    }
  }

  std::vector<DiagramPoint> points(tasks.size());
  auto work = [&](const Task& task) {
    DiagramPoint pt = spec.mode == SweepMode::macroscopic
                          ? macroscopic_point(model, task)
                          : relax_point(model, numerics, task.mixture.rho_c, task.mixture.rho_t);
    pt.s = task.s;
    pt.sample_id = task.sample;
    pt.combo_label = task.mixture.label;
    return pt;
  };

  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < tasks.size(); i = next++) {
      try {
        points[i] = work(tasks[i]);
      } catch (const NumericalFailure&) {
        DiagramPoint pt;
        pt.s = tasks[i].s;
        pt.rho_c = tasks[i].mixture.rho_c;
        pt.rho_t = tasks[i].mixture.rho_t;
        pt.rho_total = pt.rho_c + pt.rho_t;
        pt.q_c = pt.q_t = pt.q_total = pt.u_c = pt.u_t = pt.u_total = pt.residual = kNaN;
        pt.sample_id = tasks[i].sample;
        pt.combo_label = tasks[i].mixture.label;
        points[i] = pt;
      }
    }
  };
  const int jobs = std::max(1, std::min<int>(spec.jobs, static_cast<int>(tasks.size())));
  std::vector<std::jthread> pool;
  for (int j = 1; j < jobs; ++j) pool.emplace_back(worker);
  worker();
  pool.clear();

  // Tasks are generated in (s, sample) order already; keep it explicit.
  std::stable_sort(points.begin(), points.end(), [](const DiagramPoint& a, const DiagramPoint& b) {
    return a.s != b.s ? a.s < b.s : a.sample_id < b.sample_id;
  });
  return points;
}

namespace {

BinStatistics summarize(const std::vector<const DiagramPoint*>& group) {
  BinStatistics b;
  b.count = static_cast<int>(group.size());
  b.min = std::numeric_limits<double>::infinity();
  b.max = -b.min;
  double sum = 0.0, sum_rho = 0.0;
  for (const auto* p : group) {
    sum += p->q_total;
    sum_rho += p->rho_total;
    b.min = std::min(b.min, p->q_total);
    b.max = std::max(b.max, p->q_total);
  }
  const double n = static_cast<double>(group.size());
  b.mean = sum / n;
  const double mean_rho = sum_rho / n;
  double var = 0.0, sxx = 0.0, sxy = 0.0;
  for (const auto* p : group) {
    const double dq = p->q_total - b.mean;
    const double dr = p->rho_total - mean_rho;
    var += dq * dq;
    sxx += dr * dr;
    sxy += dr * dq;
  }
  b.stddev = std::sqrt(var / (n - 1.0));

  if (group.size() < 3) {
    b.detrended_range = b.detrended_stddev = kNaN;
    return b;
  }
  const double slope = sxx > 0.0 ? sxy / sxx : 0.0;
  double rmin = std::numeric_limits<double>::infinity(), rmax = -rmin, rss = 0.0;
  for (const auto* p : group) {
    const double r = p->q_total - (b.mean + slope * (p->rho_total - mean_rho));
    rmin = std::min(rmin, r);
    rmax = std::max(rmax, r);
    rss += r * r;
  }
  b.detrended_range = rmax - rmin;
  b.detrended_stddev = std::sqrt(rss / (n - 2.0));
  return b;
}

}  // namespace

ScatterReport scatter_statistics(const std::vector<DiagramPoint>& points, int bins, double rho_max,
                                 double s_critical, bool converged_only) {
  if (bins < 1 || !(rho_max > 0.0)) throw std::invalid_argument("scatter statistics need bins over a positive range");
  ScatterReport report;
  report.rho_max = rho_max;
  report.s_critical = s_critical;
  report.bin_count = bins;

  std::vector<std::array<std::vector<const DiagramPoint*>, 2>> groups(static_cast<std::size_t>(bins));
  const double width = rho_max / bins;
  for (const auto& p : points) {
    if (converged_only && !p.converged) continue;
    if (!std::isfinite(p.q_total) || p.rho_total < 0.0 || p.rho_total > rho_max) continue;
    const int b = std::min(bins - 1, static_cast<int>(p.rho_total / width));
    groups[static_cast<std::size_t>(b)][p.s > s_critical ? 1 : 0].push_back(&p);
  }

  for (int b = 0; b < bins; ++b) {
    for (int ph = 0; ph < 2; ++ph) {
      const auto& g = groups[static_cast<std::size_t>(b)][static_cast<std::size_t>(ph)];
      if (g.empty()) continue;
      if (g.size() < 2) {
        report.notes.push_back("bin " + std::to_string(b) + (ph ? " congested" : " free") +
                               ": fewer than two points, skipped");
        continue;
      }
      BinStatistics st = summarize(g);
      st.bin = b;
      st.rho_lo = b * width;
      st.rho_hi = (b + 1) * width;
      st.phase = ph ? Phase::congested : Phase::free;
      report.bins.push_back(st);
    }
  }
  return report;
}

}  // namespace trafficmix
