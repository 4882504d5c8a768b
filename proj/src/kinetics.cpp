#include "trafficmix/kinetics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace trafficmix {

MixtureState::MixtureState(std::span<const int> classes_per_population) {
  for (int n : classes_per_population) {
    if (n < 1) throw std::invalid_argument("population with no speed classes");
    offsets_.push_back(offsets_.back() + n);
  }
  values_.assign(static_cast<std::size_t>(offsets_.back()), 0.0);
}

MixtureState MixtureState::zeros(const ModelParams& model) {
  std::vector<int> sizes;
  for (const auto& p : model.populations) sizes.push_back(p.lattice.size());
  return MixtureState(sizes);
}

MixtureState MixtureState::from(std::vector<std::vector<double>> distributions) {
  std::vector<int> sizes;
  for (const auto& d : distributions) sizes.push_back(static_cast<int>(d.size()));
  MixtureState s(sizes);
  for (std::size_t p = 0; p < distributions.size(); ++p)
    std::copy(distributions[p].begin(), distributions[p].end(), s[static_cast<int>(p)].begin());
  return s;
}

double MixtureState::mass(int p) const {
  const auto f = (*this)[p];
  return std::accumulate(f.begin(), f.end(), 0.0);
}

double MixtureState::total_mass() const {
  double m = 0.0;
  for (int p = 0; p < populations(); ++p) m += mass(p);
  return m;
}

namespace {

// out_j += sum_{h,k} T^j_{hk} a_h b_k, scattering over the sparse outcomes.
void accumulate_gain(const GameTable& t, std::span<const double> a, std::span<const double> b,
                     std::span<double> out) {
  for (int h = 0; h < t.candidate_classes(); ++h) {
    const double ah = a[static_cast<std::size_t>(h)];
    if (ah == 0.0) continue;
    for (int k = 0; k < t.field_classes(); ++k) {
      const double w = ah * b[static_cast<std::size_t>(k)];
      const auto& c = t.cell(h, k);
      for (int i = 0; i < c.count; ++i) out[static_cast<std::size_t>(c.outcomes[i].j)] += c.outcomes[i].prob * w;
    }
  }
}

void check_dims(std::size_t n, const GameTable& t, std::size_t out) {
  if (static_cast<int>(n) != t.candidate_classes() || static_cast<int>(n) != t.field_classes() || out != n)
    throw std::invalid_argument("distribution size does not match the table of games");
}

}  // namespace

void rhs_single(std::span<const double> f, const GameTable& table, double eta, std::span<double> out) {
  check_dims(f.size(), table, out.size());
  std::fill(out.begin(), out.end(), 0.0);
  accumulate_gain(table, f, f, out);
  const double mass = std::accumulate(f.begin(), f.end(), 0.0);
  for (std::size_t j = 0; j < f.size(); ++j) out[j] = eta * (out[j] - f[j] * mass);
}

std::vector<double> rhs_single(std::span<const double> f, const GameTable& table, double eta) {
  std::vector<double> out(f.size());
  rhs_single(f, table, eta, out);
  return out;
}

void rhs_single_naive(std::span<const double> f, const GameTable& table, double eta, double rho_param,
                      std::span<double> out) {
  check_dims(f.size(), table, out.size());
  std::fill(out.begin(), out.end(), 0.0);
  accumulate_gain(table, f, f, out);
  for (std::size_t j = 0; j < f.size(); ++j) out[j] = eta * (out[j] - rho_param * f[j]);
}

std::vector<double> rhs_single_naive(std::span<const double> f, const GameTable& table, double eta,
                                     double rho_param) {
  std::vector<double> out(f.size());
  rhs_single_naive(f, table, eta, rho_param, out);
  return out;
}

void rhs_mixture(const MixtureState& state, const GameTables& tables, double eta, MixtureState& out) {
  const int np = state.populations();
  if (static_cast<int>(tables.self.size()) != np || !out.same_shape(state))
    throw std::invalid_argument("state does not match the tables of games");

  double total = 0.0;
  for (int p = 0; p < np; ++p) total += state.mass(p);

  for (int p = 0; p < np; ++p) {
    const auto fp = state[p];
    auto op = out[p];
    if (tables.self[static_cast<std::size_t>(p)].candidate_classes() != static_cast<int>(fp.size()))
      throw std::invalid_argument("state does not match the tables of games");
    std::fill(op.begin(), op.end(), 0.0);
    accumulate_gain(tables.self[static_cast<std::size_t>(p)], fp, fp, op);
    for (int q = 0; q < np; ++q) {
      if (q == p) continue;
      const auto& cross = tables.cross[static_cast<std::size_t>(p)][static_cast<std::size_t>(q)];
      if (cross.field_classes() != state.classes(q))
        throw std::invalid_argument("state does not match the cross tables");
      accumulate_gain(cross, fp, state[q], op);
    }
    for (std::size_t j = 0; j < fp.size(); ++j) op[j] = eta * (op[j] - fp[j] * total);
  }
}

MixtureState rhs_two_population(const MixtureState& state, const GameTables& tables, double eta) {
  MixtureState out = state;
  rhs_mixture(state, tables, eta, out);
  return out;
}

PopulationMoments moments(std::span<const double> f, const SpeedLattice& lattice) {
  if (static_cast<int>(f.size()) != lattice.size())
    throw std::invalid_argument("distribution size does not match the lattice");
  PopulationMoments m;
  for (std::size_t j = 0; j < f.size(); ++j) {
    m.rho += f[j];
    m.q += lattice[static_cast<int>(j)] * f[j];
  }
  m.u = m.rho > 0.0 ? m.q / m.rho : std::numeric_limits<double>::quiet_NaN();
  return m;
}

Moments moments(const MixtureState& state, std::span<const PopulationSpec> specs) {
  Moments out;
  for (int p = 0; p < state.populations(); ++p) {
    out.populations.push_back(moments(state[p], specs[static_cast<std::size_t>(p)].lattice));
    out.total.rho += out.populations.back().rho;
    out.total.q += out.populations.back().q;
  }
  out.total.u = out.total.rho > 0.0 ? out.total.q / out.total.rho : std::numeric_limits<double>::quiet_NaN();
  return out;
}

}  // namespace trafficmix
