#include "trafficmix/tables.hpp"

#include <cmath>
#include <cstdio>
#include <stdexcept>

namespace trafficmix {

TransitionProbabilities transition_probabilities(double s, double alpha, double gamma) {
  if (!(s >= 0.0 && s <= 1.0)) throw std::domain_error("occupancy outside [0, 1]: " + std::to_string(s));
  TransitionProbabilities t;
  t.accelerate = alpha * (1.0 - std::pow(s, gamma));
  t.brake = (1.0 - alpha) * s;
  t.stay = 1.0 - t.accelerate;
  return t;
}

GameTable::GameTable(int candidate_classes, int field_classes)
    : n_candidate_(candidate_classes),
      n_field_(field_classes),
      cells_(static_cast<std::size_t>(candidate_classes) * field_classes) {}

double GameTable::at(int j, int h, int k) const {
  const Cell& c = cell(h, k);
  for (int i = 0; i < c.count; ++i)
    if (c.outcomes[i].j == j) return c.outcomes[i].prob;
  return 0.0;
}

void GameTable::set(int j, int h, int k, double prob) {
  Cell& c = cell(h, k);
  for (int i = 0; i < c.count; ++i) {
    if (c.outcomes[i].j == j) {
      c.outcomes[i].prob = prob;
      return;
    }
  }
  if (c.count == 3) throw std::logic_error("more than three outcomes for one encounter");
  c.outcomes[c.count++] = {j, prob};
}

namespace {

// Shared rule set. The candidate's own lattice size bounds acceleration; the
// field lattice only decides which encounters exist.
GameTable build_rules(int n_candidate, int n_field, const TransitionProbabilities& t) {
  const double P = t.accelerate;
  const double Q = t.brake;
  const int top = n_candidate - 1;
  GameTable table(n_candidate, n_field);

  auto put = [&](int h, int k, int j, double prob) {
    if (prob != 0.0) table.set(j, h, k, prob);
  };

  for (int h = 0; h < n_candidate; ++h) {
    for (int k = 0; k < n_field; ++k) {
      if (h < k) {
        if (h < top) {
          put(h, k, h, 1.0 - P);
          put(h, k, h + 1, P);
        } else {
          // capped candidate behind a faster field vehicle
          put(h, k, h, 1.0);
        }
      } else if (h > k) {
        put(h, k, k, 1.0 - P);
        put(h, k, h, P);
      } else if (h == 0) {
        put(h, k, 0, 1.0 - P);
        put(h, k, 1, P);
      } else if (h == top) {
        put(h, k, h - 1, Q);
        put(h, k, h, 1.0 - Q);
      } else {
        put(h, k, h - 1, Q);
        put(h, k, h, 1.0 - (P + Q));
        put(h, k, h + 1, P);
      }
    }
  }
  return table;
}

}  // namespace

GameTable build_self_tables(int n, const TransitionProbabilities& probs) {
  if (n < 2) throw std::invalid_argument("a table of games needs at least two speed classes");
  return build_rules(n, n, probs);
}

GameTable build_cross_tables(const SpeedLattice& candidate, const SpeedLattice& field,
                             const TransitionProbabilities& probs) {
  if (candidate.size() < 2 || field.size() < 2)
    throw std::invalid_argument("a table of games needs at least two speed classes");
  if (!candidate.is_prefix_of(field) && !field.is_prefix_of(candidate))
    throw std::invalid_argument("cross-interaction lattices are not nested");
  return build_rules(candidate.size(), field.size(), probs);
}

GameTables build_game_tables(const ModelParams& model, double s) {
  GameTables out;
  out.s = s;
  out.probs = transition_probabilities(s, model.alpha, model.gamma);
  const std::size_t np = model.populations.size();
  out.cross.resize(np);
  for (std::size_t p = 0; p < np; ++p) {
    out.self.push_back(build_self_tables(model.populations[p].lattice.size(), out.probs));
    out.cross[p].resize(np);
    for (std::size_t q = 0; q < np; ++q) {
      if (q == p) continue;
      out.cross[p][q] =
          build_cross_tables(model.populations[p].lattice, model.populations[q].lattice, out.probs);
    }
  }
  return out;
}

namespace {

void check_table(const GameTable& t, int p, int q, double tol, std::vector<StochasticDefect>& out) {
  for (int h = 0; h < t.candidate_classes(); ++h) {
    for (int k = 0; k < t.field_classes(); ++k) {
      const auto& c = t.cell(h, k);
      double sum = 0.0;
      bool in_range = true;
      for (int i = 0; i < c.count; ++i) {
        const double v = c.outcomes[i].prob;
        sum += v;
        if (!(v >= 0.0 && v <= 1.0) || c.outcomes[i].j < 0 || c.outcomes[i].j >= t.candidate_classes())
          in_range = false;
      }
      if (!in_range || !(std::abs(sum - 1.0) <= tol)) out.push_back({p, q, h, k, sum});
    }
  }
}

}  // namespace

std::vector<StochasticDefect> check_stochastic(const GameTables& tables, double tol) {
  std::vector<StochasticDefect> defects;
  for (std::size_t p = 0; p < tables.self.size(); ++p) {
    const int ip = static_cast<int>(p);
    check_table(tables.self[p], ip, ip, tol, defects);
    for (std::size_t q = 0; q < tables.cross[p].size(); ++q) {
      if (q == p) continue;
      check_table(tables.cross[p][q], ip, static_cast<int>(q), tol, defects);
    }
  }
  return defects;
}

std::string dump_tables_csv(const GameTables& tables) {
  std::string out = "table,j,h,k,value\n";
  char line[128];
  auto emit = [&](const std::string& name, const GameTable& t) {
    for (int j = 0; j < t.candidate_classes(); ++j)
      for (int h = 0; h < t.candidate_classes(); ++h)
        for (int k = 0; k < t.field_classes(); ++k) {
          std::snprintf(line, sizeof line, ",%d,%d,%d,%.17g\n", j + 1, h + 1, k + 1, t.at(j, h, k));
          out += name;
          out += line;
        }
  };
  for (std::size_t p = 0; p < tables.self.size(); ++p) {
    emit("A" + std::to_string(p), tables.self[p]);
    for (std::size_t q = 0; q < tables.cross[p].size(); ++q)
      if (q != p) emit("B" + std::to_string(p) + std::to_string(q), tables.cross[p][q]);
  }
  return out;
}

}  // namespace trafficmix
