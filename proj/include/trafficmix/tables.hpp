#pragma once

#include <array>
#include <string>
#include <vector>

#include "trafficmix/config.hpp"

namespace trafficmix {

struct TransitionProbabilities {
  double accelerate = 0.0;  // P: candidate reaches the highest outcome allowed
  double brake = 0.0;       // Q: candidate drops one class after an equal-speed encounter
  double stay = 1.0;        // R = 1 - P
};

// P = alpha (1 - s^gamma), Q = (1 - alpha) s. Throws std::domain_error if s is outside [0, 1].
TransitionProbabilities transition_probabilities(double s, double alpha, double gamma);

// Table of games for one (candidate, field) population pair: for every candidate
// class h and field class k, the distribution of the candidate's outcome class j.
// Indices are 0-based here; class 0 is the standing class.
//
// Each (h, k) has at most three outcomes, stored as a short list so that the
// collision operator can scatter gains in O(n_p * n_q).
class GameTable {
 public:
  struct Outcome {
    int j;
    double prob;
  };
  struct Cell {
    std::array<Outcome, 3> outcomes{};
    int count = 0;
  };

  GameTable() = default;
  GameTable(int candidate_classes, int field_classes);

  int candidate_classes() const { return n_candidate_; }
  int field_classes() const { return n_field_; }

  const Cell& cell(int h, int k) const { return cells_[index(h, k)]; }
  Cell& cell(int h, int k) { return cells_[index(h, k)]; }

  // Dense accessor, A^j_{hk}.
  double at(int j, int h, int k) const;
  // Overwrites (or inserts) the probability of outcome j for (h, k). Used for
  // fault injection in tests and by the builders.
  void set(int j, int h, int k, double prob);

 private:
  std::size_t index(int h, int k) const { return static_cast<std::size_t>(h) * n_field_ + k; }

  int n_candidate_ = 0;
  int n_field_ = 0;
  std::vector<Cell> cells_;
};

GameTable build_self_tables(int n, const TransitionProbabilities& probs);

// Candidate lattice `candidate` meeting field lattice `field`; the lattices must
// be nested (one a prefix of the other). A candidate already at its top class
// that meets a faster field vehicle keeps its speed with probability one.
GameTable build_cross_tables(const SpeedLattice& candidate, const SpeedLattice& field,
                             const TransitionProbabilities& probs);

struct GameTables {
  double s = 0.0;
  TransitionProbabilities probs;
  std::vector<GameTable> self;               // self[p]
  std::vector<std::vector<GameTable>> cross;  // cross[p][q], empty when p == q
};

GameTables build_game_tables(const ModelParams& model, double s);

struct StochasticDefect {
  int p, q, h, k;  // q == p for self tables
  double sum;
};

// Every (p, q, h, k) whose outcome probabilities do not sum to one within tol,
// or that carries an entry outside [0, 1].
std::vector<StochasticDefect> check_stochastic(const GameTables& tables, double tol = 1e-12);

// Writes the dense tables as CSV blocks: table,j,h,k,value (1-based classes).
std::string dump_tables_csv(const GameTables& tables);

}  // namespace trafficmix
