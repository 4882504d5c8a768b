#pragma once

#include <ostream>
#include <string>
#include <vector>

#include "trafficmix/config.hpp"
#include "trafficmix/diagrams.hpp"
#include "trafficmix/kinetics.hpp"

namespace trafficmix::csv {

// 17 significant digits, NaN as the literal token `nan`.
std::string number(double x);

inline constexpr const char* kDiagramHeader =
    "s,rho_c,rho_t,rho_total,q_c,q_t,q_total,u_c,u_t,u_total,converged,residual,t_final,sample_id,combo_label";

void write_diagram(std::ostream& out, const std::vector<DiagramPoint>& points);
// Parses what write_diagram produced.
std::vector<DiagramPoint> read_diagram(const std::string& text);

void write_scatter(std::ostream& out, const ScatterReport& report);

// Streaming writer for relaxation trajectories: t, every f^p_j, total density,
// total flux and the scaled residual.
class TrajectoryWriter {
 public:
  TrajectoryWriter(std::ostream& out, const ModelParams& model);
  void row(double t, const MixtureState& state, double residual);

 private:
  std::ostream& out_;
  const ModelParams& model_;
};

}  // namespace trafficmix::csv
