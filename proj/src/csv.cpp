#include "trafficmix/csv.hpp"

#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace trafficmix::csv {

std::string number(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

void write_diagram(std::ostream& out, const std::vector<DiagramPoint>& points) {
  out << kDiagramHeader << '\n';
  for (const auto& p : points) {
    out << number(p.s) << ',' << number(p.rho_c) << ',' << number(p.rho_t) << ',' << number(p.rho_total) << ','
        << number(p.q_c) << ',' << number(p.q_t) << ',' << number(p.q_total) << ',' << number(p.u_c) << ','
        << number(p.u_t) << ',' << number(p.u_total) << ',' << (p.converged ? 1 : 0) << ',' << number(p.residual)
        << ',' << number(p.t_final) << ',' << p.sample_id << ',' << p.combo_label << '\n';
  }
}

namespace {

double parse_number(const std::string& field) {
  if (field == "nan") return std::numeric_limits<double>::quiet_NaN();
  std::size_t used = 0;
  const double v = std::stod(field, &used);
  if (used != field.size()) throw std::invalid_argument("bad numeric field: " + field);
  return v;
}

}  // namespace

std::vector<DiagramPoint> read_diagram(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  std::vector<DiagramPoint> points;
  bool header_seen = false;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    if (!header_seen) {
      if (line != kDiagramHeader) throw std::invalid_argument("unexpected diagram header");
      header_seen = true;
      continue;
    }
    std::vector<std::string> f;
    std::stringstream ls(line);
    for (std::string cell; std::getline(ls, cell, ',');) f.push_back(cell);
    if (f.size() != 15) throw std::invalid_argument("diagram row with " + std::to_string(f.size()) + " fields");
    DiagramPoint p;
    p.s = parse_number(f[0]);
    p.rho_c = parse_number(f[1]);
    p.rho_t = parse_number(f[2]);
    p.rho_total = parse_number(f[3]);
    p.q_c = parse_number(f[4]);
    p.q_t = parse_number(f[5]);
    p.q_total = parse_number(f[6]);
    p.u_c = parse_number(f[7]);
    p.u_t = parse_number(f[8]);
    p.u_total = parse_number(f[9]);
    p.converged = f[10] == "1";
    p.residual = parse_number(f[11]);
    p.t_final = parse_number(f[12]);
    p.sample_id = std::stoi(f[13]);
    p.combo_label = f[14];
    points.push_back(std::move(p));
  }
  if (!header_seen) throw std::invalid_argument("missing diagram header");
  return points;
}

void write_scatter(std::ostream& out, const ScatterReport& report) {
  out << "# bins=" << report.bin_count << " rho_max=" << number(report.rho_max)
      << " s_critical=" << number(report.s_critical) << '\n';
  for (const auto& note : report.notes) out << "# " << note << '\n';
  out << "bin,rho_lo,rho_hi,phase,count,mean,min,max,std,range,detrended_range,detrended_std\n";
  for (const auto& b : report.bins) {
    out << b.bin << ',' << number(b.rho_lo) << ',' << number(b.rho_hi) << ','
        << (b.phase == Phase::free ? "free" : "congested") << ',' << b.count << ',' << number(b.mean) << ','
        << number(b.min) << ',' << number(b.max) << ',' << number(b.stddev) << ',' << number(b.range()) << ','
        << number(b.detrended_range) << ',' << number(b.detrended_stddev) << '\n';
  }
}

TrajectoryWriter::TrajectoryWriter(std::ostream& out, const ModelParams& model) : out_(out), model_(model) {
  out_ << 't';
  for (std::size_t p = 0; p < model.populations.size(); ++p)
    for (int j = 1; j <= model.populations[p].lattice.size(); ++j) out_ << ",f" << p << '_' << j;
  out_ << ",rho_total,q_total,residual\n";
}

void TrajectoryWriter::row(double t, const MixtureState& state, double residual) {
  const auto m = moments(state, model_.populations);
  out_ << number(t);
  for (double v : state.flat()) out_ << ',' << number(v);
  out_ << ',' << number(m.total.rho) << ',' << number(m.total.q) << ',' << number(residual) << '\n';
}

}  // namespace trafficmix::csv
