#include "backstep/io.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include "backstep/errors.hpp"

namespace backstep {

namespace fs = std::filesystem;

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

void atomic_write_text(const std::string& path, const std::string& content) {
  const fs::path target(path);
  if (target.has_parent_path()) fs::create_directories(target.parent_path());
  const fs::path tmp = target.parent_path() /
                       (target.filename().string() + ".tmp");
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot open for writing: " + tmp.string());
    out << content;
    if (!out) throw Error("write failed: " + tmp.string());
  }
  fs::rename(tmp, target);
}

std::string kernel_to_csv(const KernelGrid& kg) {
  std::ostringstream out;
  out << "x,y,value\n";
  for (int i = 0; i <= kg.n; ++i) {
    const int j0 = (kg.which == KernelKind::k1) ? 0 : i;
    const int j1 = (kg.which == KernelKind::k1) ? i : kg.n;
    for (int j = j0; j <= j1; ++j)
      out << format_double(kg.x_of(i)) << ',' << format_double(kg.x_of(j))
          << ',' << format_double(kg.values(i, j)) << '\n';
  }
  return out.str();
}

KernelGrid kernel_from_csv(const std::string& text, KernelKind which) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || line != "x,y,value")
    throw Error("kernel CSV header mismatch");

  struct Row { double x, y, v; };
  std::vector<Row> rows;
  std::map<double, int> xs;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    Row r;
    if (std::sscanf(line.c_str(), "%lf,%lf,%lf", &r.x, &r.y, &r.v) != 3)
      throw Error("kernel CSV parse error: " + line);
    rows.push_back(r);
    xs[r.x] = 0;
  }
  if (xs.size() < 3) throw Error("kernel CSV too small");

  int idx = 0;
  for (auto& kv : xs) kv.second = idx++;
  const int n = static_cast<int>(xs.size()) - 1;
  const double x0 = xs.begin()->first;
  const double h = (std::prev(xs.end())->first - x0) / n;

  KernelGrid kg;
  kg.which = which;
  kg.x0 = x0;
  kg.h = h;
  kg.n = n;
  kg.values = Eigen::MatrixXd::Zero(n + 1, n + 1);
  for (const Row& r : rows) {
    const auto ix = xs.find(r.x);
    const auto iy = xs.find(r.y);
    if (ix == xs.end() || iy == xs.end())
      throw Error("kernel CSV node off the uniform grid");
    kg.values(ix->second, iy->second) = r.v;
  }
  return kg;
}

std::string phi_to_csv(const PhiFunction& pf, double l, double h) {
  const int count = std::max(2, static_cast<int>(std::lround(l / h))) + 1;
  const double hh = l / (count - 1);
  const Eigen::MatrixXd phi = pf.sample(0.0, hh, count, false);
  const Eigen::MatrixXd dphi = pf.sample(0.0, hh, count, true);

  std::ostringstream out;
  out << "x";
  for (int k = 1; k <= pf.n(); ++k) out << ",phi_" << k;
  for (int k = 1; k <= pf.n(); ++k) out << ",dphi_" << k;
  out << '\n';
  for (int i = 0; i < count; ++i) {
    out << format_double(i * hh);
    for (int k = 0; k < pf.n(); ++k) out << ',' << format_double(phi(i, k));
    for (int k = 0; k < pf.n(); ++k) out << ',' << format_double(dphi(i, k));
    out << '\n';
  }
  return out.str();
}

std::string certificate_to_text(const LyapunovCertificate& cert,
                                const StabilizingGain& gain) {
  std::ostringstream out;
  out << "K =";
  for (int k = 0; k < gain.K.cols(); ++k) out << ' ' << format_double(gain.K(k));
  out << "\npoles =";
  for (const auto& p : gain.poles) {
    out << ' ' << format_double(p.real());
    if (p.imag() != 0.0) out << "+" << format_double(p.imag()) << "i";
  }
  out << "\nP =";
  for (int i = 0; i < cert.P.rows(); ++i)
    for (int j = 0; j < cert.P.cols(); ++j)
      out << ' ' << format_double(cert.P(i, j));
  out << "\na = " << format_double(cert.a);
  out << "\nb = " << format_double(cert.b);
  out << "\nalpha1 = " << format_double(cert.alpha1);
  out << "\nalpha2 = " << format_double(cert.alpha2);
  out << "\ndelta = " << format_double(cert.delta);
  out << '\n';
  return out.str();
}

namespace {

int nearest_node(const Grid& grid, double x) {
  int best = 0;
  double dist = std::abs(grid.nodes[0] - x);
  for (int i = 1; i < grid.node_count(); ++i) {
    const double d = std::abs(grid.nodes[i] - x);
    if (d < dist) {
      dist = d;
      best = i;
    }
  }
  return best;
}

double field_at(const SimTrace& trace, std::size_t k, int node) {
  if (!trace.tstates.empty()) return trace.tstates[k].w(node);
  const CascadeState& s = trace.states[k];
  const int n1 = trace.grid.n1();
  return (node <= n1) ? s.u1(node) : s.u2(node - n1);
}

}  // namespace

std::string trace_to_csv(const SimTrace& trace, int n,
                         const std::vector<double>& probes) {
  std::vector<int> nodes;
  for (double p : probes) nodes.push_back(nearest_node(trace.grid, p));

  std::ostringstream out;
  out << "t,U,norm_H,norm_Y,V";
  for (int k = 1; k <= n; ++k) out << ",X_" << k;
  for (int node : nodes) out << ",u_at_" << format_double(trace.grid.nodes[node]);
  out << '\n';

  for (std::size_t k = 0; k < trace.times.size(); ++k) {
    out << format_double(trace.times[k]) << ',' << format_double(trace.controls[k])
        << ',' << format_double(trace.normH[k]) << ','
        << format_double(trace.normY[k]) << ','
        << format_double(k < trace.V.size() ? trace.V[k] : 0.0);
    const Eigen::VectorXd& X =
        trace.tstates.empty() ? trace.states[k].X : trace.tstates[k].X;
    for (int i = 0; i < n; ++i) out << ',' << format_double(X(i));
    for (int node : nodes) out << ',' << format_double(field_at(trace, k, node));
    out << '\n';
  }
  return out.str();
}

std::string decay_report_to_text(const DecayReport& r) {
  std::ostringstream out;
  out << "fitted_rate = " << format_double(r.fitted_rate) << '\n'
      << "fit_window = [" << format_double(r.t_start) << ", "
      << format_double(r.t_end) << "]\n"
      << "residual_of_fit = " << format_double(r.residual_of_fit) << '\n'
      << "theoretical_delta = " << format_double(r.theoretical_delta) << '\n'
      << "C_estimate = " << format_double(r.C_estimate) << '\n'
      << "samples = " << r.samples << '\n';
  return out.str();
}

}  // namespace backstep
