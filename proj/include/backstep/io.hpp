#pragma once

#include <string>
#include <vector>

#include "backstep/analysis.hpp"
#include "backstep/gains.hpp"
#include "backstep/kernels.hpp"
#include "backstep/simulator.hpp"

namespace backstep {

// Writes content to path atomically (temp file in the same directory, then
// rename).  Creates parent directories as needed.
void atomic_write_text(const std::string& path, const std::string& content);

// Kernel CSV: header "x,y,value", one row per triangle node, row-major,
// full round-trip precision.
std::string kernel_to_csv(const KernelGrid& kg);
KernelGrid kernel_from_csv(const std::string& text, KernelKind which);

// phi CSV: header "x,phi_1..phi_n,dphi_1..dphi_n" sampled on [0,l] with
// spacing h.
std::string phi_to_csv(const PhiFunction& pf, double l, double h);

// Certificate / gain report as key = value lines.
std::string certificate_to_text(const LyapunovCertificate& cert,
                                const StabilizingGain& gain);

// Trace CSV: header "t,U,norm_H,norm_Y,V,X_1..X_n,u_at_<p>..." with the field
// sampled at the grid node nearest to each probe.
std::string trace_to_csv(const SimTrace& trace, int n,
                         const std::vector<double>& probes);

std::string decay_report_to_text(const DecayReport& r);

// Fixed-format double with full round-trip precision (shared by all writers
// so reruns are byte-identical).
std::string format_double(double v);

}  // namespace backstep
