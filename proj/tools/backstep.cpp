#include <CLI11.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <future>
#include <iostream>
#include <sstream>

#include "backstep/analysis.hpp"
#include "backstep/config.hpp"
#include "backstep/errors.hpp"
#include "backstep/io.hpp"
#include "backstep/kernels.hpp"
#include "backstep/simulator.hpp"
#include "backstep/transform.hpp"

namespace fs = std::filesystem;
using namespace backstep;

namespace {

struct Overrides {
  double h = -1.0, dt = -1.0, T = -1.0;
};

RunConfig load_with_overrides(const std::string& path, const Overrides& ov) {
  RunConfig cfg = load_config(path);
  if (ov.h > 0.0) cfg.h = ov.h;
  if (ov.dt > 0.0) cfg.dt = ov.dt;
  if (ov.T > 0.0) cfg.T = ov.T;
  if (const char* env = std::getenv("BACKSTEP_OUT"))
    if (*env) cfg.out_dir = env;
  return cfg;
}

GainSet build_gains(const RunConfig& cfg, const Grid& grid) {
  return synthesize_gains(cfg.plant, grid, cfg.poles, cfg.tail_tol,
                          cfg.feedback_sign);
}

SimConfig sim_config(const RunConfig& cfg, const Grid& grid) {
  SimConfig sc;
  sc.dt = cfg.dt;
  sc.T = cfg.T;
  sc.scheme = cfg.scheme;
  sc.grid = grid;
  sc.record_every = cfg.record_every;
  return sc;
}

int cmd_synthesize(const RunConfig& cfg) {
  validate_plant(cfg.plant);
  const Grid grid = build_grid(cfg.plant.l, cfg.plant.xi, cfg.h);
  const GainSet gains = build_gains(cfg, grid);
  const LyapunovCertificate cert =
      build_certificate(cfg.plant, gains.gain.K, cfg.Q, cfg.margin);

  // Export kernels and the gain function at the configured export spacing.
  const KernelGrid k1 = solve_k1(cfg.plant, gains.pf, cfg.kernel_h, cfg.tail_tol);
  const KernelGrid k2 = sample_k2(cfg.plant, cfg.kernel_h);

  const fs::path out(cfg.out_dir);
  atomic_write_text((out / "k1.csv").string(), kernel_to_csv(k1));
  atomic_write_text((out / "k2.csv").string(), kernel_to_csv(k2));
  atomic_write_text((out / "phi.csv").string(),
                    phi_to_csv(gains.pf, cfg.plant.l, cfg.kernel_h));
  atomic_write_text((out / "certificate.txt").string(),
                    certificate_to_text(cert, gains.gain));

  std::cout << "synthesized gains: K =";
  for (int k = 0; k < gains.gain.K.cols(); ++k)
    std::cout << ' ' << gains.gain.K(k);
  std::cout << "; delta = " << cert.delta << "; k1 iterations = "
            << k1.iterations << "\nartifacts written to " << out.string()
            << std::endl;
  return 0;
}

int cmd_simulate(const RunConfig& cfg, const std::string& mode) {
  validate_plant(cfg.plant);
  const Grid grid = build_grid(cfg.plant.l, cfg.plant.xi, cfg.h);
  const SimConfig sc = sim_config(cfg, grid);
  const fs::path out(cfg.out_dir);

  SimTrace trace;
  if (mode == "closed") {
    const GainSet gains = build_gains(cfg, grid);
    const CascadeState s0 = make_initial_state(cfg, grid, &gains);
    const CompatibilityResult compat =
        check_compatibility(s0, gains, 200.0 * grid.h1 * grid.h1 + 1e-8);
    if (!compat.pass)
      std::cerr << "warning: initial data compatibility residuals c1 = "
                << compat.c1 << ", c2 = " << compat.c2 << std::endl;
    trace = simulate_closed_loop(cfg.plant, gains, s0, sc);
    const LyapunovCertificate cert =
        build_certificate(cfg.plant, gains.gain.K, cfg.Q, cfg.margin);
    trace.V = lyapunov_trace(trace, gains, cert);
  } else if (mode == "open") {
    CascadeState s0;
    if (cfg.initial.type == "compatible") {
      const GainSet gains = build_gains(cfg, grid);
      s0 = make_initial_state(cfg, grid, &gains);
    } else {
      s0 = make_initial_state(cfg, grid, nullptr);
    }
    trace = simulate_open_loop(cfg.plant, s0, sc);
  } else if (mode == "target") {
    const StabilizingGain gain = pole_place(cfg.plant.A, cfg.plant.B, cfg.poles);
    TargetState ts0 = zero_target(grid, cfg.plant.n());
    ts0.X = cfg.initial.X0;
    ts0.w = mode_profile(grid, cfg.initial.modes);
    ts0.w1_xi = ts0.w2_xi = ts0.w(grid.index_xi);
    trace = simulate_target(cfg.plant, gain.K, ts0, sc);
  } else {
    throw ConfigError("mode must be open, closed or target");
  }

  atomic_write_text((out / ("trace_" + mode + ".csv")).string(),
                    trace_to_csv(trace, cfg.plant.n(), cfg.probes));
  std::cout << "mode = " << mode << "; t_final = " << trace.times.back()
            << "; norm_H: " << trace.normH.front() << " -> "
            << trace.normH.back() << "; norm_Y: " << trace.normY.front()
            << " -> " << trace.normY.back() << std::endl;
  return 0;
}

int cmd_verify(const RunConfig& cfg) {
  validate_plant(cfg.plant);
  const fs::path out(cfg.out_dir);
  for (const char* name : {"k1.csv", "k2.csv"})
    if (!fs::exists(out / name)) {
      std::cerr << "missing artifact: " << (out / name).string()
                << " (run synthesize first)" << std::endl;
      return 2;
    }

  auto slurp = [](const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
  };

  const Grid grid = build_grid(cfg.plant.l, cfg.plant.xi, cfg.h);
  const GainSet gains = build_gains(cfg, grid);
  const LyapunovCertificate cert =
      build_certificate(cfg.plant, gains.gain.K, cfg.Q, cfg.margin);

  struct Check {
    std::string name;
    bool pass;
    std::string detail;
  };
  std::vector<Check> checks;
  auto add = [&](const std::string& name, bool pass, const std::string& detail) {
    checks.push_back({name, pass, detail});
  };

  // 1-2: kernel PDE + boundary residuals recomputed from the files on disk.
  for (const char* name : {"k1.csv", "k2.csv"}) {
    const bool is_k1 = std::string(name) == "k1.csv";
    const KernelGrid kg = kernel_from_csv(slurp(out / name),
                                          is_k1 ? KernelKind::k1 : KernelKind::k2);
    const KernelResidual res =
        kernel_residual(kg, cfg.plant, is_k1 ? &gains.pf : nullptr);
    const double tol_int = 10.0 * std::max(1.0, cfg.plant.lambda) * kg.h * kg.h;
    const double tol_bc = 1e-8 + 10.0 * kg.h * kg.h * (is_k1 ? 1.0 : 0.0);
    std::ostringstream d;
    d << "interior " << res.interior << " (tol " << tol_int << "), boundary "
      << res.boundary << " (tol " << tol_bc << ")";
    add(std::string("kernel_residual_") + (is_k1 ? "k1" : "k2"),
        res.interior <= tol_int && res.boundary <= tol_bc, d.str());
  }

  // 3: transform round trip on deterministic pseudo-random states.
  {
    double worst = 0.0;
    std::uint64_t seed = 0x243f6a8885a308d3ULL;
    auto next = [&seed]() {
      seed = seed * 6364136223846793005ULL + 1442695040888963407ULL;
      return 2.0 * (static_cast<double>(seed >> 11) / 9007199254740992.0) - 1.0;
    };
    for (int trial = 0; trial < 10; ++trial) {
      CascadeState s = zero_state(grid, cfg.plant.n());
      for (int i = 0; i < s.X.size(); ++i) s.X(i) = next();
      for (int i = 1; i <= grid.n1(); ++i) s.u1(i) = next();
      for (int i = 1; i < grid.n2(); ++i) s.u2(i) = next();
      s.u2(0) = s.u1(grid.n1());
      const CascadeState back = inverse_transform(forward_transform(s, gains), gains);
      worst = std::max(worst, (back.u1 - s.u1).cwiseAbs().maxCoeff());
      worst = std::max(worst, (back.u2 - s.u2).cwiseAbs().maxCoeff());
      worst = std::max(worst, (back.X - s.X).cwiseAbs().maxCoeff());
    }
    add("transform_round_trip", worst <= 1e-10,
        "max error " + format_double(worst));
  }

  // 4: compatibility of the configured initial data.
  const CascadeState s0 = make_initial_state(cfg, grid, &gains);
  {
    const double tol = 200.0 * grid.h1 * grid.h1 + 1e-8;
    const CompatibilityResult c = check_compatibility(s0, gains, tol);
    std::ostringstream d;
    d << "c1 = " << c.c1 << ", c2 = " << c.c2 << " (tol " << tol << ")";
    add("compatibility", c.pass, d.str());
  }

  // 5-6: closed-loop run, Lyapunov envelope + decay fit.
  {
    const SimConfig sc = sim_config(cfg, grid);
    const SimTrace trace = simulate_closed_loop(cfg.plant, gains, s0, sc);
    const std::vector<double> V = lyapunov_trace(trace, gains, cert);
    const EnvelopeReport env = check_envelope(trace.times, V, cert.delta);
    std::ostringstream d;
    d << "worst envelope excess " << env.worst_envelope
      << ", worst per-step increase " << env.worst_increase;
    add("lyapunov_envelope", env.envelope_ok && env.monotone_ok, d.str());

    const double t0 = 0.25 * cfg.T;
    try {
      const DecayReport rep =
          fit_decay_rate(trace.times, trace.normY, t0, cfg.T, cert.delta);
      add("decay_fit", rep.fitted_rate > 0.0,
          "fitted rate " + format_double(rep.fitted_rate));
    } catch (const NonPositiveValues& e) {
      add("decay_fit", false, e.what());
    }
  }

  bool all = true;
  for (const auto& c : checks) {
    std::cout << "check " << c.name << ": " << (c.pass ? "PASS" : "FAIL")
              << " — " << c.detail << std::endl;
    all = all && c.pass;
  }
  if (!all) {
    std::cout << "verification FAILED" << std::endl;
    return 4;
  }
  std::cout << "verification passed" << std::endl;
  return 0;
}

int cmd_sweep(const RunConfig& cfg, const std::string& param,
              const std::vector<double>& values) {
  if (values.empty()) throw ConfigError("sweep needs a nonempty --values list");
  if (param != "xi" && param != "lambda")
    throw ConfigError("sweep parameter must be xi or lambda");

  auto run_one = [&cfg, &param](double value) -> std::string {
    std::ostringstream row;
    row << format_double(value) << ',';
    try {
      RunConfig c = cfg;
      if (param == "xi")
        c.plant.xi = value;
      else
        c.plant.lambda = value;
      validate_plant(c.plant);
      const Grid grid = build_grid(c.plant.l, c.plant.xi, c.h);
      const GainSet gains = build_gains(c, grid);
      const LyapunovCertificate cert =
          build_certificate(c.plant, gains.gain.K, c.Q, c.margin);
      const CascadeState s0 = make_initial_state(c, grid, &gains);
      const SimTrace trace =
          simulate_closed_loop(c.plant, gains, s0, sim_config(c, grid));
      const DecayReport rep = fit_decay_rate(trace.times, trace.normY,
                                             0.25 * c.T, c.T, cert.delta);
      const int unstable =
          count_unstable(open_loop_spectrum(c.plant, 20));
      row << format_double(rep.fitted_rate) << ',' << format_double(cert.delta)
          << ',' << unstable << ',' << (rep.fitted_rate > 0.0 ? 1 : 0) << ',';
    } catch (const std::exception& e) {
      std::string msg = e.what();
      for (char& ch : msg)
        if (ch == ',' || ch == '\n') ch = ';';
      row << "nan,nan,-1,0," << msg;
    }
    return row.str();
  };

  std::vector<std::future<std::string>> jobs;
  jobs.reserve(values.size());
  for (double v : values)
    jobs.push_back(std::async(std::launch::async, run_one, v));

  std::ostringstream csv;
  csv << "value,fitted_rate,delta,unstable_modes,pass,error\n";
  for (auto& j : jobs) csv << j.get() << '\n';

  const fs::path out(cfg.out_dir);
  atomic_write_text((out / "sweep.csv").string(), csv.str());
  std::cout << csv.str();
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"backstepping synthesis and simulation for the flux-actuated "
               "ODE/reaction-diffusion cascade"};
  app.require_subcommand(1);
  app.set_help_flag("--help", "print help"); // keep --h free for the override

  std::string config_path;
  Overrides ov;
  std::string mode = "closed";
  std::string param = "xi";
  std::vector<double> values;

  auto add_common = [&](CLI::App* sub) {
    sub->set_help_flag("--help", "print help");
    sub->add_option("--config", config_path, "config file (JSON)")->required();
    sub->add_option("--h", ov.h, "override simulation grid spacing");
    sub->add_option("--dt", ov.dt, "override time step");
    sub->add_option("--T", ov.T, "override horizon");
  };

  CLI::App* synth = app.add_subcommand("synthesize", "compute gains and kernels");
  add_common(synth);
  CLI::App* sim = app.add_subcommand("simulate", "run a simulation");
  add_common(sim);
  sim->add_option("--mode", mode, "open | closed | target");
  CLI::App* verify = app.add_subcommand("verify", "run the verification checks");
  add_common(verify);
  CLI::App* sweep = app.add_subcommand("sweep", "parameter sweep");
  add_common(sweep);
  sweep->add_option("--param", param, "xi | lambda");
  sweep->add_option("--values", values, "parameter values")->delimiter(',');

  CLI11_PARSE(app, argc, argv);

  try {
    const RunConfig cfg = load_with_overrides(config_path, ov);
    if (synth->parsed()) return cmd_synthesize(cfg);
    if (sim->parsed()) return cmd_simulate(cfg, mode);
    if (verify->parsed()) return cmd_verify(cfg);
    if (sweep->parsed()) return cmd_sweep(cfg, param, values);
  } catch (const StepUnstable& e) {
    std::cerr << "error: " << e.what() << std::endl;
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << std::endl;
    return 2;
  }
  return 2;
}
