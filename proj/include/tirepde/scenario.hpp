#pragma once

// Runs a configured scenario and writes its artifacts. Figures are rendered
// from the CSV files after they are written, so they always show what the
// CSVs contain.

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include "tirepde/acceptance.hpp"
#include "tirepde/config.hpp"
#include "tirepde/frequency.hpp"
#include "tirepde/lambert_w.hpp"
#include "tirepde/observer.hpp"
#include "tirepde/svg.hpp"
#include "tirepde/trace.hpp"
#include "tirepde/transport.hpp"
#include "tirepde/vector_fit.hpp"

namespace tirepde {

enum ExitCode : int {
  kExitOk = 0,
  kExitConfig = 2,
  kExitNumerical = 3,
  kExitAcceptance = 4,
};

namespace scenario_detail {

namespace fs = std::filesystem;

inline std::ofstream open_out(const fs::path& p) {
  std::ofstream os(p);
  if (!os) throw std::runtime_error("cannot write " + p.string());
  os.precision(17);
  return os;
}

inline void render(const fs::path& csv, const fs::path& svg,
                   const std::function<void(std::istream&, std::ostream&)>& plot) {
  std::ifstream in(csv);
  if (!in) throw std::runtime_error("cannot read " + csv.string());
  std::ofstream out = open_out(svg);
  plot(in, out);
}

inline void note_run(SimTrace& tr, const ScenarioConfig& cfg) {
  tr.note("seed", std::to_string(cfg.seed));
  if (const auto s = cfg.sensor_spec()) {
    std::ostringstream os;
    os << "yaw_rate std " << s->yaw_rate.stddev << " period " << s->yaw_rate.period
       << "; lateral_accel std " << s->lateral_accel.stddev << " period "
       << s->lateral_accel.period;
    tr.note("sensors", os.str());
  } else {
    tr.note("sensors", "ideal (clean outputs every step)");
  }
  std::ostringstream g;
  g << "cells " << cfg.grid.cells << " dt " << cfg.grid.dt << " horizon " << cfg.grid.horizon;
  tr.note("grid", g.str());
}

inline void write_trace_artifacts(const fs::path& dir, const SimTrace& tr, bool observed) {
  {
    auto os = open_out(dir / "trace.csv");
    write_trace_csv(os, tr);
  }
  {
    auto os = open_out(dir / "norms.csv");
    write_norms_csv(os, tr);
  }
  {
    auto os = open_out(dir / "snapshots.csv");
    write_snapshots_csv(os, tr);
  }
  render(dir / "trace.csv", dir / "states.svg", svg::plot_states);
  render(dir / "norms.csv", dir / "norms.svg", svg::plot_norms);
  if (!tr.snapshots.empty()) {
    render(dir / "snapshots.csv", dir / "z1_heatmap.svg",
           [](std::istream& i, std::ostream& o) { svg::plot_profile_heatmap(i, o, "z1"); });
    if (observed) {
      render(dir / "snapshots.csv", dir / "err_z1_heatmap.svg",
             [](std::istream& i, std::ostream& o) { svg::plot_profile_heatmap(i, o, "err_z1"); });
    }
  }
}

inline void summarize_trace(std::ostream& os, const SimTrace& tr) {
  if (tr.rows.empty()) return;
  const TraceRow& first = tr.rows.front();
  const TraceRow& last = tr.rows.back();
  os << "t_final = " << last.t << "\n"
     << "plant_norm(0) = " << first.plant_norm << "\n"
     << "plant_norm(t_final) = " << last.plant_norm << "\n";
  if (std::isfinite(first.err_total)) {
    os << "error_norm(0) = " << first.err_total << "\n"
       << "error_norm(t_final) = " << last.err_total << "\n"
       << "error_X(t_final) = " << last.err_X << "\n"
       << "error_z(t_final) = " << last.err_z << "\n";
  }
  if (tr.aborted_at) {
    os << "aborted_at = " << *tr.aborted_at << " (" << tr.abort_reason << ")\n";
  }
  for (const auto& w : tr.warnings) os << "warning: " << w << "\n";
}

inline void summarize_small_gain(std::ostream& os, const Theorem2Report& r) {
  os << "small_gain.lhs (||H2||_inf) = " << r.lhs << "\n"
     << "small_gain.rhs (1/||H1||_inf) = " << r.rhs << "\n"
     << "small_gain.hinf_H1 = " << r.hinf_H1 << " at omega " << r.omega_H1 << "\n"
     << "small_gain.satisfied = " << (r.satisfied ? "yes" : "no") << "\n"
     << "small_gain.loop_gain (||G H1|| ||H2||) = " << r.loop_gain << "\n";
}

inline void summarize_certificate(std::ostream& os, const PoleCertificate& c) {
  os << "poles.certified = " << (c.certified ? "yes" : "no") << "\n"
     << "poles.zeros = " << c.zeros.size() << "\n"
     << "poles.max_real = " << c.max_real << "\n"
     << "poles.max_residual = " << c.max_residual << "\n";
  if (!c.certified) os << "poles.failure = " << c.failure << "\n";
}

inline SynthesizedInjection build_injection(const ScenarioConfig& cfg,
                                            const SystemMatrices& mats, std::ostream& summary,
                                            std::ostream& log) {
  if (!cfg.filter_file.empty()) {
    std::ifstream in(cfg.filter_file);
    if (!in) throw ConfigError("observer.filter_file: cannot read '" + cfg.filter_file + "'");
    SynthesizedInjection s;
    FitResult fit;
    fit.filter = read_filter(in);
    s.op = InjectionOperator::rational(fit.filter, cfg.grid.dt);
    s.fit = fit;
    summary << "injection.source = " << cfg.filter_file << "\n";
    return s;
  }
  try {
    return synthesize_injection(cfg.observer, mats, cfg.grid.dt);
  } catch (const NumericalError& e) {
    if (cfg.observer.path != InjectionPath::rational) throw;
    log << "warning: rational fit failed (" << e.what()
        << "); falling back to the impulse-response kernel\n";
    summary << "injection.fallback = kernel (" << e.what() << ")\n";
    InjectionSpec spec = cfg.observer;
    spec.path = InjectionPath::kernel;
    return synthesize_injection(spec, mats, cfg.grid.dt);
  }
}

inline void summarize_injection(std::ostream& os, const SynthesizedInjection& s) {
  os << "injection.path = " << (s.op.path() ? to_string(*s.op.path()) : "none") << "\n";
  if (s.fit) {
    const RationalFilter& f = s.fit->filter;
    os << "injection.order = " << f.order() << "\n"
       << "injection.fit_error = " << f.fit_error << "\n"
       << "injection.max_pole = " << f.max_pole_magnitude() << "\n";
    for (const auto& a : s.fit->attempts) {
      os << "injection.attempt = order " << a.order << " start " << to_string(a.start)
         << " error " << a.error << " max_pole " << a.max_pole << (a.stiff ? " (stiff)" : "")
         << "\n";
    }
  }
  if (s.kernel) {
    os << "injection.kernel_dt = " << s.kernel->dt << "\n"
       << "injection.kernel_horizon = " << s.kernel->horizon() << "\n"
       << "injection.kernel_tail_ratio = " << s.kernel->tail_ratio << "\n"
       << "injection.kernel_aliasing = " << s.kernel->aliasing << "\n";
  }
}

inline int run_open_loop(const ScenarioConfig& cfg, const fs::path& dir, std::ostream& summary) {
  const SystemMatrices mats = build_matrices(cfg.vehicle);
  OpenLoopOptions opt;
  opt.log = cfg.log;
  opt.sensors = cfg.sensor_spec();
  SimTrace tr = simulate_open_loop(cfg.plant_ic(), cfg.steering, cfg.grid, mats, opt);
  note_run(tr, cfg);
  write_trace_artifacts(dir, tr, false);
  summarize_trace(summary, tr);
  return tr.aborted_at ? kExitNumerical : kExitOk;
}

inline int run_closed_loop(const ScenarioConfig& cfg, const fs::path& dir,
                           std::ostream& summary, std::ostream& log) {
  const SystemMatrices mats = build_matrices(cfg.vehicle);
  const Theorem2Report cond = check_theorem2(cfg.observer.gamma, cfg.observer.eta, mats);
  summarize_small_gain(summary, cond);
  if (!cond.satisfied) {
    log << "warning: small-gain condition not met (||H2||_inf = " << cond.lhs
        << " >= 1/||H1||_inf = " << cond.rhs << "); continuing\n";
  }
  CertifyOptions copt;
  copt.k_max = cfg.k_max;
  copt.spot_checks = cfg.spot_checks;
  copt.seed = cfg.seed;
  const PoleCertificate cert = certify_no_unstable_poles(mats, copt);
  summarize_certificate(summary, cert);
  if (!cert.certified) log << "warning: C^{-1} not certified stable: " << cert.failure << "\n";

  const SynthesizedInjection inj = build_injection(cfg, mats, summary, log);
  summarize_injection(summary, inj);
  if (inj.fit) {
    auto os = open_out(dir / "filter.txt");
    write_filter(os, inj.fit->filter);
  }
  ClosedLoopSetup setup{cfg.plant_ic(), cfg.observer_ic(), cfg.steering, cfg.grid,
                        cfg.sensor_spec(), cfg.log};
  SimTrace tr = simulate_closed(setup, mats, inj.op);
  note_run(tr, cfg);
  tr.note("injection", inj.op.path() ? to_string(*inj.op.path()) : "none");
  write_trace_artifacts(dir, tr, true);
  summarize_trace(summary, tr);
  return tr.aborted_at ? kExitNumerical : kExitOk;
}

inline int run_freq_analysis(const ScenarioConfig& cfg, const fs::path& dir,
                             std::ostream& summary) {
  const SystemMatrices mats = build_matrices(cfg.vehicle);
  const auto grid = log_grid(cfg.omega_min, cfg.omega_max, cfg.omega_points);
  const double gamma = cfg.observer.gamma;
  const double eta = cfg.observer.eta;
  const std::pair<const char*, TransferFunction> responses[] = {
      {"H1", H1_function(mats)},
      {"H2", H2_function(gamma, eta)},
      {"injection_gain", injection_gain_function(gamma, eta, mats)}};
  for (const auto& [name, fn] : responses) {
    {
      auto os = open_out(dir / (std::string(name) + ".csv"));
      write_response_csv(os, sample_response(grid, fn));
    }
    const std::string title = name;
    render(dir / (title + ".csv"), dir / (title + ".svg"),
           [&](std::istream& i, std::ostream& o) { svg::plot_response(i, o, title); });
  }
  summarize_small_gain(summary, check_theorem2(gamma, eta, mats, 0.05, grid));
  return kExitOk;
}

inline int run_certify(const ScenarioConfig& cfg, const fs::path& dir, std::ostream& summary) {
  CertifyOptions opt;
  opt.k_max = cfg.k_max;
  opt.spot_checks = cfg.spot_checks;
  opt.seed = cfg.seed;
  const PoleCertificate c = certify_no_unstable_poles(build_matrices(cfg.vehicle), opt);
  {
    auto os = open_out(dir / "certificate.txt");
    write_certificate_report(os, c);
  }
  {
    auto os = open_out(dir / "zeros.csv");
    write_zeros_csv(os, c);
  }
  summarize_certificate(summary, c);
  return c.certified ? kExitOk : kExitNumerical;
}

inline int run_acceptance(const fs::path& dir, std::ostream& summary, std::ostream& log) {
  acceptance::Context ctx;
  std::vector<acceptance::CriterionResult> results;
  for (int id = 1; id <= static_cast<int>(acceptance::criteria().size()); ++id) {
    results.push_back(acceptance::run_criterion(id, ctx));
    log << acceptance::result_line(results.back()) << std::endl;
  }
  auto os = open_out(dir / "acceptance.csv");
  acceptance::write_results_csv(os, results);
  int failed = 0;
  for (const auto& r : results) failed += r.passed ? 0 : 1;
  summary << "acceptance.failed = " << failed << " of " << results.size() << "\n";
  return failed ? kExitAcceptance : kExitOk;
}

}  // namespace scenario_detail

/// Runs `cfg` (already validated) and writes artifacts under cfg.output_dir.
/// Returns one of the ExitCode values; progress and warnings go to `log`.
inline int run(const ScenarioConfig& cfg, std::ostream& log = std::cerr) {
  namespace sd = scenario_detail;
  try {
    validate(cfg);
    const sd::fs::path dir(cfg.output_dir);
    sd::fs::create_directories(dir);
    {
      auto os = sd::open_out(dir / "config.txt");
      os << describe(cfg);
    }
    std::ostringstream summary;
    summary.precision(10);
    summary << "mode = " << to_string(cfg.mode) << "\n";
    const auto t0 = std::chrono::steady_clock::now();
    int code = kExitOk;
    switch (cfg.mode) {
      case RunMode::open_loop: code = sd::run_open_loop(cfg, dir, summary); break;
      case RunMode::closed_loop: code = sd::run_closed_loop(cfg, dir, summary, log); break;
      case RunMode::freq_analysis: code = sd::run_freq_analysis(cfg, dir, summary); break;
      case RunMode::certify_poles: code = sd::run_certify(cfg, dir, summary); break;
      case RunMode::acceptance: code = sd::run_acceptance(dir, summary, log); break;
    }
    summary << "runtime_s = "
            << std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count()
            << "\n";
    auto os = sd::open_out(dir / "summary.txt");
    os << summary.str();
    log << "wrote " << dir.string() << "/\n";
    return code;
  } catch (const ConfigError& e) {
    log << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const NumericalError& e) {
    log << "numerical error: " << e.what() << "\n";
    return kExitNumerical;
  } catch (const std::invalid_argument& e) {
    log << "config error: " << e.what() << "\n";
    return kExitConfig;
  }
}

}  // namespace tirepde
