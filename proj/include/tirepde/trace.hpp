#pragma once

// Time-indexed simulation record and its CSV serialization.

#include <cmath>
#include <cstdio>
#include <limits>
#include <optional>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "tirepde/model.hpp"

namespace tirepde {

inline constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

struct TraceRow {
  double t = 0.0;
  Eigen::Vector2d X = Eigen::Vector2d::Zero();
  double beta = 0.0;
  Eigen::Vector2d forces = Eigen::Vector2d::Zero();
  Eigen::Vector2d delta = Eigen::Vector2d::Zero();
  Eigen::Vector2d y_meas = Eigen::Vector2d::Zero();
  // Observer columns stay NaN for open-loop runs.
  Eigen::Vector2d X_hat = Eigen::Vector2d::Constant(kNaN);
  double beta_hat = kNaN;
  double err_X = kNaN;
  double err_z = kNaN;
  double err_total = kNaN;
  // Norm columns for the norm-history plot.
  double plant_norm = 0.0;
  double observer_norm = kNaN;
};

struct Snapshot {
  double t = 0.0;
  Profile z;
  Profile err_z;  ///< empty for open-loop runs
};

struct SimTrace {
  std::vector<std::pair<std::string, std::string>> header;
  std::vector<TraceRow> rows;
  std::vector<Snapshot> snapshots;
  std::vector<std::string> warnings;
  std::optional<double> aborted_at;  ///< time of the first non-finite state
  std::string abort_reason;

  void note(std::string key, std::string value) {
    header.emplace_back(std::move(key), std::move(value));
  }
};

inline const char* const kTraceColumns =
    "t,v_y,r,beta,F1,F2,delta1,delta2,Y1_meas,Y2_meas,vhat_y,rhat,betahat,"
    "errX_norm,errz_L2norm,err_total_norm";

namespace detail {

// Fixed formatting keeps CSV output byte-identical for identical inputs.
inline void put(std::ostream& os, double v) {
  if (std::isnan(v)) {
    os << "nan";
    return;
  }
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  os << buf;
}

inline void put_header(std::ostream& os, const SimTrace& trace) {
  for (const auto& [k, v] : trace.header) os << "# " << k << "=" << v << "\n";
  if (trace.aborted_at) {
    os << "# aborted_at=";
    put(os, *trace.aborted_at);
    os << "\n";
  }
}

}  // namespace detail

/// Main trace: fixed column order, SI units, '#' header lines carry metadata.
inline void write_trace_csv(std::ostream& os, const SimTrace& trace) {
  detail::put_header(os, trace);
  os << kTraceColumns << "\n";
  for (const auto& r : trace.rows) {
    const double cols[] = {r.t,        r.X(0),     r.X(1),      r.beta,
                           r.forces(0), r.forces(1), r.delta(0), r.delta(1),
                           r.y_meas(0), r.y_meas(1), r.X_hat(0), r.X_hat(1),
                           r.beta_hat,  r.err_X,     r.err_z,    r.err_total};
    for (std::size_t i = 0; i < std::size(cols); ++i) {
      if (i) os << ',';
      detail::put(os, cols[i]);
    }
    os << "\n";
  }
}

/// State-norm history: ||(X,z)||, ||(Xhat,zhat)||, ||(Xerr,zerr)||.
inline void write_norms_csv(std::ostream& os, const SimTrace& trace) {
  detail::put_header(os, trace);
  os << "t,plant_norm,observer_norm,error_norm\n";
  for (const auto& r : trace.rows) {
    detail::put(os, r.t);
    os << ',';
    detail::put(os, r.plant_norm);
    os << ',';
    detail::put(os, r.observer_norm);
    os << ',';
    detail::put(os, r.err_total);
    os << "\n";
  }
}

/// Long-format distributed-state snapshots: one line per (t, xi) node.
inline void write_snapshots_csv(std::ostream& os, const SimTrace& trace) {
  detail::put_header(os, trace);
  os << "t,xi,z1,z2,err_z1,err_z2\n";
  for (const auto& s : trace.snapshots) {
    const Eigen::Index n = s.z.cols();
    for (Eigen::Index j = 0; j < n; ++j) {
      const double xi = static_cast<double>(j) / static_cast<double>(n - 1);
      const bool has_err = s.err_z.cols() == n;
      const double cols[] = {s.t, xi, s.z(0, j), s.z(1, j),
                             has_err ? s.err_z(0, j) : kNaN,
                             has_err ? s.err_z(1, j) : kNaN};
      for (std::size_t i = 0; i < std::size(cols); ++i) {
        if (i) os << ',';
        detail::put(os, cols[i]);
      }
      os << "\n";
    }
  }
}

}  // namespace tirepde
