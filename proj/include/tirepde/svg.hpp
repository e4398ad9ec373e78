#pragma once

// Minimal SVG plots built from the CSV files the runs write, so every
// figure can be regenerated from its CSV alone.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <istream>
#include <limits>
#include <map>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "tirepde/errors.hpp"

namespace tirepde::svg {

struct CsvTable {
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;

  std::size_t index(const std::string& name) const {
    const auto it = std::find(columns.begin(), columns.end(), name);
    if (it == columns.end()) throw ConfigError("CSV has no column '" + name + "'");
    return static_cast<std::size_t>(it - columns.begin());
  }
  std::vector<double> column(const std::string& name) const {
    const std::size_t j = index(name);
    std::vector<double> out;
    out.reserve(rows.size());
    for (const auto& r : rows) out.push_back(r[j]);
    return out;
  }
};

/// Reads a header line plus numeric rows; '#' lines are skipped.
inline CsvTable read_csv(std::istream& is) {
  CsvTable t;
  std::string line;
  bool header = false;
  while (std::getline(is, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ls(line);
    std::string cell;
    if (!header) {
      while (std::getline(ls, cell, ',')) t.columns.push_back(cell);
      header = true;
      continue;
    }
    std::vector<double> row;
    while (std::getline(ls, cell, ',')) {
      row.push_back(cell == "nan" ? std::numeric_limits<double>::quiet_NaN()
                                  : std::strtod(cell.c_str(), nullptr));
    }
    if (row.size() != t.columns.size()) throw ConfigError("ragged CSV row");
    t.rows.push_back(std::move(row));
  }
  return t;
}

struct Series {
  std::string name;
  std::vector<double> x;
  std::vector<double> y;
};

struct Panel {
  std::string title;
  std::string ylabel;
  std::vector<Series> series;
  bool log_x = false;
  bool log_y = false;
};

namespace detail {

inline const char* const kColors[] = {"#1f77b4", "#d62728", "#2ca02c",
                                      "#ff7f0e", "#9467bd", "#8c564b"};

inline std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4g", v);
  return buf;
}

inline std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    if (c == '<') out += "&lt;";
    else if (c == '>') out += "&gt;";
    else if (c == '&') out += "&amp;";
    else out += c;
  }
  return out;
}

struct Range {
  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();
  void add(double v) {
    if (!std::isfinite(v)) return;
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  void finish() {
    if (!(lo <= hi)) {
      lo = 0.0;
      hi = 1.0;
    }
    if (hi == lo) {
      const double pad = lo == 0.0 ? 1.0 : 0.05 * std::abs(lo);
      lo -= pad;
      hi += pad;
    }
  }
};

inline double tr(double v, bool log) { return log ? (v > 0.0 ? std::log10(v) : NAN) : v; }

}  // namespace detail

/// Panels stacked vertically with a shared x label.
inline void line_plot(std::ostream& os, const std::string& title, const std::string& xlabel,
                      const std::vector<Panel>& panels) {
  const double W = 760, ph = 220, top = 40, left = 80, right = 150, gap = 50;
  const double H = top + panels.size() * (ph + gap) + 20;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H
     << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  os << "<text x=\"" << W / 2 << "\" y=\"22\" text-anchor=\"middle\" font-size=\"15\">"
     << detail::escape(title) << "</text>\n";
  double y0 = top;
  for (const Panel& p : panels) {
    detail::Range xr, yr;
    for (const auto& s : p.series) {
      for (double v : s.x) xr.add(detail::tr(v, p.log_x));
      for (double v : s.y) yr.add(detail::tr(v, p.log_y));
    }
    xr.finish();
    yr.finish();
    const double pw = W - left - right;
    const auto X = [&](double v) { return left + (detail::tr(v, p.log_x) - xr.lo) / (xr.hi - xr.lo) * pw; };
    const auto Y = [&](double v) { return y0 + ph - (detail::tr(v, p.log_y) - yr.lo) / (yr.hi - yr.lo) * ph; };
    os << "<rect x=\"" << left << "\" y=\"" << y0 << "\" width=\"" << pw << "\" height=\"" << ph
       << "\" fill=\"none\" stroke=\"#444\"/>\n";
    os << "<text x=\"" << left << "\" y=\"" << y0 - 6 << "\">" << detail::escape(p.title) << "</text>\n";
    for (int k = 0; k <= 4; ++k) {
      const double fy = yr.lo + (yr.hi - yr.lo) * k / 4.0;
      const double py = y0 + ph - ph * k / 4.0;
      os << "<line x1=\"" << left << "\" x2=\"" << left + pw << "\" y1=\"" << py << "\" y2=\"" << py
         << "\" stroke=\"#ddd\"/>\n";
      os << "<text x=\"" << left - 6 << "\" y=\"" << py + 4 << "\" text-anchor=\"end\">"
         << detail::fmt(p.log_y ? std::pow(10.0, fy) : fy) << "</text>\n";
      const double fx = xr.lo + (xr.hi - xr.lo) * k / 4.0;
      const double px = left + pw * k / 4.0;
      os << "<text x=\"" << px << "\" y=\"" << y0 + ph + 16 << "\" text-anchor=\"middle\">"
         << detail::fmt(p.log_x ? std::pow(10.0, fx) : fx) << "</text>\n";
    }
    os << "<text x=\"16\" y=\"" << y0 + ph / 2 << "\" transform=\"rotate(-90 16 " << y0 + ph / 2
       << ")\" text-anchor=\"middle\">" << detail::escape(p.ylabel) << "</text>\n";
    for (std::size_t si = 0; si < p.series.size(); ++si) {
      const Series& s = p.series[si];
      const char* color = detail::kColors[si % std::size(detail::kColors)];
      os << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.3\" points=\"";
      for (std::size_t i = 0; i < s.x.size() && i < s.y.size(); ++i) {
        const double px = X(s.x[i]);
        const double py = Y(s.y[i]);
        if (std::isfinite(px) && std::isfinite(py)) os << detail::fmt(px) << ',' << detail::fmt(py) << ' ';
      }
      os << "\"/>\n";
      os << "<line x1=\"" << W - right + 10 << "\" x2=\"" << W - right + 30 << "\" y1=\""
         << y0 + 14 + 16 * si << "\" y2=\"" << y0 + 14 + 16 * si << "\" stroke=\"" << color
         << "\" stroke-width=\"2\"/>\n";
      os << "<text x=\"" << W - right + 34 << "\" y=\"" << y0 + 18 + 16 * si << "\">"
         << detail::escape(s.name) << "</text>\n";
    }
    y0 += ph + gap;
  }
  os << "<text x=\"" << left + (W - left - right) / 2 << "\" y=\"" << H - 8
     << "\" text-anchor=\"middle\">" << detail::escape(xlabel) << "</text>\n";
  os << "</svg>\n";
}

/// Color map of value(x, y) on a rectangular grid given as long-format rows.
inline void heatmap(std::ostream& os, const std::string& title, const std::string& xlabel,
                    const std::string& ylabel, const std::vector<double>& x,
                    const std::vector<double>& y, const std::vector<double>& value) {
  std::vector<double> xs = x, ys = y;
  std::sort(xs.begin(), xs.end());
  xs.erase(std::unique(xs.begin(), xs.end()), xs.end());
  std::sort(ys.begin(), ys.end());
  ys.erase(std::unique(ys.begin(), ys.end()), ys.end());
  detail::Range vr;
  for (double v : value) vr.add(v);
  vr.finish();
  const double W = 760, H = 420, left = 80, top = 40, pw = 560, ph = 320;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H
     << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  os << "<text x=\"" << W / 2 << "\" y=\"22\" text-anchor=\"middle\" font-size=\"15\">"
     << detail::escape(title) << "</text>\n";
  if (xs.empty() || ys.empty()) {
    os << "</svg>\n";
    return;
  }
  const double cw = pw / xs.size();
  const double chh = ph / ys.size();
  const auto color = [&](double v) {
    // Diverging blue-white-red scale symmetric about zero.
    const double m = std::max(std::abs(vr.lo), std::abs(vr.hi));
    const double f = m > 0.0 ? std::clamp(v / m, -1.0, 1.0) : 0.0;
    const int a = static_cast<int>(255 * (1.0 - std::abs(f)));
    char buf[16];
    if (f >= 0) std::snprintf(buf, sizeof buf, "#ff%02x%02x", a, a);
    else std::snprintf(buf, sizeof buf, "#%02x%02xff", a, a);
    return std::string(buf);
  };
  for (std::size_t i = 0; i < value.size(); ++i) {
    if (!std::isfinite(value[i])) continue;
    const auto ix = std::lower_bound(xs.begin(), xs.end(), x[i]) - xs.begin();
    const auto iy = std::lower_bound(ys.begin(), ys.end(), y[i]) - ys.begin();
    os << "<rect x=\"" << detail::fmt(left + ix * cw) << "\" y=\""
       << detail::fmt(top + ph - (iy + 1) * chh) << "\" width=\"" << detail::fmt(cw + 0.5)
       << "\" height=\"" << detail::fmt(chh + 0.5) << "\" fill=\"" << color(value[i]) << "\"/>\n";
  }
  os << "<rect x=\"" << left << "\" y=\"" << top << "\" width=\"" << pw << "\" height=\"" << ph
     << "\" fill=\"none\" stroke=\"#444\"/>\n";
  for (int k = 0; k <= 4; ++k) {
    const double fx = xs.front() + (xs.back() - xs.front()) * k / 4.0;
    os << "<text x=\"" << left + pw * k / 4.0 << "\" y=\"" << top + ph + 16
       << "\" text-anchor=\"middle\">" << detail::fmt(fx) << "</text>\n";
    const double fy = ys.front() + (ys.back() - ys.front()) * k / 4.0;
    os << "<text x=\"" << left - 6 << "\" y=\"" << top + ph - ph * k / 4.0 + 4
       << "\" text-anchor=\"end\">" << detail::fmt(fy) << "</text>\n";
  }
  os << "<text x=\"" << left + pw / 2 << "\" y=\"" << H - 20 << "\" text-anchor=\"middle\">"
     << detail::escape(xlabel) << "</text>\n";
  os << "<text x=\"20\" y=\"" << top + ph / 2 << "\" transform=\"rotate(-90 20 " << top + ph / 2
     << ")\" text-anchor=\"middle\">" << detail::escape(ylabel) << "</text>\n";
  const double bx = left + pw + 30;
  for (int k = 0; k < 20; ++k) {
    const double v = vr.hi - (vr.hi - vr.lo) * k / 19.0;
    os << "<rect x=\"" << bx << "\" y=\"" << top + k * ph / 20.0 << "\" width=\"20\" height=\""
       << ph / 20.0 + 0.5 << "\" fill=\"" << color(v) << "\"/>\n";
  }
  os << "<text x=\"" << bx + 26 << "\" y=\"" << top + 10 << "\">" << detail::fmt(vr.hi) << "</text>\n";
  os << "<text x=\"" << bx + 26 << "\" y=\"" << top + ph << "\">" << detail::fmt(vr.lo) << "</text>\n";
  os << "</svg>\n";
}

/// State norms against time, from a norms CSV.
inline void plot_norms(std::istream& csv, std::ostream& out) {
  const CsvTable t = read_csv(csv);
  const auto time = t.column("t");
  Panel p{"state norms", "norm", {}, false, false};
  p.series.push_back({"||(X, z)||", time, t.column("plant_norm")});
  const auto obs = t.column("observer_norm");
  if (std::any_of(obs.begin(), obs.end(), [](double v) { return std::isfinite(v); })) {
    p.series.push_back({"||(Xhat, zhat)||", time, obs});
    Panel e{"estimation error", "norm (log)", {{"||(X~, z~)||", time, t.column("error_norm")}},
            false, true};
    line_plot(out, "State and error norms", "t [s]", {p, e});
    return;
  }
  line_plot(out, "State norm", "t [s]", {p});
}

/// Kinematics, axle forces and steering, from a trace CSV.
inline void plot_states(std::istream& csv, std::ostream& out) {
  const CsvTable t = read_csv(csv);
  const auto time = t.column("t");
  const auto vhat = t.column("vhat_y");
  const bool observed =
      std::any_of(vhat.begin(), vhat.end(), [](double v) { return std::isfinite(v); });
  Panel vy{"lateral velocity", "v_y [m/s]", {{"v_y", time, t.column("v_y")}}};
  Panel r{"yaw rate", "r [rad/s]", {{"r", time, t.column("r")}}};
  Panel beta{"sideslip", "beta [rad]", {{"beta", time, t.column("beta")}}};
  if (observed) {
    vy.series.push_back({"estimate", time, vhat});
    r.series.push_back({"estimate", time, t.column("rhat")});
    beta.series.push_back({"estimate", time, t.column("betahat")});
  }
  Panel forces{"axle forces", "force [N]",
               {{"F1", time, t.column("F1")}, {"F2", time, t.column("F2")}}};
  Panel steer{"steering", "delta [rad]",
              {{"delta1", time, t.column("delta1")}, {"delta2", time, t.column("delta2")}}};
  line_plot(out, "Lumped states, forces and steering", "t [s]", {vy, r, beta, forces, steer});
}

/// z(xi, t) or z~(xi, t) heatmap from a snapshots CSV.
inline void plot_profile_heatmap(std::istream& csv, std::ostream& out,
                                 const std::string& column) {
  const CsvTable t = read_csv(csv);
  heatmap(out, column + "(xi, t)", "t [s]", "xi", t.column("t"), t.column("xi"),
          t.column(column));
}

/// |entry| of a response CSV against omega, log-log.
inline void plot_response(std::istream& csv, std::ostream& out, const std::string& title) {
  const CsvTable t = read_csv(csv);
  const auto omega = t.column("omega");
  Panel p{title, "|entry|", {}, true, true};
  for (std::size_t j = 1; j + 1 < t.columns.size(); j += 2) {
    const std::string tag = t.columns[j].substr(3);  // "re_ij" -> "ij"
    std::vector<double> mag;
    for (const auto& row : t.rows) mag.push_back(std::hypot(row[j], row[j + 1]));
    p.series.push_back({tag, omega, mag});
  }
  line_plot(out, title, "omega [rad/s]", {p});
}

}  // namespace tirepde::svg
