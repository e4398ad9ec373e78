#pragma once

// Stable MIMO rational approximation of sampled frequency responses by
// vector fitting (iterative pole relocation with a shared pole set).

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdio>
#include <istream>
#include <limits>
#include <numbers>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "tirepde/errors.hpp"
#include "tirepde/frequency.hpp"

namespace tirepde {

/// One pole of a RationalFilter. A `paired` mode stands for the conjugate
/// pair (pole, conj(pole)) with residues (residue, conj(residue)); its pole
/// is stored with Im > 0. An unpaired mode has a real pole and residue.
struct FilterMode {
  cdouble pole;
  Eigen::MatrixXcd residue;
  bool paired = false;
};

struct RationalFilter {
  std::vector<FilterMode> modes;
  Eigen::MatrixXd D;
  double fit_error = std::numeric_limits<double>::infinity();

  Eigen::Index rows() const { return D.rows(); }
  Eigen::Index cols() const { return D.cols(); }

  /// Number of poles, counting both members of each conjugate pair.
  int order() const {
    int n = 0;
    for (const auto& m : modes) n += m.paired ? 2 : 1;
    return n;
  }

  double max_pole_magnitude() const {
    double r = 0.0;
    for (const auto& m : modes) r = std::max(r, std::abs(m.pole));
    return r;
  }

  bool stable() const {
    return std::all_of(modes.begin(), modes.end(),
                       [](const FilterMode& m) { return m.pole.real() < 0.0; });
  }

  Eigen::MatrixXcd operator()(cdouble s) const {
    Eigen::MatrixXcd out = D.cast<cdouble>();
    for (const auto& m : modes) {
      out += m.residue / (s - m.pole);
      if (m.paired) out += m.residue.conjugate() / (s - std::conj(m.pole));
    }
    return out;
  }
};

/// max_k sigma_max(F(i w_k) - fit(i w_k)) / max_k sigma_max(F(i w_k)).
inline double relative_hinf_error(const FrequencyResponse& resp,
                                  const RationalFilter& fit) {
  double num = 0.0;
  double den = 0.0;
  for (std::size_t k = 0; k < resp.omega.size(); ++k) {
    const cdouble s(0.0, resp.omega[k]);
    num = std::max(num, sigma_max(resp.samples[k] - fit(s)));
    den = std::max(den, sigma_max(resp.samples[k]));
  }
  return den > 0.0 ? num / den : num;
}

enum class StartingPoles { log_spaced, linear_spaced };

struct FitOptions {
  int order_min = 4;
  int order_step = 4;
  int order_max = 80;
  double tol = 1e-3;
  int iterations = 12;
  double dt = 1e-6;               ///< integration step the filter will run at
  double max_pole_dt = 0.1;       ///< reject fits with max|pole| * dt above this
  std::vector<StartingPoles> starts{StartingPoles::linear_spaced,
                                    StartingPoles::log_spaced};
};

namespace vf {

// Real basis for a pole set: columns 1/(s-a) for real a, and
// 1/(s-a) + 1/(s-a*), i/(s-a) - i/(s-a*) for each pair.
struct PoleSet {
  std::vector<double> real;
  std::vector<cdouble> pairs;  // Im > 0

  int size() const { return static_cast<int>(real.size() + 2 * pairs.size()); }
};

inline Eigen::MatrixXcd basis(const PoleSet& p, const std::vector<double>& omega) {
  const Eigen::Index K = static_cast<Eigen::Index>(omega.size());
  Eigen::MatrixXcd phi(K, p.size());
  for (Eigen::Index k = 0; k < K; ++k) {
    const cdouble s(0.0, omega[k]);
    int c = 0;
    for (double a : p.real) phi(k, c++) = 1.0 / (s - a);
    for (cdouble a : p.pairs) {
      const cdouble f1 = 1.0 / (s - a);
      const cdouble f2 = 1.0 / (s - std::conj(a));
      phi(k, c++) = f1 + f2;
      phi(k, c++) = cdouble(0.0, 1.0) * (f1 - f2);
    }
  }
  return phi;
}

// Stack real and imaginary parts of a complex block.
inline Eigen::MatrixXd realify(const Eigen::MatrixXcd& m) {
  Eigen::MatrixXd out(2 * m.rows(), m.cols());
  out.topRows(m.rows()) = m.real();
  out.bottomRows(m.rows()) = m.imag();
  return out;
}

inline PoleSet starting_poles(StartingPoles kind, int order,
                              const std::vector<double>& omega) {
  PoleSet p;
  const int pairs = order / 2;
  if (order % 2) p.real.push_back(-std::max(omega.front(), 1e-3 * omega.back()));
  const double wmax = omega.back();
  for (int j = 0; j < pairs; ++j) {
    double b;
    if (kind == StartingPoles::log_spaced) {
      const double lo = std::log10(std::max(omega.front(), 1e-12));
      const double hi = std::log10(wmax);
      b = std::pow(10.0, pairs == 1 ? 0.5 * (lo + hi) : lo + (hi - lo) * j / (pairs - 1));
    } else {
      const double lo = wmax / pairs / 4.0;
      b = pairs == 1 ? lo : lo + (wmax - lo) * j / (pairs - 1);
    }
    p.pairs.emplace_back(-b / 100.0, b);
  }
  return p;
}

// Relocate the poles: zeros of sigma(s) = 1 + sum c_j phi_j(s), with the
// residues of all entries solved jointly through per-entry QR reduction.
inline PoleSet relocate(const PoleSet& poles, const FrequencyResponse& resp) {
  const int n = poles.size();
  const Eigen::MatrixXcd phi = basis(poles, resp.omega);
  const Eigen::Index K = phi.rows();
  Eigen::VectorXd scale = realify(phi).colwise().norm().transpose();
  for (Eigen::Index j = 0; j < n; ++j) {
    if (!(scale(j) > 0.0)) scale(j) = 1.0;
  }
  const Eigen::MatrixXcd phi_s = phi * scale.cwiseInverse().asDiagonal();

  const Eigen::Index entries = resp.rows() * resp.cols();
  Eigen::MatrixXd reduced(entries * n, n);
  Eigen::VectorXd reduced_rhs(entries * n);
  Eigen::MatrixXcd block(K, 2 * n + 1);
  Eigen::VectorXcd f(K);
  int e = 0;
  for (Eigen::Index r = 0; r < resp.rows(); ++r) {
    for (Eigen::Index c = 0; c < resp.cols(); ++c, ++e) {
      for (Eigen::Index k = 0; k < K; ++k) f(k) = resp.samples[k](r, c);
      block.leftCols(n) = phi_s;
      block.col(n).setOnes();
      block.rightCols(n) = -(f.asDiagonal() * phi_s);
      Eigen::MatrixXd a(2 * K, 2 * n + 2);
      a.leftCols(2 * n + 1) = realify(block);
      a.col(2 * n + 1) = realify(f);
      Eigen::HouseholderQR<Eigen::MatrixXd> qr(a);
      const Eigen::MatrixXd R =
          qr.matrixQR().topRows(2 * n + 2).triangularView<Eigen::Upper>();
      reduced.middleRows(e * n, n) = R.block(n + 1, n + 1, n, n);
      reduced_rhs.segment(e * n, n) = R.block(n + 1, 2 * n + 1, n, 1);
    }
  }
  const Eigen::VectorXd c_scaled =
      reduced.colPivHouseholderQr().solve(reduced_rhs);
  const Eigen::VectorXd c = c_scaled.cwiseQuotient(scale);

  // State-space form of sigma; its zeros are eig(A - b c^T).
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(n, n);
  Eigen::VectorXd b = Eigen::VectorXd::Zero(n);
  int j = 0;
  for (double a : poles.real) {
    A(j, j) = a;
    b(j) = 1.0;
    ++j;
  }
  for (cdouble a : poles.pairs) {
    A(j, j) = a.real();
    A(j, j + 1) = a.imag();
    A(j + 1, j) = -a.imag();
    A(j + 1, j + 1) = a.real();
    b(j) = 2.0;
    j += 2;
  }
  const Eigen::MatrixXd Z = A - b * c.transpose();
  const Eigen::EigenSolver<Eigen::MatrixXd> eig(Z, false);
  if (eig.info() != Eigen::Success) {
    throw NumericalError("vector fitting: eigenvalue solver failed");
  }
  PoleSet next;
  for (Eigen::Index i = 0; i < n; ++i) {
    cdouble z = eig.eigenvalues()(i);
    // Reflect unstable or marginal poles into the left half-plane.
    double re = -std::abs(z.real());
    if (re == 0.0) re = -1e-6 * std::max(1.0, std::abs(z));
    if (z.imag() == 0.0) {
      next.real.push_back(re);
    } else if (z.imag() > 0.0) {
      next.pairs.emplace_back(re, z.imag());
    }
  }
  return next;
}

// Residues and feedthrough for fixed poles, entry by entry.
inline RationalFilter residues(const PoleSet& poles, const FrequencyResponse& resp) {
  const int n = poles.size();
  const Eigen::MatrixXcd phi = basis(poles, resp.omega);
  const Eigen::Index K = phi.rows();
  Eigen::MatrixXcd block(K, n + 1);
  block.leftCols(n) = phi;
  block.col(n).setOnes();
  Eigen::MatrixXd a = realify(block);
  Eigen::VectorXd scale = a.colwise().norm().transpose();
  for (Eigen::Index j = 0; j <= n; ++j) {
    if (!(scale(j) > 0.0)) scale(j) = 1.0;
  }
  a = a * scale.cwiseInverse().asDiagonal();
  const Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(a);

  RationalFilter fit;
  fit.D = Eigen::MatrixXd::Zero(resp.rows(), resp.cols());
  for (double p : poles.real) {
    fit.modes.push_back({cdouble(p, 0.0), Eigen::MatrixXcd::Zero(resp.rows(), resp.cols()), false});
  }
  for (cdouble p : poles.pairs) {
    fit.modes.push_back({p, Eigen::MatrixXcd::Zero(resp.rows(), resp.cols()), true});
  }
  Eigen::VectorXcd f(K);
  for (Eigen::Index r = 0; r < resp.rows(); ++r) {
    for (Eigen::Index c = 0; c < resp.cols(); ++c) {
      for (Eigen::Index k = 0; k < K; ++k) f(k) = resp.samples[k](r, c);
      const Eigen::VectorXd x =
          qr.solve(realify(f)).cwiseQuotient(scale);
      int j = 0;
      std::size_t m = 0;
      for (std::size_t i = 0; i < poles.real.size(); ++i, ++m) {
        fit.modes[m].residue(r, c) = x(j++);
      }
      for (std::size_t i = 0; i < poles.pairs.size(); ++i, ++m) {
        fit.modes[m].residue(r, c) = cdouble(x(j), x(j + 1));
        j += 2;
      }
      fit.D(r, c) = x(n);
    }
  }
  fit.fit_error = relative_hinf_error(resp, fit);
  return fit;
}

}  // namespace vf

/// Best fit over the relocation iterations at a fixed order.
inline RationalFilter fit_rational(const FrequencyResponse& resp, int order,
                                   StartingPoles start = StartingPoles::linear_spaced,
                                   int iterations = 12) {
  validate(resp);
  if (order < 1) throw std::invalid_argument("fit order must be >= 1");
  if (resp.omega.size() < static_cast<std::size_t>(order + 1)) {
    throw std::invalid_argument("fewer frequency samples than unknowns");
  }
  vf::PoleSet poles = vf::starting_poles(start, order, resp.omega);
  RationalFilter best;
  for (int it = 0; it < iterations; ++it) {
    poles = vf::relocate(poles, resp);
    RationalFilter fit = vf::residues(poles, resp);
    if (fit.fit_error < best.fit_error) best = std::move(fit);
  }
  return best;
}

struct FitAttempt {
  int order = 0;
  StartingPoles start = StartingPoles::linear_spaced;
  double error = 0.0;
  double max_pole = 0.0;
  bool stiff = false;  ///< rejected by the max|pole| * dt bound
};

struct FitResult {
  RationalFilter filter;
  std::vector<FitAttempt> attempts;
};

/// Orders order_min, order_min + order_step, ... up to order_max; returns
/// the first fit whose relative error meets `tol` and whose poles are not
/// too fast for the integration step.
inline FitResult fit_injection_filter(const FrequencyResponse& resp,
                                      const FitOptions& opt = {}) {
  FitResult out;
  RationalFilter best_any;
  for (int order = opt.order_min; order <= opt.order_max; order += opt.order_step) {
    for (StartingPoles start : opt.starts) {
      RationalFilter fit = fit_rational(resp, order, start, opt.iterations);
      FitAttempt a{order, start, fit.fit_error, fit.max_pole_magnitude(), false};
      a.stiff = a.max_pole * opt.dt > opt.max_pole_dt;
      out.attempts.push_back(a);
      if (!a.stiff && fit.fit_error < best_any.fit_error) best_any = fit;
      if (!a.stiff && fit.fit_error <= opt.tol) {
        out.filter = std::move(fit);
        return out;
      }
    }
  }
  std::ostringstream os;
  os << "rational fit: no order up to " << opt.order_max << " reached relative error "
     << opt.tol << "; best non-stiff fit error " << best_any.fit_error
     << " at order " << best_any.order();
  throw NumericalError(os.str());
}

inline const char* to_string(StartingPoles s) {
  return s == StartingPoles::log_spaced ? "log" : "linear";
}

// Text format, one record per line:
//   rational-filter 1
//   shape <rows> <cols>
//   fit_error <e>
//   D <rows*cols values, row-major>
//   mode <re pole> <im pole> <paired> <re,im of each residue entry, row-major>
inline void write_filter(std::ostream& os, const RationalFilter& f) {
  char buf[40];
  const auto put = [&](double v) {
    std::snprintf(buf, sizeof buf, " %.17g", v);
    os << buf;
  };
  os << "rational-filter 1\n";
  os << "shape " << f.rows() << " " << f.cols() << "\n";
  os << "order " << f.order() << "\n";
  os << "fit_error";
  put(f.fit_error);
  os << "\nD";
  for (Eigen::Index r = 0; r < f.rows(); ++r) {
    for (Eigen::Index c = 0; c < f.cols(); ++c) put(f.D(r, c));
  }
  os << "\n";
  for (const auto& m : f.modes) {
    os << "mode";
    put(m.pole.real());
    put(m.pole.imag());
    os << " " << (m.paired ? 1 : 0);
    for (Eigen::Index r = 0; r < f.rows(); ++r) {
      for (Eigen::Index c = 0; c < f.cols(); ++c) {
        put(m.residue(r, c).real());
        put(m.residue(r, c).imag());
      }
    }
    os << "\n";
  }
}

inline RationalFilter read_filter(std::istream& is) {
  RationalFilter f;
  std::string line;
  int line_no = 0;
  Eigen::Index rows = -1, cols = -1;
  const auto fail = [&](const std::string& why) {
    throw ConfigError("filter file line " + std::to_string(line_no) + ": " + why);
  };
  bool header = false;
  while (std::getline(is, line)) {
    ++line_no;
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ls(line);
    std::string tag;
    ls >> tag;
    if (tag == "rational-filter") {
      int version = 0;
      ls >> version;
      if (version != 1) fail("unsupported version");
      header = true;
    } else if (!header) {
      fail("missing 'rational-filter' header");
    } else if (tag == "shape") {
      ls >> rows >> cols;
      if (!ls || rows < 1 || cols < 1) fail("bad shape");
      f.D = Eigen::MatrixXd::Zero(rows, cols);
    } else if (tag == "order") {
      // informational; recomputed from the modes
    } else if (tag == "fit_error") {
      ls >> f.fit_error;
      if (!ls) fail("bad fit_error");
    } else if (tag == "D") {
      if (rows < 0) fail("'D' before 'shape'");
      for (Eigen::Index r = 0; r < rows; ++r) {
        for (Eigen::Index c = 0; c < cols; ++c) ls >> f.D(r, c);
      }
      if (!ls) fail("bad D record");
    } else if (tag == "mode") {
      if (rows < 0) fail("'mode' before 'shape'");
      FilterMode m;
      double re = 0, im = 0;
      int paired = 0;
      ls >> re >> im >> paired;
      m.pole = {re, im};
      m.paired = paired != 0;
      m.residue = Eigen::MatrixXcd::Zero(rows, cols);
      for (Eigen::Index r = 0; r < rows; ++r) {
        for (Eigen::Index c = 0; c < cols; ++c) {
          ls >> re >> im;
          m.residue(r, c) = {re, im};
        }
      }
      if (!ls) fail("bad mode record");
      if (!(m.pole.real() < 0.0)) fail("unstable pole");
      f.modes.push_back(m);
    } else {
      fail("unknown record '" + tag + "'");
    }
  }
  if (!header || rows < 0) throw ConfigError("filter file: incomplete");
  return f;
}

}  // namespace tirepde
