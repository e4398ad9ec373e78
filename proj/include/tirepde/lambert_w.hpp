#pragma once

// Multi-branch complex Lambert W and the certificate that det C(s) has no
// zeros in the closed right half-plane.
//
// Branch convention: principal log, cuts along the negative real axis, and
// a point on a cut belongs to its upper side (a -0.0 imaginary part is
// treated as +0.0). With this convention W_0(-1/e) = W_{-1}(-1/e) = -1 and
// the conjugate of W_k(x) for real x < 0 is W_{-k-1}(x), not W_{-k}(x).

#include <cmath>
#include <complex>
#include <cstdint>
#include <limits>
#include <numbers>
#include <ostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "tirepde/errors.hpp"
#include "tirepde/frequency.hpp"
#include "tirepde/model.hpp"

namespace tirepde {

namespace detail {

inline constexpr double kInvE = 0.36787944117144233;  // 1/e
inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

inline cdouble upper_side(cdouble w) {
  return w.imag() == 0.0 ? cdouble(w.real(), 0.0) : w;
}

// Series of W about the branch point in p = sqrt(2(e w + 1)).
inline cdouble branch_point_series(cdouble p) {
  static constexpr double c[] = {-1.0,
                                 1.0,
                                 -1.0 / 3.0,
                                 11.0 / 72.0,
                                 -43.0 / 540.0,
                                 769.0 / 17280.0,
                                 -221.0 / 8505.0,
                                 680863.0 / 43545600.0,
                                 -1963.0 / 204120.0,
                                 226287557.0 / 37623398400.0};
  cdouble sum = 0.0;
  for (int n = std::size(c) - 1; n >= 0; --n) sum = sum * p + c[n];
  return sum;
}

// True when branch k touches the branch point from the side of w.
inline bool meets_branch_point(int k, cdouble w) {
  return k == 0 || (k == -1 && w.imag() >= 0.0) || (k == 1 && w.imag() < 0.0);
}

inline double branch_sign(int k) { return k == 0 ? 1.0 : -1.0; }

}  // namespace detail

/// Imaginary-part range of the image of branch k.
inline std::pair<double, double> lambert_w_strip(int k) {
  constexpr double pi = std::numbers::pi;
  if (k == 0) return {-pi, pi};
  if (k > 0) return {(2.0 * k - 2.0) * pi, (2.0 * k + 1.0) * pi};
  return {(2.0 * k - 1.0) * pi, (2.0 * k + 2.0) * pi};
}

/// Branch k of the Lambert W function: z with z e^z = w.
inline cdouble lambert_w(int k, cdouble w) {
  using detail::kInvE;
  using detail::kTwoPi;
  w = detail::upper_side(w);
  if (w == cdouble(0.0)) {
    if (k == 0) return 0.0;
    throw NumericalError("lambert_w: W_k(0) is unbounded for k != 0");
  }
  if (!std::isfinite(w.real()) || !std::isfinite(w.imag())) {
    throw NumericalError("lambert_w: non-finite argument");
  }

  const cdouble d = std::exp(1.0) * w + 1.0;
  const bool at_branch_point = detail::meets_branch_point(k, w);
  if (at_branch_point && std::abs(d) < 1e-6) {
    const cdouble p = detail::branch_sign(k) * std::sqrt(2.0 * d);
    return p == cdouble(0.0) ? cdouble(-1.0) : detail::branch_point_series(p);
  }

  cdouble z;
  if (at_branch_point && std::abs(w + kInvE) < 0.3) {
    z = detail::branch_point_series(detail::branch_sign(k) * std::sqrt(2.0 * d));
  } else if (k == 0 && (std::abs(w) < 0.3 ||
                         (w.real() > -1.0 && w.real() < 1.5 && std::abs(w.imag()) < 1.0 &&
                          -2.5 * std::abs(w.imag()) < w.real() - 0.2))) {
    // Pade approximant about the origin.
    z = w * (3.0 + 6.0 * w + w * w) / (3.0 + 9.0 * w + 5.0 * w * w);
  } else {
    const cdouble l1 = std::log(w) + cdouble(0.0, kTwoPi * k);
    const cdouble l2 = std::log(l1);
    z = l1 - l2 + l2 / l1;
  }

  bool converged = false;
  double last_step = std::numeric_limits<double>::infinity();
  for (int it = 0; it < 100; ++it) {
    const cdouble ez = std::exp(z);
    const cdouble f = z * ez - w;
    const cdouble zp1 = z + 1.0;
    if (zp1 == cdouble(0.0)) {
      converged = std::abs(f) <= 1e-15;
      break;
    }
    const cdouble dz = f / (ez * zp1 - (z + 2.0) * f / (2.0 * zp1));
    z -= dz;
    const double step = std::abs(dz);
    const double scale = std::max(1.0, std::abs(z));
    if (step <= 4.0 * std::numeric_limits<double>::epsilon() * scale ||
        (step < 1e-10 * scale && step >= last_step)) {
      converged = true;
      break;
    }
    last_step = step;
  }
  if (!converged || !std::isfinite(z.real()) || !std::isfinite(z.imag())) {
    std::ostringstream os;
    os << "lambert_w: Halley iteration did not converge for k = " << k << ", w = " << w;
    throw NumericalError(os.str());
  }

  // Strip membership, plus the unwinding identity W + log W = log w + 2 pi i k
  // wherever it holds (it fails only for k = -1 on [-1/e, 0)).
  const auto [lo, hi] = lambert_w_strip(k);
  const double slack = 1e-9 * std::max(1.0, std::abs(z));
  bool on_branch = z.imag() >= lo - slack && z.imag() <= hi + slack;
  const bool identity_exempt = k == -1 && w.imag() == 0.0 && w.real() < 0.0 &&
                               w.real() >= -kInvE;
  if (on_branch && !identity_exempt && z != cdouble(-1.0)) {
    const double m = (z + std::log(z) - std::log(w)).imag() / kTwoPi;
    on_branch = std::lround(m) == k;
  }
  if (!on_branch) {
    std::ostringstream os;
    os << "lambert_w: iteration for branch " << k << " at w = " << w
       << " converged to " << z << " on a different branch";
    throw NumericalError(os.str());
  }
  return z;
}

inline cdouble lambert_w(int k, double w) { return lambert_w(k, cdouble(w, 0.0)); }

/// |u + e^{-u} - 1| for u = s / lambda: the transcendental equation whose
/// roots are the zeros of h_i.
inline double h_zero_residual(cdouble s, double lambda) {
  const cdouble u = s / lambda;
  return std::abs(u + expm1(-u));
}

struct HZero {
  int axle = 0;  ///< 0 = front, 1 = rear
  int k = 0;
  cdouble s;
  double residual = 0.0;
};

/// Zeros s = lambda_i (W_k(-1/e) + 1) of the numerator of h_i for each k in
/// `ks`. Branches -1 and 0 give s = 0 and are rejected.
inline std::vector<HZero> h_zeros(int axle, const std::vector<int>& ks,
                                  const SystemMatrices& mats) {
  if (axle != 0 && axle != 1) throw std::invalid_argument("axle must be 0 or 1");
  const double lambda = mats.lambda(axle);
  std::vector<HZero> out;
  out.reserve(ks.size());
  for (int k : ks) {
    if (k == 0 || k == -1) {
      throw std::invalid_argument("h_zeros: branches -1 and 0 are excluded");
    }
    HZero zero{axle, k, lambda * (lambert_w(k, -detail::kInvE) + 1.0), 0.0};
    zero.residual = h_zero_residual(zero.s, lambda);
    if (!(zero.residual <= 1e-9)) {
      std::ostringstream os;
      os << "h_zeros: residual " << zero.residual << " at k = " << k;
      throw NumericalError(os.str());
    }
    out.push_back(zero);
  }
  return out;
}

/// k in [-k_max, k_max] without -1 and 0.
inline std::vector<int> zero_branches(int k_max) {
  std::vector<int> ks;
  for (int k = -k_max; k <= k_max; ++k) {
    if (k != 0 && k != -1) ks.push_back(k);
  }
  return ks;
}

struct CertifyOptions {
  int k_max = 50;
  int scan_real_points = 60;  ///< Re s: 0 plus log-spaced up to scan_extent
  int scan_imag_points = 60;  ///< per sign of Im s, plus Im s = 0
  double scan_extent = 1e4;
  double scan_floor_rel = 1e-6;  ///< floor = scan_floor_rel * |det C(0)|
  int spot_checks = 1000;
  std::uint64_t seed = 1;
};

struct PoleCertificate {
  std::vector<HZero> zeros;
  double max_real = -std::numeric_limits<double>::infinity();
  double max_residual = 0.0;
  double detC0 = 0.0;
  double scan_min = std::numeric_limits<double>::infinity();
  cdouble scan_argmin;
  double scan_floor = 0.0;
  std::size_t scan_points = 0;
  double min_re_h = std::numeric_limits<double>::infinity();
  cdouble min_re_h_at;
  bool zeros_ok = true;
  bool scan_ok = true;
  bool spot_ok = true;
  bool certified = false;
  std::string failure;  ///< first offending check, empty when certified
};

inline PoleCertificate certify_no_unstable_poles(const SystemMatrices& mats,
                                                 const CertifyOptions& opt = {}) {
  PoleCertificate cert;
  const auto fail = [&cert](const std::string& why) {
    if (cert.failure.empty()) cert.failure = why;
  };

  for (int axle = 0; axle < 2; ++axle) {
    for (const HZero& z : h_zeros(axle, zero_branches(opt.k_max), mats)) {
      cert.max_real = std::max(cert.max_real, z.s.real());
      cert.max_residual = std::max(cert.max_residual, z.residual);
      if (!(z.s.real() < 0.0)) {
        cert.zeros_ok = false;
        std::ostringstream os;
        os << "zero of h_" << axle + 1 << " at s = " << z.s << " (k = " << z.k
           << ") is not in the open left half-plane";
        fail(os.str());
      }
      cert.zeros.push_back(z);
    }
  }

  // s = 0 is excluded from the zero formula; check it directly.
  cert.detC0 = detC_closed(0.0, mats).real();
  if (!(cert.detC0 > 0.0)) {
    cert.zeros_ok = false;
    fail("det C(0) is not positive");
  }

  std::vector<double> re_axis{0.0};
  for (double x : log_grid(1e-3, opt.scan_extent, opt.scan_real_points)) re_axis.push_back(x);
  std::vector<double> im_axis{0.0};
  for (double y : log_grid(1e-3, opt.scan_extent, opt.scan_imag_points)) {
    im_axis.push_back(y);
    im_axis.push_back(-y);
  }
  cert.scan_floor = opt.scan_floor_rel * std::abs(cert.detC0);
  for (double x : re_axis) {
    for (double y : im_axis) {
      const cdouble s(x, y);
      const double v = std::abs(detC_closed(s, mats));
      ++cert.scan_points;
      if (v < cert.scan_min) {
        cert.scan_min = v;
        cert.scan_argmin = s;
      }
    }
  }
  if (!(cert.scan_min > cert.scan_floor)) {
    cert.scan_ok = false;
    std::ostringstream os;
    os << "|det C| = " << cert.scan_min << " at s = " << cert.scan_argmin
       << " is below the floor " << cert.scan_floor;
    fail(os.str());
  }

  std::mt19937_64 rng(opt.seed);
  std::uniform_real_distribution<double> log_re(-3.0, std::log10(opt.scan_extent));
  std::uniform_real_distribution<double> im(-opt.scan_extent, opt.scan_extent);
  for (int n = 0; n < opt.spot_checks; ++n) {
    const cdouble s(std::pow(10.0, log_re(rng)), im(rng));
    for (int axle = 0; axle < 2; ++axle) {
      const double re_h = h_factor(axle, s, mats).real();
      if (re_h < cert.min_re_h) {
        cert.min_re_h = re_h;
        cert.min_re_h_at = s;
      }
    }
  }
  if (opt.spot_checks > 0 && !(cert.min_re_h > 0.0)) {
    cert.spot_ok = false;
    std::ostringstream os;
    os << "Re h = " << cert.min_re_h << " at s = " << cert.min_re_h_at;
    fail(os.str());
  }

  cert.certified = cert.zeros_ok && cert.scan_ok && cert.spot_ok;
  return cert;
}

inline void write_certificate_report(std::ostream& os, const PoleCertificate& c) {
  os << "verdict: " << (c.certified ? "certified" : "not certified") << "\n";
  if (!c.failure.empty()) os << "failure: " << c.failure << "\n";
  os << "zeros computed: " << c.zeros.size() << "\n";
  if (c.zeros.empty()) {
    os << "max Re(zero): none (scan-only corroboration)\n";
  } else {
    os << "max Re(zero): " << c.max_real << "\n";
    os << "max residual: " << c.max_residual << "\n";
  }
  os << "det C(0): " << c.detC0 << "\n";
  os << "RHP scan: " << c.scan_points << " points, min |det C| = " << c.scan_min
     << " at s = " << c.scan_argmin << " (floor " << c.scan_floor << ")\n";
  if (c.min_re_h < std::numeric_limits<double>::infinity()) {
    os << "min Re h over spot checks: " << c.min_re_h << " at s = " << c.min_re_h_at << "\n";
  }
}

/// CSV: axle (1-based), k, re_s, im_s, residual.
inline void write_zeros_csv(std::ostream& os, const PoleCertificate& c) {
  os << "axle,k,re_s,im_s,residual\n";
  char buf[160];
  for (const HZero& z : c.zeros) {
    std::snprintf(buf, sizeof buf, "%d,%d,%.12g,%.12g,%.3e\n", z.axle + 1, z.k,
                  z.s.real(), z.s.imag(), z.residual);
    os << buf;
  }
}

}  // namespace tirepde
