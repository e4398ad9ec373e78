#pragma once

/**
 * @file frequency.hpp
 * @brief Laplace-domain description of the PDE subsystem and the injection gain.
 *
 * Lambda, K1 and K2 are diagonal, so every transfer function reduces to
 * componentwise closed forms in u_i = s / lambda_i built from
 *
 *   E1(u) = (1 - e^{-u}) / u           (= Gamma_ii(1, s))
 *   E2(u) = (u - 1 + e^{-u}) / u^2     (= \int_0^1 Gamma_ii(xi, s) dxi)
 *
 * Both are entire; they are evaluated without cancellation near u = 0, so
 * s = 0 needs no special casing anywhere below.
 */

#include <cmath>
#include <complex>
#include <functional>
#include <numbers>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "tirepde/errors.hpp"
#include "tirepde/model.hpp"

namespace tirepde {

using cdouble = std::complex<double>;
using TransferFunction = std::function<Eigen::MatrixXcd(cdouble)>;

/// e^x - 1 for complex x, accurate for small |x|.
inline cdouble expm1(cdouble x) {
  const double a = x.real();
  const double b = x.imag();
  const double half_sin = std::sin(0.5 * b);
  return {std::expm1(a) * std::cos(b) - 2.0 * half_sin * half_sin,
          std::exp(a) * std::sin(b)};
}

/// (1 - e^{-u}) / u, with the limit 1 at u = 0.
inline cdouble relax_e1(cdouble u) {
  if (u == cdouble(0.0)) return 1.0;
  return -expm1(-u) / u;
}

/// (u - 1 + e^{-u}) / u^2, with the limit 1/2 at u = 0.
inline cdouble relax_e2(cdouble u) {
  if (std::abs(u) < 0.5) {
    // sum_k (-u)^k / (k+2)!
    cdouble term = 0.5;
    cdouble sum = term;
    for (int k = 1; k < 24; ++k) {
      term *= -u / static_cast<double>(k + 2);
      sum += term;
    }
    return sum;
  }
  return (u + expm1(-u)) / (u * u);
}

/// Gamma(xi, s) = \int_0^xi exp(-Lambda^{-1} s (xi - xi')) dxi'.
inline Eigen::Matrix2cd gamma_matrix(double xi, cdouble s, const SystemMatrices& mats) {
  Eigen::Matrix2cd g = Eigen::Matrix2cd::Zero();
  for (int i = 0; i < 2; ++i) g(i, i) = xi * relax_e1(s * xi / mats.lambda(i));
  return g;
}

/// Theta/Psi blocks of the Laplace-domain solution.
struct LaplaceBlocks {
  Eigen::Matrix2cd theta1;  ///< (K1 Gamma)(s) Lambda^{-1}
  Eigen::Matrix2cd theta2;  ///< (K2 Gamma)(s) Lambda^{-1}
  Eigen::Matrix2cd psi1;    ///< (K1 Xi)(s)
  Eigen::Matrix2cd psi2;    ///< (K2 Xi)(s)
};

inline LaplaceBlocks laplace_blocks(cdouble s, const SystemMatrices& mats) {
  Eigen::Matrix2cd int_gamma = Eigen::Matrix2cd::Zero();
  Eigen::Matrix2cd gamma_end = Eigen::Matrix2cd::Zero();
  for (int i = 0; i < 2; ++i) {
    const cdouble u = s / mats.lambda(i);
    int_gamma(i, i) = relax_e2(u);
    gamma_end(i, i) = relax_e1(u);
  }
  const Eigen::Matrix2cd lambda_inv =
      mats.Lambda.diagonal().cwiseInverse().asDiagonal().toDenseMatrix().cast<cdouble>();
  const Eigen::Matrix2cd A2 = mats.A2.cast<cdouble>();
  LaplaceBlocks b;
  b.theta1 = mats.K1.cast<cdouble>() * int_gamma * lambda_inv;
  b.theta2 = mats.K2.cast<cdouble>() * gamma_end * lambda_inv;
  b.psi1 = b.theta1 * A2;
  b.psi2 = b.theta2 * A2;
  return b;
}

/// Transfer matrix from the lumped error to (K1 z)(s).
inline Eigen::Matrix2cd H1(cdouble s, const SystemMatrices& mats) {
  const LaplaceBlocks b = laplace_blocks(s, mats);
  Eigen::Matrix4cd block = Eigen::Matrix4cd::Zero();
  block.topLeftCorner<2, 2>() = Eigen::Matrix2cd::Identity();
  block.topRightCorner<2, 2>() = -b.theta1;
  block.bottomRightCorner<2, 2>() = Eigen::Matrix2cd::Identity() - b.theta2;
  Eigen::Matrix<cdouble, 4, 2> rhs;
  rhs << b.psi1, b.psi2;
  const Eigen::PartialPivLU<Eigen::Matrix4cd> lu(block);
  const double rcond = lu.rcond();
  if (!(rcond > 1e-12)) {
    std::ostringstream os;
    os << "H1: block matrix is near singular at s = " << s
       << " (reciprocal condition estimate " << rcond << ")";
    throw NumericalError(os.str());
  }
  const Eigen::Matrix<cdouble, 4, 2> sol = lu.solve(rhs);
  return sol.topRows<2>();
}

/// Scalar factor h_i(s) such that H1(s) = diag(k1_i h_i(s)) A2.
inline cdouble h_factor(int axle, cdouble s, const SystemMatrices& mats) {
  const double lambda = mats.lambda(axle);
  const cdouble u = s / lambda;
  return relax_e2(u) / (lambda * (1.0 - mats.psi(axle) * relax_e1(u)));
}

inline Eigen::Matrix2cd C_of_s(cdouble s, const SystemMatrices& mats) {
  Eigen::Matrix2cd c;
  c.row(0) = mats.C1.cast<cdouble>();
  c.row(1) = mats.C2.cast<cdouble>() * H1(s, mats);
  return c;
}

/// Inverse of C(s) by adjugate; throws near a zero of det C.
inline Eigen::Matrix2cd Cinv_of_s(cdouble s, const SystemMatrices& mats) {
  const Eigen::Matrix2cd c = C_of_s(s, mats);
  const cdouble det = c(0, 0) * c(1, 1) - c(0, 1) * c(1, 0);
  const double scale = c.row(0).norm() * c.row(1).norm();
  if (!(std::abs(det) > 1e-12 * scale)) {
    std::ostringstream os;
    os << "C(s) is singular at s = " << s << " (|det| = " << std::abs(det)
       << ", scale " << scale << ")";
    throw NumericalError(os.str());
  }
  Eigen::Matrix2cd adj;
  adj << c(1, 1), -c(0, 1),
         -c(1, 0), c(0, 0);
  return adj / det;
}

/// Positive constant relating det C(s) to the two-axle sum below: 2/m.
inline double det_normalization(const SystemMatrices& mats) {
  return 2.0 / mats.params.m;
}

/// F_z1 sigma_1 phi_1 h_1(s) + F_z2 sigma_2 phi_2 h_2(s). Equals det C(s)
/// up to the factor det_normalization(); at s = 0 it reduces to
/// sum_i F_zi sigma_i / (2 lambda_i).
inline cdouble axle_det_sum(cdouble s, const SystemMatrices& mats) {
  cdouble sum = 0.0;
  for (int i = 0; i < 2; ++i) sum += mats.k1(i) * mats.phi(i) * h_factor(i, s, mats);
  return sum;
}

/// Closed-form det C(s).
inline cdouble detC_closed(cdouble s, const SystemMatrices& mats) {
  return det_normalization(mats) * axle_det_sum(s, mats);
}

/// s / (s^2 + gamma s + eta gamma).
inline cdouble H2(cdouble s, double gamma, double eta) {
  return s / (s * s + gamma * s + eta * gamma);
}

/// First-order output filter gamma / (s + gamma).
inline cdouble output_filter(cdouble s, double gamma) { return gamma / (s + gamma); }

/// Injection gain -w(s) [eta I + G H1(s)] C^{-1}(s).
inline Eigen::Matrix2cd injection_gain(cdouble s, double gamma, double eta,
                                       const SystemMatrices& mats) {
  const Eigen::Matrix2cd inner =
      eta * Eigen::Matrix2cd::Identity() + mats.G.cast<cdouble>() * H1(s, mats);
  return -output_filter(s, gamma) * inner * Cinv_of_s(s, mats);
}

/// Samples of a transfer function on s = i omega.
struct FrequencyResponse {
  std::vector<double> omega;              ///< strictly ascending [rad/s]
  std::vector<Eigen::MatrixXcd> samples;  ///< one matrix per omega

  Eigen::Index rows() const { return samples.empty() ? 0 : samples.front().rows(); }
  Eigen::Index cols() const { return samples.empty() ? 0 : samples.front().cols(); }
};

inline void validate(const FrequencyResponse& r) {
  if (r.omega.size() != r.samples.size()) {
    throw std::invalid_argument("frequency response: sample count != grid length");
  }
  for (std::size_t k = 1; k < r.omega.size(); ++k) {
    if (!(r.omega[k] > r.omega[k - 1])) {
      throw std::invalid_argument("frequency response: grid not strictly ascending");
    }
  }
}

inline std::vector<double> log_grid(double lo, double hi, int points) {
  if (!(lo > 0.0 && hi > lo) || points < 2) {
    throw std::invalid_argument("log_grid needs 0 < lo < hi and >= 2 points");
  }
  std::vector<double> w(points);
  const double a = std::log10(lo);
  const double b = std::log10(hi);
  for (int k = 0; k < points; ++k) {
    w[k] = std::pow(10.0, a + (b - a) * k / (points - 1));
  }
  return w;
}

/// Default sweep: 2000 log-spaced points on [1e-2, 1e5] rad/s.
inline std::vector<double> default_grid() { return log_grid(1e-2, 1e5, 2000); }

inline FrequencyResponse sample_response(const std::vector<double>& omega,
                                         const TransferFunction& fn) {
  FrequencyResponse r;
  r.omega = omega;
  r.samples.reserve(omega.size());
  for (double w : omega) r.samples.push_back(fn(cdouble(0.0, w)));
  validate(r);
  return r;
}

inline TransferFunction H1_function(const SystemMatrices& mats) {
  return [mats](cdouble s) -> Eigen::MatrixXcd { return H1(s, mats); };
}

inline TransferFunction H2_function(double gamma, double eta) {
  return [gamma, eta](cdouble s) -> Eigen::MatrixXcd {
    return Eigen::MatrixXcd::Constant(1, 1, H2(s, gamma, eta));
  };
}

inline TransferFunction injection_gain_function(double gamma, double eta,
                                                const SystemMatrices& mats) {
  return [gamma, eta, mats](cdouble s) -> Eigen::MatrixXcd {
    return injection_gain(s, gamma, eta, mats);
  };
}

inline FrequencyResponse injection_gain_response(const std::vector<double>& omega,
                                                 double gamma, double eta,
                                                 const SystemMatrices& mats) {
  return sample_response(omega, injection_gain_function(gamma, eta, mats));
}

/// Largest singular value.
inline double sigma_max(const Eigen::MatrixXcd& m) {
  if (m.size() == 1) return std::abs(m(0, 0));
  return Eigen::JacobiSVD<Eigen::MatrixXcd>(m).singularValues()(0);
}

struct HinfEstimate {
  double value = 0.0;
  double omega = 0.0;  ///< frequency of the maximum [rad/s]
};

/// Grid supremum of sigma_max, refined by a golden-section search in
/// log(omega) between the neighbours of the grid argmax when `fn` is given.
inline HinfEstimate hinf_estimate(const FrequencyResponse& resp,
                                  const TransferFunction& fn = {}) {
  validate(resp);
  if (resp.omega.empty()) throw std::invalid_argument("empty frequency response");
  std::size_t best = 0;
  double best_value = -1.0;
  for (std::size_t k = 0; k < resp.samples.size(); ++k) {
    const double v = sigma_max(resp.samples[k]);
    if (v > best_value) {
      best_value = v;
      best = k;
    }
  }
  HinfEstimate est{best_value, resp.omega[best]};
  if (!fn || resp.omega.size() < 2) return est;

  const auto f = [&](double log_w) {
    return sigma_max(fn(cdouble(0.0, std::exp(log_w))));
  };
  double a = std::log(resp.omega[best == 0 ? 0 : best - 1]);
  double b = std::log(resp.omega[std::min(best + 1, resp.omega.size() - 1)]);
  const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double c = b - inv_phi * (b - a);
  double d = a + inv_phi * (b - a);
  double fc = f(c);
  double fd = f(d);
  for (int it = 0; it < 60 && b - a > 1e-12; ++it) {
    if (fc > fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - inv_phi * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + inv_phi * (b - a);
      fd = f(d);
    }
  }
  const double refined = std::max(fc, fd);
  if (refined > est.value) {
    est.value = refined;
    est.omega = std::exp(fc > fd ? c : d);
  }
  return est;
}

struct Theorem2Report {
  double gamma = 0.0;
  double eta = 0.0;
  double lhs = 0.0;           ///< ||H2||_inf
  double rhs = 0.0;           ///< 1 / ||H1||_inf
  double hinf_H1 = 0.0;
  double omega_H1 = 0.0;
  double omega_H2 = 0.0;
  double margin = 0.05;
  bool satisfied = false;     ///< lhs < (1 - margin) rhs
  double hinf_GH1 = 0.0;      ///< ||G H1||_inf
  double loop_gain = 0.0;     ///< ||G H1||_inf ||H2||_inf
  bool loop_satisfied = false;  ///< loop_gain < 1 - margin
};

/// Small-gain condition ||H2||_inf < 1 / ||H1||_inf. The report also carries
/// the gain of the loop actually closed in the error dynamics,
/// G H1(s) H2(s), whose bound ||G H1|| ||H2|| < 1 is the sharper test.
inline Theorem2Report check_theorem2(double gamma, double eta,
                                     const SystemMatrices& mats,
                                     double margin = 0.05,
                                     const std::vector<double>& omega = default_grid()) {
  if (!(gamma > 0.0) || !(eta > 0.0)) {
    throw ConfigError("gamma and eta must be > 0");
  }
  Theorem2Report r;
  r.gamma = gamma;
  r.eta = eta;
  r.margin = margin;
  const TransferFunction h2 = H2_function(gamma, eta);
  const HinfEstimate e2 = hinf_estimate(sample_response(omega, h2), h2);
  const TransferFunction h1 = H1_function(mats);
  const HinfEstimate e1 = hinf_estimate(sample_response(omega, h1), h1);
  const TransferFunction gh1 = [mats](cdouble s) -> Eigen::MatrixXcd {
    return mats.G.cast<cdouble>() * H1(s, mats);
  };
  const HinfEstimate eg = hinf_estimate(sample_response(omega, gh1), gh1);
  r.lhs = e2.value;
  r.omega_H2 = e2.omega;
  r.hinf_H1 = e1.value;
  r.omega_H1 = e1.omega;
  r.rhs = 1.0 / e1.value;
  r.satisfied = r.lhs < (1.0 - margin) * r.rhs;
  r.hinf_GH1 = eg.value;
  r.loop_gain = eg.value * e2.value;
  r.loop_satisfied = r.loop_gain < 1.0 - margin;
  return r;
}

/// CSV: omega, then re_ij, im_ij for every entry (1-based indices).
inline void write_response_csv(std::ostream& os, const FrequencyResponse& resp) {
  validate(resp);
  os << "omega";
  for (Eigen::Index i = 0; i < resp.rows(); ++i) {
    for (Eigen::Index j = 0; j < resp.cols(); ++j) {
      os << ",re_" << i + 1 << j + 1 << ",im_" << i + 1 << j + 1;
    }
  }
  os << "\n";
  char buf[32];
  for (std::size_t k = 0; k < resp.omega.size(); ++k) {
    std::snprintf(buf, sizeof buf, "%.10g", resp.omega[k]);
    os << buf;
    const Eigen::MatrixXcd& m = resp.samples[k];
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
      for (Eigen::Index j = 0; j < m.cols(); ++j) {
        std::snprintf(buf, sizeof buf, "%.10g", m(i, j).real());
        os << ',' << buf;
        std::snprintf(buf, sizeof buf, "%.10g", m(i, j).imag());
        os << ',' << buf;
      }
    }
    os << "\n";
  }
}

}  // namespace tirepde
