#pragma once

// Sampled impulse response of a stable transfer matrix, by truncated inverse
// Fourier transform on a uniform frequency grid.
//
// The transform of F itself converges slowly because F ~ D + h0/s at high
// frequency. Both pieces are removed first: D becomes a separate
// feedthrough and h0/(s + a) contributes h0 e^{-a t} analytically, leaving a
// remainder that decays at least like 1/omega^2.

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <sstream>
#include <vector>

#include <Eigen/Dense>

#include "tirepde/errors.hpp"
#include "tirepde/frequency.hpp"

namespace tirepde {

/// F(s) ~ D + h0 / s along the positive real axis.
struct Asymptote {
  Eigen::MatrixXd D;
  Eigen::MatrixXd h0;
  double a = 0.0;  ///< pole of the subtracted h0 / (s + a) term
};

/// D and h0 from F at s, 2s, 4s on the real axis, eliminating a 1/s^2 term.
inline Asymptote asymptote_from_function(const TransferFunction& fn, double s = 1e6) {
  const Eigen::MatrixXd f1 = fn(cdouble(s, 0.0)).real();
  const Eigen::MatrixXd f2 = fn(cdouble(2.0 * s, 0.0)).real();
  const Eigen::MatrixXd f4 = fn(cdouble(4.0 * s, 0.0)).real();
  // f(x) = D + h0 x + c x^2 with x = 1/s, sampled at x, x/2, x/4.
  Asymptote out;
  out.D = (8.0 * f4 - 6.0 * f2 + f1) / 3.0;
  out.h0 = s * (-2.0 * f1 + 10.0 * f2 - 8.0 * f4);
  return out;
}

struct ImpulseResponseKernel {
  double dt = 0.0;
  std::vector<Eigen::MatrixXd> samples;  ///< k(j dt), j = 0 .. size-1
  Eigen::MatrixXd D;                     ///< instantaneous part
  double tail_ratio = 0.0;     ///< last-window norm / largest-window norm
  double aliasing = 0.0;       ///< L2 change when omega_max is halved, relative to the L2 norm
  double imag_residue = 0.0;   ///< discarded imaginary part, relative to peak

  double horizon() const { return dt * static_cast<double>(samples.size() - 1); }
  Eigen::Index rows() const { return D.rows(); }
  Eigen::Index cols() const { return D.cols(); }
};

/// Uniform grid omega_j = j * d_omega, j = 0 .. count-1.
inline std::vector<double> uniform_grid(double d_omega, int count) {
  std::vector<double> w(count);
  for (int j = 0; j < count; ++j) w[j] = d_omega * j;
  return w;
}

namespace detail {

// (1/2pi) sum over the symmetric grid -w_max .. w_max of R(i w) e^{i w t}
// d_omega, trapezoid weights, using R(-i w) = conj(R(i w)). omega = 0 is an
// interior node and enters once with full weight.
inline Eigen::MatrixXcd inverse_sum(const std::vector<Eigen::MatrixXcd>& R,
                                    double d_omega, std::size_t count, double t) {
  Eigen::MatrixXcd acc = Eigen::MatrixXcd::Zero(R[0].rows(), R[0].cols());
  for (std::size_t j = 0; j < count; ++j) {
    const double w = d_omega * static_cast<double>(j);
    const double weight = j + 1 == count ? 0.5 : 1.0;
    const cdouble e(std::cos(w * t), std::sin(w * t));
    acc += weight * (R[j] * e);
    if (j > 0) acc += weight * (R[j].conjugate() * std::conj(e));
  }
  return acc * (d_omega / (2.0 * std::numbers::pi));
}

}  // namespace detail

/// Kernel from samples on a uniform grid starting at omega = 0.
inline ImpulseResponseKernel kernel_from_response(const FrequencyResponse& resp,
                                                  const Asymptote& asym,
                                                  double dt_kernel, double T_h) {
  validate(resp);
  const std::size_t M = resp.omega.size();
  if (M < 4 || resp.omega.front() != 0.0) {
    throw std::invalid_argument("kernel: response must be on a uniform grid from 0");
  }
  const double d_omega = resp.omega[1];
  for (std::size_t j = 2; j < M; ++j) {
    if (std::abs(resp.omega[j] - d_omega * j) > 1e-9 * d_omega * j) {
      throw std::invalid_argument("kernel: frequency grid is not uniform");
    }
  }
  if (!(dt_kernel > 0.0) || !(T_h > dt_kernel)) {
    throw std::invalid_argument("kernel: need 0 < dt_kernel < T_h");
  }
  if (T_h >= 2.0 * std::numbers::pi / d_omega) {
    throw std::invalid_argument("kernel: T_h exceeds the period of the frequency grid");
  }

  const Eigen::Index rows = resp.rows();
  const Eigen::Index cols = resp.cols();
  const Eigen::MatrixXd D =
      asym.D.size() ? asym.D : Eigen::MatrixXd::Zero(rows, cols);
  const Eigen::MatrixXd h0 =
      asym.h0.size() ? asym.h0 : Eigen::MatrixXd::Zero(rows, cols);
  std::vector<Eigen::MatrixXcd> R(M);
  for (std::size_t j = 0; j < M; ++j) {
    const cdouble s(0.0, resp.omega[j]);
    R[j] = resp.samples[j] - D.cast<cdouble>() - h0.cast<cdouble>() / (s + asym.a);
  }

  ImpulseResponseKernel k;
  k.dt = dt_kernel;
  k.D = D;
  const auto n = static_cast<std::size_t>(std::llround(T_h / dt_kernel)) + 1;
  k.samples.resize(n);
  double peak = 0.0;
  double energy = 0.0;
  double alias = 0.0;
  double imag = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    const double t = dt_kernel * static_cast<double>(j);
    const Eigen::MatrixXcd full = detail::inverse_sum(R, d_omega, M, t);
    const Eigen::MatrixXcd half = detail::inverse_sum(R, d_omega, M / 2 + 1, t);
    k.samples[j] = full.real() + h0 * std::exp(-asym.a * t);
    peak = std::max(peak, k.samples[j].cwiseAbs().maxCoeff());
    energy += k.samples[j].squaredNorm();
    // Pointwise differences stay O(1) at the jumps the delay terms put in
    // the kernel, so the grid test is in L2.
    alias += (full - half).squaredNorm();
    imag = std::max(imag, full.imag().cwiseAbs().maxCoeff());
  }
  if (peak == 0.0) {
    k.tail_ratio = 0.0;
    return k;
  }
  k.aliasing = std::sqrt(alias / energy);
  k.imag_residue = imag / peak;
  if (k.imag_residue > 1e-6) {
    throw NumericalError("kernel: response is not conjugate-symmetric");
  }

  // Last window against the most energetic window of the same length, so a
  // delayed kernel is not judged by its quiet start.
  const std::size_t window = std::max<std::size_t>(1, n / 10);
  std::vector<double> prefix(n + 1, 0.0);
  for (std::size_t j = 0; j < n; ++j) prefix[j + 1] = prefix[j] + k.samples[j].squaredNorm();
  double busiest = 0.0;
  for (std::size_t j = window; j <= n; ++j) busiest = std::max(busiest, prefix[j] - prefix[j - window]);
  k.tail_ratio = std::sqrt((prefix[n] - prefix[n - window]) / busiest);
  if (k.tail_ratio > 0.01) {
    std::ostringstream os;
    os << "kernel does not decay over T_h = " << T_h << " s (tail/peak window ratio "
       << k.tail_ratio << ")";
    throw NumericalError(os.str());
  }
  if (k.aliasing > 0.01) {
    std::ostringstream os;
    os << "kernel: frequency grid too coarse (halving omega_max changes the kernel by "
       << 100.0 * k.aliasing << "% in L2)";
    throw NumericalError(os.str());
  }
  return k;
}

struct KernelOptions {
  double dt_kernel = 1e-5;
  double T_h = 0.03;
  double period = 0.06;  ///< 2 pi / d_omega; must exceed T_h
};

/// Samples `fn` on the uniform grid implied by the options (omega_max =
/// pi / dt_kernel) and inverts it.
inline ImpulseResponseKernel kernel_from_function(const TransferFunction& fn,
                                                  const KernelOptions& opt = {}) {
  const double d_omega = 2.0 * std::numbers::pi / opt.period;
  const double w_max = std::numbers::pi / opt.dt_kernel;
  const int count = static_cast<int>(std::ceil(w_max / d_omega)) + 1;
  Asymptote asym = asymptote_from_function(fn);
  asym.a = 10.0 / opt.T_h;
  return kernel_from_response(sample_response(uniform_grid(d_omega, count), fn), asym,
                              opt.dt_kernel, opt.T_h);
}

}  // namespace tirepde
