#pragma once

/**
 * @file model.hpp
 * @brief Linear single-track vehicle with distributed (bristle) tire states.
 *
 * The lumped state X = [v_y, r] is coupled to the bristle deflection
 * z(xi, t) in R^2 (front, rear) on the normalized contact patch xi in [0, 1].
 * Everything in this header is a pure function of its arguments.
 */

#include <cmath>
#include <sstream>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

#include "tirepde/errors.hpp"

namespace tirepde {

/// Physical constants of the vehicle. Defaults are the reference vehicle
/// (50 m/s, 1300 kg, oversteer axle layout, front steering only).
struct VehicleParams {
  double v_x = 50.0;      ///< longitudinal speed [m/s]
  double m = 1300.0;      ///< mass [kg]
  double I_z = 2000.0;    ///< yaw inertia [kg m^2]
  double l_1 = 1.4;       ///< CoG to front axle [m]
  double l_2 = 1.0;       ///< CoG to rear axle [m]
  double F_z1 = 2660.0;   ///< front vertical force [N]
  double F_z2 = 3720.0;   ///< rear vertical force [N]
  double L_1 = 0.1;       ///< front contact patch length [m]
  double L_2 = 0.1;       ///< rear contact patch length [m]
  double sigma_1 = 263.0; ///< front normalized micro-stiffness [1/m]
  double sigma_2 = 242.0; ///< rear normalized micro-stiffness [1/m]
  double phi_1 = 0.92;    ///< front carcass structural parameter, (0, 1]
  double phi_2 = 0.92;    ///< rear carcass structural parameter, (0, 1]
  int chi = 0;            ///< rear steering actuation flag, {0, 1}

  // psi is never stored so that phi + psi = 1 cannot be violated.
  double psi_1() const { return 1.0 - phi_1; }
  double psi_2() const { return 1.0 - phi_2; }
};

namespace detail {

inline void require_positive(double value, const char* name) {
  if (!(value > 0.0) || !std::isfinite(value)) {
    std::ostringstream os;
    os << "invalid vehicle parameter " << name << " = " << value
       << " (must be finite and > 0)";
    throw ConfigError(os.str());
  }
}

inline void require_structural(double value, const char* name) {
  if (!(value > 0.0 && value <= 1.0)) {
    std::ostringstream os;
    os << "invalid vehicle parameter " << name << " = " << value
       << " (must lie in (0, 1])";
    throw ConfigError(os.str());
  }
}

}  // namespace detail

/// Throws ConfigError naming the first violated field.
inline void validate(const VehicleParams& p) {
  detail::require_positive(p.v_x, "v_x");
  detail::require_positive(p.m, "m");
  detail::require_positive(p.I_z, "I_z");
  detail::require_positive(p.l_1, "l_1");
  detail::require_positive(p.l_2, "l_2");
  detail::require_positive(p.F_z1, "F_z1");
  detail::require_positive(p.F_z2, "F_z2");
  detail::require_positive(p.L_1, "L_1");
  detail::require_positive(p.L_2, "L_2");
  detail::require_positive(p.sigma_1, "sigma_1");
  detail::require_positive(p.sigma_2, "sigma_2");
  detail::require_structural(p.phi_1, "phi_1");
  detail::require_structural(p.phi_2, "phi_2");
  if (p.chi != 0 && p.chi != 1) {
    throw ConfigError("invalid vehicle parameter chi = " +
                      std::to_string(p.chi) + " (chi must be in {0,1})");
  }
}

/// Constant matrices of the coupled ODE-PDE model.
struct SystemMatrices {
  VehicleParams params;
  Eigen::Matrix2d A1;
  Eigen::Matrix2d A2;
  Eigen::Matrix2d G;
  Eigen::Matrix2d B;
  Eigen::Matrix2d Lambda;  ///< diag(v_x / L_i), transport speeds [1/s]
  Eigen::Matrix2d K1;      ///< integral coupling weights diag(F_zi sigma_i)
  Eigen::Matrix2d K2;      ///< boundary coupling weights v_x diag(psi_i / L_i)
  Eigen::RowVector2d C1;
  Eigen::RowVector2d C2;
  Eigen::Vector2d L_gain;  ///< static output injection [v_x, 0]^T

  double lambda(int axle) const { return Lambda(axle, axle); }
  double k1(int axle) const { return K1(axle, axle); }
  double k2(int axle) const { return K2(axle, axle); }
  double phi(int axle) const { return axle == 0 ? params.phi_1 : params.phi_2; }
  double psi(int axle) const { return 1.0 - phi(axle); }
};

/// Validates `p` and assembles every constant matrix of the model.
inline SystemMatrices build_matrices(const VehicleParams& p) {
  validate(p);
  SystemMatrices s;
  s.params = p;
  s.A1 << 0.0, -p.v_x,
          0.0, 0.0;
  s.A2 << 2.0 * p.phi_1, 2.0 * p.phi_1 * p.l_1,
          2.0 * p.phi_2, -2.0 * p.phi_2 * p.l_2;
  s.G << -1.0 / p.m, -1.0 / p.m,
         -p.l_1 / p.I_z, p.l_2 / p.I_z;
  s.B << -2.0 * p.v_x * p.phi_1, 0.0,
         0.0, -2.0 * p.v_x * p.chi * p.phi_2;
  s.Lambda << p.v_x / p.L_1, 0.0,
              0.0, p.v_x / p.L_2;
  s.K1 << p.F_z1 * p.sigma_1, 0.0,
          0.0, p.F_z2 * p.sigma_2;
  s.K2 << p.v_x * p.psi_1() / p.L_1, 0.0,
          0.0, p.v_x * p.psi_2() / p.L_2;
  s.C1 << 0.0, 1.0;
  s.C2 << -1.0 / p.m, -1.0 / p.m;
  s.L_gain << p.v_x, 0.0;
  return s;
}

/// Grid function on [0, 1] with values in R^2: column j holds z(j / N).
using Profile = Eigen::Matrix<double, 2, Eigen::Dynamic>;

inline Profile zero_profile(int cells) { return Profile::Zero(2, cells + 1); }

inline Profile constant_profile(int cells, const Eigen::Vector2d& value) {
  Profile z(2, cells + 1);
  z.colwise() = value;
  return z;
}

inline int cells_of(const Profile& z) { return static_cast<int>(z.cols()) - 1; }

/// Composite trapezoid rule over [0, 1] on the uniform grid of `z`.
inline Eigen::Vector2d trapezoid(const Profile& z) {
  const Eigen::Index n = z.cols();
  if (n < 2) throw std::invalid_argument("profile needs at least 2 nodes");
  const double h = 1.0 / static_cast<double>(n - 1);
  Eigen::Vector2d sum = 0.5 * (z.col(0) + z.col(n - 1));
  for (Eigen::Index j = 1; j + 1 < n; ++j) sum += z.col(j);
  return h * sum;
}

/// Integral coupling: K1 * \int_0^1 z dxi.
inline Eigen::Vector2d apply_K1(const Profile& z, const SystemMatrices& mats) {
  return mats.K1 * trapezoid(z);
}

/// Boundary coupling: K2 * z(1).
inline Eigen::Vector2d apply_K2(const Profile& z, const SystemMatrices& mats) {
  if (z.cols() < 1) throw std::invalid_argument("empty profile");
  return mats.K2 * z.col(z.cols() - 1);
}

/// Front and rear lateral tire forces [N]; same as apply_K1.
inline Eigen::Vector2d axle_forces(const Profile& z, const SystemMatrices& mats) {
  return apply_K1(z, mats);
}

/// L^2((0,1); R^2) norm with the trapezoid rule.
inline double l2_norm(const Profile& z) {
  const Eigen::Index n = z.cols();
  if (n < 2) throw std::invalid_argument("profile needs at least 2 nodes");
  const double h = 1.0 / static_cast<double>(n - 1);
  double sum = 0.5 * (z.col(0).squaredNorm() + z.col(n - 1).squaredNorm());
  for (Eigen::Index j = 1; j + 1 < n; ++j) sum += z.col(j).squaredNorm();
  return std::sqrt(h * sum);
}

struct PlantState {
  Eigen::Vector2d X = Eigen::Vector2d::Zero();  ///< [v_y, r]
  Profile z;                                    ///< bristle deflection [m]
};

/// Sensor outputs Y = [yaw rate, lateral acceleration].
inline Eigen::Vector2d measurement(const PlantState& state,
                                   const SystemMatrices& mats) {
  return {mats.C1.dot(state.X), mats.C2.dot(apply_K1(state.z, mats))};
}

/// Vehicle sideslip angle beta = v_y / v_x [rad].
inline double sideslip(const Eigen::Vector2d& X, const VehicleParams& p) {
  return X(0) / p.v_x;
}

}  // namespace tirepde
