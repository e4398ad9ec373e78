#include <cmath>
#include <random>
#include <sstream>

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "tirepde/frequency.hpp"

using namespace tirepde;

namespace {

const SystemMatrices& mats() {
  static const SystemMatrices m = build_matrices(VehicleParams{});
  return m;
}

// H1 assembled from quadratures of the scalar transport kernels:
// z(xi) = Gamma(xi) Lambda^{-1} c, c = K2 z(1) + A2 x, output K1 \int_0^1 z.
Eigen::Matrix2cd H1_by_quadrature(cdouble s, const SystemMatrices& m) {
  Eigen::Matrix2cd gamma_end = Eigen::Matrix2cd::Zero();
  Eigen::Matrix2cd gamma_int = Eigen::Matrix2cd::Zero();
  for (int i = 0; i < 2; ++i) {
    const double l = m.lambda(i);
    const auto Gamma = [&](double xi) {
      return oracle::integrate([&](double x) { return std::exp(-s * (xi - x) / l); }, 0.0, xi,
                               1e-14);
    };
    gamma_end(i, i) = Gamma(1.0) / l;
    gamma_int(i, i) = oracle::integrate([&](double xi) { return Gamma(xi); }, 0.0, 1.0, 1e-12) / l;
  }
  const Eigen::Matrix2cd K2 = m.K2.cast<cdouble>();
  const Eigen::Matrix2cd z1 =
      (Eigen::Matrix2cd::Identity() - gamma_end * K2).inverse() * gamma_end * m.A2.cast<cdouble>();
  return m.K1.cast<cdouble>() * gamma_int * (K2 * z1 + m.A2.cast<cdouble>());
}

}  // namespace

TEST(SpecialFunctions, Expm1) {
  for (cdouble x : {cdouble(1e-12, 2e-12), cdouble(-3e-9, 0.0), cdouble(0.0, 1e-10)}) {
    const cdouble series = x + x * x / 2.0 + x * x * x / 6.0;
    EXPECT_LT(std::abs(tirepde::expm1(x) - series), 1e-15 * std::abs(x));
  }
  for (cdouble x : {cdouble(1.0, 2.0), cdouble(-5.0, 30.0)}) {
    EXPECT_LT(std::abs(tirepde::expm1(x) - (std::exp(x) - 1.0)), 1e-14 * std::max(1.0, std::abs(std::exp(x))));
  }
}

TEST(SpecialFunctions, RelaxationIntegralsAgainstQuadrature) {
  // E1(u) = \int_0^1 e^{-u t} dt, E2(u) = \int_0^1 (1 - t) e^{-u t} dt.
  for (cdouble u : {cdouble(0.0, 0.0), cdouble(1e-7, 0.0), cdouble(0.3, -0.2), cdouble(0.49, 0.0),
                    cdouble(0.51, 0.0), cdouble(2.0, 5.0), cdouble(0.0, 40.0), cdouble(-1.0, 3.0)}) {
    const cdouble e1 = oracle::integrate([&](double t) { return std::exp(-u * t); }, 0.0, 1.0);
    const cdouble e2 =
        oracle::integrate([&](double t) { return (1.0 - t) * std::exp(-u * t); }, 0.0, 1.0);
    EXPECT_LT(std::abs(relax_e1(u) - e1), 1e-13) << u;
    EXPECT_LT(std::abs(relax_e2(u) - e2), 1e-13) << u;
  }
}

TEST(SpecialFunctions, E2ContinuousAcrossSeriesSwitch) {
  // |u| = 0.5 takes the closed form; the next double below takes the series.
  const cdouble below = relax_e2(cdouble(std::nextafter(0.5, 0.0), 0.0));
  const cdouble at = relax_e2(cdouble(0.5, 0.0));
  EXPECT_LT(std::abs(below - at), 1e-15);
}

TEST(Laplace, GammaMatrixAgainstQuadrature) {
  const cdouble s(30.0, 700.0);
  for (double xi : {0.0, 0.25, 1.0}) {
    const Eigen::Matrix2cd g = gamma_matrix(xi, s, mats());
    for (int i = 0; i < 2; ++i) {
      const cdouble ref = oracle::integrate(
          [&](double x) { return std::exp(-s * (xi - x) / mats().lambda(i)); }, 0.0, xi);
      EXPECT_LT(std::abs(g(i, i) - ref), 1e-13);
    }
    EXPECT_EQ(g(0, 1), cdouble(0.0));
  }
}

TEST(H1, AgainstQuadratureOracle) {
  for (cdouble s : {cdouble(0.0, 0.0), cdouble(0.0, 1.0), cdouble(0.0, 250.0), cdouble(0.0, 3000.0),
                    cdouble(100.0, -40.0)}) {
    const Eigen::Matrix2cd ref = H1_by_quadrature(s, mats());
    EXPECT_LT((H1(s, mats()) - ref).norm() / ref.norm(), 1e-9) << s;
  }
}

TEST(H1, FactorsThroughA2) {
  const cdouble s(0.0, 77.0);
  Eigen::Matrix2cd d = Eigen::Matrix2cd::Zero();
  for (int i = 0; i < 2; ++i) d(i, i) = mats().k1(i) * h_factor(i, s, mats());
  EXPECT_LT((H1(s, mats()) - d * mats().A2.cast<cdouble>()).norm(), 1e-12 * d.norm());
}

TEST(H1, ConjugateSymmetric) {
  const cdouble s(3.0, 123.0);
  EXPECT_LT((H1(std::conj(s), mats()) - H1(s, mats()).conjugate()).norm(), 1e-9);
}

TEST(DetC, ClosedFormMatchesAssembledOnRightHalfPlane) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> re(0.0, 1e4), im(-1e4, 1e4);
  for (int n = 0; n < 200; ++n) {
    const cdouble s(re(rng), im(rng));
    const cdouble a = C_of_s(s, mats()).determinant();
    EXPECT_LT(std::abs(a - detC_closed(s, mats())) / std::abs(a), 1e-12) << s;
  }
}

TEST(DetC, ValueAtZero) {
  // h_i(0) = 1 / (2 lambda_i phi_i), so the sum is sum_i F_zi sigma_i / (2 lambda_i):
  // 2660 * 263 / 1000 + 3720 * 242 / 1000 = 699.58 + 900.24.
  EXPECT_NEAR(axle_det_sum(0.0, mats()).real(), 1599.82, 1e-9);
  EXPECT_NEAR(C_of_s(0.0, mats()).determinant().real(), 2.0 / 1300.0 * 1599.82, 1e-12);
  EXPECT_NEAR(det_normalization(mats()), 2.0 / 1300.0, 1e-18);
}

TEST(DetC, InverseIsInverse) {
  const cdouble s(0.0, 42.0);
  const Eigen::Matrix2cd prod = C_of_s(s, mats()) * Cinv_of_s(s, mats());
  EXPECT_LT((prod - Eigen::Matrix2cd::Identity()).norm(), 1e-12);
}

TEST(H2, PeakIsOneOverGamma) {
  for (auto [gamma, eta] : {std::pair{500.0, 1.0}, {100.0, 1.0}, {500.0, 10.0}, {20.0, 3.0}}) {
    const double w = std::sqrt(gamma * eta);
    EXPECT_NEAR(std::abs(H2(cdouble(0.0, w), gamma, eta)), 1.0 / gamma, 1e-15);
    const TransferFunction f = H2_function(gamma, eta);
    const HinfEstimate est = hinf_estimate(sample_response(default_grid(), f), f);
    EXPECT_NEAR(est.value * gamma, 1.0, 1e-9);
    EXPECT_NEAR(est.omega / w, 1.0, 1e-3);
  }
}

TEST(Hinf, ResonantPeakRefinedBetweenGridPoints) {
  // 1 / (s^2 + 2 zeta s + 1): peak 1 / (2 zeta sqrt(1 - zeta^2)) at sqrt(1 - 2 zeta^2).
  const double zeta = 0.01;
  const TransferFunction f = [&](cdouble s) {
    Eigen::MatrixXcd m(1, 1);
    m(0, 0) = 1.0 / (s * s + 2.0 * zeta * s + 1.0);
    return m;
  };
  const HinfEstimate est = hinf_estimate(sample_response(log_grid(1e-2, 1e2, 200), f), f);
  EXPECT_NEAR(est.value, 1.0 / (2.0 * zeta * std::sqrt(1.0 - zeta * zeta)), 1e-6);
  EXPECT_NEAR(est.omega, std::sqrt(1.0 - 2.0 * zeta * zeta), 1e-6);
}

TEST(SmallGain, ReportAtReferenceGains) {
  const Theorem2Report r = check_theorem2(500.0, 1.0, mats());
  EXPECT_NEAR(r.lhs, 0.002, 1e-12);
  EXPECT_NEAR(r.rhs * r.hinf_H1, 1.0, 1e-12);
  EXPECT_GE(r.hinf_H1, sigma_max(H1(cdouble(0.0, 1e-2), mats())) * (1.0 - 1e-12));
  EXPECT_EQ(r.satisfied, r.lhs < r.rhs);
  EXPECT_NEAR(r.loop_gain, r.hinf_GH1 * r.lhs, 1e-15);
}

TEST(InjectionGain, DefinitionAndSymmetry) {
  const cdouble s(0.0, 321.0);
  const Eigen::Matrix2cd inner =
      Eigen::Matrix2cd::Identity() * 2.0 + mats().G.cast<cdouble>() * H1(s, mats());
  const Eigen::Matrix2cd expected = -(50.0 / (s + 50.0)) * inner * C_of_s(s, mats()).inverse();
  EXPECT_LT((injection_gain(s, 50.0, 2.0, mats()) - expected).norm(), 1e-10 * expected.norm());
  EXPECT_LT((injection_gain(std::conj(s), 50.0, 2.0, mats()) -
             injection_gain(s, 50.0, 2.0, mats()).conjugate()).norm(),
            1e-9);
}

TEST(Grids, LogGridAndValidation) {
  const auto g = log_grid(1e-2, 1e5, 8);
  ASSERT_EQ(g.size(), 8u);
  EXPECT_DOUBLE_EQ(g.front(), 1e-2);
  EXPECT_DOUBLE_EQ(g.back(), 1e5);
  EXPECT_NEAR(g[1] / g[0], g[7] / g[6], 1e-12);
  FrequencyResponse bad{{1.0, 1.0}, {Eigen::MatrixXcd::Zero(1, 1), Eigen::MatrixXcd::Zero(1, 1)}};
  EXPECT_THROW(validate(bad), std::invalid_argument);
}

TEST(Grids, ResponseCsv) {
  const auto r = sample_response(log_grid(1.0, 10.0, 3), H1_function(mats()));
  std::ostringstream os;
  write_response_csv(os, r);
  std::istringstream is(os.str());
  std::string header;
  std::getline(is, header);
  EXPECT_EQ(header.substr(0, 17), "omega,re_11,im_11");
  int lines = 0;
  for (std::string l; std::getline(is, l);) ++lines;
  EXPECT_EQ(lines, 3);
}
