#include <cmath>
#include <sstream>

#include <gtest/gtest.h>

#include "tirepde/observer.hpp"
#include "tirepde/vector_fit.hpp"

using namespace tirepde;

namespace {

// Known 2x2 rational function: real poles -10 and -2000, a pair -100 +- 500i.
RationalFilter reference_filter() {
  RationalFilter f;
  f.D = (Eigen::MatrixXd(2, 2) << 0.5, -0.1, 0.0, 2.0).finished();
  Eigen::MatrixXcd r1(2, 2), r2(2, 2), r3(2, 2);
  r1 << 10.0, 0.0, 5.0, -3.0;
  r2 << cdouble(40.0, 20.0), cdouble(-5.0, 1.0), cdouble(0.0, 3.0), cdouble(60.0, -80.0);
  r3 << 1000.0, 300.0, -200.0, 500.0;
  f.modes = {{-10.0, r1, false}, {cdouble(-100.0, 500.0), r2, true}, {-2000.0, r3, false}};
  return f;
}

FrequencyResponse sampled(const RationalFilter& f) {
  return sample_response(log_grid(1e-1, 1e5, 400), [&](cdouble s) { return f(s); });
}

// The injection filter fit is the slowest step, so it runs once per binary.
const FitResult& injection_fit() {
  static const FitResult fit = fit_injection_filter(
      injection_gain_response(default_grid(), 500.0, 1.0, build_matrices(VehicleParams{})));
  return fit;
}

}  // namespace

TEST(RationalFilter, EvaluationAndOrder) {
  const RationalFilter f = reference_filter();
  EXPECT_EQ(f.order(), 4);
  EXPECT_TRUE(f.stable());
  EXPECT_NEAR(f.max_pole_magnitude(), 2000.0, 1e-12);
  const cdouble s(0.0, 7.0);
  const Eigen::MatrixXcd v = f(s);
  const Eigen::MatrixXcd r2 = f.modes[1].residue;
  const cdouble p2 = f.modes[1].pole;
  const Eigen::MatrixXcd direct = f.D.cast<cdouble>() + f.modes[0].residue / (s + 10.0) +
                                  r2 / (s - p2) + r2.conjugate() / (s - std::conj(p2)) +
                                  f.modes[2].residue / (s + 2000.0);
  EXPECT_LT((v - direct).norm(), 1e-12);
  // Real coefficients: F(conj s) = conj F(s).
  EXPECT_LT((f(std::conj(s)) - v.conjugate()).norm(), 1e-12);
}

TEST(VectorFit, RecoversKnownRationalFunction) {
  const RationalFilter ref = reference_filter();
  const FrequencyResponse resp = sampled(ref);
  for (StartingPoles start : {StartingPoles::linear_spaced, StartingPoles::log_spaced}) {
    const RationalFilter fit = fit_rational(resp, 4, start);
    EXPECT_LT(fit.fit_error, 1e-9) << to_string(start);
    EXPECT_LT((fit.D - ref.D).norm(), 1e-6);
    for (const auto& m : ref.modes) {
      double best = 1e300;
      for (const auto& g : fit.modes) best = std::min(best, std::abs(g.pole - m.pole));
      EXPECT_LT(best, 1e-6 * std::abs(m.pole)) << m.pole;
    }
  }
}

TEST(VectorFit, ErrorMetric) {
  const RationalFilter ref = reference_filter();
  const FrequencyResponse resp = sampled(ref);
  EXPECT_LT(relative_hinf_error(resp, ref), 1e-15);
  RationalFilter shifted = ref;
  shifted.D(0, 0) += 1.0;
  EXPECT_GT(relative_hinf_error(resp, shifted), 0.0);
}

TEST(VectorFit, TextRoundTripIsExact) {
  RationalFilter f = reference_filter();
  f.fit_error = 1.25e-7;
  std::stringstream ss;
  write_filter(ss, f);
  const RationalFilter g = read_filter(ss);
  ASSERT_EQ(g.modes.size(), f.modes.size());
  EXPECT_EQ(g.D, f.D);
  EXPECT_EQ(g.fit_error, f.fit_error);
  for (std::size_t i = 0; i < f.modes.size(); ++i) {
    EXPECT_EQ(g.modes[i].pole, f.modes[i].pole);
    EXPECT_EQ(g.modes[i].paired, f.modes[i].paired);
    EXPECT_EQ(g.modes[i].residue, f.modes[i].residue);
  }
}

TEST(VectorFit, MalformedFilterFileRejected) {
  std::istringstream no_header("shape 2 2\n");
  EXPECT_THROW(read_filter(no_header), ConfigError);
  std::istringstream bad_version("rational-filter 9\n");
  EXPECT_THROW(read_filter(bad_version), ConfigError);
  std::istringstream bad_d("rational-filter 1\nshape 2 2\nD 1 2\n");
  EXPECT_THROW(read_filter(bad_d), ConfigError);
}

TEST(VectorFit, OrderLimitReportsBestError) {
  FitOptions opt;
  opt.order_max = 4;
  opt.tol = 1e-12;
  try {
    fit_injection_filter(injection_gain_response(log_grid(1e-2, 1e5, 300), 500.0, 1.0,
                                                 build_matrices(VehicleParams{})),
                         opt);
    FAIL() << "order-4 fit met tol 1e-12";
  } catch (const NumericalError& e) {
    EXPECT_NE(std::string(e.what()).find("best non-stiff fit error"), std::string::npos);
  }
}

TEST(InjectionFit, MeetsToleranceWithIntegrablePoles) {
  const FitResult& fit = injection_fit();
  const RationalFilter& f = fit.filter;
  EXPECT_LE(f.fit_error, 1e-3);
  EXPECT_TRUE(f.stable());
  EXPECT_LE(f.max_pole_magnitude() * 1e-6, 0.1);
  ASSERT_FALSE(fit.attempts.empty());
  EXPECT_EQ(fit.attempts.back().order, f.order());
  // Independent check of the accepted fit on a grid offset from the fit grid.
  const FrequencyResponse check = injection_gain_response(
      log_grid(1.3e-2, 0.9e5, 777), 500.0, 1.0, build_matrices(VehicleParams{}));
  EXPECT_LT(relative_hinf_error(check, f), 2e-3);
}
