#include <cmath>

#include <gtest/gtest.h>

#include "tirepde/kernel.hpp"

using namespace tirepde;

namespace {

TransferFunction scalar(std::function<cdouble(cdouble)> f) {
  return [f](cdouble s) {
    Eigen::MatrixXcd m(1, 1);
    m(0, 0) = f(s);
    return m;
  };
}

}  // namespace

TEST(Asymptote, RecoversFeedthroughAndFirstMoment) {
  // 3 + 7 / (s + 5) = 3 + 7/s - 35/s^2 + ...
  const Asymptote a = asymptote_from_function(scalar([](cdouble s) { return 3.0 + 7.0 / (s + 5.0); }));
  EXPECT_NEAR(a.D(0, 0), 3.0, 1e-9);
  EXPECT_NEAR(a.h0(0, 0), 7.0, 1e-6);
}

TEST(Kernel, FirstOrderLagMatchesExponential) {
  // gamma / (s + gamma) has impulse response gamma e^{-gamma t}.
  const double gamma = 500.0;
  const ImpulseResponseKernel k =
      kernel_from_function(scalar([&](cdouble s) { return gamma / (s + gamma); }));
  EXPECT_NEAR(k.D(0, 0), 0.0, 1e-9);
  EXPECT_NEAR(k.horizon(), 0.03, 1e-12);
  EXPECT_LT(k.tail_ratio, 0.01);
  for (std::size_t j = 1; j < k.samples.size(); j += 50) {
    const double t = k.dt * j;
    EXPECT_NEAR(k.samples[j](0, 0), gamma * std::exp(-gamma * t), 1e-3 * gamma) << t;
  }
}

TEST(Kernel, DelayedSecondOrderLag) {
  // e^{-s tau} a^2 / (s + a)^2: a^2 (t - tau) e^{-a (t - tau)} after the delay.
  const double a = 300.0;
  const double tau = 2e-3;
  const ImpulseResponseKernel k = kernel_from_function(
      scalar([&](cdouble s) { return std::exp(-s * tau) * a * a / ((s + a) * (s + a)); }));
  const double peak = a / std::exp(1.0);
  for (std::size_t j = 0; j < k.samples.size(); j += 25) {
    const double t = k.dt * j;
    const double exact = t < tau ? 0.0 : a * a * (t - tau) * std::exp(-a * (t - tau));
    EXPECT_NEAR(k.samples[j](0, 0), exact, 2e-3 * peak) << t;
  }
}

TEST(Kernel, JumpDominatedKernelNeedsFinerGrid) {
  // A delayed first-order lag is all jump at t = tau; at dt_kernel = 1e-5 the
  // truncated transform cannot resolve it to 1% in L2.
  const double a = 300.0;
  try {
    kernel_from_function(scalar([&](cdouble s) { return std::exp(-s * 2e-3) * a / (s + a); }));
    FAIL() << "kernel accepted";
  } catch (const NumericalError& e) {
    EXPECT_NE(std::string(e.what()).find("too coarse"), std::string::npos);
  }
}

TEST(Kernel, SlowDecayRejected) {
  // A 1 s time constant cannot be represented in a 30 ms window.
  try {
    kernel_from_function(scalar([](cdouble s) { return 1.0 / (s + 1.0); }));
    FAIL() << "kernel accepted";
  } catch (const NumericalError& e) {
    EXPECT_NE(std::string(e.what()).find("does not decay"), std::string::npos);
  }
}

TEST(Kernel, GridValidation) {
  const TransferFunction f = scalar([](cdouble s) { return 1.0 / (s + 1000.0); });
  const Asymptote none;
  EXPECT_THROW(kernel_from_response(sample_response(log_grid(1.0, 10.0, 10), f), none, 1e-5, 0.03),
               std::invalid_argument);
  const FrequencyResponse r = sample_response(uniform_grid(100.0, 100), f);
  EXPECT_THROW(kernel_from_response(r, none, 1e-5, 1.0), std::invalid_argument);
  EXPECT_THROW(kernel_from_response(r, none, 0.0, 0.03), std::invalid_argument);
}
