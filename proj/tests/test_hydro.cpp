#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "mfcl/hydro.hpp"
#include "support.hpp"

using namespace mfcl;

namespace {

SimConfig euler_config(double u_offset, double u_amplitude, bool auto_box = false) {
  SimConfig c = test::base_config();
  c.grid.half_width = auto_box ? 0.0 : 2.0;
  c.initial.position = {Marginal::Shape::Cosine, 0.0, 0.5};
  c.initial.profile.offset = u_offset;
  c.initial.profile.amplitude = u_amplitude;
  c.initial.profile.wavenumber = std::numbers::pi;
  return validate(c);
}

EulerState advance(EulerState s, const Model& m, double dt, Index steps) {
  for (Index k = 0; k < steps; ++k) s = euler_step(s, dt, m);
  return s;
}

}  // namespace

TEST(Euler, MassConservedOverThousandSteps) {
  const SimConfig c = test::chemotaxis_config();
  const EulerState s0 = euler_initial(c, 256);
  const EulerState s = advance(s0, make_model(c), 0.002, 1000);
  EXPECT_NEAR(s0.mass(), 1.0, 1e-10);
  EXPECT_NEAR(s.mass(), s0.mass(), 1e-10);
}

TEST(Euler, MomentumConservedWithoutForcing) {
  SimConfig c = euler_config(0.1, 0.5);
  c.kernel.kind = KernelSpec::Kind::CuckerSmale;
  c.grid = {};
  c = validate(c);
  const EulerState s0 = euler_initial(c, 512);
  const EulerState s = advance(s0, make_model(c), 0.002, 500);
  EXPECT_NEAR(s.momentum(), s0.momentum(), 1e-10);
}

TEST(Euler, RestStateIsBitStable) {
  const SimConfig c = euler_config(0.0, 0.0);
  const EulerState s0 = euler_initial(c, 128);
  const EulerState s = advance(s0, make_model(c), 0.01, 100);
  EXPECT_EQ(s.mu, s0.mu);
  EXPECT_EQ(s.q, s0.q);
}

TEST(Euler, ConstantVelocityTranslatesDensity) {
  const double c_u = 0.5, dt = 0.005;
  const SimConfig c = euler_config(c_u, 0.0);
  const EulerState s0 = euler_initial(c, 512);
  const EulerState s = advance(s0, make_model(c), dt, 100);
  EXPECT_NEAR(s.mass(), s0.mass(), 1e-12);
  const double h = s.spacing();
  const double m0 = s0.centers().dot(s0.mu) * h, m1 = s.centers().dot(s.mu) * h;
  EXPECT_NEAR(m1 - m0, c_u * 0.5, 1e-9);
  const Eigen::VectorXd u = s.velocity();
  for (Index k = 0; k < s.cells(); ++k)
    if (s.mu(k) > 1e-3) EXPECT_NEAR(u(k), c_u, 1e-10);
}

TEST(Euler, FirstOrderSelfConvergence) {
  const SimConfig c = euler_config(0.0, 0.5);
  const Model m = make_model(c);
  const double t = 0.25;
  std::vector<Eigen::VectorXd> mu;
  for (Index cells : {128, 256, 512, 1024}) {
    const double dt = t / static_cast<double>(cells);
    mu.push_back(advance(euler_initial(c, cells), m, dt, cells).mu);
  }
  std::vector<double> err;
  for (std::size_t k = 0; k + 1 < mu.size(); ++k) {
    const Eigen::VectorXd& fine = mu[k + 1];
    double e = 0.0;
    for (Index i = 0; i < mu[k].size(); ++i)
      e += std::abs(mu[k](i) - 0.5 * (fine(2 * i) + fine(2 * i + 1))) *
           (2.0 * c.grid.half_width / static_cast<double>(mu[k].size()));
    err.push_back(e);
  }
  EXPECT_GE(std::log2(err[1] / err[2]), 0.8);
}

TEST(Euler, CflViolationIsRejected) {
  const SimConfig c = euler_config(1.0, 0.0);
  const EulerState s = euler_initial(c, 64);
  EXPECT_THROW(euler_step(s, 0.1, make_model(c)), DomainError);
}

TEST(Euler, CrossingStopsTheRun) {
  const SimConfig c = euler_config(0.0, -2.0, true);
  const EulerState s0 = euler_initial(c, 256);
  // Near the CFL limit, so the 1 / (10 dt) threshold sits below the collapse gradient.
  const EulerRun run = run_euler(s0, 0.45 * s0.spacing() / 2.0, 2.0, make_model(c));
  EXPECT_TRUE(run.crossed);
  EXPECT_LT(run.crossing_time, 2.0);
}

TEST(Monokinetic, ZeroProfileGivesZeroVelocities) {
  const SimConfig c = euler_config(0.0, 0.0);
  EXPECT_EQ(monokinetic_sample(c.initial, 32, 5).velocities().norm(), 0.0);
}

TEST(Monokinetic, ReproducibleForFixedSeed) {
  InitialSpec spec;
  spec.position = {Marginal::Shape::Uniform, 0.5, 0.5};
  const auto a = monokinetic_sample(spec, 4, 17);
  const auto b = monokinetic_sample(spec, 4, 17);
  EXPECT_EQ(a.positions(), b.positions());
  EXPECT_NE(a.positions(), monokinetic_sample(spec, 4, 18).positions());
  for (Index i = 0; i < 4; ++i) {
    EXPECT_GE(a.positions()(0, i), 0.0);
    EXPECT_LE(a.positions()(0, i), 1.0);
  }
}

TEST(Monokinetic, EmpiricalMeanVelocityConverges) {
  InitialSpec spec;
  spec.position = {Marginal::Shape::Uniform, 0.0, 1.0};
  spec.profile = {0.3, 0.0, 0.0, 0.0};
  spec.profile.slope = 1.0;  // u(x) = 0.3 + x, mean 0.3 under U(-1, 1)
  double prev = 1.0;
  for (Index n : {256, 4096, 65536}) {
    double err = 0.0;
    for (std::uint64_t r = 0; r < 8; ++r)
      err += std::abs(monokinetic_sample(spec, n, 3, r).velocities().mean() - 0.3) / 8.0;
    EXPECT_LT(err, 3.0 / std::sqrt(static_cast<double>(n)));
    EXPECT_LT(err, prev);
    prev = err;
  }
}

TEST(Monokinetic, DistanceToOwnQuadratureIsZero) {
  const SimConfig c = euler_config(0.0, 0.5);
  const EulerState s = euler_initial(c, 64);
  const Eigen::VectorXd u = s.velocity();
  Eigen::MatrixXd x(1, s.cells()), v(1, s.cells());
  Eigen::VectorXd w = s.mu * s.spacing();
  for (Index k = 0; k < s.cells(); ++k) {
    x(0, k) = s.center(k);
    v(0, k) = u(k);
  }
  w /= w.sum();
  EXPECT_LT(monokinetic_distance(ParticleEnsemble(x, v, w), s), 1e-7);
}
