#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "mfcl/dynamics.hpp"
#include "support.hpp"

using namespace mfcl;

namespace {

SimConfig with_cloud(SimConfig c, const Eigen::MatrixXd& x, const Eigen::MatrixXd& v) {
  c.cloud.positions.assign(x.data(), x.data() + x.size());
  c.cloud.velocities.assign(v.data(), v.data() + v.size());
  return validate(c);
}

SimConfig harmonic_config(double dt, double horizon) {
  SimConfig c = test::base_config();
  c.force.kind = ForceSpec::Kind::Harmonic;
  c.force.stiffness = 0.1;
  c.grid.half_width = 4.0;
  c.dt = dt;
  c.horizon = horizon;
  c.particles = 12;
  c.initial.monokinetic = false;
  c.initial.velocity = {Marginal::Shape::Uniform, 0.0, 0.5};
  return validate(c);
}

Eigen::MatrixXd final_phase(const SimConfig& c) {
  return simulate(c, 0).final_state().ensemble.phase_points();
}

}  // namespace

TEST(ParticleRhs, SingleParticleWithoutForcesIsAtRest) {
  SimConfig c = test::base_config();
  c.kernel.kind = KernelSpec::Kind::CuckerSmale;
  c.grid = {};
  c = with_cloud(c, Eigen::MatrixXd::Constant(1, 1, 0.2), Eigen::MatrixXd::Constant(1, 1, 0.7));
  const Model m = make_model(c);
  const Dynamics dyn(m);
  const SimState s = initial_state(c, m, initial_ensemble(c, 1, 0));
  EXPECT_EQ(dyn.particle_rhs(s.ensemble, s.grid).norm(), 0.0);
}

TEST(Step, FreeTransportIsExact) {
  std::mt19937_64 rng(1);
  SimConfig c = test::base_config(2);
  c.dt = 1e-3;
  c.horizon = 1.0;
  c.report_every = 1000;
  const Eigen::MatrixXd x = test::random_points(rng, 2, 20, 0.5);
  const Eigen::MatrixXd v = test::random_points(rng, 2, 20, 0.5);
  c = with_cloud(c, x, v);
  const auto tr = simulate(c, 0);
  const auto& e = tr.final_state().ensemble;
  EXPECT_EQ(tr.steps, 1000);
  EXPECT_LE((e.positions() - (x + v)).lpNorm<Eigen::Infinity>(), 1e-12);
  EXPECT_EQ((e.velocities() - v).lpNorm<Eigen::Infinity>(), 0.0);
}

TEST(Simulate, ZeroHorizonKeepsOnlyInitialState) {
  SimConfig c = test::base_config();
  c.horizon = 0.0;
  const auto tr = simulate(validate(c), 0);
  ASSERT_EQ(tr.states.size(), 1u);
  EXPECT_EQ(tr.states.front().t, 0.0);
  EXPECT_EQ(tr.steps, 0);
}

TEST(Simulate, MomentumConservedUnderAlignment) {
  SimConfig c = test::base_config(2);
  c.kernel.kind = KernelSpec::Kind::CuckerSmale;
  c.particles = 64;
  c.horizon = 1.0;
  c.grid = {0.0, 256};
  c.initial.monokinetic = false;
  c.initial.velocity = {Marginal::Shape::Uniform, 0.1, 0.5};
  c = validate(c);
  const auto tr = simulate(c, 3);
  const auto mean_v = [](const ParticleEnsemble& e) { return Eigen::VectorXd(e.velocities() * e.weights()); };
  const Eigen::VectorXd before = mean_v(tr.states.front().ensemble);
  const Eigen::VectorXd after = mean_v(tr.final_state().ensemble);
  EXPECT_LT((after - before).norm(), 1e-10 * c.horizon);
}

TEST(Simulate, PermutationEquivarianceIsBitExact) {
  SimConfig c = test::chemotaxis_config();
  c.particles = 24;
  const ParticleEnsemble e = initial_ensemble(c, c.particles, 0);
  std::vector<Index> perm(static_cast<std::size_t>(e.size()));
  for (std::size_t k = 0; k < perm.size(); ++k) perm[k] = static_cast<Index>((7 * k + 3) % perm.size());
  Eigen::MatrixXd x(1, e.size()), v(1, e.size());
  for (Index k = 0; k < e.size(); ++k) {
    x.col(k) = e.positions().col(perm[static_cast<std::size_t>(k)]);
    v.col(k) = e.velocities().col(perm[static_cast<std::size_t>(k)]);
  }
  const auto a = simulate(c, e).final_state();
  const auto b = simulate(c, ParticleEnsemble::uniform(x, v)).final_state();
  for (Index k = 0; k < e.size(); ++k) {
    const Index j = perm[static_cast<std::size_t>(k)];
    ASSERT_EQ(b.ensemble.positions()(0, k), a.ensemble.positions()(0, j));
    ASSERT_EQ(b.ensemble.velocities()(0, k), a.ensemble.velocities()(0, j));
  }
  EXPECT_EQ(a.grid.values(), b.grid.values());
}

TEST(Simulate, ThreadCountDoesNotChangeResults) {
  SimConfig c = test::chemotaxis_config(2);
  c.particles = 40;
  const auto a = simulate(c, 0, 1).final_state();
  const auto b = simulate(c, 0, 3).final_state();
  EXPECT_EQ(a.ensemble.positions(), b.ensemble.positions());
  EXPECT_EQ(a.ensemble.velocities(), b.ensemble.velocities());
  EXPECT_EQ(a.grid.values(), b.grid.values());
}

TEST(Simulate, MonitorSlacksStayNonnegative) {
  SimConfig c = test::chemotaxis_config();
  c.particles = 64;
  c.horizon = 1.0;
  c.grid = {};
  c = validate(c);
  const auto tr = simulate(c, 0);
  EXPECT_GE(tr.min_velocity_slack(), 0.0);
  EXPECT_GE(tr.min_support_slack(), 0.0);
  for (const auto& m : tr.monitor) EXPECT_GE(m.printed_slack, 0.0);
}

TEST(Simulate, HarmonicEnergyIsNearlyConserved) {
  const SimConfig c = harmonic_config(0.01, 1.0);
  const auto tr = simulate(c, 0);
  const auto energy = [&](const ParticleEnsemble& e) {
    return 0.5 * (e.velocities().colwise().squaredNorm() +
                  c.force.stiffness * e.positions().colwise().squaredNorm())
        .dot(e.weights().transpose());
  };
  const double e0 = energy(tr.states.front().ensemble);
  EXPECT_NEAR(energy(tr.final_state().ensemble), e0, 1e-8 * e0);
}

TEST(Simulate, FourthOrderWithSmoothForces) {
  const auto run = [](double dt) {
    SimConfig c = harmonic_config(dt, 0.5);
    c.kernel.kind = KernelSpec::Kind::CuckerSmale;
    c.kernel.beta = 0.2;
    return final_phase(validate(c));
  };
  const Eigen::MatrixXd z1 = run(0.1), z2 = run(0.05), z3 = run(0.025);
  EXPECT_GE(std::log2((z1 - z2).norm() / (z2 - z3).norm()), 3.8);
}

TEST(Simulate, CoupledSplittingIsFirstOrder) {
  const auto run = [](double dt) {
    SimConfig c = test::chemotaxis_config();
    c.dt = dt;
    c.horizon = 0.4;
    c.particles = 16;
    c.grid = {};
    return final_phase(validate(c));
  };
  const Eigen::MatrixXd z1 = run(0.04), z2 = run(0.02), z3 = run(0.01);
  EXPECT_GE(std::log2((z1 - z2).norm() / (z2 - z3).norm()), 0.9);
}

TEST(Vlasov, StaticCloudWithoutForces) {
  SimConfig c = test::base_config();
  c.initial.position = {Marginal::Shape::Uniform, 0.5, 0.5};
  c = validate(c);
  const auto tr = vlasov_reference(c, 64);
  EXPECT_EQ(tr.final_state().ensemble.positions(), tr.states.front().ensemble.positions());
}

TEST(Vlasov, LinearProfileDilates) {
  SimConfig c = test::base_config();
  c.initial.position = {Marginal::Shape::Uniform, 0.5, 0.5};
  c.initial.profile.slope = 1.0;
  c.horizon = 0.5;
  c.dt = 0.01;
  c = validate(c);
  const auto tr = vlasov_reference(c, 64);
  const Eigen::MatrixXd x0 = tr.states.front().ensemble.positions();
  EXPECT_LE((tr.final_state().ensemble.positions() - 1.5 * x0).lpNorm<Eigen::Infinity>(), 1e-12);
}

TEST(Coupled, IdenticalCloudsStayAtZero) {
  const SimConfig c = test::chemotaxis_config();
  const auto a = phase_cloud(initial_ensemble(c, 16, 0));
  const auto plan = w2_exact_uniform(a, a);
  const auto s = coupled_pair_evolution(a, a, plan.plan, c);
  for (const auto& p : s.samples) EXPECT_EQ(p.distance, 0.0);
}

TEST(Coupled, FreeTransportClosedForm) {
  SimConfig c = test::base_config();
  c.horizon = 1.0;
  c.dt = 0.01;
  c.initial.monokinetic = false;
  c.initial.velocity = {Marginal::Shape::Uniform, 0.0, 0.5};
  c = validate(c);
  const auto ea = initial_ensemble(c, 16, 0);
  const auto eb = initial_ensemble(c, 16, 1);
  const auto a = phase_cloud(ea), b = phase_cloud(eb);
  const auto plan = w2_exact_uniform(a, b).plan;
  double dx2 = 0.0, dxdv = 0.0, dv2 = 0.0;
  for (Index k = 0; k < plan.size(); ++k) {
    const auto s = static_cast<std::size_t>(k);
    const double dx = ea.positions()(0, plan.source[s]) - eb.positions()(0, plan.target[s]);
    const double dv = ea.velocities()(0, plan.source[s]) - eb.velocities()(0, plan.target[s]);
    dx2 += plan.mass[s] * dx * dx;
    dxdv += plan.mass[s] * dx * dv;
    dv2 += plan.mass[s] * dv * dv;
  }
  const auto series = coupled_pair_evolution(a, b, plan, c);
  for (const auto& p : series.samples) {
    const double t = p.t;
    EXPECT_NEAR(p.distance, dx2 + 2.0 * t * dxdv + t * t * dv2 + dv2, 1e-10);
    EXPECT_LE(p.distance, p.envelope);
  }
}

TEST(Coupled, DistanceStaysBelowEnvelope) {
  SimConfig c = test::chemotaxis_config();
  c.horizon = 0.5;
  c.grid = {};
  c = validate(c);
  const auto a = phase_cloud(initial_ensemble(c, 32, 0));
  const auto b = phase_cloud(initial_ensemble(c, 32, 1));
  const auto s = coupled_pair_evolution(a, b, w2_exact_uniform(a, b).plan, c);
  for (const auto& p : s.samples) EXPECT_LE(p.distance, p.envelope);
}

TEST(FlowSensitivity, FreeTransportJacobian) {
  SimConfig c = test::base_config();
  c.particles = 4;
  c.initial.monokinetic = false;
  c.initial.velocity = {Marginal::Shape::Uniform, 0.0, 0.5};
  c = validate(c);
  const auto e = initial_ensemble(c, 4, 0);
  const Eigen::MatrixXd j = flow_sensitivity(c, e, 1, 1, 0.1);
  Eigen::Matrix2d expect;
  expect << 1.0, 0.1, 0.0, 1.0;
  EXPECT_LE((j - expect).lpNorm<Eigen::Infinity>(), 1e-8);
  EXPECT_LE(flow_sensitivity(c, e, 1, 2, 0.1).lpNorm<Eigen::Infinity>(), 1e-12);
}
