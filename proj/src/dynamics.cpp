#include "mfcl/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "mfcl/format.hpp"
#include "mfcl/parallel.hpp"

namespace mfcl {

namespace {

double max_abs(const Eigen::VectorXd& v) { return v.size() ? v.cwiseAbs().maxCoeff() : 0.0; }

struct Sorted {
  Eigen::MatrixXd x, v;
  Eigen::VectorXd w;
};

Sorted sort_sources(const Eigen::MatrixXd& x, const Eigen::MatrixXd& v, const Eigen::VectorXd& w) {
  const auto order = value_order(x, v, w);
  Sorted s{Eigen::MatrixXd(x.rows(), x.cols()), Eigen::MatrixXd(v.rows(), v.cols()),
           Eigen::VectorXd(w.size())};
  for (std::size_t k = 0; k < order.size(); ++k) {
    const auto j = order[k];
    const auto c = static_cast<Index>(k);
    s.x.col(c) = x.col(j);
    s.v.col(c) = v.col(j);
    s.w(c) = w(j);
  }
  return s;
}

// sum_j w_j psi(|xi - x_j|^2) (v_j - vi) for d = 1, four interleaved partial sums.
double cs_sum_1d(const AlignmentKernel& k, double xi, double vi, const double* xs, const double* vs,
                 const double* ws, Index n) {
  const double inv = 1.0 / (k.params().length * k.params().length);
  const bool plain = k.params().sigma == 1.0;
  double acc[4] = {0.0, 0.0, 0.0, 0.0};
  Index j = 0;
  if (plain) {
    for (; j + 4 <= n; j += 4)
      for (int l = 0; l < 4; ++l) {
        const double dx = xi - xs[j + l];
        acc[l] += ws[j + l] * (vs[j + l] - vi) / (1.0 + dx * dx * inv);
      }
  } else {
    for (; j + 4 <= n; j += 4)
      for (int l = 0; l < 4; ++l) {
        const double dx = xi - xs[j + l];
        acc[l] += ws[j + l] * k.weight(dx * dx) * (vs[j + l] - vi);
      }
  }
  for (; j < n; ++j) {
    const double dx = xi - xs[j];
    acc[0] += ws[j] * k.weight(dx * dx) * (vs[j] - vi);
  }
  return (acc[0] + acc[1]) + (acc[2] + acc[3]);
}

}  // namespace

StepMonitor::StepMonitor(const BoundConstants& constants, const Model& model,
                         const ParticleEnsemble& initial)
    : constants_(constants),
      v0_(initial.max_speed()),
      r0_(initial.max_phase_norm()),
      cert_radius_(model.kernel.is_cucker_smale() && !model.kernel.is_zero()
                       ? model.kernel.cert_radius()
                       : std::numeric_limits<double>::infinity()) {
  const bool chemotaxis = model.eta != 0.0 && (!model.bump.is_zero() ||
                                               model.phi_in.kind != InitialField::Kind::Zero);
  // The printed velocity bound carries no forcing term, so it is only a
  // theorem when the forcing cannot start particles from rest.
  enforce_velocity_ = model.force.is_zero() && model.phi_in.kind == InitialField::Kind::Zero &&
                      (v0_ > 0.0 || !chemotaxis);
}

MonitorSample StepMonitor::observe(const SimState& s) const {
  MonitorSample m;
  m.t = s.t;
  m.max_speed = s.ensemble.max_speed();
  m.velocity_bound = constants_.velocity_bound(v0_, s.t);
  m.velocity_slack = kAllowance * m.velocity_bound - m.max_speed;
  m.max_radius = s.ensemble.max_phase_norm();
  m.support_bound = streaming_support_radius(r0_, s.t, constants_);
  m.support_slack = kAllowance * m.support_bound - m.max_radius;
  m.printed_radius = support_radius(r0_, s.t, constants_);
  m.printed_slack = kAllowance * m.printed_radius - m.max_radius;
  m.field_max = max_abs(s.grid.values());

  auto fail = [&](const std::string& what) {
    std::ostringstream os;
    os << "step " << s.step << " t=" << format_real(s.t) << ": " << what;
    throw InvariantViolation(os.str());
  };
  if (enforce_velocity_ && m.velocity_slack < 0.0)
    fail("max speed " + format_real(m.max_speed) + " exceeds velocity bound " +
         format_real(m.velocity_bound));
  if (m.support_slack < 0.0)
    fail("phase radius " + format_real(m.max_radius) + " exceeds support bound " +
         format_real(m.support_bound));
  if (2.0 * m.max_speed > cert_radius_)
    fail("velocity spread " + format_real(2.0 * m.max_speed) +
         " leaves the kernel certification ball " + format_real(cert_radius_));
  return m;
}

Dynamics::Dynamics(Model model, int threads) : model_(std::move(model)), threads_(std::max(threads, 1)) {}

Eigen::MatrixXd Dynamics::acceleration(const Eigen::MatrixXd& xq, const Eigen::MatrixXd& vq,
                                       const Eigen::MatrixXd& x, const Eigen::MatrixXd& v,
                                       const Eigen::VectorXd& w, const ChemGrid& grid,
                                       const Eigen::MatrixXd& nodal) const {
  const Index d = xq.rows();
  const Index nq = xq.cols();
  const Index n = x.cols();
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(d, nq);
  const auto& kernel = model_.kernel;
  const bool pairwise = !kernel.is_zero();
  Sorted s;
  Eigen::MatrixXd xt, vt;
  if (pairwise) {
    s = sort_sources(x, v, w);
    xt = s.x.transpose();
    vt = s.v.transpose();
  }
  const double beta = kernel.is_cucker_smale() ? kernel.params().beta : 0.0;
  const bool gradient = model_.eta != 0.0 && nodal.size() > 0;
  const bool force = !model_.force.is_zero();

  parallel_for(nq, threads_, [&](Index i) {
    Eigen::VectorXd a = Eigen::VectorXd::Zero(d);
    if (pairwise) {
      if (kernel.is_cucker_smale() && d == 1) {
        a(0) = beta * cs_sum_1d(kernel, xq(0, i), vq(0, i), xt.data(), vt.data(), s.w.data(), n);
      } else if (kernel.is_cucker_smale()) {
        double acc[3] = {0.0, 0.0, 0.0};
        for (Index j = 0; j < n; ++j) {
          double dx2 = 0.0;
          for (Index k = 0; k < d; ++k) {
            const double dx = xq(k, i) - s.x(k, j);
            dx2 += dx * dx;
          }
          const double c = s.w(j) * kernel.weight(dx2);
          for (Index k = 0; k < d; ++k) acc[k] += c * (s.v(k, j) - vq(k, i));
        }
        for (Index k = 0; k < d; ++k) a(k) = beta * acc[k];
      } else {
        for (Index j = 0; j < n; ++j)
          a += s.w(j) * kernel(vq.col(i) - s.v.col(j), xq.col(i) - s.x.col(j));
      }
    }
    if (gradient) a += model_.eta * interpolate_gradient(grid, nodal, xq.col(i));
    if (force) a += model_.force(xq.col(i));
    out.col(i) = a;
  });
  return out;
}

Eigen::MatrixXd Dynamics::particle_rhs(const ParticleEnsemble& e, const ChemGrid& grid) const {
  const Eigen::MatrixXd nodal = uses_gradient() ? nodal_gradient(grid) : Eigen::MatrixXd();
  return acceleration(e.positions(), e.velocities(), e.positions(), e.velocities(), e.weights(),
                      grid, nodal);
}

SimState Dynamics::step(const SimState& s, double dt) const {
  const auto& x0 = s.ensemble.positions();
  const auto& v0 = s.ensemble.velocities();
  const auto& w = s.ensemble.weights();
  const Eigen::MatrixXd nodal = uses_gradient() ? nodal_gradient(s.grid) : Eigen::MatrixXd();
  auto acc = [&](const Eigen::MatrixXd& x, const Eigen::MatrixXd& v) {
    return acceleration(x, v, x, v, w, s.grid, nodal);
  };
  const double h = 0.5 * dt;
  const Eigen::MatrixXd a1 = acc(x0, v0);
  const Eigen::MatrixXd x1 = x0 + h * v0, v1 = v0 + h * a1;
  const Eigen::MatrixXd a2 = acc(x1, v1);
  const Eigen::MatrixXd x2 = x0 + h * v1, v2 = v0 + h * a2;
  const Eigen::MatrixXd a3 = acc(x2, v2);
  const Eigen::MatrixXd x3 = x0 + dt * v2, v3 = v0 + dt * a3;
  const Eigen::MatrixXd a4 = acc(x3, v3);
  Eigen::MatrixXd xn = x0 + (dt / 6.0) * (v0 + 2.0 * v1 + 2.0 * v2 + v3);
  Eigen::MatrixXd vn = v0 + (dt / 6.0) * (a1 + 2.0 * a2 + 2.0 * a3 + a4);

  SimState out{static_cast<double>(s.step + 1) * dt, ParticleEnsemble(xn, vn, w), s.grid, s.step + 1};
  if (!model_.bump.is_zero() || model_.phi_in.kind != InitialField::Kind::Zero) {
    const Eigen::MatrixXd mid = 0.5 * (x0 + xn);
    out.grid = field_step(s.grid, mid, w, model_.bump, dt);
  }
  return out;
}

double Trajectory::min_velocity_slack() const {
  double m = std::numeric_limits<double>::infinity();
  for (const auto& s : monitor) m = std::min(m, s.velocity_slack);
  return m;
}

double Trajectory::min_support_slack() const {
  double m = std::numeric_limits<double>::infinity();
  for (const auto& s : monitor) m = std::min(m, s.support_slack);
  return m;
}

SimState initial_state(const SimConfig& config, const Model& model, ParticleEnsemble ensemble) {
  require(ensemble.dim() == config.dim, "ensemble dimension does not match the config");
  return SimState{0.0, std::move(ensemble), initial_grid(config, model), 0};
}

Trajectory simulate(const SimConfig& config, const ParticleEnsemble& initial, int threads) {
  const Model model = make_model(config);
  const Dynamics dyn(model, threads);
  Trajectory tr;
  tr.constants = bound_constants(config, model, config.horizon);
  tr.steps = config.steps();
  const StepMonitor monitor(tr.constants, model, initial);
  tr.initial_radius = monitor.initial_radius();

  SimState state = initial_state(config, model, initial);
  tr.monitor.push_back(monitor.observe(state));
  tr.states.push_back(state);
  for (Index k = 0; k < tr.steps; ++k) {
    state = dyn.step(state, config.dt);
    tr.monitor.push_back(monitor.observe(state));
    const bool last = k + 1 == tr.steps;
    const bool report = config.report_every > 0 && (k + 1) % config.report_every == 0;
    if (report || last) tr.states.push_back(state);
  }
  return tr;
}

Trajectory simulate(const SimConfig& config, std::uint64_t replicate, int threads) {
  return simulate(config, initial_ensemble(config, config.particles, replicate), threads);
}

Trajectory vlasov_reference(const SimConfig& config, Index M, int threads) {
  require(config.cloud.empty(), "the Vlasov reference needs an analytic initial density");
  return simulate(config, quadrature_initial(config.initial, config.dim, M), threads);
}

CoupledSeries coupled_pair_evolution(const WeightedCloud& rho1, const WeightedCloud& rho2,
                                     const TransportPlan& plan, const SimConfig& config,
                                     int threads) {
  const Index d = config.dim;
  require(rho1.dim() == 2 * d && rho2.dim() == 2 * d, "clouds must live in phase space R^2d");
  const double residual = marginal_residual(plan, rho1, rho2);
  if (!(residual < 1e-10))
    throw DomainError("plan marginal residual " + format_real(residual) + " exceeds 1e-10");

  std::vector<Index> keep;
  double total = 0.0;
  for (Index k = 0; k < plan.size(); ++k)
    if (plan.mass[static_cast<std::size_t>(k)] > 0.0) {
      keep.push_back(k);
      total += plan.mass[static_cast<std::size_t>(k)];
    }
  const auto n = static_cast<Index>(keep.size());
  require(n > 0, "plan carries no mass");
  Eigen::MatrixXd z1(2 * d, n), z2(2 * d, n);
  Eigen::VectorXd w(n);
  for (Index c = 0; c < n; ++c) {
    const auto k = static_cast<std::size_t>(keep[static_cast<std::size_t>(c)]);
    z1.col(c) = rho1.points.col(plan.source[k]);
    z2.col(c) = rho2.points.col(plan.target[k]);
    w(c) = plan.mass[k] / total;
  }

  const Model model = make_model(config);
  const Dynamics dyn(model, threads);
  const BoundConstants consts = bound_constants(config, model, config.horizon);
  const double L = consts.Lprime() + model.eta * consts.lip_grad_phi_in;
  const double rate = 2.0 * (1.0 + L * L);

  SimState s1 = initial_state(config, model, ParticleEnsemble(z1.topRows(d), z1.bottomRows(d), w));
  SimState s2 = initial_state(config, model, ParticleEnsemble(z2.topRows(d), z2.bottomRows(d), w));
  const StepMonitor m1(consts, model, s1.ensemble);
  const StepMonitor m2(consts, model, s2.ensemble);

  auto distance = [&] {
    const Eigen::VectorXd sq =
        (s1.ensemble.positions() - s2.ensemble.positions()).colwise().squaredNorm().transpose() +
        (s1.ensemble.velocities() - s2.ensemble.velocities()).colwise().squaredNorm().transpose();
    return w.dot(sq);
  };
  auto mismatch = [&] {
    const auto& y = s2.ensemble.positions();
    const auto& xi = s2.ensemble.velocities();
    const Eigen::MatrixXd f1 =
        dyn.acceleration(y, xi, s1.ensemble.positions(), s1.ensemble.velocities(), w, s1.grid,
                         dyn.uses_gradient() ? nodal_gradient(s1.grid) : Eigen::MatrixXd());
    const Eigen::MatrixXd f2 = dyn.particle_rhs(s2.ensemble, s2.grid);
    return w.dot((f1 - f2).colwise().squaredNorm().transpose());
  };

  CoupledSeries out;
  out.rate = rate;
  out.atoms = n;
  const double dt = config.dt;
  const double growth = std::exp(rate * dt);
  double env = distance();
  double g = mismatch();
  out.samples.push_back({0.0, env, env, g});
  for (Index k = 0; k < config.steps(); ++k) {
    s1 = dyn.step(s1, dt);
    s2 = dyn.step(s2, dt);
    m1.observe(s1);
    m2.observe(s2);
    const double g_next = mismatch();
    env = growth * env + dt * (growth * g + g_next);
    g = g_next;
    const bool report = config.report_every == 0 || (k + 1) % config.report_every == 0 ||
                        k + 1 == config.steps();
    if (report) out.samples.push_back({s1.t, distance(), env, g});
  }
  return out;
}

std::vector<Eigen::MatrixXd> flow_sensitivity_series(const SimConfig& config, const ParticleEnsemble& initial,
                                                     Index j, const std::vector<double>& times, double eps,
                                                     int threads) {
  const Index d = config.dim, n = initial.size();
  require(j >= 0 && j < n, "particle index out of range");
  if (eps <= 0.0) eps = 1e-5 * std::max(initial.max_phase_norm(), 1e-300);
  std::vector<Index> steps;
  for (double t : times) {
    require(t >= 0.0, "time must be nonnegative");
    const auto s = static_cast<Index>(std::llround(t / config.dt));
    require(std::abs(static_cast<double>(s) * config.dt - t) <= 1e-9 * std::max(1.0, t),
            "t must be a multiple of dt");
    require(steps.empty() || s >= steps.back(), "times must be ascending");
    steps.push_back(s);
  }
  const Model model = make_model(config);
  const Dynamics dyn(model, threads);

  // Phase coordinates of every particle at each requested time.
  auto run = [&](const Eigen::MatrixXd& x, const Eigen::MatrixXd& v) {
    std::vector<Eigen::VectorXd> out;
    SimState s = initial_state(config, model, ParticleEnsemble(x, v, initial.weights()));
    Index done = 0;
    for (Index target : steps) {
      for (; done < target; ++done) s = dyn.step(s, config.dt);
      Eigen::VectorXd z(2 * d * n);
      for (Index i = 0; i < n; ++i)
        z.segment(2 * d * i, 2 * d) << s.ensemble.positions().col(i), s.ensemble.velocities().col(i);
      out.push_back(std::move(z));
    }
    return out;
  };

  std::vector<Eigen::MatrixXd> J(times.size(), Eigen::MatrixXd(2 * d * n, 2 * d));
  for (Index c = 0; c < 2 * d; ++c) {
    Eigen::MatrixXd xp = initial.positions(), vp = initial.velocities();
    Eigen::MatrixXd xm = xp, vm = vp;
    if (c < d) {
      xp(c, j) += eps;
      xm(c, j) -= eps;
    } else {
      vp(c - d, j) += eps;
      vm(c - d, j) -= eps;
    }
    const auto zp = run(xp, vp), zm = run(xm, vm);
    for (std::size_t k = 0; k < times.size(); ++k) J[k].col(c) = (zp[k] - zm[k]) / (2.0 * eps);
  }
  return J;
}

Eigen::MatrixXd flow_sensitivity(const SimConfig& config, const ParticleEnsemble& initial, Index i,
                                 Index j, double t, double eps, int threads) {
  require(i >= 0 && i < initial.size(), "particle index out of range");
  const Index d = config.dim;
  return flow_sensitivity_series(config, initial, j, {t}, eps, threads)[0].middleRows(2 * d * i, 2 * d);
}

}  // namespace mfcl
