#include "mfcl/hydro.hpp"

#include <cmath>

#include "mfcl/format.hpp"
#include "mfcl/transport.hpp"

namespace mfcl {

Eigen::VectorXd EulerState::centers() const {
  Eigen::VectorXd c(cells());
  for (Index k = 0; k < cells(); ++k) c(k) = center(k);
  return c;
}

Eigen::VectorXd EulerState::velocity() const {
  Eigen::VectorXd u = Eigen::VectorXd::Zero(cells());
  for (Index k = 0; k < cells(); ++k)
    if (mu(k) > kDensityFloor) u(k) = q(k) / mu(k);
  return u;
}

EulerState euler_initial(const InitialSpec& spec, double half_width, Index cells,
                         const ChemGrid& psi) {
  require(spec.monokinetic, "Euler data must be monokinetic");
  require(cells >= 4 && half_width > 0.0, "need at least 4 cells and a positive box");
  require(spec.position.shape != Marginal::Shape::Point, "Euler density must be absolutely continuous");
  require(psi.dim() == 1 && psi.half_width() == half_width, "field grid must share the 1-d box");
  EulerState s{half_width, Eigen::VectorXd(cells), Eigen::VectorXd(cells), psi, 0.0};
  const double h = s.spacing();
  for (Index k = 0; k < cells; ++k) {
    const double lo = -half_width + static_cast<double>(k) * h;
    s.mu(k) = (spec.position.cdf(lo + h) - spec.position.cdf(lo)) / h;
    s.q(k) = s.mu(k) * spec.profile(s.center(k));
  }
  return s;
}

EulerState euler_initial(const SimConfig& config, Index cells) {
  require(config.dim == 1, "the Euler solver is one-dimensional");
  return euler_initial(config.initial, config.grid.half_width, cells,
                       initial_grid(config, make_model(config)));
}

namespace {

// Atoms of the density for the field source, dropping cells whose bump would
// wrap around the periodic box when they carry negligible mass.
void source_atoms(const EulerState& s, const Eigen::VectorXd& mu, const BumpSource& bump,
                  Eigen::MatrixXd& x, Eigen::VectorXd& w) {
  const double h = s.spacing();
  const double limit = s.half_width - bump.radius();
  std::vector<Index> keep;
  double outside = 0.0;
  for (Index k = 0; k < s.cells(); ++k) {
    if (mu(k) <= EulerState::kDensityFloor) continue;
    if (std::abs(s.center(k)) <= limit)
      keep.push_back(k);
    else
      outside += mu(k) * h;
  }
  if (outside > 1e-12)
    throw DomainError("Euler density mass " + format_real(outside) +
                      " lies within the bump radius of the boundary");
  x.resize(1, static_cast<Index>(keep.size()));
  w.resize(static_cast<Index>(keep.size()));
  for (std::size_t c = 0; c < keep.size(); ++c) {
    x(0, static_cast<Index>(c)) = s.center(keep[c]);
    w(static_cast<Index>(c)) = mu(keep[c]) * h;
  }
}

}  // namespace

double max_velocity_gradient(const EulerState& s) {
  const Eigen::VectorXd u = s.velocity();
  const Index m = s.cells();
  double worst = 0.0;
  for (Index k = 0; k < m; ++k) {
    const Index r = (k + 1) % m;
    if (s.mu(k) > EulerState::kDensityFloor && s.mu(r) > EulerState::kDensityFloor)
      worst = std::max(worst, std::abs(u(r) - u(k)) / s.spacing());
  }
  return worst;
}

EulerState euler_step(const EulerState& s, double dt, const Model& model) {
  const Index m = s.cells();
  const double h = s.spacing();
  const Eigen::VectorXd u = s.velocity();
  const double umax = u.cwiseAbs().maxCoeff();
  if (dt * umax / h > 0.5)
    throw DomainError("CFL number " + format_real(dt * umax / h) + " exceeds 0.5");

  // Interface k carries the flux between cell k and k + 1.
  Eigen::VectorXd fmu(m), fq(m);
  for (Index k = 0; k < m; ++k) {
    const Index r = (k + 1) % m;
    const double alpha = std::max(std::abs(u(k)), std::abs(u(r)));
    fmu(k) = 0.5 * (s.q(k) + s.q(r)) - 0.5 * alpha * (s.mu(r) - s.mu(k));
    fq(k) = 0.5 * (s.q(k) * u(k) + s.q(r) * u(r)) - 0.5 * alpha * (s.q(r) - s.q(k));
  }
  EulerState out = s;
  const double lam = dt / h;
  for (Index k = 0; k < m; ++k) {
    const Index l = (k + m - 1) % m;
    out.mu(k) = s.mu(k) - lam * (fmu(k) - fmu(l));
    out.q(k) = s.q(k) - lam * (fq(k) - fq(l));
  }
  for (Index k = 0; k < m; ++k) {
    if (out.mu(k) < -1e-12)
      throw InvariantViolation("negative density " + format_real(out.mu(k)) + " in cell " +
                               std::to_string(k));
    if (out.mu(k) < 0.0) out.mu(k) = 0.0;
  }

  // Sources evaluated on the transported state with the field frozen.
  const Eigen::VectorXd us = out.velocity();
  Eigen::VectorXd src = Eigen::VectorXd::Zero(m);
  const auto& kernel = model.kernel;
  if (!kernel.is_zero()) {
    std::vector<Index> active;
    for (Index k = 0; k < m; ++k)
      if (out.mu(k) > EulerState::kDensityFloor) active.push_back(k);
    for (std::size_t a = 0; a < active.size(); ++a) {
      const Index k = active[a];
      for (std::size_t b = a + 1; b < active.size(); ++b) {
        const Index l = active[b];
        const double pair = out.mu(k) * out.mu(l) * h;
        const double dx = s.center(k) - s.center(l);
        const double g =
            kernel.is_cucker_smale()
                ? -kernel.params().beta * kernel.weight(dx * dx) * (us(k) - us(l))
                : kernel(Eigen::VectorXd::Constant(1, us(k) - us(l)),
                         Eigen::VectorXd::Constant(1, dx))(0);
        // gamma is odd, so the (l, k) term is the negative of the (k, l) term.
        src(k) += pair * g;
        src(l) -= pair * g;
      }
    }
  }
  if (model.eta != 0.0) {
    const Eigen::MatrixXd nodal = nodal_gradient(s.psi);
    for (Index k = 0; k < m; ++k)
      if (out.mu(k) > 0.0)
        src(k) += model.eta * out.mu(k) *
                  interpolate_gradient(s.psi, nodal, Eigen::VectorXd::Constant(1, s.center(k)))(0);
  }
  if (!model.force.is_zero())
    for (Index k = 0; k < m; ++k)
      src(k) += out.mu(k) * model.force(Eigen::VectorXd::Constant(1, s.center(k)))(0);
  out.q += dt * src;

  if (!model.bump.is_zero() || model.phi_in.kind != InitialField::Kind::Zero) {
    Eigen::MatrixXd x;
    Eigen::VectorXd w;
    source_atoms(s, 0.5 * (s.mu + out.mu), model.bump, x, w);
    out.psi = field_step(s.psi, x, w, model.bump, dt);
  }
  out.t = s.t + dt;
  return out;
}

EulerRun run_euler(EulerState state, double dt, double t_end, const Model& model) {
  EulerRun run{std::move(state)};
  const auto steps = static_cast<Index>(std::llround((t_end - run.state.t) / dt));
  const double t0 = run.state.t;
  for (Index k = 0; k < steps; ++k) {
    if (max_velocity_gradient(run.state) > 1.0 / (10.0 * dt)) {
      run.crossed = true;
      run.crossing_time = run.state.t;
      break;
    }
    run.state = euler_step(run.state, dt, model);
    run.state.t = t0 + static_cast<double>(k + 1) * dt;
    ++run.steps;
  }
  return run;
}

ParticleEnsemble monokinetic_sample(const InitialSpec& spec, Index n, std::uint64_t seed,
                                    std::uint64_t replicate) {
  require(spec.monokinetic, "monokinetic_sample needs a monokinetic spec");
  return sample_initial(spec, 1, n, seed, replicate);
}

double monokinetic_distance(const ParticleEnsemble& e, const EulerState& s) {
  require(e.dim() == 1, "monokinetic_distance is one-dimensional");
  const Eigen::VectorXd u = s.velocity();
  const double h = s.spacing();
  std::vector<Index> keep;
  double total = 0.0;
  for (Index k = 0; k < s.cells(); ++k)
    if (s.mu(k) > 0.0) {
      keep.push_back(k);
      total += s.mu(k) * h;
    }
  require(!keep.empty() && total > 0.0, "Euler state carries no mass");
  WeightedCloud graph{Eigen::MatrixXd(2, static_cast<Index>(keep.size())),
                      Eigen::VectorXd(static_cast<Index>(keep.size()))};
  for (std::size_t c = 0; c < keep.size(); ++c) {
    const auto col = static_cast<Index>(c);
    graph.points(0, col) = s.center(keep[c]);
    graph.points(1, col) = u(keep[c]);
    graph.weights(col) = s.mu(keep[c]) * h / total;
  }
  return w2_weighted(phase_cloud(e), graph).distance;
}

}  // namespace mfcl
