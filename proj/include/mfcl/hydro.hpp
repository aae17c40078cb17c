#pragma once

#include <cstdint>

#include "mfcl/config.hpp"
#include "mfcl/density.hpp"
#include "mfcl/fields.hpp"

namespace mfcl {

/// Pressureless Euler state on m periodic cells of [-a, a) with a chemical
/// field on its own grid over the same box.
struct EulerState {
  static constexpr double kDensityFloor = 1e-12;

  double half_width = 1.0;
  Eigen::VectorXd mu;
  Eigen::VectorXd q;
  ChemGrid psi;
  double t = 0.0;

  Index cells() const { return mu.size(); }
  double spacing() const { return 2.0 * half_width / static_cast<double>(mu.size()); }
  double center(Index k) const { return -half_width + (static_cast<double>(k) + 0.5) * spacing(); }
  Eigen::VectorXd centers() const;
  /// q / mu, zero in vacuum cells.
  Eigen::VectorXd velocity() const;
  double mass() const { return mu.sum() * spacing(); }
  double momentum() const { return q.sum() * spacing(); }
};

/// Cell averages of a one-dimensional monokinetic spec, q = mu u(center).
EulerState euler_initial(const InitialSpec& spec, double half_width, Index cells, const ChemGrid& psi);
EulerState euler_initial(const SimConfig& config, Index cells);

/// Local Lax-Friedrichs update of (mu, q), then alignment, chemotaxis and
/// external-force sources with the field frozen, then a field_step driven by
/// the time-averaged density. Throws DomainError on a CFL number above 0.5
/// and InvariantViolation on negative density below -1e-12.
EulerState euler_step(const EulerState& state, double dt, const Model& model);

/// max |du/dx| over adjacent non-vacuum cells.
double max_velocity_gradient(const EulerState& state);

struct EulerRun {
  EulerState state;
  Index steps = 0;
  bool crossed = false;
  double crossing_time = 0.0;
};

/// Steps to t_end, stopping early once max |du/dx| > 1 / (10 dt).
EulerRun run_euler(EulerState state, double dt, double t_end, const Model& model);

/// x_i iid from the position marginal, v_i = u(x_i), uniform weights.
ParticleEnsemble monokinetic_sample(const InitialSpec& spec, Index n, std::uint64_t seed,
                                    std::uint64_t replicate = 0);

/// Phase-space W2 between the ensemble and the graph measure with atoms
/// (x_k, u_k) of mass mu_k h.
double monokinetic_distance(const ParticleEnsemble& ensemble, const EulerState& state);

}  // namespace mfcl
