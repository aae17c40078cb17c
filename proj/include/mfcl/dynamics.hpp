#pragma once

#include <cstdint>
#include <vector>

#include "mfcl/config.hpp"
#include "mfcl/fields.hpp"
#include "mfcl/transport.hpp"

namespace mfcl {

struct SimState {
  double t = 0.0;
  ParticleEnsemble ensemble;
  ChemGrid grid;
  Index step = 0;
};

/// Per-step bound audit. Slacks are bound * 1.01 - measured.
struct MonitorSample {
  double t = 0.0;
  double max_speed = 0.0;
  double velocity_bound = 0.0;
  double velocity_slack = 0.0;
  double max_radius = 0.0;
  double support_bound = 0.0;
  double support_slack = 0.0;
  /// R^t = exp(c_R t)(R0 + c_R), reported but not enforced.
  double printed_radius = 0.0;
  double printed_slack = 0.0;
  double field_max = 0.0;
};

class StepMonitor {
 public:
  static constexpr double kAllowance = 1.01;

  StepMonitor(const BoundConstants& constants, const Model& model, const ParticleEnsemble& initial);

  /// Throws InvariantViolation when an enforced bound fails.
  MonitorSample observe(const SimState& state) const;

  double initial_speed() const { return v0_; }
  double initial_radius() const { return r0_; }
  bool enforces_velocity() const { return enforce_velocity_; }

 private:
  BoundConstants constants_;
  double v0_;
  double r0_;
  bool enforce_velocity_;
  double cert_radius_;
};

/// Right-hand side and time stepper for the particle system with the
/// chemoattractant field frozen over each step.
class Dynamics {
 public:
  explicit Dynamics(Model model, int threads = 1);

  const Model& model() const { return model_; }
  int threads() const { return threads_; }

  /// Mean-field acceleration at query points (xq, vq) generated by the
  /// weighted cloud (x, v, w) and the field with nodal gradient `nodal`
  /// (ignored when empty). Sources are summed in value order.
  Eigen::MatrixXd acceleration(const Eigen::MatrixXd& xq, const Eigen::MatrixXd& vq,
                               const Eigen::MatrixXd& x, const Eigen::MatrixXd& v,
                               const Eigen::VectorXd& w, const ChemGrid& grid,
                               const Eigen::MatrixXd& nodal) const;

  /// F_i = sum_j w_j gamma(v_i - v_j, x_i - x_j) + eta grad phi(x_i) + F_ext(x_i).
  Eigen::MatrixXd particle_rhs(const ParticleEnsemble& ensemble, const ChemGrid& grid) const;

  /// RK4 particle substep, then field_step with the midpoint positions.
  SimState step(const SimState& state, double dt) const;

  bool uses_gradient() const { return model_.eta != 0.0; }

 private:
  Model model_;
  int threads_;
};

struct Trajectory {
  std::vector<SimState> states;
  std::vector<MonitorSample> monitor;
  BoundConstants constants;
  double initial_radius = 0.0;
  Index steps = 0;

  const SimState& final_state() const { return states.back(); }
  double min_velocity_slack() const;
  double min_support_slack() const;
};

SimState initial_state(const SimConfig& config, const Model& model, ParticleEnsemble ensemble);

/// Runs config.horizon / config.dt steps from the given ensemble, auditing
/// bounds after every step.
Trajectory simulate(const SimConfig& config, const ParticleEnsemble& initial, int threads = 1);
Trajectory simulate(const SimConfig& config, std::uint64_t replicate = 0, int threads = 1);

/// Characteristics of the Vlasov equation on a weighted quadrature cloud of
/// M points.
Trajectory vlasov_reference(const SimConfig& config, Index M, int threads = 1);

struct CouplingSample {
  double t = 0.0;
  double distance = 0.0;
  double envelope = 0.0;
  double mismatch = 0.0;
};

struct CoupledSeries {
  std::vector<CouplingSample> samples;
  /// L1 = 2 (1 + L^2) used in the envelope.
  double rate = 0.0;
  Index atoms = 0;
};

/// Expands the plan into matched atom pairs, evolves both weighted clouds
/// with their own fields and reports D(t) = sum m_k |z1_k - z2_k|^2 against
/// exp(L1 t) D(0) + 2 int exp(L1 (t - s)) mismatch(s) ds, where mismatch is
/// sum m_k |F1 - F2|^2 at the atoms of the second system.
CoupledSeries coupled_pair_evolution(const WeightedCloud& rho1, const WeightedCloud& rho2,
                                     const TransportPlan& plan, const SimConfig& config,
                                     int threads = 1);

/// Central-difference estimate of d z_i(t) / d z_j(0) as a 2d x 2d block,
/// rows (x_i, v_i), columns (x_j, v_j). eps <= 0 selects 1e-5 R0.
Eigen::MatrixXd flow_sensitivity(const SimConfig& config, const ParticleEnsemble& initial,
                                 Index i, Index j, double t, double eps = 0.0, int threads = 1);

/// Same estimate for every particle i at each of `times` (ascending multiples
/// of dt). Entry k stacks the N blocks: rows 2d i .. 2d i + 2d - 1 hold i.
std::vector<Eigen::MatrixXd> flow_sensitivity_series(const SimConfig& config, const ParticleEnsemble& initial,
                                                     Index j, const std::vector<double>& times,
                                                     double eps = 0.0, int threads = 1);

}  // namespace mfcl
