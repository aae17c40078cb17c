#pragma once

#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "mfcl/config.hpp"
#include "mfcl/dynamics.hpp"
#include "mfcl/hydro.hpp"
#include "mfcl/transport.hpp"

namespace mfcl {

struct RateRow {
  Index n = 0;
  Index replicates = 0;
  double mean = 0.0;
  double std_error = 0.0;
};

struct SlopeFit {
  double slope = 0.0;
  double std_error = 0.0;
  double intercept = 0.0;
};

struct RateTable {
  std::string id;
  int dim = 1;
  std::vector<RateRow> rows;
  /// Per-replicate samples, rows[k] <-> samples[k].
  std::vector<std::vector<double>> samples;
  SlopeFit fit;
  /// Least-squares slope of log rate_cd over the same N.
  double theory_slope = 0.0;

  bool strictly_decreasing() const;
};

/// Ordinary least squares of log mean on log N; needs at least 3 rows.
SlopeFit fit_slope(const RateTable& table);
SlopeFit fit_slope(const std::vector<double>& n, const std::vector<double>& mean);

/// Slope of log rate_cd(N, d) over the given sizes.
double theory_slope(const std::vector<Index>& sizes, int dim);

/// Aggregated bound slacks over every run of an experiment.
struct MonitorTally {
  double min_velocity_slack = std::numeric_limits<double>::infinity();
  double min_support_slack = std::numeric_limits<double>::infinity();
  double min_printed_slack = std::numeric_limits<double>::infinity();
  Index runs = 0;

  void add(const Trajectory& tr);
  void merge(const MonitorTally& other);
};

/// Squared W2 between two phase-space ensembles; coordinates that are the
/// same constant in both clouds are dropped first.
double phase_w2_squared(const ParticleEnsemble& a, const ParticleEnsemble& b);

/// E W2(mu_Z, rho)^2 for iid draws against an M-point quadrature of rho.
/// Throws DomainError when the quadrature floor exceeds 10% of the smallest
/// measured distance.
RateTable fg_rate_experiment(const InitialSpec& rho, int dim, const std::vector<Index>& sizes,
                             Index replicates, std::uint64_t seed, Index reference_size,
                             int threads = 1);

struct MeanFieldStudy {
  RateTable distance;
  RateTable gap;
  MonitorTally monitor;
};

/// Particle runs against one Vlasov reference at t* = experiment.time:
/// phase-space W2^2 and the squared sup-norm gap of the nodal field gradients.
MeanFieldStudy meanfield_study(const SimConfig& config, int threads = 1);
RateTable meanfield_experiment(const SimConfig& config, int threads = 1);
RateTable chem_gap_experiment(const SimConfig& config, int threads = 1);

struct FrozenGapSample {
  Index n = 0;
  Index replicate = 0;
  double gap = 0.0;
  double w2 = 0.0;
  double bound = 0.0;
};

/// Frozen particles (no alignment, no chemotaxis, v = 0): the field gap at
/// t* against t* Lip(grad chi) W2(mu_Z, rho_in), one sample per replicate.
std::vector<FrozenGapSample> frozen_gap_check(const SimConfig& config, int threads = 1);

struct DobrushinSample {
  double t = 0.0;
  double measured = 0.0;
  double bound = 0.0;
};

/// W2(rho1^t, rho2^t)^2 against 2 exp(Gamma(t)) W2(rho1^0, rho2^0)^2 at every
/// reported step.
std::vector<DobrushinSample> dobrushin_experiment(const ParticleEnsemble& rho1,
                                                  const ParticleEnsemble& rho2,
                                                  const SimConfig& config, int threads = 1,
                                                  MonitorTally* tally = nullptr);

struct MarginalAtom {
  Eigen::VectorXd z;
  /// Mass numerator over N! (first marginal) and over N (empirical measure).
  long long lhs_count = 0;
  long long rhs_count = 0;
};

struct MarginalReport {
  int n = 0;
  long long factorial = 1;
  std::vector<MarginalAtom> atoms;
  bool equal = false;
};

/// First marginal of the symmetrized delta of Z against mu_Z, by exact
/// integer bookkeeping. Z is 2d x N with N <= 5.
MarginalReport marginal_lemma_check(const Eigen::MatrixXd& Z);

struct EulerCompareRow {
  Index n = 0;
  Index cells = 0;
  double spacing = 0.0;
  double mean = 0.0;
  double std_error = 0.0;
};

struct EulerCompare {
  std::vector<EulerCompareRow> by_n;
  std::vector<EulerCompareRow> by_h;
  double mass_error = 0.0;
  bool crossed = false;
  MonitorTally monitor;
};

/// Mean squared monokinetic_distance at t* = experiment.time between particle
/// runs and Euler solutions: over `sizes` at spacing `h_fixed`, and over
/// `spacings` at the largest size.
EulerCompare euler_compare(const SimConfig& config, const std::vector<Index>& sizes, double h_fixed,
                           const std::vector<double>& spacings, Index replicates,
                           int threads = 1);

/// Euler time step: config.dt capped at CFL 0.25 for the initial speed,
/// rounded so that t* is a whole number of steps.
double euler_time_step(const SimConfig& config, double spacing, double t_end);

/// Largest |momentum(t) - momentum(0)| over an Euler run.
double euler_momentum_drift(const SimConfig& config, Index cells, double t_end);

/// Config with horizon set to experiment.time, revalidated.
SimConfig at_experiment_time(SimConfig config);

}  // namespace mfcl
