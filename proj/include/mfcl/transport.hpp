#pragma once

#include <string>
#include <vector>

#include "mfcl/ensemble.hpp"

namespace mfcl {

/// Weighted atoms in R^D, stored column-wise.
struct WeightedCloud {
  Eigen::MatrixXd points;
  Eigen::VectorXd weights;

  Index size() const { return points.cols(); }
  Index dim() const { return points.rows(); }

  static WeightedCloud uniform(Eigen::MatrixXd points);
};

/// (x, v) atoms of an ensemble.
WeightedCloud phase_cloud(const ParticleEnsemble& e);
/// x atoms only.
WeightedCloud position_cloud(const ParticleEnsemble& e);

/// Sparse coupling between two clouds.
struct TransportPlan {
  std::vector<Index> source;
  std::vector<Index> target;
  std::vector<double> mass;
  /// sum mass * |a - b|^p.
  double cost = 0.0;
  /// Largest deviation of a row or column sum from its weight.
  double residual = 0.0;

  Index size() const { return static_cast<Index>(mass.size()); }
};

struct TransportResult {
  double distance = 0.0;
  TransportPlan plan;
  std::string solver;
  /// Zero-weight atoms left out of the solve.
  Index dropped = 0;
};

/// sum mass * |a_i - b_j|^p, recomputed from the plan.
double plan_cost(const TransportPlan& plan, const WeightedCloud& a, const WeightedCloud& b, int p);
double marginal_residual(const TransportPlan& plan, const WeightedCloud& a, const WeightedCloud& b);

/// Equal-size uniform clouds: optimal assignment by shortest augmenting paths.
TransportResult w2_exact_uniform(const WeightedCloud& a, const WeightedCloud& b);

/// General weighted clouds: exact network simplex with column generation.
TransportResult w2_weighted(const WeightedCloud& a, const WeightedCloud& b);
TransportResult w1(const WeightedCloud& a, const WeightedCloud& b);
TransportResult exact_ot(const WeightedCloud& a, const WeightedCloud& b, int p);

/// Exact W2 for one-dimensional clouds by the monotone (quantile) coupling.
TransportResult w2_line(const WeightedCloud& a, const WeightedCloud& b);

/// w2_line for one-dimensional atoms, w2_weighted otherwise.
double w2_distance(const WeightedCloud& a, const WeightedCloud& b);

/// Exhaustive oracle for at most 8 atoms per side: permutations for uniform
/// equal sizes, a dense simplex with Bland's rule otherwise.
TransportResult brute_force_ot(const WeightedCloud& a, const WeightedCloud& b, int p);

struct SinkhornResult {
  /// sqrt(<P, C>) for the entropic plan P (biased upwards).
  double distance = 0.0;
  double epsilon = 0.0;
  double residual = 0.0;
  int iterations = 0;
  bool converged = false;
};

SinkhornResult sinkhorn(const WeightedCloud& a, const WeightedCloud& b, double epsilon,
                        int max_iters, double tol = 1e-9);

/// Configuration cloud of the symmetrized delta (1/N!) sum_sigma delta_{sigma(Z)}:
/// atom s is the configuration (z_{sigma_s(1)}, ..., z_{sigma_s(N)}) with
/// sigma_s the s-th permutation in lexicographic order.
WeightedCloud symmetrized_delta(const Eigen::MatrixXd& atoms);

/// Averages a plan between two configuration clouds over simultaneous
/// relabellings; N <= 5. Throws InvariantViolation if the cost changes.
TransportPlan symmetrize_plan(const TransportPlan& plan, int N, const WeightedCloud& a,
                              const WeightedCloud& b);

/// All permutations of 0..n-1 in lexicographic order.
std::vector<std::vector<int>> permutations(int n);

}  // namespace mfcl
