#pragma once

#include <array>
#include <vector>

#include "mfcl/ensemble.hpp"
#include "mfcl/model.hpp"

namespace mfcl {

/// Chemoattractant field on the periodic box [-a, a)^d with n nodes per axis
/// at x_k = -a + k h, h = 2a / n. Values are stored with axis 0 slowest.
class ChemGrid {
 public:
  ChemGrid(int dim, double half_width, Index cells, double diffusion, double decay);

  int dim() const { return dim_; }
  double half_width() const { return half_width_; }
  Index cells() const { return cells_; }
  double spacing() const { return spacing_; }
  Index size() const { return values_.size(); }
  double diffusion() const { return diffusion_; }
  double decay() const { return decay_; }

  const Eigen::VectorXd& values() const { return values_; }
  void set_values(Eigen::VectorXd values);
  ChemGrid with_values(Eigen::VectorXd values) const;

  double node(Index k) const { return -half_width_ + static_cast<double>(k) * spacing_; }
  std::array<Index, 3> unflatten(Index flat) const;
  Index flatten(const std::array<Index, 3>& idx) const;
  Eigen::VectorXd node_point(Index flat) const;

  bool same_geometry(const ChemGrid& other) const;
  bool contains(const Eigen::Ref<const Eigen::VectorXd>& x) const;

 private:
  int dim_;
  double half_width_;
  Index cells_;
  double spacing_;
  double diffusion_;
  double decay_;
  Eigen::VectorXd values_;
};

/// phi_in: zero or a centered Gaussian with closed-form heat evolution.
struct InitialField {
  enum class Kind { Zero, Gaussian };
  Kind kind = Kind::Zero;
  double amplitude = 0.0;
  double width = 1.0;

  double value(const Eigen::Ref<const Eigen::VectorXd>& x) const;
  /// (e^{t D Laplacian} phi_in)(x) on free space.
  double heat(const Eigen::Ref<const Eigen::VectorXd>& x, double diffusion, double t) const;
  double lip_gradient(int dim) const;
  double sup_gradient() const;

  bool operator==(const InitialField&) const = default;
};

ChemGrid initial_grid(int dim, double half_width, Index cells, double diffusion, double decay,
                      const InitialField& phi_in);

/// Grid source sum_j w_j chi(x_node - x_j), accumulated in a fixed order.
Eigen::VectorXd deposit_source(const Eigen::Ref<const Eigen::MatrixXd>& positions,
                               const Eigen::Ref<const Eigen::VectorXd>& weights,
                               const BumpSource& bump, const ChemGrid& grid);
Eigen::VectorXd deposit_source(const ParticleEnsemble& ensemble, const BumpSource& bump,
                               const ChemGrid& grid);

/// Exact spectral step: mode k is multiplied by exp(-kappa dt - D |k|^2 dt).
Eigen::VectorXd diffuse(const ChemGrid& geometry, const Eigen::VectorXd& values, double dt);
ChemGrid diffuse_step(const ChemGrid& grid, double dt);

/// phi <- diffuse(phi, dt) + dt * diffuse(source, dt / 2).
ChemGrid field_step(const ChemGrid& grid, const Eigen::Ref<const Eigen::MatrixXd>& positions,
                    const Eigen::Ref<const Eigen::VectorXd>& weights, const BumpSource& bump,
                    double dt);
ChemGrid field_step(const ChemGrid& grid, const ParticleEnsemble& ensemble,
                    const BumpSource& bump, double dt);

/// Centered-difference gradient at every node, d x size.
Eigen::MatrixXd nodal_gradient(const ChemGrid& grid);

/// Multilinear interpolation of a nodal gradient field at x.
Eigen::VectorXd interpolate_gradient(const ChemGrid& grid, const Eigen::MatrixXd& nodal,
                                     const Eigen::Ref<const Eigen::VectorXd>& x);

Eigen::VectorXd sample_gradient(const ChemGrid& grid, const Eigen::Ref<const Eigen::VectorXd>& x);

/// max over nodes of |grad_h A - grad_h B|.
double grad_gap_sup(const ChemGrid& a, const ChemGrid& b);

/// Particle positions recorded at uniformly spaced times.
struct FieldHistory {
  std::vector<double> times;
  std::vector<Eigen::MatrixXd> positions;
  std::vector<Eigen::VectorXd> weights;

  void record(double t, const ParticleEnsemble& ensemble);
  double spacing() const;
};

/// Free-space Duhamel formula evaluated by trapezoidal quadrature in time and
/// Gauss-Legendre quadrature of the Gaussian-bump convolution (d = 1, 2).
Eigen::VectorXd duhamel_oracle(const FieldHistory& history, const BumpSource& bump,
                               const InitialField& phi_in, double diffusion, double decay,
                               double t, const Eigen::MatrixXd& query);

}  // namespace mfcl
