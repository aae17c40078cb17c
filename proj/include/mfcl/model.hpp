#pragma once

#include <cstdint>
#include <functional>

#include "mfcl/types.hpp"

namespace mfcl {

// Lipschitz constants of vector fields follow the root-sum-square
// convention: Lip(f) = sqrt(sum_k Lip(f_k)^2).

/// Pairwise interaction gamma(dv, dx) with dv = v_i - v_j, dx = x_i - x_j.
/// The Cucker-Smale form is -beta * (1 + |dx|^2 / R^2)^(-sigma) * dv, so that
/// summing it over j reproduces the usual alignment force.
class AlignmentKernel {
 public:
  using Evaluator =
      std::function<Eigen::VectorXd(const Eigen::VectorXd& dv, const Eigen::VectorXd& dx)>;

  struct CuckerSmale {
    double beta = 1.0;
    double length = 1.0;
    double sigma = 1.0;
  };

  /// gamma == 0.
  static AlignmentKernel zero(int dim);
  /// Lipschitz constant certified on the ball of radius cert_radius in (dv, dx).
  static AlignmentKernel cucker_smale(int dim, CuckerSmale params, double cert_radius);
  /// User-supplied kernel; Lip is estimated from dense sampling on the ball.
  static AlignmentKernel tabulated(int dim, Evaluator f, double cert_radius,
                                   std::uint64_t seed = 7);

  int dim() const { return dim_; }
  bool is_cucker_smale() const { return !table_; }
  bool is_zero() const { return !table_ && cs_.beta == 0.0; }
  const CuckerSmale& params() const { return cs_; }
  double lip() const { return lip_; }
  double cert_radius() const { return cert_radius_; }

  /// sup |gamma| over the centered ball of the given radius in (dv, dx).
  double sup_on_ball(double radius) const;

  /// Cucker-Smale communication weight as a function of |dx|^2.
  double weight(double dx2) const {
    const double u = dx2 * inv_len2_;
    if (cs_.sigma == 1.0) return 1.0 / (1.0 + u);
    if (cs_.sigma == 0.5) return 1.0 / std::sqrt(1.0 + u);
    if (cs_.sigma == 0.0) return 1.0;
    return std::exp(-cs_.sigma * std::log1p(u));
  }

  template <typename DV, typename DX>
  Eigen::VectorXd operator()(const Eigen::MatrixBase<DV>& dv,
                             const Eigen::MatrixBase<DX>& dx) const {
    if (table_) return table_(dv.eval(), dx.eval());
    return (-cs_.beta * weight(dx.squaredNorm())) * dv;
  }

 private:
  AlignmentKernel() = default;

  int dim_ = 1;
  CuckerSmale cs_{};
  double inv_len2_ = 1.0;
  double lip_ = 0.0;
  double cert_radius_ = 0.0;
  Evaluator table_;
};

/// Checked single-pair evaluation of the Cucker-Smale term.
Eigen::VectorXd cs_kernel_eval(const AlignmentKernel& kernel, const Eigen::VectorXd& dv,
                               const Eigen::VectorXd& dx);

/// Quartic bump chi(x) = c (1 - |x|^2 / r^2)^2 on |x| < r, zero outside.
class BumpSource {
 public:
  BumpSource(int dim, double radius, double amplitude);

  int dim() const { return dim_; }
  double radius() const { return radius_; }
  double amplitude() const { return amplitude_; }
  bool is_zero() const { return amplitude_ == 0.0; }

  /// Value as a function of |x|^2.
  double value_r2(double r2) const {
    if (r2 >= radius2_) return 0.0;
    const double s = 1.0 - r2 * inv_radius2_;
    return amplitude_ * s * s;
  }
  /// grad chi(x) = g(|x|^2) * x.
  double grad_factor_r2(double r2) const {
    if (r2 >= radius2_) return 0.0;
    return -4.0 * amplitude_ * inv_radius2_ * (1.0 - r2 * inv_radius2_);
  }

  template <typename Derived>
  double value(const Eigen::MatrixBase<Derived>& x) const {
    return value_r2(x.squaredNorm());
  }
  template <typename Derived>
  Eigen::VectorXd gradient(const Eigen::MatrixBase<Derived>& x) const {
    return grad_factor_r2(x.squaredNorm()) * x;
  }

  double lip_chi() const { return lip_chi_; }
  double lip_grad_chi() const { return lip_grad_chi_; }
  /// Integral of chi over R^d.
  double mass() const;

 private:
  int dim_;
  double radius_;
  double amplitude_;
  double radius2_;
  double inv_radius2_;
  double lip_chi_ = 0.0;
  double lip_grad_chi_ = 0.0;
};

double bump_eval(const BumpSource& bump, const Eigen::VectorXd& x);
Eigen::VectorXd bump_grad(const BumpSource& bump, const Eigen::VectorXd& x);

struct BumpLipschitz {
  double lip_chi;
  double lip_grad_chi;
};

/// Certified bounds from dense radial sampling with a 1% safety factor.
BumpLipschitz bump_lipschitz_constants(const BumpSource& bump);

/// External force field with its Lipschitz constant and sup norm on the box.
class ExternalForce {
 public:
  using Evaluator = std::function<Eigen::VectorXd(const Eigen::VectorXd& x)>;

  static ExternalForce zero(int dim);
  /// F(x) = -stiffness * x.
  static ExternalForce harmonic(int dim, double stiffness, double box_half_width);
  /// Lip and sup estimated by sampling on [-a, a]^d.
  static ExternalForce tabulated(int dim, Evaluator f, double box_half_width,
                                 std::uint64_t seed = 11);

  int dim() const { return dim_; }
  bool is_zero() const { return kind_ == Kind::Zero; }
  double lip() const { return lip_; }
  double sup_norm() const { return sup_; }
  double stiffness() const { return stiffness_; }

  template <typename Derived>
  Eigen::VectorXd operator()(const Eigen::MatrixBase<Derived>& x) const {
    switch (kind_) {
      case Kind::Zero:
        return Eigen::VectorXd::Zero(x.size());
      case Kind::Harmonic:
        return -stiffness_ * x;
      case Kind::Table:
        break;
    }
    return table_(x.eval());
  }

 private:
  enum class Kind { Zero, Harmonic, Table };
  ExternalForce() = default;

  int dim_ = 1;
  Kind kind_ = Kind::Zero;
  double stiffness_ = 0.0;
  double lip_ = 0.0;
  double sup_ = 0.0;
  Evaluator table_;
};

/// Explicit constants of the stability estimates, evaluated for a horizon T.
struct BoundConstants {
  double lip_kernel = 0.0;
  double lip_chi = 0.0;
  double lip_grad_chi = 0.0;
  double lip_force = 0.0;
  double sup_force = 0.0;
  double lip_grad_phi_in = 0.0;
  double sup_grad_phi_in = 0.0;
  double eta = 0.0;
  double horizon = 0.0;

  double gamma0() const { return lip_kernel + lip_grad_chi; }
  double gamma1() const { return lip_kernel; }
  double gamma2() const { return lip_grad_chi; }
  double Lprime() const { return lip_kernel + lip_force + horizon * eta * lip_grad_chi; }
  double Mprime() const { return lip_kernel + sup_force + eta * lip_chi + lip_grad_phi_in; }
  double Kprime() const { return lip_kernel + eta * lip_chi; }
  /// Exponential rate of the support radius.
  double growth_rate() const { return lip_kernel + sup_force + eta * lip_chi; }
  /// Rate in the coupling-cost differential inequality, 2 + 2 L'^2.
  double coupling_rate() const { return 2.0 + 2.0 * Lprime() * Lprime(); }

  /// Gamma(t) = t (2 + 2 L'^2 + (2 K')^2 exp(2 t (1 + L'^2))).
  double Gamma(double t) const {
    const double L = Lprime();
    const double K = Kprime();
    return t * (2.0 + 2.0 * L * L + 4.0 * K * K * std::exp(2.0 * t * (1.0 + L * L)));
  }
  /// Bound on the squared W2 ratio, 2 exp(Gamma(t)).
  double dobrushin_factor(double t) const { return 2.0 * std::exp(Gamma(t)); }
  /// Flow-derivative bound exp((gamma1 + gamma2 T) t).
  double flow_derivative_bound(double t) const {
    return std::exp((gamma1() + gamma2() * horizon) * t);
  }
  /// max_i |v_i(t)| <= v0 exp(2 gamma0 t).
  double velocity_bound(double v0, double t) const { return v0 * std::exp(2.0 * gamma0() * t); }
};

BoundConstants bound_constants(const AlignmentKernel& kernel, const BumpSource& bump,
                               const ExternalForce& force, double eta, double horizon,
                               double lip_grad_phi_in = 0.0, double sup_grad_phi_in = 0.0);

/// R^t = exp(c_R t) (R0 + c_R).
double support_radius(double R0, double t, const BoundConstants& c);

/// Phase-space radius bound that also accounts for free streaming (x' = v):
/// R(t) <= exp(a t) R0 + (b / a)(exp(a t) - 1), a = 1 + 2 Lip(gamma),
/// b = |F_ext|_inf + eta (|grad phi_in|_inf + T Lip(chi)).
double streaming_support_radius(double R0, double t, const BoundConstants& c);

/// Sampling rate shape: N^-1/2 (d = 1), N^-1/2 log N (d = 2), N^-1/d (d > 2).
double rate_cd(Index N, int d);

}  // namespace mfcl
