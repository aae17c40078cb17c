#include "mfcl/model.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "mfcl/rng.hpp"

namespace mfcl {
namespace {

constexpr double kSafety = 1.01;
constexpr int kRadialSamples = 100001;

// Uniform point in the centered ball of R^n.
Eigen::VectorXd ball_point(const CounterRng& rng, std::uint64_t item, Index n, double radius) {
  Eigen::VectorXd z(n);
  for (Index k = 0; k < n; k += 2) {
    const double u1 = rng.uniform(item, static_cast<std::uint64_t>(k));
    const double u2 = rng.uniform(item, static_cast<std::uint64_t>(k + 1));
    const double r = std::sqrt(-2.0 * std::log(u1));
    z(k) = r * std::cos(2.0 * std::numbers::pi * u2);
    if (k + 1 < n) z(k + 1) = r * std::sin(2.0 * std::numbers::pi * u2);
  }
  const double u = rng.uniform(item, static_cast<std::uint64_t>(n + 1));
  return z.normalized() * (radius * std::pow(u, 1.0 / static_cast<double>(n)));
}

// RSS over output components of the largest sampled gradient norm.
template <typename F>
double sampled_lipschitz(F&& f, Index in_dim, Index out_dim, double radius, bool box,
                         std::uint64_t seed) {
  const CounterRng rng(seed, 0);
  Eigen::VectorXd best = Eigen::VectorXd::Zero(out_dim);
  const double step = 1e-6 * std::max(1.0, radius);
  for (std::uint64_t s = 0; s < 4000; ++s) {
    Eigen::VectorXd z(in_dim);
    if (box) {
      for (Index k = 0; k < in_dim; ++k)
        z(k) = radius * (2.0 * rng.uniform(s, static_cast<std::uint64_t>(k)) - 1.0);
    } else {
      z = s == 0 ? Eigen::VectorXd::Zero(in_dim) : ball_point(rng, s, in_dim, radius);
    }
    Eigen::MatrixXd jac(out_dim, in_dim);
    for (Index k = 0; k < in_dim; ++k) {
      Eigen::VectorXd zp = z, zm = z;
      zp(k) += step;
      zm(k) -= step;
      jac.col(k) = (f(zp) - f(zm)) / (2.0 * step);
    }
    best = best.cwiseMax(jac.rowwise().norm());
  }
  return kSafety * best.norm();
}

}  // namespace

AlignmentKernel AlignmentKernel::zero(int dim) {
  AlignmentKernel k;
  k.dim_ = dim;
  k.cs_ = {0.0, 1.0, 0.0};
  return k;
}

AlignmentKernel AlignmentKernel::cucker_smale(int dim, CuckerSmale params, double cert_radius) {
  require(dim >= 1 && dim <= 3, "kernel dimension must be 1, 2 or 3");
  require(params.beta >= 0.0 && params.length > 0.0 && params.sigma >= 0.0,
          "Cucker-Smale parameters need beta >= 0, R > 0, sigma >= 0");
  require(cert_radius > 0.0, "certification radius must be positive");
  AlignmentKernel k;
  k.dim_ = dim;
  k.cs_ = params;
  k.inv_len2_ = 1.0 / (params.length * params.length);
  k.cert_radius_ = cert_radius;
  // max_s |d/ds (1 + s^2/R^2)^-sigma| by dense sampling; the derivative
  // decays like s^(-2 sigma - 1), so [0, 20 R] contains the maximum.
  double slope = 0.0;
  for (int i = 0; i < kRadialSamples; ++i) {
    const double s = 20.0 * params.length * i / (kRadialSamples - 1);
    const double u = 1.0 + s * s * k.inv_len2_;
    const double d = 2.0 * params.sigma * s * k.inv_len2_ * std::pow(u, -params.sigma - 1.0);
    slope = std::max(slope, d);
  }
  slope *= kSafety;
  // Component k: grad_dv = -beta psi e_k, grad_dx = -beta dv_k grad psi, with
  // psi <= 1 and |dv_k| <= cert_radius on the ball.
  const double per_component =
      params.beta * std::sqrt(1.0 + cert_radius * cert_radius * slope * slope);
  k.lip_ = std::sqrt(static_cast<double>(dim)) * per_component;
  return k;
}

AlignmentKernel AlignmentKernel::tabulated(int dim, Evaluator f, double cert_radius,
                                           std::uint64_t seed) {
  require(dim >= 1 && dim <= 3, "kernel dimension must be 1, 2 or 3");
  require(static_cast<bool>(f), "tabulated kernel needs an evaluator");
  AlignmentKernel k;
  k.dim_ = dim;
  k.cert_radius_ = cert_radius;
  k.table_ = std::move(f);
  const auto& table = k.table_;
  k.lip_ = sampled_lipschitz(
      [&](const Eigen::VectorXd& z) { return table(z.head(dim), z.tail(dim)); }, 2 * dim, dim,
      cert_radius, false, seed);
  return k;
}

double AlignmentKernel::sup_on_ball(double radius) const {
  if (!table_) return cs_.beta * radius;
  const CounterRng rng(99, 1);
  double best = table_(Eigen::VectorXd::Zero(dim_), Eigen::VectorXd::Zero(dim_)).norm();
  for (std::uint64_t s = 0; s < 4000; ++s) {
    const Eigen::VectorXd z = ball_point(rng, s, 2 * dim_, radius);
    best = std::max(best, table_(z.head(dim_), z.tail(dim_)).norm());
  }
  return kSafety * best;
}

Eigen::VectorXd cs_kernel_eval(const AlignmentKernel& kernel, const Eigen::VectorXd& dv,
                               const Eigen::VectorXd& dx) {
  if (!dv.allFinite() || !dx.allFinite()) throw DomainError("cs_kernel_eval: non-finite input");
  require(dv.size() == kernel.dim() && dx.size() == kernel.dim(),
          "cs_kernel_eval: argument dimension mismatch");
  return kernel(dv, dx);
}

BumpSource::BumpSource(int dim, double radius, double amplitude)
    : dim_(dim),
      radius_(radius),
      amplitude_(amplitude),
      radius2_(radius * radius),
      inv_radius2_(1.0 / (radius * radius)) {
  require(dim >= 1 && dim <= 3, "bump dimension must be 1, 2 or 3");
  require(radius > 0.0 && std::isfinite(radius), "bump radius must be positive");
  require(std::isfinite(amplitude), "bump amplitude must be finite");
  const auto lips = bump_lipschitz_constants(*this);
  lip_chi_ = lips.lip_chi;
  lip_grad_chi_ = lips.lip_grad_chi;
}

double BumpSource::mass() const {
  // c r^d |S^{d-1}| int_0^1 (1 - s^2)^2 s^{d-1} ds
  const double r = radius_;
  switch (dim_) {
    case 1:
      return amplitude_ * r * 16.0 / 15.0;
    case 2:
      return amplitude_ * r * r * std::numbers::pi / 3.0;
    default:
      return amplitude_ * r * r * r * 32.0 * std::numbers::pi / 105.0;
  }
}

double bump_eval(const BumpSource& bump, const Eigen::VectorXd& x) {
  if (!x.allFinite()) throw DomainError("bump_eval: non-finite input");
  return bump.value(x);
}

Eigen::VectorXd bump_grad(const BumpSource& bump, const Eigen::VectorXd& x) {
  if (!x.allFinite()) throw DomainError("bump_grad: non-finite input");
  return bump.gradient(x);
}

BumpLipschitz bump_lipschitz_constants(const BumpSource& bump) {
  const double r = bump.radius();
  const double c = std::abs(bump.amplitude());
  double d1 = 0.0;   // max |chi'(s)|
  double d2 = 0.0;   // max |chi''(s)|
  double tan = 0.0;  // max |chi'(s) / s|
  for (int i = 0; i < kRadialSamples; ++i) {
    const double s = r * i / (kRadialSamples - 1);
    const double q = s * s / (r * r);
    d1 = std::max(d1, 4.0 * c * s / (r * r) * (1.0 - q));
    d2 = std::max(d2, 4.0 * c / (r * r) * std::abs(1.0 - 3.0 * q));
    tan = std::max(tan, 4.0 * c / (r * r) * (1.0 - q));
  }
  const double hess = bump.dim() == 1 ? d2 : std::max(d2, tan);
  return {kSafety * d1, kSafety * std::sqrt(static_cast<double>(bump.dim())) * hess};
}

ExternalForce ExternalForce::zero(int dim) {
  ExternalForce f;
  f.dim_ = dim;
  return f;
}

ExternalForce ExternalForce::harmonic(int dim, double stiffness, double box_half_width) {
  require(stiffness >= 0.0, "harmonic stiffness must be nonnegative");
  ExternalForce f;
  f.dim_ = dim;
  f.kind_ = stiffness == 0.0 ? Kind::Zero : Kind::Harmonic;
  f.stiffness_ = stiffness;
  const double root_d = std::sqrt(static_cast<double>(dim));
  f.lip_ = root_d * stiffness;
  f.sup_ = root_d * stiffness * box_half_width;
  return f;
}

ExternalForce ExternalForce::tabulated(int dim, Evaluator fn, double box_half_width,
                                       std::uint64_t seed) {
  require(static_cast<bool>(fn), "tabulated force needs an evaluator");
  ExternalForce f;
  f.dim_ = dim;
  f.kind_ = Kind::Table;
  f.table_ = std::move(fn);
  const auto& table = f.table_;
  f.lip_ = sampled_lipschitz(table, dim, dim, box_half_width, true, seed);
  const CounterRng rng(seed, 3);
  double sup = 0.0;
  for (std::uint64_t s = 0; s < 4000; ++s) {
    Eigen::VectorXd x(dim);
    for (int k = 0; k < dim; ++k)
      x(k) = box_half_width * (2.0 * rng.uniform(s, static_cast<std::uint64_t>(k)) - 1.0);
    sup = std::max(sup, table(x).norm());
  }
  f.sup_ = kSafety * sup;
  return f;
}

BoundConstants bound_constants(const AlignmentKernel& kernel, const BumpSource& bump,
                               const ExternalForce& force, double eta, double horizon,
                               double lip_grad_phi_in, double sup_grad_phi_in) {
  require(eta >= 0.0 && horizon >= 0.0, "bound_constants: eta and horizon must be nonnegative");
  BoundConstants c;
  c.lip_kernel = kernel.lip();
  c.lip_chi = bump.lip_chi();
  c.lip_grad_chi = bump.lip_grad_chi();
  c.lip_force = force.lip();
  c.sup_force = force.sup_norm();
  c.lip_grad_phi_in = lip_grad_phi_in;
  c.sup_grad_phi_in = sup_grad_phi_in;
  c.eta = eta;
  c.horizon = horizon;
  return c;
}

double support_radius(double R0, double t, const BoundConstants& c) {
  require(R0 >= 0.0 && t >= 0.0, "support_radius: R0 and t must be nonnegative");
  const double rate = c.growth_rate();
  return std::exp(rate * t) * (R0 + rate);
}

double streaming_support_radius(double R0, double t, const BoundConstants& c) {
  require(R0 >= 0.0 && t >= 0.0, "support radius: R0 and t must be nonnegative");
  const double a = 1.0 + 2.0 * c.lip_kernel;
  const double b = c.sup_force + c.eta * (c.sup_grad_phi_in + c.horizon * c.lip_chi);
  const double g = std::exp(a * t);
  return g * R0 + b / a * (g - 1.0);
}

double rate_cd(Index N, int d) {
  if (N < 2) throw DomainError("rate_cd: N must be at least 2");
  require(d >= 1, "rate_cd: dimension must be positive");
  const double n = static_cast<double>(N);
  if (d == 1) return 1.0 / std::sqrt(n);
  if (d == 2) return std::log(n) / std::sqrt(n);
  return std::pow(n, -1.0 / d);
}

}  // namespace mfcl
