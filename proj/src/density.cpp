#include "mfcl/density.hpp"

#include <cmath>
#include <numbers>
#include <vector>

#include "mfcl/rng.hpp"

namespace mfcl {
namespace {

Index integer_root(Index M, int s) {
  const auto m = static_cast<Index>(std::llround(std::pow(static_cast<double>(M), 1.0 / s)));
  Index p = 1;
  for (int k = 0; k < s; ++k) p *= m;
  require(p == M, "quadrature size must be a perfect power of the spread dimension");
  return m;
}

std::vector<double> quantile_nodes(const Marginal& m, Index count) {
  std::vector<double> nodes(static_cast<std::size_t>(count));
  for (Index j = 0; j < count; ++j)
    nodes[static_cast<std::size_t>(j)] =
        m.quantile((static_cast<double>(j) + 0.5) / static_cast<double>(count));
  return nodes;
}

// Squared cost of the monotone coupling between uniform quantile nodes of
// sizes m and k m, with the per-node cost function `cost(a, b)`.
template <typename Cost>
double nested_quantile_cost(const Marginal& marg, Index m, Index k, Cost&& cost) {
  const auto coarse = quantile_nodes(marg, m);
  const auto fine = quantile_nodes(marg, m * k);
  double total = 0.0;
  for (Index j = 0; j < m; ++j)
    for (Index l = 0; l < k; ++l)
      total += cost(coarse[static_cast<std::size_t>(j)], fine[static_cast<std::size_t>(j * k + l)]);
  return total / static_cast<double>(m * k);
}

}  // namespace

double Marginal::pdf(double x) const {
  switch (shape) {
    case Shape::Point:
      return 0.0;
    case Shape::Uniform:
      return (x >= lo() && x <= hi()) ? 0.5 / half_width : 0.0;
    case Shape::Cosine: {
      const double y = (x - center) / half_width;
      if (y < -1.0 || y > 1.0) return 0.0;
      return (1.0 + std::cos(std::numbers::pi * y)) / (2.0 * half_width);
    }
  }
  return 0.0;
}

double Marginal::cdf(double x) const {
  if (shape == Shape::Point) return x >= center ? 1.0 : 0.0;
  const double y = (x - center) / half_width;
  if (y <= -1.0) return 0.0;
  if (y >= 1.0) return 1.0;
  if (shape == Shape::Uniform) return 0.5 * (y + 1.0);
  return 0.5 * (y + 1.0) + std::sin(std::numbers::pi * y) / (2.0 * std::numbers::pi);
}

double Marginal::quantile(double p) const {
  require(p >= 0.0 && p <= 1.0, "quantile level must lie in [0, 1]");
  switch (shape) {
    case Shape::Point:
      return center;
    case Shape::Uniform:
      return lo() + 2.0 * half_width * p;
    case Shape::Cosine:
      break;
  }
  // Bisection on the monotone cdf, then a couple of Newton polishes.
  double a = -1.0, b = 1.0;
  for (int it = 0; it < 60; ++it) {
    const double mid = 0.5 * (a + b);
    if (cdf(center + half_width * mid) < p)
      a = mid;
    else
      b = mid;
  }
  double y = 0.5 * (a + b);
  for (int it = 0; it < 2; ++it) {
    const double x = center + half_width * y;
    const double dens = pdf(x) * half_width;
    if (dens <= 1e-300) break;
    const double next = y - (cdf(x) - p) / dens;
    if (next < -1.0 || next > 1.0) break;
    y = next;
  }
  return center + half_width * y;
}

double VelocityProfile::max_abs(double lo, double hi) const {
  double best = 0.0;
  constexpr int kSamples = 20001;
  for (int i = 0; i < kSamples; ++i) {
    const double x = lo + (hi - lo) * i / (kSamples - 1);
    best = std::max(best, std::abs((*this)(x)));
  }
  // Sampling can miss the exact maximum by at most |u'| * spacing.
  const double lip = std::abs(slope) + std::abs(amplitude * wavenumber);
  return best + lip * (hi - lo) / (kSamples - 1);
}

double InitialSpec::support_radius(int dim) const {
  const double xr = position.reach();
  double vr = velocity.reach();
  if (monokinetic) {
    vr = position.shape == Marginal::Shape::Point
             ? std::abs(profile(position.center))
             : profile.max_abs(position.lo(), position.hi());
  }
  return std::sqrt(static_cast<double>(dim) * (xr * xr + vr * vr));
}

int InitialSpec::spread_dimension(int dim) const {
  int s = position.shape == Marginal::Shape::Point ? 0 : dim;
  if (!monokinetic && velocity.shape != Marginal::Shape::Point) s += dim;
  return s;
}

ParticleEnsemble sample_initial(const InitialSpec& spec, int dim, Index n, std::uint64_t seed,
                                std::uint64_t replicate) {
  require(n >= 1, "sample size must be positive");
  const CounterRng rng(seed, replicate);
  Eigen::MatrixXd x(dim, n), v(dim, n);
  for (Index i = 0; i < n; ++i) {
    const auto item = static_cast<std::uint64_t>(i);
    for (int k = 0; k < dim; ++k) {
      x(k, i) = spec.position.quantile(rng.uniform(item, static_cast<std::uint64_t>(k)));
      v(k, i) = spec.monokinetic
                    ? spec.profile(x(k, i))
                    : spec.velocity.quantile(rng.uniform(item, static_cast<std::uint64_t>(dim + k)));
    }
  }
  return ParticleEnsemble::uniform(std::move(x), std::move(v));
}

ParticleEnsemble quadrature_initial(const InitialSpec& spec, int dim, Index M) {
  require(M >= 1, "quadrature size must be positive");
  const int s = spec.spread_dimension(dim);
  Eigen::MatrixXd x(dim, M), v(dim, M);
  if (s == 0) {
    for (Index i = 0; i < M; ++i)
      for (int k = 0; k < dim; ++k) {
        x(k, i) = spec.position.center;
        v(k, i) = spec.monokinetic ? spec.profile(spec.position.center) : spec.velocity.center;
      }
    return ParticleEnsemble::uniform(std::move(x), std::move(v));
  }
  const Index m = integer_root(M, s);
  const bool xs = spec.position.shape != Marginal::Shape::Point;
  const bool vs = !spec.monokinetic && spec.velocity.shape != Marginal::Shape::Point;
  const auto xn = quantile_nodes(spec.position, xs ? m : 1);
  const auto vn = quantile_nodes(spec.velocity, vs ? m : 1);
  for (Index i = 0; i < M; ++i) {
    Index rest = i;
    for (int k = 0; k < dim; ++k) {
      if (xs) {
        x(k, i) = xn[static_cast<std::size_t>(rest % m)];
        rest /= m;
      } else {
        x(k, i) = spec.position.center;
      }
    }
    for (int k = 0; k < dim; ++k) {
      if (spec.monokinetic) {
        v(k, i) = spec.profile(x(k, i));
      } else if (vs) {
        v(k, i) = vn[static_cast<std::size_t>(rest % m)];
        rest /= m;
      } else {
        v(k, i) = spec.velocity.center;
      }
    }
  }
  return ParticleEnsemble::uniform(std::move(x), std::move(v));
}

double quadrature_floor(const InitialSpec& spec, int dim, Index M) {
  const int s = spec.spread_dimension(dim);
  if (s == 0) return 0.0;
  const Index m = integer_root(M, s);
  // Refinement factor per axis: 4M total when that is a perfect power.
  Index k = 2;
  if (s == 1) k = 4;
  double total = 0.0;
  if (spec.position.shape != Marginal::Shape::Point) {
    const auto& u = spec.profile;
    const bool mono = spec.monokinetic;
    const double per_axis = nested_quantile_cost(spec.position, m, k, [&](double a, double b) {
      const double dv = mono ? u(a) - u(b) : 0.0;
      return (a - b) * (a - b) + dv * dv;
    });
    total += dim * per_axis;
  }
  if (!spec.monokinetic && spec.velocity.shape != Marginal::Shape::Point) {
    total += dim * nested_quantile_cost(spec.velocity, m, k,
                                        [](double a, double b) { return (a - b) * (a - b); });
  }
  return std::sqrt(total);
}

}  // namespace mfcl
