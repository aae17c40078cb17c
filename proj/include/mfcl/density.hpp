#pragma once

#include <cstdint>

#include "mfcl/ensemble.hpp"

namespace mfcl {

/// One-dimensional compactly supported marginal.
struct Marginal {
  enum class Shape { Point, Uniform, Cosine };
  Shape shape = Shape::Uniform;
  double center = 0.0;
  double half_width = 0.5;

  double lo() const { return center - half_width; }
  double hi() const { return center + half_width; }
  /// Largest |x| on the support.
  double reach() const { return std::abs(center) + (shape == Shape::Point ? 0.0 : half_width); }

  double pdf(double x) const;
  double cdf(double x) const;
  double quantile(double p) const;

  bool operator==(const Marginal&) const = default;
};

/// u(x) = offset + slope x + amplitude sin(wavenumber x), applied per axis.
struct VelocityProfile {
  double offset = 0.0;
  double slope = 0.0;
  double amplitude = 0.0;
  double wavenumber = 0.0;

  double operator()(double x) const {
    return offset + slope * x + amplitude * std::sin(wavenumber * x);
  }
  double derivative(double x) const {
    return slope + amplitude * wavenumber * std::cos(wavenumber * x);
  }
  /// max |u| over [lo, hi], by sampling (exact at the sample points).
  double max_abs(double lo, double hi) const;

  bool operator==(const VelocityProfile&) const = default;
};

/// Phase-space density: product position marginal on each axis and either a
/// monokinetic velocity v = u(x) or a product velocity marginal.
struct InitialSpec {
  Marginal position{};
  bool monokinetic = true;
  VelocityProfile profile{};
  Marginal velocity{Marginal::Shape::Point, 0.0, 0.0};

  /// Radius of a centered phase-space ball containing the support.
  double support_radius(int dim) const;
  /// Number of coordinates that carry spread (the effective dimension).
  int spread_dimension(int dim) const;

  bool operator==(const InitialSpec&) const = default;
};

/// iid draws keyed by (seed, replicate, particle, coordinate).
ParticleEnsemble sample_initial(const InitialSpec& spec, int dim, Index n, std::uint64_t seed,
                                std::uint64_t replicate);

/// Deterministic quantile quadrature with uniform weights; M must be a
/// perfect power of the spread dimension.
ParticleEnsemble quadrature_initial(const InitialSpec& spec, int dim, Index M);

/// W2 between the M and 4M quadratures (exact for product specs, an upper
/// bound from the monotone x-coupling for monokinetic specs).
double quadrature_floor(const InitialSpec& spec, int dim, Index M);

}  // namespace mfcl
