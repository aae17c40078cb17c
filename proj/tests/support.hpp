#pragma once

#include <random>

#include "mfcl/config.hpp"
#include "mfcl/transport.hpp"

namespace mfcl::test {

inline Eigen::MatrixXd random_points(std::mt19937_64& rng, Index rows, Index cols, double scale = 1.0) {
  std::uniform_real_distribution<double> u(-scale, scale);
  Eigen::MatrixXd m(rows, cols);
  for (Index j = 0; j < cols; ++j)
    for (Index i = 0; i < rows; ++i) m(i, j) = u(rng);
  return m;
}

inline Eigen::VectorXd random_weights(std::mt19937_64& rng, Index n) {
  std::uniform_real_distribution<double> u(0.1, 1.0);
  Eigen::VectorXd w(n);
  for (Index i = 0; i < n; ++i) w(i) = u(rng);
  return w / w.sum();
}

inline WeightedCloud random_cloud(std::mt19937_64& rng, Index dim, Index n, bool uniform) {
  WeightedCloud c{random_points(rng, dim, n), Eigen::VectorXd::Constant(n, 1.0 / static_cast<double>(n))};
  if (!uniform) c.weights = random_weights(rng, n);
  return c;
}

// Grid box wide enough for every small test configuration.
inline SimConfig base_config(int dim = 1) {
  SimConfig c;
  c.dim = dim;
  c.particles = 16;
  c.dt = 0.01;
  c.horizon = 0.1;
  c.grid.half_width = 4.0;
  c.grid.cells = 64;
  c.experiment.sizes = {16, 32, 64};
  c.experiment.replicates = 4;
  c.experiment.reference_size = 256;
  c.experiment.time = 0.1;
  return c;
}

inline SimConfig chemotaxis_config(int dim = 1) {
  SimConfig c = base_config(dim);
  c.kernel.kind = KernelSpec::Kind::CuckerSmale;
  c.eta = 0.5;
  c.diffusion = 0.1;
  c.decay = 0.5;
  c.bump.amplitude = 1.0;
  c.bump.radius = 0.5;
  c.initial.profile.amplitude = 0.5;
  c.initial.profile.wavenumber = 3.0;
  c.grid.half_width = 0.0;
  c.grid.cells = 0;
  return validate(c);
}

}  // namespace mfcl::test
