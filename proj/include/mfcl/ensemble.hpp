#pragma once

#include <algorithm>
#include <limits>
#include <numeric>
#include <vector>

#include "mfcl/types.hpp"

namespace mfcl {

/// Weighted point cloud in phase space R^d x R^d. Positions and velocities
/// are stored column-wise (d x N); weights form a probability vector.
template <typename Scalar>
class BasicEnsemble {
 public:
  using Matrix = MatrixX<Scalar>;
  using Vector = VectorX<Scalar>;

  BasicEnsemble(Matrix positions, Matrix velocities, Vector weights)
      : positions_(std::move(positions)),
        velocities_(std::move(velocities)),
        weights_(std::move(weights)) {
    const Index n = positions_.cols();
    const Index d = positions_.rows();
    require(d >= 1 && d <= 3, "ensemble dimension must be 1, 2 or 3");
    require(n >= 1, "ensemble must hold at least one particle");
    require(velocities_.rows() == d && velocities_.cols() == n && weights_.size() == n,
            "positions, velocities and weights must have matching shapes");
    require(positions_.allFinite() && velocities_.allFinite() && weights_.allFinite(),
            "ensemble coordinates must be finite");
    require((weights_.array() >= Scalar(0)).all(), "ensemble weights must be nonnegative");
    const Scalar tol = Scalar(1e-12) + Scalar(n) * std::numeric_limits<Scalar>::epsilon();
    require(std::abs(weights_.sum() - Scalar(1)) <= tol, "ensemble weights must sum to one");
  }

  static BasicEnsemble uniform(Matrix positions, Matrix velocities) {
    const Index n = positions.cols();
    Vector w = Vector::Constant(n, Scalar(1) / Scalar(std::max<Index>(n, 1)));
    return BasicEnsemble(std::move(positions), std::move(velocities), std::move(w));
  }

  int dim() const { return static_cast<int>(positions_.rows()); }
  Index size() const { return positions_.cols(); }
  const Matrix& positions() const { return positions_; }
  const Matrix& velocities() const { return velocities_; }
  const Vector& weights() const { return weights_; }

  /// Stacked (x, v) columns, 2d x N.
  Matrix phase_points() const {
    Matrix z(2 * positions_.rows(), positions_.cols());
    z.topRows(positions_.rows()) = positions_;
    z.bottomRows(positions_.rows()) = velocities_;
    return z;
  }

  Scalar max_speed() const { return velocities_.colwise().norm().maxCoeff(); }
  Scalar max_phase_norm() const {
    return (positions_.colwise().squaredNorm() + velocities_.colwise().squaredNorm())
        .cwiseSqrt()
        .maxCoeff();
  }
  bool uniform_weights() const {
    return (weights_.array() == weights_(0)).all();
  }

 private:
  Matrix positions_;
  Matrix velocities_;
  Vector weights_;
};

using ParticleEnsemble = BasicEnsemble<double>;

/// Column order determined by the values (x, v, w) alone. Summing in this
/// order makes every pairwise reduction invariant under relabelling.
template <typename MX, typename MV, typename VW>
std::vector<Index> value_order(const MX& x, const MV& v, const VW& w) {
  std::vector<Index> order(static_cast<std::size_t>(x.cols()));
  std::iota(order.begin(), order.end(), Index{0});
  const Index d = x.rows();
  std::sort(order.begin(), order.end(), [&](Index a, Index b) {
    for (Index k = 0; k < d; ++k)
      if (x(k, a) != x(k, b)) return x(k, a) < x(k, b);
    for (Index k = 0; k < d; ++k)
      if (v(k, a) != v(k, b)) return v(k, a) < v(k, b);
    return w(a) < w(b);
  });
  return order;
}

template <typename Scalar>
std::vector<Index> canonical_order(const BasicEnsemble<Scalar>& e) {
  return value_order(e.positions(), e.velocities(), e.weights());
}

}  // namespace mfcl
