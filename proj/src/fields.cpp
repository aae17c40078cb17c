#include "mfcl/fields.hpp"

#include <unsupported/Eigen/FFT>

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <numeric>

namespace mfcl {
namespace {

using Complex = std::complex<double>;

Index ipow(Index base, int e) {
  Index p = 1;
  for (int k = 0; k < e; ++k) p *= base;
  return p;
}

// In-place FFT of every line along every axis.
void transform_axes(std::vector<Complex>& data, Index n, int dim, bool forward) {
  thread_local Eigen::FFT<double> fft;
  std::vector<Complex> line(static_cast<std::size_t>(n)), out(static_cast<std::size_t>(n));
  const Index total = ipow(n, dim);
  for (int axis = 0; axis < dim; ++axis) {
    const Index stride = ipow(n, dim - 1 - axis);
    for (Index base = 0; base < total; ++base) {
      // Visit each line once: its first element has zero coordinate on this axis.
      if ((base / stride) % n != 0) continue;
      for (Index k = 0; k < n; ++k) line[static_cast<std::size_t>(k)] = data[static_cast<std::size_t>(base + k * stride)];
      if (forward)
        fft.fwd(out, line);
      else
        fft.inv(out, line);
      for (Index k = 0; k < n; ++k) data[static_cast<std::size_t>(base + k * stride)] = out[static_cast<std::size_t>(k)];
    }
  }
}

// 8-point Gauss-Legendre on [-1, 1].
constexpr std::array<double, 8> kGlNodes = {
    -0.9602898564975363, -0.7966664774136267, -0.5255324099163290, -0.1834346424956498,
    0.1834346424956498,  0.5255324099163290,  0.7966664774136267,  0.9602898564975363};
constexpr std::array<double, 8> kGlWeights = {
    0.1012285362903763, 0.2223810344533745, 0.3137066278481494, 0.3626837833783620,
    0.3626837833783620, 0.3137066278481494, 0.2223810344533745, 0.1012285362903763};

// Composite Gauss-Legendre panel nodes on [lo, hi].
void panel_rule(double lo, double hi, Index panels, std::vector<double>& nodes,
                std::vector<double>& weights) {
  nodes.clear();
  weights.clear();
  const double w = (hi - lo) / static_cast<double>(panels);
  for (Index p = 0; p < panels; ++p) {
    const double mid = lo + (static_cast<double>(p) + 0.5) * w;
    for (std::size_t q = 0; q < kGlNodes.size(); ++q) {
      nodes.push_back(mid + 0.5 * w * kGlNodes[q]);
      weights.push_back(0.5 * w * kGlWeights[q]);
    }
  }
}

// (G_sigma * chi)(y) with G_sigma the centered Gaussian of variance sigma^2
// per axis; exact chi(y) when sigma vanishes.
double gaussian_bump_convolution(const BumpSource& bump, const Eigen::VectorXd& y, double sigma) {
  const double r = bump.radius();
  if (sigma < 1e-7 * r) return bump.value(y);
  const int d = bump.dim();
  const double reach = 10.0 * sigma;
  std::array<std::vector<double>, 2> nodes, weights;
  for (int k = 0; k < d; ++k) {
    const double lo = std::max(-r, y(k) - reach);
    const double hi = std::min(r, y(k) + reach);
    if (lo >= hi) return 0.0;
    const Index cap = d == 1 ? 4000 : 200;
    const auto panels = std::clamp<Index>(
        static_cast<Index>(std::ceil((hi - lo) / (0.5 * sigma))), 4, cap);
    panel_rule(lo, hi, panels, nodes[static_cast<std::size_t>(k)], weights[static_cast<std::size_t>(k)]);
  }
  const double norm = 1.0 / (std::sqrt(2.0 * std::numbers::pi) * sigma);
  const double inv2s2 = 1.0 / (2.0 * sigma * sigma);
  double total = 0.0;
  if (d == 1) {
    for (std::size_t q = 0; q < nodes[0].size(); ++q) {
      const double yp = nodes[0][q];
      const double u = y(0) - yp;
      total += weights[0][q] * norm * std::exp(-u * u * inv2s2) * bump.value_r2(yp * yp);
    }
    return total;
  }
  for (std::size_t q = 0; q < nodes[0].size(); ++q) {
    const double a = nodes[0][q];
    const double ga = weights[0][q] * norm * std::exp(-(y(0) - a) * (y(0) - a) * inv2s2);
    for (std::size_t p = 0; p < nodes[1].size(); ++p) {
      const double b = nodes[1][p];
      const double gb = weights[1][p] * norm * std::exp(-(y(1) - b) * (y(1) - b) * inv2s2);
      total += ga * gb * bump.value_r2(a * a + b * b);
    }
  }
  return total;
}

}  // namespace

ChemGrid::ChemGrid(int dim, double half_width, Index cells, double diffusion, double decay)
    : dim_(dim),
      half_width_(half_width),
      cells_(cells),
      spacing_(2.0 * half_width / static_cast<double>(cells)),
      diffusion_(diffusion),
      decay_(decay) {
  require(dim >= 1 && dim <= 3, "grid dimension must be 1, 2 or 3");
  require(cells >= 8 && cells % 2 == 0, "grid needs an even number of cells, at least 8");
  require(half_width > 0.0 && std::isfinite(half_width), "grid half-width must be positive");
  require(diffusion >= 0.0 && decay >= 0.0, "diffusion and decay must be nonnegative");
  values_ = Eigen::VectorXd::Zero(ipow(cells, dim));
}

void ChemGrid::set_values(Eigen::VectorXd values) {
  require(values.size() == values_.size(), "grid value count mismatch");
  require(values.allFinite(), "grid values must be finite");
  values_ = std::move(values);
}

ChemGrid ChemGrid::with_values(Eigen::VectorXd values) const {
  ChemGrid g = *this;
  g.set_values(std::move(values));
  return g;
}

std::array<Index, 3> ChemGrid::unflatten(Index flat) const {
  std::array<Index, 3> idx{0, 0, 0};
  for (int a = dim_ - 1; a >= 0; --a) {
    idx[static_cast<std::size_t>(a)] = flat % cells_;
    flat /= cells_;
  }
  return idx;
}

Index ChemGrid::flatten(const std::array<Index, 3>& idx) const {
  Index flat = 0;
  for (int a = 0; a < dim_; ++a) flat = flat * cells_ + idx[static_cast<std::size_t>(a)];
  return flat;
}

Eigen::VectorXd ChemGrid::node_point(Index flat) const {
  const auto idx = unflatten(flat);
  Eigen::VectorXd x(dim_);
  for (int a = 0; a < dim_; ++a) x(a) = node(idx[static_cast<std::size_t>(a)]);
  return x;
}

bool ChemGrid::same_geometry(const ChemGrid& o) const {
  return dim_ == o.dim_ && cells_ == o.cells_ && half_width_ == o.half_width_;
}

bool ChemGrid::contains(const Eigen::Ref<const Eigen::VectorXd>& x) const {
  for (int a = 0; a < dim_; ++a)
    if (!(x(a) >= -half_width_ && x(a) < half_width_)) return false;
  return true;
}

double InitialField::value(const Eigen::Ref<const Eigen::VectorXd>& x) const {
  if (kind == Kind::Zero) return 0.0;
  return amplitude * std::exp(-x.squaredNorm() / (2.0 * width * width));
}

double InitialField::heat(const Eigen::Ref<const Eigen::VectorXd>& x, double diffusion,
                          double t) const {
  if (kind == Kind::Zero) return 0.0;
  const double s2 = width * width;
  const double var = s2 + 2.0 * diffusion * t;
  const double scale = std::pow(s2 / var, 0.5 * static_cast<double>(x.size()));
  return amplitude * scale * std::exp(-x.squaredNorm() / (2.0 * var));
}

double InitialField::lip_gradient(int dim) const {
  if (kind == Kind::Zero) return 0.0;
  return std::sqrt(static_cast<double>(dim)) * std::abs(amplitude) / (width * width);
}

double InitialField::sup_gradient() const {
  if (kind == Kind::Zero) return 0.0;
  return std::abs(amplitude) / width * std::exp(-0.5);
}

ChemGrid initial_grid(int dim, double half_width, Index cells, double diffusion, double decay,
                      const InitialField& phi_in) {
  ChemGrid g(dim, half_width, cells, diffusion, decay);
  if (phi_in.kind == InitialField::Kind::Zero) return g;
  Eigen::VectorXd v(g.size());
  for (Index f = 0; f < g.size(); ++f) v(f) = phi_in.value(g.node_point(f));
  g.set_values(std::move(v));
  return g;
}

Eigen::VectorXd deposit_source(const Eigen::Ref<const Eigen::MatrixXd>& positions,
                               const Eigen::Ref<const Eigen::VectorXd>& weights,
                               const BumpSource& bump, const ChemGrid& grid) {
  const int d = grid.dim();
  require(positions.rows() == d && positions.cols() == weights.size(),
          "deposit_source: shape mismatch");
  const double a = grid.half_width();
  const double h = grid.spacing();
  const double r = bump.radius();
  const Index n = grid.cells();
  require(r < a, "deposit_source: bump radius must be below the box half-width");
  Eigen::VectorXd src = Eigen::VectorXd::Zero(grid.size());
  if (bump.is_zero()) return src;

  const Index np = positions.cols();
  for (Index j = 0; j < np; ++j)
    for (int k = 0; k < d; ++k)
      if (!(std::abs(positions(k, j)) <= a - r))
        throw DomainError("deposit_source: particle within bump radius of the periodic boundary");

  // Value-determined order so node sums do not depend on particle labels.
  std::vector<Index> order(static_cast<std::size_t>(np));
  std::iota(order.begin(), order.end(), Index{0});
  std::sort(order.begin(), order.end(), [&](Index p, Index q) {
    for (int k = 0; k < d; ++k)
      if (positions(k, p) != positions(k, q)) return positions(k, p) < positions(k, q);
    return weights(p) < weights(q);
  });

  for (Index j : order) {
    const double w = weights(j);
    if (w == 0.0) continue;
    std::array<Index, 3> lo{0, 0, 0}, hi{0, 0, 0};
    for (int k = 0; k < d; ++k) {
      const double x = positions(k, j);
      lo[static_cast<std::size_t>(k)] = std::max<Index>(0, static_cast<Index>(std::ceil((x - r + a) / h)));
      hi[static_cast<std::size_t>(k)] = std::min<Index>(n - 1, static_cast<Index>(std::floor((x + r + a) / h)));
    }
    if (d == 1) {
      const double x = positions(0, j);
      for (Index i = lo[0]; i <= hi[0]; ++i) {
        const double dx = grid.node(i) - x;
        src(i) += w * bump.value_r2(dx * dx);
      }
      continue;
    }
    std::array<Index, 3> idx = lo;
    while (true) {
      double r2 = 0.0;
      for (int k = 0; k < d; ++k) {
        const double dx = grid.node(idx[static_cast<std::size_t>(k)]) - positions(k, j);
        r2 += dx * dx;
      }
      src(grid.flatten(idx)) += w * bump.value_r2(r2);
      int k = d - 1;
      while (k >= 0 && idx[static_cast<std::size_t>(k)] == hi[static_cast<std::size_t>(k)]) {
        idx[static_cast<std::size_t>(k)] = lo[static_cast<std::size_t>(k)];
        --k;
      }
      if (k < 0) break;
      ++idx[static_cast<std::size_t>(k)];
    }
  }
  return src;
}

Eigen::VectorXd deposit_source(const ParticleEnsemble& ensemble, const BumpSource& bump,
                               const ChemGrid& grid) {
  return deposit_source(ensemble.positions(), ensemble.weights(), bump, grid);
}

Eigen::VectorXd diffuse(const ChemGrid& g, const Eigen::VectorXd& values, double dt) {
  require(dt >= 0.0, "diffuse: time step must be nonnegative");
  require(values.size() == g.size(), "diffuse: value count mismatch");
  const double decay = std::exp(-g.decay() * dt);
  const double Ddt = g.diffusion() * dt;
  if (Ddt == 0.0) return decay == 1.0 ? values : Eigen::VectorXd(decay * values);

  const Index n = g.cells();
  const int d = g.dim();
  std::vector<Complex> data(static_cast<std::size_t>(values.size()));
  for (Index f = 0; f < values.size(); ++f) data[static_cast<std::size_t>(f)] = values(f);
  transform_axes(data, n, d, true);

  // Wavenumbers 2 pi m / (2a) with m folded to [-n/2, n/2].
  const double k0 = std::numbers::pi / g.half_width();
  std::vector<double> k2(static_cast<std::size_t>(n));
  for (Index j = 0; j < n; ++j) {
    const double m = static_cast<double>(j <= n / 2 ? j : j - n);
    k2[static_cast<std::size_t>(j)] = (k0 * m) * (k0 * m);
  }
  for (Index f = 0; f < values.size(); ++f) {
    const auto idx = g.unflatten(f);
    double ksq = 0.0;
    for (int a = 0; a < d; ++a) ksq += k2[static_cast<std::size_t>(idx[static_cast<std::size_t>(a)])];
    data[static_cast<std::size_t>(f)] *= decay * std::exp(-Ddt * ksq);
  }
  transform_axes(data, n, d, false);
  Eigen::VectorXd out(values.size());
  for (Index f = 0; f < values.size(); ++f) out(f) = data[static_cast<std::size_t>(f)].real();
  return out;
}

ChemGrid diffuse_step(const ChemGrid& grid, double dt) {
  return grid.with_values(diffuse(grid, grid.values(), dt));
}

ChemGrid field_step(const ChemGrid& grid, const Eigen::Ref<const Eigen::MatrixXd>& positions,
                    const Eigen::Ref<const Eigen::VectorXd>& weights, const BumpSource& bump,
                    double dt) {
  Eigen::VectorXd next = diffuse(grid, grid.values(), dt);
  if (!bump.is_zero() && dt > 0.0) {
    const Eigen::VectorXd src = deposit_source(positions, weights, bump, grid);
    next += dt * diffuse(grid, src, 0.5 * dt);
  }
  return grid.with_values(std::move(next));
}

ChemGrid field_step(const ChemGrid& grid, const ParticleEnsemble& ensemble,
                    const BumpSource& bump, double dt) {
  return field_step(grid, ensemble.positions(), ensemble.weights(), bump, dt);
}

Eigen::MatrixXd nodal_gradient(const ChemGrid& g) {
  const Index n = g.cells();
  const int d = g.dim();
  const double inv2h = 1.0 / (2.0 * g.spacing());
  const auto& v = g.values();
  Eigen::MatrixXd grad(d, g.size());
  for (int a = 0; a < d; ++a) {
    const Index stride = ipow(n, d - 1 - a);
    for (Index f = 0; f < g.size(); ++f) {
      const Index i = (f / stride) % n;
      const Index up = f + ((i + 1 == n) ? (1 - n) * stride : stride);
      const Index dn = f + ((i == 0) ? (n - 1) * stride : -stride);
      grad(a, f) = (v(up) - v(dn)) * inv2h;
    }
  }
  return grad;
}

Eigen::VectorXd interpolate_gradient(const ChemGrid& g, const Eigen::MatrixXd& nodal,
                                     const Eigen::Ref<const Eigen::VectorXd>& x) {
  const int d = g.dim();
  if (!g.contains(x)) throw DomainError("sample_gradient: point outside the grid box");
  const Index n = g.cells();
  std::array<Index, 3> i0{0, 0, 0};
  std::array<double, 3> frac{0.0, 0.0, 0.0};
  for (int a = 0; a < d; ++a) {
    const double u = (x(a) + g.half_width()) / g.spacing();
    const double fl = std::floor(u);
    i0[static_cast<std::size_t>(a)] = std::min<Index>(static_cast<Index>(fl), n - 1);
    frac[static_cast<std::size_t>(a)] = u - fl;
  }
  Eigen::VectorXd out = Eigen::VectorXd::Zero(d);
  for (int corner = 0; corner < (1 << d); ++corner) {
    double w = 1.0;
    std::array<Index, 3> idx{0, 0, 0};
    for (int a = 0; a < d; ++a) {
      const bool upper = (corner >> a) & 1;
      const auto sa = static_cast<std::size_t>(a);
      idx[sa] = upper ? (i0[sa] + 1) % n : i0[sa];
      w *= upper ? frac[sa] : 1.0 - frac[sa];
    }
    if (w != 0.0) out += w * nodal.col(g.flatten(idx));
  }
  return out;
}

Eigen::VectorXd sample_gradient(const ChemGrid& grid, const Eigen::Ref<const Eigen::VectorXd>& x) {
  require(x.size() == grid.dim(), "sample_gradient: dimension mismatch");
  return interpolate_gradient(grid, nodal_gradient(grid), x);
}

double grad_gap_sup(const ChemGrid& a, const ChemGrid& b) {
  if (!a.same_geometry(b)) throw DomainError("grad_gap_sup: grid geometry mismatch");
  return (nodal_gradient(a) - nodal_gradient(b)).colwise().norm().maxCoeff();
}

void FieldHistory::record(double t, const ParticleEnsemble& ensemble) {
  if (!times.empty() && !(t > times.back()))
    throw DomainError("FieldHistory: time stamps must increase");
  times.push_back(t);
  positions.push_back(ensemble.positions());
  weights.push_back(ensemble.weights());
}

double FieldHistory::spacing() const {
  if (times.size() < 2) return 0.0;
  return (times.back() - times.front()) / static_cast<double>(times.size() - 1);
}

Eigen::VectorXd duhamel_oracle(const FieldHistory& history, const BumpSource& bump,
                               const InitialField& phi_in, double diffusion, double decay,
                               double t, const Eigen::MatrixXd& query) {
  require(bump.dim() <= 2, "duhamel_oracle supports d = 1 and d = 2");
  require(query.rows() == bump.dim(), "duhamel_oracle: query dimension mismatch");
  Eigen::VectorXd out(query.cols());
  for (Index q = 0; q < query.cols(); ++q) out(q) = std::exp(-decay * t) * phi_in.heat(query.col(q), diffusion, t);
  if (t == 0.0) return out;
  const auto& ts = history.times;
  if (ts.size() < 2 || ts.front() > 0.0 || std::abs(ts.back() - t) > 1e-12 * std::max(1.0, t))
    throw DomainError("duhamel_oracle: history must cover [0, t] exactly");
  const double ds = history.spacing();
  for (std::size_t k = 1; k < ts.size(); ++k)
    if (std::abs(ts[k] - ts[k - 1] - ds) > 1e-9 * ds)
      throw DomainError("duhamel_oracle: history spacing must be uniform");
  if (bump.is_zero()) return out;

  const double r = bump.radius();
  for (std::size_t k = 0; k < ts.size(); ++k) {
    const double tau = t - ts[k];
    const double wt = ((k == 0 || k + 1 == ts.size()) ? 0.5 : 1.0) * ds * std::exp(-decay * tau);
    const double sigma = std::sqrt(2.0 * diffusion * tau);
    const auto& pos = history.positions[k];
    const auto& w = history.weights[k];
    for (Index q = 0; q < query.cols(); ++q) {
      double acc = 0.0;
      for (Index j = 0; j < pos.cols(); ++j) {
        const Eigen::VectorXd y = query.col(q) - pos.col(j);
        if (y.lpNorm<Eigen::Infinity>() > r + 10.0 * sigma) continue;
        acc += w(j) * gaussian_bump_convolution(bump, y, sigma);
      }
      out(q) += wt * acc;
    }
  }
  return out;
}

}  // namespace mfcl
