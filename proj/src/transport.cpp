#include "mfcl/transport.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>

#include "network_simplex.hpp"

namespace mfcl {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
// Initial neighbourhood sizes and arcs added per row in each pricing round.
constexpr int kNearRow = 32;
constexpr int kNearCol = 24;
constexpr int kPerRow = 64;

double ground_cost(const double* a, const double* b, Index dim, int p) {
  double s = 0.0;
  for (Index k = 0; k < dim; ++k) {
    const double d = a[k] - b[k];
    s += d * d;
  }
  return p == 2 ? s : std::sqrt(s);
}

void check_cloud(const WeightedCloud& c, const char* what) {
  require(c.size() >= 1, std::string(what) + ": cloud must be nonempty");
  require(c.weights.size() == c.size(), std::string(what) + ": weight count mismatch");
  require(c.points.allFinite() && c.weights.allFinite(), std::string(what) + ": non-finite cloud");
  require((c.weights.array() >= 0.0).all(), std::string(what) + ": negative weight");
  require(std::abs(c.weights.sum() - 1.0) <= 1e-12 + 1e-15 * static_cast<double>(c.size()),
          std::string(what) + ": weights must sum to one");
}

void check_pair(const WeightedCloud& a, const WeightedCloud& b, const char* what) {
  check_cloud(a, what);
  check_cloud(b, what);
  require(a.dim() == b.dim(), std::string(what) + ": clouds live in different dimensions");
}

bool is_uniform(const WeightedCloud& c) { return (c.weights.array() == c.weights(0)).all(); }

// Nonzero-weight atoms.
std::vector<Index> support(const WeightedCloud& c) {
  std::vector<Index> idx;
  for (Index i = 0; i < c.size(); ++i)
    if (c.weights(i) > 0.0) idx.push_back(i);
  return idx;
}

void finish(TransportResult& r, const WeightedCloud& a, const WeightedCloud& b, int p) {
  r.plan.cost = plan_cost(r.plan, a, b, p);
  r.plan.residual = marginal_residual(r.plan, a, b);
  r.distance = p == 2 ? std::sqrt(r.plan.cost) : r.plan.cost;
}

// Minimise c.x subject to A x = rhs, x >= 0 (rhs >= 0) by the two-phase
// tableau method with Bland's rule.
Eigen::VectorXd bland_simplex(const Eigen::MatrixXd& A, const Eigen::VectorXd& rhs,
                              const Eigen::VectorXd& c) {
  const Index rows = A.rows();
  const Index vars = A.cols();
  const Index cols = vars + rows;  // structural + artificial
  Eigen::MatrixXd T = Eigen::MatrixXd::Zero(rows, cols + 1);
  T.leftCols(vars) = A;
  T.block(0, vars, rows, rows).setIdentity();
  T.col(cols) = rhs;
  std::vector<Index> basis(static_cast<std::size_t>(rows));
  std::iota(basis.begin(), basis.end(), vars);
  constexpr double tol = 1e-12;

  auto run = [&](const Eigen::VectorXd& cost, Index allowed) {
    while (true) {
      // Reduced costs r_j = c_j - c_B^T T_j.
      Index enter = -1;
      for (Index j = 0; j < allowed; ++j) {
        double r = cost(j);
        for (Index i = 0; i < rows; ++i) r -= cost(basis[static_cast<std::size_t>(i)]) * T(i, j);
        if (r < -tol) {
          enter = j;
          break;
        }
      }
      if (enter < 0) return;
      double best = kInf;
      for (Index i = 0; i < rows; ++i)
        if (T(i, enter) > tol) best = std::min(best, T(i, cols) / T(i, enter));
      Index leave = -1;
      for (Index i = 0; i < rows; ++i) {
        if (T(i, enter) <= tol || T(i, cols) / T(i, enter) > best + tol) continue;
        if (leave < 0 || basis[static_cast<std::size_t>(i)] < basis[static_cast<std::size_t>(leave)]) leave = i;
      }
      if (leave < 0) throw std::runtime_error("bland_simplex: unbounded");
      T.row(leave) /= T(leave, enter);
      for (Index i = 0; i < rows; ++i)
        if (i != leave && T(i, enter) != 0.0) T.row(i) -= T(i, enter) * T.row(leave);
      basis[static_cast<std::size_t>(leave)] = enter;
    }
  };

  Eigen::VectorXd phase1 = Eigen::VectorXd::Zero(cols);
  phase1.tail(rows).setOnes();
  run(phase1, cols);
  // Drive zero-level artificials out of the basis where possible.
  for (Index i = 0; i < rows; ++i) {
    if (basis[static_cast<std::size_t>(i)] < vars) continue;
    for (Index j = 0; j < vars; ++j) {
      if (std::abs(T(i, j)) > 1e-9) {
        T.row(i) /= T(i, j);
        for (Index k = 0; k < rows; ++k)
          if (k != i && T(k, j) != 0.0) T.row(k) -= T(k, j) * T.row(i);
        basis[static_cast<std::size_t>(i)] = j;
        break;
      }
    }
  }
  Eigen::VectorXd phase2 = Eigen::VectorXd::Zero(cols);
  phase2.head(vars) = c;
  run(phase2, vars);
  Eigen::VectorXd x = Eigen::VectorXd::Zero(vars);
  for (Index i = 0; i < rows; ++i)
    if (basis[static_cast<std::size_t>(i)] < vars) x(basis[static_cast<std::size_t>(i)]) = T(i, cols);
  return x;
}

}  // namespace

WeightedCloud WeightedCloud::uniform(Eigen::MatrixXd points) {
  const Index n = points.cols();
  return {std::move(points), Eigen::VectorXd::Constant(n, 1.0 / static_cast<double>(n))};
}

WeightedCloud phase_cloud(const ParticleEnsemble& e) { return {e.phase_points(), e.weights()}; }
WeightedCloud position_cloud(const ParticleEnsemble& e) { return {e.positions(), e.weights()}; }

double plan_cost(const TransportPlan& plan, const WeightedCloud& a, const WeightedCloud& b, int p) {
  double total = 0.0;
  for (std::size_t k = 0; k < plan.mass.size(); ++k) {
    const double c = p == 2 ? (a.points.col(plan.source[k]) - b.points.col(plan.target[k])).squaredNorm()
                            : (a.points.col(plan.source[k]) - b.points.col(plan.target[k])).norm();
    total += plan.mass[k] * c;
  }
  return total;
}

double marginal_residual(const TransportPlan& plan, const WeightedCloud& a, const WeightedCloud& b) {
  Eigen::VectorXd rows = Eigen::VectorXd::Zero(a.size());
  Eigen::VectorXd cols = Eigen::VectorXd::Zero(b.size());
  for (std::size_t k = 0; k < plan.mass.size(); ++k) {
    rows(plan.source[k]) += plan.mass[k];
    cols(plan.target[k]) += plan.mass[k];
  }
  return std::max((rows - a.weights).cwiseAbs().maxCoeff(), (cols - b.weights).cwiseAbs().maxCoeff());
}

TransportResult w2_exact_uniform(const WeightedCloud& a, const WeightedCloud& b) {
  check_pair(a, b, "w2_exact_uniform");
  if (a.size() != b.size()) throw DomainError("w2_exact_uniform: clouds must have equal size");
  require(is_uniform(a) && is_uniform(b), "w2_exact_uniform: weights must be uniform");
  const Index n = a.size();
  // Shortest augmenting paths with potentials (1-based, row 0 is a sentinel).
  std::vector<double> u(static_cast<std::size_t>(n + 1), 0.0), v(static_cast<std::size_t>(n + 1), 0.0);
  std::vector<Index> match(static_cast<std::size_t>(n + 1), 0), way(static_cast<std::size_t>(n + 1), 0);
  std::vector<double> minv(static_cast<std::size_t>(n + 1));
  std::vector<char> used(static_cast<std::size_t>(n + 1));
  auto cost = [&](Index i, Index j) {
    return ground_cost(a.points.col(i - 1).data(), b.points.col(j - 1).data(), a.dim(), 2);
  };
  for (Index i = 1; i <= n; ++i) {
    match[0] = i;
    Index j0 = 0;
    std::fill(minv.begin(), minv.end(), kInf);
    std::fill(used.begin(), used.end(), 0);
    do {
      used[static_cast<std::size_t>(j0)] = 1;
      const Index i0 = match[static_cast<std::size_t>(j0)];
      double delta = kInf;
      Index j1 = 0;
      for (Index j = 1; j <= n; ++j) {
        const auto sj = static_cast<std::size_t>(j);
        if (used[sj]) continue;
        const double cur = cost(i0, j) - u[static_cast<std::size_t>(i0)] - v[sj];
        if (cur < minv[sj]) {
          minv[sj] = cur;
          way[sj] = j0;
        }
        if (minv[sj] < delta) {
          delta = minv[sj];
          j1 = j;
        }
      }
      for (Index j = 0; j <= n; ++j) {
        const auto sj = static_cast<std::size_t>(j);
        if (used[sj]) {
          u[static_cast<std::size_t>(match[sj])] += delta;
          v[sj] -= delta;
        } else {
          minv[sj] -= delta;
        }
      }
      j0 = j1;
    } while (match[static_cast<std::size_t>(j0)] != 0);
    do {
      const Index j1 = way[static_cast<std::size_t>(j0)];
      match[static_cast<std::size_t>(j0)] = match[static_cast<std::size_t>(j1)];
      j0 = j1;
    } while (j0 != 0);
  }
  TransportResult r;
  r.solver = "assignment";
  for (Index j = 1; j <= n; ++j) {
    r.plan.source.push_back(match[static_cast<std::size_t>(j)] - 1);
    r.plan.target.push_back(j - 1);
    r.plan.mass.push_back(1.0 / static_cast<double>(n));
  }
  finish(r, a, b, 2);
  return r;
}

TransportResult exact_ot(const WeightedCloud& a, const WeightedCloud& b, int p) {
  check_pair(a, b, "exact_ot");
  require(p == 1 || p == 2, "exact_ot: p must be 1 or 2");
  const auto rows = support(a);
  const auto cols = support(b);
  const int n = static_cast<int>(rows.size());
  const int m = static_cast<int>(cols.size());
  const Index dim = a.dim();

  // Integer supplies when both sides are uniform, so flows stay exact.
  std::vector<double> supply(static_cast<std::size_t>(n)), demand(static_cast<std::size_t>(m));
  double scale = 1.0;
  if (is_uniform(a) && is_uniform(b)) {
    const auto g = std::gcd(static_cast<long long>(n), static_cast<long long>(m));
    std::fill(supply.begin(), supply.end(), static_cast<double>(m / g));
    std::fill(demand.begin(), demand.end(), static_cast<double>(n / g));
    scale = static_cast<double>(static_cast<long long>(n) * (m / g));
  } else {
    for (int i = 0; i < n; ++i) supply[static_cast<std::size_t>(i)] = a.weights(rows[static_cast<std::size_t>(i)]);
    for (int j = 0; j < m; ++j) demand[static_cast<std::size_t>(j)] = b.weights(cols[static_cast<std::size_t>(j)]);
  }

  // Compact copies of the supported points for cache-friendly cost sweeps.
  Eigen::MatrixXd pa(dim, n), pb(dim, m);
  for (int i = 0; i < n; ++i) pa.col(i) = a.points.col(rows[static_cast<std::size_t>(i)]);
  for (int j = 0; j < m; ++j) pb.col(j) = b.points.col(cols[static_cast<std::size_t>(j)]);
  // Sink coordinates stored axis by axis so a whole cost row vectorizes.
  const Eigen::MatrixXd pbt = pb.transpose();
  std::vector<double> crow(static_cast<std::size_t>(m));
  auto cost_row = [&](int i) {
    double* out = crow.data();
    const double x0 = pa(0, i);
    const double* b0 = pbt.col(0).data();
    for (int j = 0; j < m; ++j) out[j] = (x0 - b0[j]) * (x0 - b0[j]);
    for (Index k = 1; k < dim; ++k) {
      const double xk = pa(k, i);
      const double* bk = pbt.col(k).data();
      for (int j = 0; j < m; ++j) out[j] += (xk - bk[j]) * (xk - bk[j]);
    }
    if (p == 1)
      for (int j = 0; j < m; ++j) out[j] = std::sqrt(out[j]);
  };

  Eigen::MatrixXd all(dim, n + m);
  all << pa, pb;
  const double diam2 = (all.rowwise().maxCoeff() - all.rowwise().minCoeff()).squaredNorm();
  const double max_cost = p == 2 ? diam2 : std::sqrt(diam2);
  detail::BipartiteSimplex ns(supply, demand, max_cost);

  // Start from the k nearest sinks of every source and the k nearest
  // sources of every sink.
  const int k0 = std::min(m, kNearRow);
  const int kc = std::min(n, kNearCol);
  std::vector<std::pair<double, int>> row(static_cast<std::size_t>(m));
  // Per-sink sorted lists of the kc cheapest sources seen so far.
  std::vector<std::pair<double, int>> near_col(static_cast<std::size_t>(m) * static_cast<std::size_t>(kc),
                                               {kInf, -1});
  for (int i = 0; i < n; ++i) {
    cost_row(i);
    for (int j = 0; j < m; ++j) {
      const double c = crow[static_cast<std::size_t>(j)];
      row[static_cast<std::size_t>(j)] = {c, j};
      auto* slot = &near_col[static_cast<std::size_t>(j) * static_cast<std::size_t>(kc)];
      if (c < slot[kc - 1].first) {
        int q = kc - 1;
        while (q > 0 && slot[q - 1].first > c) {
          slot[q] = slot[q - 1];
          --q;
        }
        slot[q] = {c, i};
      }
    }
    std::nth_element(row.begin(), row.begin() + (k0 - 1), row.end());
    for (int q = 0; q < k0; ++q) ns.add_arc(i, row[static_cast<std::size_t>(q)].second, row[static_cast<std::size_t>(q)].first);
  }
  for (int j = 0; j < m; ++j)
    for (int q = 0; q < kc; ++q) {
      const auto& e = near_col[static_cast<std::size_t>(j) * static_cast<std::size_t>(kc) + static_cast<std::size_t>(q)];
      if (e.second >= 0) ns.add_arc(e.second, j, e.first);
    }

  // Warm start from the staircase coupling along the first coordinate.
  // Simultaneous exhaustion adds a zero arc (i + 1, j), which points away
  // from the far end of the staircase where the tree is anchored.
  {
    auto by_first = [](const Eigen::MatrixXd& pts, int count) {
      std::vector<int> o(static_cast<std::size_t>(count));
      std::iota(o.begin(), o.end(), 0);
      std::stable_sort(o.begin(), o.end(), [&](int p1, int p2) { return pts(0, p1) < pts(0, p2); });
      return o;
    };
    const auto os = by_first(pa, n), ot = by_first(pb, m);
    auto arc = [&](int i, int j) {
      const int s = os[static_cast<std::size_t>(i)], t = ot[static_cast<std::size_t>(j)];
      return ns.add_arc(s, t, ground_cost(pa.col(s).data(), pb.col(t).data(), dim, p));
    };
    const double tol = 1e-12 * std::max(supply[0], demand[0]);
    std::vector<int> tree;
    int i = 0, j = 0;
    double rs = supply[static_cast<std::size_t>(os[0])], rt = demand[static_cast<std::size_t>(ot[0])];
    bool last_was_sink = true;
    while (true) {
      tree.push_back(arc(i, j));
      const double f = std::min(rs, rt);
      rs -= f;
      rt -= f;
      if (i == n - 1 && j == m - 1) break;
      const bool next_source = j == m - 1 || (i < n - 1 && rs <= tol);
      const bool next_sink = i == n - 1 || (j < m - 1 && rt <= tol);
      if (next_source && next_sink) {
        tree.push_back(arc(i + 1, j));
        ++i;
        ++j;
        rs = supply[static_cast<std::size_t>(os[static_cast<std::size_t>(i)])];
        rt = demand[static_cast<std::size_t>(ot[static_cast<std::size_t>(j)])];
        last_was_sink = true;
      } else if (next_source) {
        ++i;
        rs = supply[static_cast<std::size_t>(os[static_cast<std::size_t>(i)])];
        last_was_sink = false;
      } else {
        ++j;
        rt = demand[static_cast<std::size_t>(ot[static_cast<std::size_t>(j)])];
        last_was_sink = true;
      }
    }
    ns.start_from_tree(tree, last_was_sink ? n + ot[static_cast<std::size_t>(m - 1)] : os[static_cast<std::size_t>(n - 1)]);
  }

  // Column generation: solve, then price every pair and add violators.
  while (true) {
    ns.solve();
    int added = 0;
    const double eps = ns.epsilon();
    std::vector<std::pair<double, int>> viol;
    for (int i = 0; i < n; ++i) {
      viol.clear();
      const double pi_i = ns.potential(i);
      cost_row(i);
      for (int j = 0; j < m; ++j) {
        const double rc = crow[static_cast<std::size_t>(j)] + pi_i - ns.potential(n + j);
        if (rc < -eps) viol.emplace_back(rc, j);
      }
      if (viol.empty()) continue;
      const auto take = std::min<std::size_t>(kPerRow, viol.size());
      std::partial_sort(viol.begin(), viol.begin() + static_cast<std::ptrdiff_t>(take), viol.end());
      for (std::size_t q = 0; q < take; ++q) {
        ns.add_arc(i, viol[q].second, crow[static_cast<std::size_t>(viol[q].second)]);
        ++added;
      }
    }
    if (added == 0) break;
  }

  TransportResult r;
  r.solver = "network-simplex";
  r.dropped = (a.size() - n) + (b.size() - m);
  ns.for_each_flow([&](int i, int j, double f) {
    r.plan.source.push_back(rows[static_cast<std::size_t>(i)]);
    r.plan.target.push_back(cols[static_cast<std::size_t>(j)]);
    r.plan.mass.push_back(f / scale);
  });
  if (ns.artificial_flow() / scale > 1e-10)
    throw InvariantViolation("exact_ot: transport problem left flow on artificial arcs");
  finish(r, a, b, p);
  return r;
}

TransportResult w2_weighted(const WeightedCloud& a, const WeightedCloud& b) { return exact_ot(a, b, 2); }
TransportResult w1(const WeightedCloud& a, const WeightedCloud& b) { return exact_ot(a, b, 1); }

TransportResult w2_line(const WeightedCloud& a, const WeightedCloud& b) {
  check_pair(a, b, "w2_line");
  require(a.dim() == 1, "w2_line: clouds must be one-dimensional");
  std::vector<Index> ia(static_cast<std::size_t>(a.size())), ib(static_cast<std::size_t>(b.size()));
  std::iota(ia.begin(), ia.end(), Index{0});
  std::iota(ib.begin(), ib.end(), Index{0});
  std::sort(ia.begin(), ia.end(), [&](Index p, Index q) { return a.points(0, p) < a.points(0, q); });
  std::sort(ib.begin(), ib.end(), [&](Index p, Index q) { return b.points(0, p) < b.points(0, q); });
  TransportResult r;
  r.solver = "monotone";
  std::size_t i = 0, j = 0;
  double ra = a.weights(ia[0]), rb = b.weights(ib[0]);
  while (i < ia.size() && j < ib.size()) {
    const double t = std::min(ra, rb);
    if (t > 0.0) {
      r.plan.source.push_back(ia[i]);
      r.plan.target.push_back(ib[j]);
      r.plan.mass.push_back(t);
    }
    const bool next_a = ra == t;
    const bool next_b = rb == t;
    ra -= t;
    rb -= t;
    if (next_a && ++i < ia.size()) ra = a.weights(ia[i]);
    if (next_b && ++j < ib.size()) rb = b.weights(ib[j]);
  }
  finish(r, a, b, 2);
  return r;
}

double w2_distance(const WeightedCloud& a, const WeightedCloud& b) {
  return a.dim() == 1 ? w2_line(a, b).distance : w2_weighted(a, b).distance;
}

TransportResult brute_force_ot(const WeightedCloud& a, const WeightedCloud& b, int p) {
  check_pair(a, b, "brute_force_ot");
  require(p == 1 || p == 2, "brute_force_ot: p must be 1 or 2");
  if (a.size() > 8 || b.size() > 8) throw DomainError("brute_force_ot: at most 8 atoms per side");
  const Index n = a.size(), m = b.size();
  Eigen::MatrixXd C(n, m);
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < m; ++j) C(i, j) = ground_cost(a.points.col(i).data(), b.points.col(j).data(), a.dim(), p);

  TransportResult r;
  if (n == m && is_uniform(a) && is_uniform(b)) {
    r.solver = "permutations";
    std::vector<Index> perm(static_cast<std::size_t>(n)), best;
    std::iota(perm.begin(), perm.end(), Index{0});
    double best_cost = kInf;
    do {
      double c = 0.0;
      for (Index i = 0; i < n; ++i) c += C(i, perm[static_cast<std::size_t>(i)]);
      if (c < best_cost) {
        best_cost = c;
        best = perm;
      }
    } while (std::next_permutation(perm.begin(), perm.end()));
    for (Index i = 0; i < n; ++i) {
      r.plan.source.push_back(i);
      r.plan.target.push_back(best[static_cast<std::size_t>(i)]);
      r.plan.mass.push_back(1.0 / static_cast<double>(n));
    }
  } else {
    r.solver = "dense-simplex";
    Eigen::MatrixXd A = Eigen::MatrixXd::Zero(n + m, n * m);
    Eigen::VectorXd rhs(n + m), c(n * m);
    for (Index i = 0; i < n; ++i)
      for (Index j = 0; j < m; ++j) {
        A(i, i * m + j) = 1.0;
        A(n + j, i * m + j) = 1.0;
        c(i * m + j) = C(i, j);
      }
    rhs << a.weights, b.weights;
    const Eigen::VectorXd x = bland_simplex(A, rhs, c);
    for (Index i = 0; i < n; ++i)
      for (Index j = 0; j < m; ++j)
        if (x(i * m + j) > 1e-15) {
          r.plan.source.push_back(i);
          r.plan.target.push_back(j);
          r.plan.mass.push_back(x(i * m + j));
        }
  }
  finish(r, a, b, p);
  return r;
}

SinkhornResult sinkhorn(const WeightedCloud& a, const WeightedCloud& b, double epsilon,
                        int max_iters, double tol) {
  check_pair(a, b, "sinkhorn");
  require(epsilon > 0.0, "sinkhorn: epsilon must be positive");
  const Index n = a.size(), m = b.size();
  Eigen::MatrixXd C(n, m);
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < m; ++j) C(i, j) = (a.points.col(i) - b.points.col(j)).squaredNorm();
  const Eigen::ArrayXd la = a.weights.array().log();
  const Eigen::ArrayXd lb = b.weights.array().log();
  Eigen::ArrayXd f = Eigen::ArrayXd::Zero(n), g = Eigen::ArrayXd::Zero(m);

  auto log_plan = [&](Index i, Index j) { return (f(i) + g(j) - C(i, j)) / epsilon + la(i) + lb(j); };

  SinkhornResult out;
  out.epsilon = epsilon;
  for (int it = 1; it <= max_iters; ++it) {
    for (Index i = 0; i < n; ++i) {
      double mx = -kInf;
      for (Index j = 0; j < m; ++j) mx = std::max(mx, (g(j) - C(i, j)) / epsilon + lb(j));
      double s = 0.0;
      for (Index j = 0; j < m; ++j) s += std::exp((g(j) - C(i, j)) / epsilon + lb(j) - mx);
      f(i) = -epsilon * (mx + std::log(s));
    }
    for (Index j = 0; j < m; ++j) {
      double mx = -kInf;
      for (Index i = 0; i < n; ++i) mx = std::max(mx, (f(i) - C(i, j)) / epsilon + la(i));
      double s = 0.0;
      for (Index i = 0; i < n; ++i) s += std::exp((f(i) - C(i, j)) / epsilon + la(i) - mx);
      g(j) = -epsilon * (mx + std::log(s));
    }
    // Columns are exact after the g update; rows carry the residual.
    double res = 0.0;
    for (Index i = 0; i < n; ++i) {
      double s = 0.0;
      for (Index j = 0; j < m; ++j) s += std::exp(log_plan(i, j));
      res = std::max(res, std::abs(s - a.weights(i)));
    }
    out.iterations = it;
    out.residual = res;
    if (res < tol) {
      out.converged = true;
      break;
    }
  }
  double cost = 0.0;
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < m; ++j) cost += std::exp(log_plan(i, j)) * C(i, j);
  out.distance = std::sqrt(cost);
  return out;
}

std::vector<std::vector<int>> permutations(int n) {
  std::vector<std::vector<int>> out;
  std::vector<int> p(static_cast<std::size_t>(n));
  std::iota(p.begin(), p.end(), 0);
  do out.push_back(p);
  while (std::next_permutation(p.begin(), p.end()));
  return out;
}

WeightedCloud symmetrized_delta(const Eigen::MatrixXd& atoms) {
  const Index dim = atoms.rows();
  const int n = static_cast<int>(atoms.cols());
  require(n >= 1 && n <= 5, "symmetrized_delta: 1 <= N <= 5");
  const auto perms = permutations(n);
  Eigen::MatrixXd pts(dim * n, static_cast<Index>(perms.size()));
  for (std::size_t s = 0; s < perms.size(); ++s)
    for (int k = 0; k < n; ++k)
      pts.block(k * dim, static_cast<Index>(s), dim, 1) = atoms.col(perms[s][static_cast<std::size_t>(k)]);
  return WeightedCloud::uniform(std::move(pts));
}

TransportPlan symmetrize_plan(const TransportPlan& plan, int N, const WeightedCloud& a,
                              const WeightedCloud& b) {
  if (N < 1 || N > 5) throw DomainError("symmetrize_plan: N must lie in 1..5");
  const auto perms = permutations(N);
  std::map<std::vector<int>, Index> rank;
  for (std::size_t s = 0; s < perms.size(); ++s) rank[perms[s]] = static_cast<Index>(s);
  require(a.size() == static_cast<Index>(perms.size()) && b.size() == a.size(),
          "symmetrize_plan: clouds must hold N! configurations");

  // Simultaneous relabelling by pi maps atom sigma to sigma o pi.
  std::map<std::pair<Index, Index>, double> acc;
  const double share = 1.0 / static_cast<double>(perms.size());
  std::vector<int> comp(static_cast<std::size_t>(N));
  auto compose = [&](Index s, const std::vector<int>& pi) {
    for (int k = 0; k < N; ++k)
      comp[static_cast<std::size_t>(k)] =
          perms[static_cast<std::size_t>(s)][static_cast<std::size_t>(pi[static_cast<std::size_t>(k)])];
    return rank.at(comp);
  };
  for (const auto& pi : perms)
    for (std::size_t k = 0; k < plan.mass.size(); ++k) {
      const Index s = compose(plan.source[k], pi);
      const Index t = compose(plan.target[k], pi);
      acc[{s, t}] += share * plan.mass[k];
    }
  TransportPlan out;
  for (const auto& [key, mass] : acc) {
    out.source.push_back(key.first);
    out.target.push_back(key.second);
    out.mass.push_back(mass);
  }
  out.cost = plan_cost(out, a, b, 2);
  out.residual = marginal_residual(out, a, b);
  const double before = plan_cost(plan, a, b, 2);
  if (std::abs(out.cost - before) > 1e-12 * std::max(1.0, before))
    throw InvariantViolation("symmetrize_plan: averaged plan changed the cost");
  return out;
}

}  // namespace mfcl
