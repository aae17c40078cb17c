#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

namespace mfcl::detail {

// Primal network simplex for uncapacitated bipartite transportation
// problems (sources 0..n-1, sinks n..n+m-1) on a growing arc set. The
// spanning tree is kept strongly feasible, which rules out cycling on
// degenerate pivots. Reduced cost of arc (s, t) is c + pi_s - pi_t.
class BipartiteSimplex {
 public:
  BipartiteSimplex(const std::vector<double>& supply, const std::vector<double>& demand,
                   double max_cost)
      : n_(static_cast<int>(supply.size())), m_(static_cast<int>(demand.size())) {
    const int nodes = n_ + m_;
    root_ = nodes;
    art_cost_ = (max_cost + 1.0) * static_cast<double>(nodes + 1);
    eps_ = 64.0 * std::numeric_limits<double>::epsilon() * art_cost_;
    parent_.assign(nodes + 1, -1);
    pred_.assign(nodes + 1, -1);
    depth_.assign(nodes + 1, 0);
    up_.assign(nodes + 1, 0);
    pi_.assign(nodes + 1, 0.0);
    children_.assign(nodes + 1, {});
    child_pos_.assign(nodes + 1, -1);
    b_.resize(static_cast<std::size_t>(nodes));
    for (int u = 0; u < nodes; ++u) {
      const bool src = u < n_;
      const double b = src ? supply[static_cast<std::size_t>(u)] : -demand[static_cast<std::size_t>(u - n_)];
      b_[static_cast<std::size_t>(u)] = b;
      // Artificial arc toward the root for supply nodes, away from it for sinks.
      const int e = push_arc(src ? u : root_, src ? root_ : u, art_cost_);
      flow_[static_cast<std::size_t>(e)] = std::abs(b);
      in_tree_[static_cast<std::size_t>(e)] = 1;
      parent_[static_cast<std::size_t>(u)] = root_;
      pred_[static_cast<std::size_t>(u)] = e;
      up_[static_cast<std::size_t>(u)] = src ? 1 : 0;
      depth_[static_cast<std::size_t>(u)] = 1;
      pi_[static_cast<std::size_t>(u)] = src ? -art_cost_ : art_cost_;
      add_child(root_, u);
    }
  }

  int sources() const { return n_; }
  int sinks() const { return m_; }
  double epsilon() const { return eps_; }

  /// Arc from source i to sink j; returns its index.
  int add_arc(int i, int j, double cost) { return push_arc(i, n_ + j, cost); }

  /// Replaces the artificial start by a spanning tree of real arcs hung from
  /// `anchor`. Tree flows follow from the supplies. Zero-flow tree arcs must
  /// point away from the anchor to keep the tree strongly feasible.
  void start_from_tree(const std::vector<int>& tree, int anchor) {
    const int nodes = n_ + m_;
    for (std::size_t e = 0; e < first_real(); ++e) {
      in_tree_[e] = 0;
      flow_[e] = 0.0;
    }
    for (auto& c : children_) c.clear();
    std::vector<std::vector<int>> adj(static_cast<std::size_t>(nodes));
    for (int e : tree) {
      adj[static_cast<std::size_t>(src_[static_cast<std::size_t>(e)])].push_back(e);
      adj[static_cast<std::size_t>(tgt_[static_cast<std::size_t>(e)])].push_back(e);
    }
    // Sinks already own an arc from the root; sources need one.
    const int root_arc = anchor >= n_ ? anchor : push_arc(root_, anchor, art_cost_);
    const auto sa = static_cast<std::size_t>(anchor);
    in_tree_[static_cast<std::size_t>(root_arc)] = 1;
    parent_[sa] = root_;
    pred_[sa] = root_arc;
    up_[sa] = 0;
    depth_[sa] = 1;
    pi_[sa] = pi_[static_cast<std::size_t>(root_)] + art_cost_;
    add_child(root_, anchor);

    std::vector<int> order{anchor};
    std::vector<char> seen(static_cast<std::size_t>(nodes), 0);
    seen[sa] = 1;
    for (std::size_t k = 0; k < order.size(); ++k) {
      const int u = order[k];
      const auto su = static_cast<std::size_t>(u);
      for (int e : adj[su]) {
        const auto se = static_cast<std::size_t>(e);
        const int w = src_[se] == u ? tgt_[se] : src_[se];
        const auto sw = static_cast<std::size_t>(w);
        if (seen[sw]) continue;
        seen[sw] = 1;
        in_tree_[se] = 1;
        parent_[sw] = u;
        pred_[sw] = e;
        up_[sw] = src_[se] == w ? 1 : 0;
        depth_[sw] = depth_[su] + 1;
        pi_[sw] = up_[sw] ? pi_[su] - cost_[se] : pi_[su] + cost_[se];
        add_child(u, w);
        order.push_back(w);
      }
    }
    if (static_cast<int>(order.size()) != nodes) throw std::runtime_error("network simplex: start tree does not span");

    std::vector<double> net(b_);
    for (std::size_t k = order.size(); k-- > 1;) {
      const auto sw = static_cast<std::size_t>(order[k]);
      const double f = up_[sw] ? net[sw] : -net[sw];
      flow_[static_cast<std::size_t>(pred_[sw])] = std::max(0.0, f);
      net[static_cast<std::size_t>(parent_[sw])] += net[sw];
    }
    flow_[static_cast<std::size_t>(root_arc)] = std::max(0.0, -net[sa]);
    next_arc_ = 0;
  }

  double potential(int node) const { return pi_[static_cast<std::size_t>(node)]; }
  double reduced_cost(int i, int j, double cost) const {
    return cost + pi_[static_cast<std::size_t>(i)] - pi_[static_cast<std::size_t>(n_ + j)];
  }

  /// Pivots until no arc prices out. Returns the pivot count.
  long long solve() {
    long long pivots = 0;
    const int arcs = static_cast<int>(src_.size());
    const int block = std::max(10, static_cast<int>(std::sqrt(static_cast<double>(arcs))));
    while (true) {
      const int in = find_entering(block);
      if (in < 0) break;
      pivot(in);
      ++pivots;
    }
    return pivots;
  }

  /// Flow on real arcs as (source, sink, flow) with flow > 0.
  template <typename Visit>
  void for_each_flow(Visit&& visit) const {
    for (std::size_t e = first_real(); e < src_.size(); ++e)
      if (flow_[e] > 0.0) visit(src_[e], tgt_[e] - n_, flow_[e]);
  }

  /// Largest flow left on an artificial arc.
  double artificial_flow() const {
    double worst = 0.0;
    for (std::size_t e = 0; e < first_real(); ++e) worst = std::max(worst, flow_[e]);
    return worst;
  }

 private:
  std::size_t first_real() const { return static_cast<std::size_t>(n_ + m_); }

  int push_arc(int s, int t, double c) {
    src_.push_back(s);
    tgt_.push_back(t);
    cost_.push_back(c);
    flow_.push_back(0.0);
    in_tree_.push_back(0);
    return static_cast<int>(src_.size()) - 1;
  }

  void add_child(int p, int c) {
    auto& list = children_[static_cast<std::size_t>(p)];
    child_pos_[static_cast<std::size_t>(c)] = static_cast<int>(list.size());
    list.push_back(c);
  }

  void remove_child(int p, int c) {
    auto& list = children_[static_cast<std::size_t>(p)];
    const int pos = child_pos_[static_cast<std::size_t>(c)];
    const int last = list.back();
    list[static_cast<std::size_t>(pos)] = last;
    child_pos_[static_cast<std::size_t>(last)] = pos;
    list.pop_back();
  }

  // Block search: scan arcs cyclically, stop at the end of the first block
  // that contains an improving arc and take the best arc seen so far.
  int find_entering(int block) {
    const int arcs = static_cast<int>(src_.size());
    double best = -eps_;
    int in = -1;
    int count = block;
    for (int k = 0; k < arcs; ++k) {
      const int e = (next_arc_ + k) % arcs;
      const auto se = static_cast<std::size_t>(e);
      if (!in_tree_[se]) {
        const double rc = cost_[se] + pi_[static_cast<std::size_t>(src_[se])] -
                          pi_[static_cast<std::size_t>(tgt_[se])];
        if (rc < best) {
          best = rc;
          in = e;
        }
      }
      if (--count == 0) {
        if (in >= 0) {
          next_arc_ = (e + 1) % arcs;
          return in;
        }
        count = block;
      }
    }
    if (in >= 0) next_arc_ = (in + 1) % arcs;
    return in;
  }

  void pivot(int in) {
    const auto si = static_cast<std::size_t>(in);
    const int first = src_[si];
    const int second = tgt_[si];
    int a = first, b = second;
    while (a != b) {
      const int da = depth_[static_cast<std::size_t>(a)], db = depth_[static_cast<std::size_t>(b)];
      if (da >= db) a = parent_[static_cast<std::size_t>(a)];
      if (db >= da) b = parent_[static_cast<std::size_t>(b)];
    }
    const int join = a;

    double delta = std::numeric_limits<double>::infinity();
    int u_out = -1;
    bool out_first = false;
    for (int u = first; u != join; u = parent_[static_cast<std::size_t>(u)]) {
      const auto su = static_cast<std::size_t>(u);
      if (up_[su]) {
        const double d = flow_[static_cast<std::size_t>(pred_[su])];
        if (d < delta) {
          delta = d;
          u_out = u;
          out_first = true;
        }
      }
    }
    for (int u = second; u != join; u = parent_[static_cast<std::size_t>(u)]) {
      const auto su = static_cast<std::size_t>(u);
      if (!up_[su]) {
        const double d = flow_[static_cast<std::size_t>(pred_[su])];
        if (d <= delta) {
          delta = d;
          u_out = u;
          out_first = false;
        }
      }
    }
    if (u_out < 0) throw std::runtime_error("network simplex: unbounded cycle");

    if (delta > 0.0) {
      flow_[si] += delta;
      for (int u = first; u != join; u = parent_[static_cast<std::size_t>(u)]) {
        const auto su = static_cast<std::size_t>(u);
        flow_[static_cast<std::size_t>(pred_[su])] += up_[su] ? -delta : delta;
      }
      for (int u = second; u != join; u = parent_[static_cast<std::size_t>(u)]) {
        const auto su = static_cast<std::size_t>(u);
        flow_[static_cast<std::size_t>(pred_[su])] += up_[su] ? delta : -delta;
      }
    }
    const int leaving = pred_[static_cast<std::size_t>(u_out)];
    flow_[static_cast<std::size_t>(leaving)] = 0.0;
    in_tree_[static_cast<std::size_t>(leaving)] = 0;
    in_tree_[si] = 1;

    // Re-hang the subtree below the leaving arc from the entering arc.
    const int u_in = out_first ? first : second;
    const int v_in = out_first ? second : first;
    remove_child(parent_[static_cast<std::size_t>(u_out)], u_out);
    int w = u_in;
    int new_parent = v_in;
    int new_pred = in;
    char new_up = src_[si] == u_in ? 1 : 0;
    while (true) {
      const auto sw = static_cast<std::size_t>(w);
      const int old_parent = parent_[sw];
      const int old_pred = pred_[sw];
      const char old_up = up_[sw];
      if (w != u_out) remove_child(old_parent, w);
      parent_[sw] = new_parent;
      pred_[sw] = new_pred;
      up_[sw] = new_up;
      add_child(new_parent, w);
      if (w == u_out) break;
      new_parent = w;
      new_pred = old_pred;
      new_up = old_up ? 0 : 1;
      w = old_parent;
    }

    stack_.clear();
    stack_.push_back(u_in);
    while (!stack_.empty()) {
      const int x = stack_.back();
      stack_.pop_back();
      const auto sx = static_cast<std::size_t>(x);
      const auto p = static_cast<std::size_t>(parent_[sx]);
      const double c = cost_[static_cast<std::size_t>(pred_[sx])];
      depth_[sx] = depth_[p] + 1;
      pi_[sx] = up_[sx] ? pi_[p] - c : pi_[p] + c;
      for (int ch : children_[sx]) stack_.push_back(ch);
    }
  }

  int n_;
  int m_;
  int root_;
  double art_cost_;
  double eps_;
  int next_arc_ = 0;

  std::vector<double> b_;
  std::vector<int> src_, tgt_;
  std::vector<double> cost_, flow_;
  std::vector<char> in_tree_;

  std::vector<int> parent_, pred_, depth_;
  std::vector<char> up_;
  std::vector<double> pi_;
  std::vector<std::vector<int>> children_;
  std::vector<int> child_pos_;
  std::vector<int> stack_;
};

}  // namespace mfcl::detail
