#include "flowguard/clustering.hpp"

#include <algorithm>
#include <limits>
#include <numeric>
#include <string>

#include "flowguard/error.hpp"
#include "flowguard/kdtree.hpp"

namespace flowguard {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

struct Edge {
  std::size_t a = 0, b = 0;
  double weight = 0.0;
};

// Prim's algorithm on the implicit complete graph of mutual-reachability
// distances. O(n^2) time, O(n) memory. Ties go to the lower vertex index.
std::vector<Edge> mutual_reachability_mst(const Matrix& points, std::span<const double> core) {
  const std::size_t n = points.rows();
  std::vector<Edge> edges;
  edges.reserve(n > 0 ? n - 1 : 0);
  std::vector<char> in_tree(n, 0);
  std::vector<double> key(n, kInf);
  std::vector<std::size_t> parent(n, 0);

  std::size_t current = 0;
  in_tree[0] = 1;
  for (std::size_t step = 1; step < n; ++step) {
    const auto pc = points.row(current);
    std::size_t best = n;
    double best_key = kInf;
    for (std::size_t v = 0; v < n; ++v) {
      if (in_tree[v]) continue;
      const double w = std::max({core[current], core[v], euclidean(pc, points.row(v))});
      if (w < key[v]) {
        key[v] = w;
        parent[v] = current;
      }
      if (best == n || key[v] < best_key) {
        best = v;
        best_key = key[v];
      }
    }
    in_tree[best] = 1;
    edges.push_back({parent[best], best, key[best]});
    current = best;
  }
  return edges;
}

struct Linkage {
  std::size_t left = 0, right = 0;
  double distance = 0.0;
  std::size_t size = 0;
};

class UnionFind {
 public:
  explicit UnionFind(std::size_t n) : parent_(2 * n - 1), next_(n) {
    std::iota(parent_.begin(), parent_.end(), std::size_t{0});
  }
  std::size_t find(std::size_t x) {
    while (parent_[x] != x) {
      parent_[x] = parent_[parent_[x]];
      x = parent_[x];
    }
    return x;
  }
  std::size_t merge(std::size_t a, std::size_t b) {
    const std::size_t node = next_++;
    parent_[a] = node;
    parent_[b] = node;
    return node;
  }

 private:
  std::vector<std::size_t> parent_;
  std::size_t next_;
};

std::vector<Linkage> single_linkage(std::vector<Edge> edges, std::size_t n) {
  std::sort(edges.begin(), edges.end(), [](const Edge& x, const Edge& y) {
    const auto kx = std::tuple(x.weight, std::min(x.a, x.b), std::max(x.a, x.b));
    const auto ky = std::tuple(y.weight, std::min(y.a, y.b), std::max(y.a, y.b));
    return kx < ky;
  });
  UnionFind uf(n);
  std::vector<std::size_t> size(2 * n - 1, 1);
  std::vector<Linkage> tree;
  tree.reserve(n - 1);
  for (const Edge& e : edges) {
    const std::size_t ra = uf.find(e.a);
    const std::size_t rb = uf.find(e.b);
    const std::size_t node = uf.merge(ra, rb);
    size[node] = size[ra] + size[rb];
    tree.push_back({ra, rb, e.weight, size[node]});
  }
  return tree;
}

struct CondensedEntry {
  std::size_t parent = 0;  // cluster id (>= n)
  std::size_t child = 0;   // point id (< n) or cluster id (>= n)
  double lambda = 0.0;
  std::size_t child_size = 0;
};

class Condenser {
 public:
  Condenser(const std::vector<Linkage>& tree, std::size_t n, std::size_t min_cluster_size)
      : tree_(tree), n_(n), mcs_(min_cluster_size) {}

  std::vector<CondensedEntry> run() {
    const std::size_t root = 2 * n_ - 2;
    std::vector<std::size_t> relabel(2 * n_ - 1, 0);
    std::vector<char> ignore(2 * n_ - 1, 0);
    relabel[root] = n_;
    std::size_t next_label = n_ + 1;

    std::vector<std::size_t> order{root};
    for (std::size_t i = 0; i < order.size(); ++i) {
      const std::size_t node = order[i];
      if (node < n_) continue;
      const Linkage& l = link(node);
      order.push_back(l.left);
      order.push_back(l.right);
    }

    for (const std::size_t node : order) {
      if (node < n_ || ignore[node]) continue;
      const Linkage& l = link(node);
      const double lambda = l.distance > 0.0 ? 1.0 / l.distance : kInf;
      const std::size_t lc = size_of(l.left);
      const std::size_t rc = size_of(l.right);
      const std::size_t parent = relabel[node];

      if (lc >= mcs_ && rc >= mcs_) {
        relabel[l.left] = next_label++;
        out_.push_back({parent, relabel[l.left], lambda, lc});
        relabel[l.right] = next_label++;
        out_.push_back({parent, relabel[l.right], lambda, rc});
      } else if (lc < mcs_ && rc < mcs_) {
        fall_out(l.left, parent, lambda, ignore);
        fall_out(l.right, parent, lambda, ignore);
      } else if (lc < mcs_) {
        relabel[l.right] = parent;
        fall_out(l.left, parent, lambda, ignore);
      } else {
        relabel[l.left] = parent;
        fall_out(l.right, parent, lambda, ignore);
      }
    }
    return std::move(out_);
  }

 private:
  const Linkage& link(std::size_t node) const { return tree_[node - n_]; }
  std::size_t size_of(std::size_t node) const { return node < n_ ? 1 : link(node).size; }

  void fall_out(std::size_t node, std::size_t parent, double lambda, std::vector<char>& ignore) {
    std::vector<std::size_t> stack{node};
    while (!stack.empty()) {
      const std::size_t cur = stack.back();
      stack.pop_back();
      ignore[cur] = 1;
      if (cur < n_) {
        out_.push_back({parent, cur, lambda, 1});
      } else {
        stack.push_back(link(cur).right);
        stack.push_back(link(cur).left);
      }
    }
  }

  const std::vector<Linkage>& tree_;
  std::size_t n_;
  std::size_t mcs_;
  std::vector<CondensedEntry> out_;
};

}  // namespace

ClusterAssignment hdbscan(const Matrix& points, std::size_t min_cluster_size, std::size_t min_samples) {
  if (points.empty()) throw Error(ErrorCode::EmptyInput, "hdbscan on an empty point set");
  if (min_cluster_size < 2) throw Error(ErrorCode::InvalidArgument, "min_cluster_size must be >= 2");
  if (min_samples < 1) throw Error(ErrorCode::InvalidArgument, "min_samples must be >= 1");
  const std::size_t n = points.rows();
  if (n < min_cluster_size) {
    throw Error(ErrorCode::TooFewPoints,
                std::to_string(n) + " points < min_cluster_size " + std::to_string(min_cluster_size));
  }

  std::vector<double> core(n, 0.0);
  {
    const KdTree tree(points);
    const std::size_t k = std::min(min_samples, n);
    for (std::size_t i = 0; i < n; ++i) core[i] = tree.knn(points.row(i), k).back().distance;
  }

  const auto linkage = single_linkage(mutual_reachability_mst(points, core), n);
  const auto condensed = Condenser(linkage, n, min_cluster_size).run();

  // Cluster ids run from n (root) to n + n_clusters - 1; index them from 0.
  std::size_t max_id = n;
  for (const auto& e : condensed) max_id = std::max({max_id, e.parent, e.child >= n ? e.child : n});
  const std::size_t n_nodes = max_id - n + 1;

  std::vector<double> birth(n_nodes, 0.0);
  std::vector<std::size_t> parent_of(n_nodes, 0);
  std::vector<std::vector<std::size_t>> children(n_nodes);
  std::vector<std::size_t> point_parent(n, 0);
  for (const auto& e : condensed) {
    if (e.child >= n) {
      birth[e.child - n] = e.lambda;
      parent_of[e.child - n] = e.parent - n;
      children[e.parent - n].push_back(e.child - n);
    } else {
      point_parent[e.child] = e.parent - n;
    }
  }

  std::vector<double> stability(n_nodes, 0.0);
  for (const auto& e : condensed) {
    const std::size_t c = e.parent - n;
    if (e.lambda == birth[c]) continue;  // also covers inf - inf
    stability[c] += (e.lambda - birth[c]) * static_cast<double>(e.child_size);
  }

  // Excess of mass, bottom-up. Children always carry larger ids than parents.
  std::vector<char> selected(n_nodes, 1);
  selected[0] = children[0].empty() ? 1 : 0;
  for (std::size_t c = n_nodes; c-- > 1;) {
    double child_sum = 0.0;
    for (std::size_t ch : children[c]) child_sum += stability[ch];
    if (!children[c].empty() && child_sum > stability[c]) {
      selected[c] = 0;
      stability[c] = child_sum;
    } else {
      std::vector<std::size_t> stack(children[c].begin(), children[c].end());
      while (!stack.empty()) {
        const std::size_t d = stack.back();
        stack.pop_back();
        selected[d] = 0;
        stack.insert(stack.end(), children[d].begin(), children[d].end());
      }
    }
  }

  std::vector<int> labels(n, kNoise);
  for (std::size_t i = 0; i < n; ++i) {
    std::size_t c = point_parent[i];
    while (true) {
      if (selected[c]) {
        labels[i] = static_cast<int>(c);
        break;
      }
      if (c == 0) break;
      c = parent_of[c];
    }
  }
  return ClusterAssignment::from_labels(std::move(labels));
}

}  // namespace flowguard
