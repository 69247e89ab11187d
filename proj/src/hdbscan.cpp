#include "emergent/cluster.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <numeric>
#include <tuple>

namespace emergent::cluster {

void HdbscanParams::validate() const {
    if (min_cluster_size < 2) {
        throw std::invalid_argument("min_cluster_size must be at least 2");
    }
    if (min_samples < 1 || min_samples > min_cluster_size) {
        throw std::invalid_argument("min_samples must lie in [1, min_cluster_size]");
    }
}

std::vector<double> core_distances(const reduce::NeighborGraph& graph, std::size_t min_samples) {
    if (min_samples == 0 || graph.k < min_samples) {
        throw std::invalid_argument("core_distances: neighbor graph has " + std::to_string(graph.k) +
                                    " neighbors per point, need " + std::to_string(min_samples));
    }
    std::vector<double> core(graph.n);
    for (std::size_t i = 0; i < graph.n; ++i) {
        core[i] = graph.dists(i)[min_samples - 1];
    }
    return core;
}

std::vector<MstEdge> mutual_reachability_mst(const Matrix& points, std::span<const double> core) {
    const std::size_t n = points.rows();
    std::vector<MstEdge> mst;
    if (n < 2) {
        return mst;
    }
    mst.reserve(n - 1);
    constexpr double kInf = std::numeric_limits<double>::infinity();
    std::vector<bool> in_tree(n, false);
    std::vector<double> best(n, kInf);
    std::vector<std::size_t> source(n, 0);

    auto key = [](double w, std::size_t u, std::size_t v) {
        return std::make_tuple(w, std::min(u, v), std::max(u, v));
    };

    std::size_t current = 0;
    in_tree[0] = true;
    for (std::size_t step = 1; step < n; ++step) {
        for (std::size_t v = 0; v < n; ++v) {
            if (in_tree[v]) {
                continue;
            }
            const double d = reduce::distance(points.row(current), points.row(v), reduce::Metric::euclidean);
            const double w = mutual_reachability(d, core[current], core[v]);
            if (key(w, current, v) < key(best[v], source[v], v)) {
                best[v] = w;
                source[v] = current;
            }
        }
        std::size_t next = n;
        for (std::size_t v = 0; v < n; ++v) {
            if (!in_tree[v] && (next == n || key(best[v], source[v], v) < key(best[next], source[next], next))) {
                next = v;
            }
        }
        in_tree[next] = true;
        mst.push_back({std::min(source[next], next), std::max(source[next], next), best[next]});
        current = next;
    }
    return mst;
}

namespace {

class UnionFind {
  public:
    explicit UnionFind(std::size_t n) : parent_(n) { std::iota(parent_.begin(), parent_.end(), 0); }
    std::size_t find(std::size_t x) {
        while (parent_[x] != x) {
            parent_[x] = parent_[parent_[x]];
            x = parent_[x];
        }
        return x;
    }
    void unite(std::size_t child, std::size_t parent) { parent_[find(child)] = find(parent); }

  private:
    std::vector<std::size_t> parent_;
};

}  // namespace

std::vector<Merge> single_linkage(std::size_t n, std::vector<MstEdge> mst) {
    std::sort(mst.begin(), mst.end(), [](const MstEdge& x, const MstEdge& y) {
        return std::tie(x.weight, x.a, x.b) < std::tie(y.weight, y.a, y.b);
    });
    std::vector<Merge> merges;
    merges.reserve(mst.size());
    // Union-find over points; each root remembers its current dendrogram node.
    UnionFind uf(n);
    std::vector<std::size_t> node_of(n);
    std::vector<std::size_t> size_of(n, 1);
    std::iota(node_of.begin(), node_of.end(), 0);
    for (const auto& e : mst) {
        const auto ra = uf.find(e.a);
        const auto rb = uf.find(e.b);
        if (ra == rb) {
            throw std::logic_error("single_linkage: edge list is not a tree");
        }
        const std::size_t size = size_of[ra] + size_of[rb];
        merges.push_back({node_of[ra], node_of[rb], e.weight, size});
        uf.unite(rb, ra);
        node_of[ra] = n + merges.size() - 1;
        size_of[ra] = size;
    }
    return merges;
}

std::vector<double> CondensedTree::birth_lambdas() const {
    std::vector<double> birth(n_clusters, 0.0);
    for (const auto& r : rows) {
        if (is_cluster(r.child)) {
            birth[r.child - n_points] = r.lambda;
        }
    }
    return birth;
}

std::vector<double> CondensedTree::stabilities() const {
    const auto birth = birth_lambdas();
    std::vector<double> stability(n_clusters, 0.0);
    for (const auto& r : rows) {
        const double b = birth[r.parent - n_points];
        const double gain = r.lambda == b ? 0.0 : r.lambda - b;
        stability[r.parent - n_points] += gain * static_cast<double>(r.child_size);
    }
    return stability;
}

std::vector<std::vector<std::size_t>> CondensedTree::cluster_children() const {
    std::vector<std::vector<std::size_t>> children(n_clusters);
    for (const auto& r : rows) {
        if (is_cluster(r.child)) {
            children[r.parent - n_points].push_back(r.child);
        }
    }
    return children;
}

CondensedTree condense(std::size_t n, const std::vector<Merge>& merges, std::size_t min_cluster_size) {
    CondensedTree tree;
    tree.n_points = n;
    tree.n_clusters = 1;
    if (n < 2) {
        if (n == 1) {
            tree.rows.push_back({n, 0, std::numeric_limits<double>::infinity(), 1});
        }
        return tree;
    }
    const std::size_t root = 2 * n - 2;
    auto size_of = [&](std::size_t node) { return node < n ? std::size_t{1} : merges[node - n].size; };
    auto lambda_of = [](double distance) {
        return distance > 0.0 ? 1.0 / distance : std::numeric_limits<double>::infinity();
    };
    auto points_under = [&](std::size_t node) {
        std::vector<std::size_t> pts;
        // BFS so that points are emitted in hierarchy order.
        std::deque<std::size_t> queue{node};
        while (!queue.empty()) {
            const auto cur = queue.front();
            queue.pop_front();
            if (cur < n) {
                pts.push_back(cur);
            } else {
                queue.push_back(merges[cur - n].left);
                queue.push_back(merges[cur - n].right);
            }
        }
        return pts;
    };

    // Merges at the same distance form one multi-way split: the children of a
    // node are the maximal subtrees merged strictly below its distance.
    auto split_children = [&](std::size_t node) {
        const double d = merges[node - n].distance;
        std::vector<std::size_t> out;
        std::vector<std::size_t> stack{node};
        while (!stack.empty()) {
            const auto cur = stack.back();
            stack.pop_back();
            if (cur >= n && merges[cur - n].distance == d) {
                stack.push_back(merges[cur - n].right);
                stack.push_back(merges[cur - n].left);
            } else {
                out.push_back(cur);
            }
        }
        return out;
    };

    std::size_t next_label = n + 1;
    std::deque<std::pair<std::size_t, std::size_t>> queue{{root, n}};  // (node, cluster)
    while (!queue.empty()) {
        const auto [node, parent] = queue.front();
        queue.pop_front();
        if (node < n) {
            continue;
        }
        const double lambda = lambda_of(merges[node - n].distance);
        const auto children = split_children(node);
        std::vector<std::size_t> big;
        for (auto c : children) {
            if (size_of(c) >= min_cluster_size) {
                big.push_back(c);
            } else {
                for (auto p : points_under(c)) {
                    tree.rows.push_back({parent, p, lambda, 1});
                }
            }
        }
        if (big.size() == 1) {
            queue.emplace_back(big[0], parent);
        } else {
            for (auto c : big) {
                const auto label = next_label++;
                tree.rows.push_back({parent, label, lambda, size_of(c)});
                queue.emplace_back(c, label);
            }
        }
    }
    tree.n_clusters = next_label - n;
    return tree;
}

std::vector<std::size_t> select_eom(const CondensedTree& tree) {
    const auto children = tree.cluster_children();
    auto stability = tree.stabilities();
    const std::size_t root_index = 0;
    if (children[root_index].empty()) {
        return {tree.root()};
    }
    std::vector<bool> selected(tree.n_clusters, false);
    // Children always carry larger ids than their parents, so a descending
    // sweep visits every subtree before its parent.
    for (std::size_t c = tree.n_clusters; c-- > 1;) {
        double subtree = 0.0;
        for (auto child : children[c]) {
            subtree += stability[child - tree.n_points];
        }
        if (subtree > stability[c]) {
            stability[c] = subtree;
        } else {
            selected[c] = true;
            std::vector<std::size_t> stack(children[c].begin(), children[c].end());
            while (!stack.empty()) {
                const auto s = stack.back();
                stack.pop_back();
                selected[s - tree.n_points] = false;
                for (auto g : children[s - tree.n_points]) {
                    stack.push_back(g);
                }
            }
        }
    }
    std::vector<std::size_t> out;
    for (std::size_t c = 1; c < tree.n_clusters; ++c) {
        if (selected[c]) {
            out.push_back(tree.n_points + c);
        }
    }
    return out;
}

ClusterLabeling label_points(const CondensedTree& tree, const std::vector<std::size_t>& selected) {
    const std::size_t n = tree.n_points;
    const std::size_t total = n + tree.n_clusters;
    std::vector<bool> is_selected(total, false);
    for (auto c : selected) {
        is_selected[c] = true;
    }
    std::vector<std::size_t> parent_of(total, total);
    std::vector<double> leave_lambda(n, 0.0);
    std::vector<std::size_t> point_parent(n, tree.root());
    for (const auto& r : tree.rows) {
        parent_of[r.child] = r.parent;
        if (r.child < n) {
            leave_lambda[r.child] = r.lambda;
            point_parent[r.child] = r.parent;
        }
    }

    // Deepest lambda reached anywhere under each cluster.
    std::vector<double> deaths(tree.n_clusters, 0.0);
    for (const auto& r : tree.rows) {
        auto& d = deaths[r.parent - n];
        d = std::max(d, r.lambda);
    }
    for (std::size_t c = tree.n_clusters; c-- > 1;) {
        const auto p = parent_of[n + c] - n;
        deaths[p] = std::max(deaths[p], deaths[c]);
    }

    ClusterLabeling out;
    out.labels.assign(n, -1);
    out.glosh.assign(n, 0.0);
    const bool root_only = selected.size() == 1 && selected[0] == tree.root();
    double root_max_point_lambda = 0.0;
    for (const auto& r : tree.rows) {
        if (r.parent == tree.root()) {
            root_max_point_lambda = std::max(root_max_point_lambda, r.lambda);
        }
    }

    std::vector<int> raw(n, -1);
    for (std::size_t p = 0; p < n; ++p) {
        // Walk up to the nearest selected ancestor.
        std::size_t node = point_parent[p];
        while (node != tree.root() && !is_selected[node]) {
            node = parent_of[node];
        }
        if (node == tree.root()) {
            if (root_only && leave_lambda[p] >= root_max_point_lambda) {
                raw[p] = static_cast<int>(node);
            }
        } else {
            raw[p] = static_cast<int>(node);
        }

        const double lambda_max = deaths[point_parent[p] - n];
        const double lp = leave_lambda[p];
        double score = 0.0;
        if (lambda_max > 0.0 && std::isfinite(lp)) {
            score = 1.0 - lp / lambda_max;
        }
        out.glosh[p] = std::clamp(score, 0.0, 1.0);
    }

    // Canonical ids by first member index.
    std::vector<int> canonical(total, -1);
    int next = 0;
    for (std::size_t p = 0; p < n; ++p) {
        if (raw[p] >= 0) {
            auto& id = canonical[static_cast<std::size_t>(raw[p])];
            if (id < 0) {
                id = next++;
            }
            out.labels[p] = id;
        }
    }
    out.n_clusters = next;
    return out;
}

HdbscanResult hdbscan_detailed(const Matrix& points, const HdbscanParams& params) {
    params.validate();
    const std::size_t n = points.rows();
    if (n == 0) {
        throw std::invalid_argument("hdbscan: empty input");
    }
    if (!points.all_finite()) {
        throw std::invalid_argument("hdbscan: non-finite input");
    }
    HdbscanResult result;
    if (n == 1) {
        result.tree = condense(1, {}, params.min_cluster_size);
        result.labeling.labels = {-1};
        result.labeling.glosh = {0.0};
        return result;
    }
    const std::size_t k = std::min(params.min_samples, n - 1);
    const auto graph = reduce::knn(points, k, reduce::Metric::euclidean);
    const auto core = core_distances(graph, k);
    result.mst = mutual_reachability_mst(points, core);
    const auto merges = single_linkage(n, result.mst);
    result.tree = condense(n, merges, params.min_cluster_size);
    if (n >= params.min_cluster_size) {
        result.selected = select_eom(result.tree);
    }
    result.labeling = label_points(result.tree, result.selected);
    return result;
}

ClusterLabeling hdbscan(const Matrix& points, const HdbscanParams& params) {
    return hdbscan_detailed(points, params).labeling;
}

}  // namespace emergent::cluster
