#pragma once

#include "emergent/common.hpp"
#include "emergent/reduce.hpp"

#include <vector>

namespace emergent::cluster {

struct HdbscanParams {
    std::size_t min_cluster_size = 5;
    std::size_t min_samples = 5;

    /// Throws std::invalid_argument unless 2 <= min_cluster_size and
    /// 1 <= min_samples <= min_cluster_size.
    void validate() const;
};

/// Core distance of each point: distance to its min_samples-th nearest neighbor
/// (self excluded).
std::vector<double> core_distances(const reduce::NeighborGraph& graph, std::size_t min_samples);

inline double mutual_reachability(double d_ab, double core_a, double core_b) {
    return std::max({core_a, core_b, d_ab});
}

struct MstEdge {
    std::size_t a = 0;  // a < b
    std::size_t b = 0;
    double weight = 0.0;
};

/// Prim's algorithm over the dense mutual-reachability graph (euclidean).
/// Among equal weights the lexicographically smaller (a, b) edge wins.
std::vector<MstEdge> mutual_reachability_mst(const Matrix& points, std::span<const double> core);

/// Single-linkage merge in scipy linkage layout: node ids < n are points, the
/// merge at position i creates node n + i.
struct Merge {
    std::size_t left = 0;
    std::size_t right = 0;
    double distance = 0.0;
    std::size_t size = 0;
};

std::vector<Merge> single_linkage(std::size_t n, std::vector<MstEdge> mst);

/// Condensed cluster tree. Point ids are [0, n); cluster ids start at n (the
/// root) and increase in order of creation.
struct CondensedTree {
    struct Row {
        std::size_t parent = 0;
        std::size_t child = 0;
        double lambda = 0.0;  // 1/distance at which the child leaves the parent
        std::size_t child_size = 0;
    };

    std::size_t n_points = 0;
    std::size_t n_clusters = 0;
    std::vector<Row> rows;

    std::size_t root() const { return n_points; }
    bool is_cluster(std::size_t id) const { return id >= n_points; }

    /// lambda at which each cluster was born (0 for the root).
    std::vector<double> birth_lambdas() const;
    /// Sum over rows under each cluster of (lambda - birth) * child_size.
    std::vector<double> stabilities() const;
    /// Child cluster ids of each cluster.
    std::vector<std::vector<std::size_t>> cluster_children() const;
};

/// Merges at equal distance split a cluster in one step.
CondensedTree condense(std::size_t n, const std::vector<Merge>& merges, std::size_t min_cluster_size);

/// Excess-of-mass selection. The root is only a candidate when it has no child
/// clusters. Returns selected cluster ids in increasing order.
std::vector<std::size_t> select_eom(const CondensedTree& tree);

struct ClusterLabeling {
    std::vector<int> labels;    // -1 for outliers, else 0..n_clusters-1
    std::vector<double> glosh;  // in [0, 1]
    int n_clusters = 0;
};

struct HdbscanResult {
    ClusterLabeling labeling;
    CondensedTree tree;
    std::vector<MstEdge> mst;
    std::vector<std::size_t> selected;
};

HdbscanResult hdbscan_detailed(const Matrix& points, const HdbscanParams& params);

/// Density clustering with explicit outliers and GLOSH scores. Cluster ids are
/// canonical: the cluster holding the lowest-index point gets id 0, and so on.
ClusterLabeling hdbscan(const Matrix& points, const HdbscanParams& params);

/// Labels and GLOSH scores from a condensed tree and a selection.
ClusterLabeling label_points(const CondensedTree& tree, const std::vector<std::size_t>& selected);

}  // namespace emergent::cluster
