#include "emergent/reduce.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace emergent::reduce {

std::string_view to_string(Metric m) { return m == Metric::euclidean ? "euclidean" : "cosine"; }

std::optional<Metric> parse_metric(std::string_view text) {
    if (text == "euclidean") return Metric::euclidean;
    if (text == "cosine") return Metric::cosine;
    return std::nullopt;
}

double distance(std::span<const double> a, std::span<const double> b, Metric metric) {
    if (metric == Metric::euclidean) {
        double s = 0.0;
        for (std::size_t i = 0; i < a.size(); ++i) {
            const double d = a[i] - b[i];
            s += d * d;
        }
        return std::sqrt(s);
    }
    double dot = 0.0, na = 0.0, nb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        dot += a[i] * b[i];
        na += a[i] * a[i];
        nb += b[i] * b[i];
    }
    if (na == 0.0 && nb == 0.0) {
        return 0.0;
    }
    if (na == 0.0 || nb == 0.0) {
        return 1.0;
    }
    return std::max(0.0, 1.0 - dot / std::sqrt(na * nb));
}

NeighborGraph knn(const Matrix& points, std::size_t k, Metric metric) {
    const std::size_t n = points.rows();
    if (k == 0 || n <= k) {
        throw std::invalid_argument("knn requires 0 < k < n (n=" + std::to_string(n) + ", k=" + std::to_string(k) + ")");
    }
    NeighborGraph graph;
    graph.n = n;
    graph.k = k;
    graph.indices.resize(n * k);
    graph.distances.resize(n * k);

    std::vector<std::pair<double, std::size_t>> row(n - 1);
    for (std::size_t i = 0; i < n; ++i) {
        std::size_t m = 0;
        for (std::size_t j = 0; j < n; ++j) {
            if (j != i) {
                row[m++] = {distance(points.row(i), points.row(j), metric), j};
            }
        }
        std::partial_sort(row.begin(), row.begin() + static_cast<std::ptrdiff_t>(k), row.end());
        for (std::size_t r = 0; r < k; ++r) {
            graph.distances[i * k + r] = row[r].first;
            graph.indices[i * k + r] = row[r].second;
        }
    }
    return graph;
}

double trustworthiness(const Matrix& original, const Layout& layout, std::size_t k, Metric metric) {
    const std::size_t n = original.rows();
    if (layout.rows() != n) {
        throw std::invalid_argument("trustworthiness: row counts differ");
    }
    if (k == 0 || 2 * k >= n) {
        throw std::invalid_argument("trustworthiness requires 0 < k < n/2");
    }
    const auto low = knn(layout, k, Metric::euclidean);

    double penalty = 0.0;
    std::vector<std::pair<double, std::size_t>> order(n - 1);
    std::vector<std::size_t> rank(n);
    for (std::size_t i = 0; i < n; ++i) {
        std::size_t m = 0;
        for (std::size_t j = 0; j < n; ++j) {
            if (j != i) {
                order[m++] = {distance(original.row(i), original.row(j), metric), j};
            }
        }
        std::sort(order.begin(), order.end());
        for (std::size_t r = 0; r < order.size(); ++r) {
            rank[order[r].second] = r + 1;
        }
        for (std::size_t j : low.neighbors(i)) {
            if (rank[j] > k) {
                penalty += static_cast<double>(rank[j] - k);
            }
        }
    }
    const double nd = static_cast<double>(n);
    const double kd = static_cast<double>(k);
    return 1.0 - 2.0 / (nd * kd * (2.0 * nd - 3.0 * kd - 1.0)) * penalty;
}

}  // namespace emergent::reduce
