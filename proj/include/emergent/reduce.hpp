#pragma once

#include "emergent/common.hpp"

#include <optional>
#include <string_view>
#include <vector>

namespace emergent::reduce {

enum class Metric { euclidean, cosine };

std::string_view to_string(Metric m);
std::optional<Metric> parse_metric(std::string_view text);

double distance(std::span<const double> a, std::span<const double> b, Metric metric);

/// k exact nearest neighbors per point, self excluded. Lists are sorted by
/// (distance, index), so ties go to the smaller index.
struct NeighborGraph {
    std::size_t n = 0;
    std::size_t k = 0;
    std::vector<std::size_t> indices;  // n*k, row-major
    std::vector<double> distances;     // n*k, row-major

    std::span<const std::size_t> neighbors(std::size_t i) const { return {indices.data() + i * k, k}; }
    std::span<const double> dists(std::size_t i) const { return {distances.data() + i * k, k}; }
};

NeighborGraph knn(const Matrix& points, std::size_t k, Metric metric);

struct ReduceParams {
    std::size_t target_dim = 2;
    std::size_t n_neighbors = 15;
    double min_dist = 0.1;
    std::size_t n_epochs = 200;
    Metric metric = Metric::cosine;
    std::uint64_t seed = 42;

    /// Throws std::invalid_argument when a field is out of range.
    void validate() const;
};

inline constexpr std::size_t kNegativeSampleRate = 5;
inline constexpr std::size_t kSmoothKnnMaxIterations = 64;
inline constexpr double kSmoothKnnTolerance = 1e-5;

/// Per-point connectivity calibration of the neighbor graph.
struct Calibration {
    std::vector<double> rho;    // distance to the nearest neighbor
    std::vector<double> sigma;  // bandwidth solving sum_j exp(-max(0, d_ij - rho_i)/sigma_i) = log2(k)
};

Calibration calibrate(const NeighborGraph& graph);

/// Entry of a symmetric sparse matrix.
struct Edge {
    std::size_t head = 0;
    std::size_t tail = 0;
    double weight = 0.0;
};

/// Symmetric fuzzy graph stored with both (i, j) and (j, i), sorted by (head, tail).
struct FuzzyGraph {
    std::size_t n = 0;
    std::vector<Edge> edges;
};

/// Directed memberships exp(-max(0, d_ij - rho_i)/sigma_i) merged by the
/// probabilistic union w = a + b - a*b.
FuzzyGraph fuzzy_union(const NeighborGraph& graph, const Calibration& calibration);

bool is_connected(const FuzzyGraph& graph);

/// Curve parameters (a, b) of 1/(1 + a*x^(2b)) fitted to the min_dist-offset
/// exponential, least squares on 300 points over [0, 3*spread].
struct CurveParams {
    double a = 0.0;
    double b = 0.0;
};

CurveParams find_ab(double min_dist, double spread = 1.0);

/// Leading nontrivial eigenvectors of the normalized graph Laplacian, scaled so
/// that the largest coordinate has magnitude 10. std::nullopt when the graph is
/// disconnected or too small.
std::optional<Matrix> spectral_init(const FuzzyGraph& graph, std::size_t dim);

using Layout = Matrix;

/// Fits a low-dimensional layout. Pure function of (points, params).
Layout fit_layout(const Matrix& points, const ReduceParams& params);

/// Neighborhood preservation in [0, 1]; euclidean in both spaces by default.
double trustworthiness(const Matrix& original, const Layout& layout, std::size_t k,
                       Metric metric = Metric::euclidean);

}  // namespace emergent::reduce
