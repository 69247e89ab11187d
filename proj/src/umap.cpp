#include "emergent/reduce.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <queue>

namespace emergent::reduce {

void ReduceParams::validate() const {
    if (target_dim != 2 && target_dim != 3 && target_dim != 5 && target_dim != 10) {
        throw std::invalid_argument("target_dim must be one of 2, 3, 5, 10");
    }
    if (n_neighbors < 2) {
        throw std::invalid_argument("n_neighbors must be at least 2");
    }
    if (!(min_dist >= 0.0) || !std::isfinite(min_dist)) {
        throw std::invalid_argument("min_dist must be finite and nonnegative");
    }
    if (n_epochs == 0) {
        throw std::invalid_argument("n_epochs must be positive");
    }
}

Calibration calibrate(const NeighborGraph& graph) {
    Calibration cal;
    cal.rho.resize(graph.n);
    cal.sigma.resize(graph.n);
    const double target = std::log2(static_cast<double>(graph.k));
    for (std::size_t i = 0; i < graph.n; ++i) {
        const auto d = graph.dists(i);
        const double rho = d[0];
        double lo = 0.0;
        double hi = std::numeric_limits<double>::infinity();
        double mid = 1.0;
        for (std::size_t it = 0; it < kSmoothKnnMaxIterations; ++it) {
            double psum = 0.0;
            for (double dij : d) {
                const double gap = dij - rho;
                psum += gap > 0.0 ? std::exp(-gap / mid) : 1.0;
            }
            if (std::abs(psum - target) < kSmoothKnnTolerance) {
                break;
            }
            if (psum > target) {
                hi = mid;
                mid = (lo + hi) / 2.0;
            } else {
                lo = mid;
                mid = std::isinf(hi) ? mid * 2.0 : (lo + hi) / 2.0;
            }
        }
        cal.rho[i] = rho;
        cal.sigma[i] = mid;
    }
    return cal;
}

FuzzyGraph fuzzy_union(const NeighborGraph& graph, const Calibration& cal) {
    std::map<std::pair<std::size_t, std::size_t>, double> directed;
    for (std::size_t i = 0; i < graph.n; ++i) {
        const auto nb = graph.neighbors(i);
        const auto d = graph.dists(i);
        for (std::size_t r = 0; r < graph.k; ++r) {
            const double gap = d[r] - cal.rho[i];
            directed[{i, nb[r]}] = gap > 0.0 ? std::exp(-gap / cal.sigma[i]) : 1.0;
        }
    }
    FuzzyGraph out;
    out.n = graph.n;
    std::map<std::pair<std::size_t, std::size_t>, double> sym;
    for (const auto& [key, a] : directed) {
        const auto [i, j] = key;
        if (sym.contains({i, j})) {
            continue;
        }
        auto it = directed.find({j, i});
        const double b = it == directed.end() ? 0.0 : it->second;
        // a + b - a*b is symmetric in (a, b) bit for bit.
        const double w = a + b - a * b;
        sym[{i, j}] = w;
        sym[{j, i}] = w;
    }
    out.edges.reserve(sym.size());
    for (const auto& [key, w] : sym) {
        if (w > 0.0) {
            out.edges.push_back({key.first, key.second, w});
        }
    }
    return out;
}

bool is_connected(const FuzzyGraph& graph) {
    if (graph.n == 0) {
        return false;
    }
    std::vector<std::vector<std::size_t>> adj(graph.n);
    for (const auto& e : graph.edges) {
        adj[e.head].push_back(e.tail);
    }
    std::vector<bool> seen(graph.n, false);
    std::queue<std::size_t> q;
    q.push(0);
    seen[0] = true;
    std::size_t count = 1;
    while (!q.empty()) {
        const auto u = q.front();
        q.pop();
        for (auto v : adj[u]) {
            if (!seen[v]) {
                seen[v] = true;
                ++count;
                q.push(v);
            }
        }
    }
    return count == graph.n;
}

CurveParams find_ab(double min_dist, double spread) {
    constexpr int kPoints = 300;
    std::vector<double> xs(kPoints), ys(kPoints);
    for (int i = 0; i < kPoints; ++i) {
        xs[i] = 3.0 * spread * i / (kPoints - 1);
        ys[i] = xs[i] < min_dist ? 1.0 : std::exp(-(xs[i] - min_dist) / spread);
    }
    auto cost = [&](double a, double b) {
        double c = 0.0;
        for (int i = 0; i < kPoints; ++i) {
            const double r = 1.0 / (1.0 + a * std::pow(xs[i], 2.0 * b)) - ys[i];
            c += r * r;
        }
        return c;
    };

    // Levenberg-Marquardt from (1, 1).
    double a = 1.0, b = 1.0, lambda = 1e-3;
    double current = cost(a, b);
    for (int iter = 0; iter < 2000; ++iter) {
        double jtj[2][2] = {{0, 0}, {0, 0}};
        double jtr[2] = {0, 0};
        for (int i = 0; i < kPoints; ++i) {
            const double x = xs[i];
            const double u = x > 0.0 ? std::pow(x, 2.0 * b) : 0.0;
            const double denom = 1.0 + a * u;
            const double f = 1.0 / denom;
            const double r = f - ys[i];
            const double da = -u / (denom * denom);
            const double db = x > 0.0 ? -a * u * 2.0 * std::log(x) / (denom * denom) : 0.0;
            jtj[0][0] += da * da;
            jtj[0][1] += da * db;
            jtj[1][1] += db * db;
            jtr[0] += da * r;
            jtr[1] += db * r;
        }
        jtj[1][0] = jtj[0][1];
        bool improved = false;
        for (int attempt = 0; attempt < 50 && !improved; ++attempt) {
            const double m00 = jtj[0][0] * (1.0 + lambda);
            const double m11 = jtj[1][1] * (1.0 + lambda);
            const double det = m00 * m11 - jtj[0][1] * jtj[1][0];
            const double step_a = -(m11 * jtr[0] - jtj[0][1] * jtr[1]) / det;
            const double step_b = -(-jtj[1][0] * jtr[0] + m00 * jtr[1]) / det;
            const double trial = cost(a + step_a, b + step_b);
            if (trial < current) {
                const double rel = (current - trial) / current;
                a += step_a;
                b += step_b;
                current = trial;
                lambda = std::max(lambda / 10.0, 1e-15);
                improved = true;
                if (rel < 1e-15) {
                    return {a, b};
                }
            } else {
                lambda *= 10.0;
            }
        }
        if (!improved) {
            break;
        }
    }
    return {a, b};
}

namespace {

void scale_to_box(Matrix& layout) {
    // Each column mapped affinely onto [0, 10].
    for (std::size_t c = 0; c < layout.cols(); ++c) {
        double lo = std::numeric_limits<double>::infinity();
        double hi = -lo;
        for (std::size_t r = 0; r < layout.rows(); ++r) {
            lo = std::min(lo, layout(r, c));
            hi = std::max(hi, layout(r, c));
        }
        const double range = hi - lo;
        for (std::size_t r = 0; r < layout.rows(); ++r) {
            layout(r, c) = range > 0.0 ? 10.0 * (layout(r, c) - lo) / range : 0.0;
        }
    }
}

double clip(double v) { return std::clamp(v, -4.0, 4.0); }

}  // namespace

std::optional<Matrix> spectral_init(const FuzzyGraph& graph, std::size_t dim) {
    const std::size_t n = graph.n;
    if (n <= dim + 1 || !is_connected(graph)) {
        return std::nullopt;
    }
    const auto nn = static_cast<Eigen::Index>(n);
    Eigen::MatrixXd w = Eigen::MatrixXd::Zero(nn, nn);
    for (const auto& e : graph.edges) {
        w(static_cast<Eigen::Index>(e.head), static_cast<Eigen::Index>(e.tail)) = e.weight;
    }
    Eigen::VectorXd inv_sqrt_deg = w.rowwise().sum().cwiseSqrt().cwiseInverse();
    Eigen::MatrixXd laplacian = -(inv_sqrt_deg.asDiagonal() * w * inv_sqrt_deg.asDiagonal());
    laplacian.diagonal().array() += 1.0;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(laplacian);
    if (solver.info() != Eigen::Success) {
        return std::nullopt;
    }
    const Eigen::MatrixXd& vecs = solver.eigenvectors();
    Matrix out(n, dim);
    double max_abs = 0.0;
    for (std::size_t c = 0; c < dim; ++c) {
        const auto col = vecs.col(static_cast<Eigen::Index>(c + 1));
        Eigen::Index arg = 0;
        col.cwiseAbs().maxCoeff(&arg);
        const double sign = col(arg) < 0.0 ? -1.0 : 1.0;
        for (std::size_t r = 0; r < n; ++r) {
            out(r, c) = sign * col(static_cast<Eigen::Index>(r));
            max_abs = std::max(max_abs, std::abs(out(r, c)));
        }
    }
    if (!(max_abs > 0.0) || !out.all_finite()) {
        return std::nullopt;
    }
    for (auto& v : out.data()) {
        v *= 10.0 / max_abs;
    }
    return out;
}

Layout fit_layout(const Matrix& points, const ReduceParams& params) {
    params.validate();
    const std::size_t n = points.rows();
    if (n <= params.n_neighbors) {
        throw std::invalid_argument("fit_layout needs more points (" + std::to_string(n) + ") than n_neighbors (" +
                                    std::to_string(params.n_neighbors) + ")");
    }
    if (!points.all_finite()) {
        throw std::invalid_argument("fit_layout input contains non-finite values");
    }
    const auto graph = knn(points, params.n_neighbors, params.metric);
    const auto fuzzy = fuzzy_union(graph, calibrate(graph));

    Rng rng(params.seed);
    const std::size_t dim = params.target_dim;
    Matrix layout;
    if (auto spectral = spectral_init(fuzzy, dim)) {
        layout = std::move(*spectral);
    } else {
        layout = Matrix(n, dim);
        for (auto& v : layout.data()) {
            v = rng.uniform(-10.0, 10.0);
        }
    }
    scale_to_box(layout);

    const auto [a, b] = find_ab(params.min_dist);
    const double n_epochs = static_cast<double>(params.n_epochs);

    double max_w = 0.0;
    for (const auto& e : fuzzy.edges) {
        max_w = std::max(max_w, e.weight);
    }
    std::vector<Edge> edges;
    for (const auto& e : fuzzy.edges) {
        if (e.weight >= max_w / n_epochs) {
            edges.push_back(e);
        }
    }
    const std::size_t m = edges.size();
    std::vector<double> epochs_per_sample(m), next_sample(m), epochs_per_negative(m), next_negative(m);
    for (std::size_t i = 0; i < m; ++i) {
        epochs_per_sample[i] = n_epochs / (n_epochs * edges[i].weight / max_w);
        next_sample[i] = epochs_per_sample[i];
        epochs_per_negative[i] = epochs_per_sample[i] / static_cast<double>(kNegativeSampleRate);
        next_negative[i] = epochs_per_negative[i];
    }

    double alpha = 1.0;
    for (std::size_t epoch = 0; epoch < params.n_epochs; ++epoch) {
        const double e = static_cast<double>(epoch);
        for (std::size_t i = 0; i < m; ++i) {
            if (next_sample[i] > e) {
                continue;
            }
            auto current = layout.row(edges[i].head);
            auto other = layout.row(edges[i].tail);
            double d2 = 0.0;
            for (std::size_t d = 0; d < dim; ++d) {
                const double diff = current[d] - other[d];
                d2 += diff * diff;
            }
            double coeff = 0.0;
            if (d2 > 0.0) {
                coeff = -2.0 * a * b * std::pow(d2, b - 1.0) / (a * std::pow(d2, b) + 1.0);
            }
            for (std::size_t d = 0; d < dim; ++d) {
                const double g = clip(coeff * (current[d] - other[d]));
                current[d] += g * alpha;
                other[d] -= g * alpha;
            }
            next_sample[i] += epochs_per_sample[i];

            const auto n_neg = static_cast<std::size_t>((e - next_negative[i]) / epochs_per_negative[i]);
            for (std::size_t p = 0; p < n_neg; ++p) {
                const auto k = static_cast<std::size_t>(rng.below(n));
                if (k == edges[i].head) {
                    continue;
                }
                auto neg = layout.row(k);
                double nd2 = 0.0;
                for (std::size_t d = 0; d < dim; ++d) {
                    const double diff = current[d] - neg[d];
                    nd2 += diff * diff;
                }
                if (nd2 <= 0.0) {
                    continue;
                }
                const double rcoeff = 2.0 * b / ((0.001 + nd2) * (a * std::pow(nd2, b) + 1.0));
                for (std::size_t d = 0; d < dim; ++d) {
                    current[d] += clip(rcoeff * (current[d] - neg[d])) * alpha;
                }
            }
            next_negative[i] += static_cast<double>(n_neg) * epochs_per_negative[i];
        }
        alpha = 1.0 - (e + 1.0) / n_epochs;
    }
    if (!layout.all_finite()) {
        throw std::runtime_error("fit_layout diverged to non-finite coordinates");
    }
    return layout;
}

}  // namespace emergent::reduce
