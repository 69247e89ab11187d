#include "emergent/reduce.hpp"

#include "fixtures.hpp"
#include "oracles.hpp"

#include <doctest.h>

#include <cmath>
#include <set>

using namespace emergent;
using namespace emergent::reduce;

namespace {

Matrix collinear(std::initializer_list<double> xs) {
    Matrix m(xs.size(), 1);
    std::size_t i = 0;
    for (double x : xs) m(i++, 0) = x;
    return m;
}

}  // namespace

TEST_SUITE("reduce") {
    TEST_CASE("distances") {
        const std::vector<double> a{1, 0}, b{0, 2};
        CHECK(distance(a, b, Metric::euclidean) == doctest::Approx(std::sqrt(5.0)));
        CHECK(distance(a, b, Metric::cosine) == doctest::Approx(1.0));
        CHECK(distance(a, a, Metric::cosine) == doctest::Approx(0.0));
        CHECK(parse_metric("cosine") == Metric::cosine);
        CHECK_FALSE(parse_metric("manhattan").has_value());
    }

    TEST_CASE("collinear points 0, 1, 10 with k=1") {
        const auto g = knn(collinear({0, 1, 10}), 1, Metric::euclidean);
        CHECK(g.neighbors(0)[0] == 1);
        CHECK(g.neighbors(1)[0] == 0);
        CHECK(g.neighbors(2)[0] == 1);
    }

    TEST_CASE("duplicates and equal distances go to the smaller index") {
        const auto g = knn(collinear({5, 0, 5, 5}), 2, Metric::euclidean);
        CHECK(g.neighbors(0)[0] == 2);
        CHECK(g.dists(0)[0] == 0.0);
        CHECK(g.neighbors(0)[1] == 3);
        CHECK(g.neighbors(3)[0] == 0);
        CHECK(g.neighbors(3)[1] == 2);
        const auto h = knn(collinear({0, 1, -1}), 1, Metric::euclidean);
        CHECK(h.neighbors(0)[0] == 1);
        CHECK_THROWS_AS(knn(collinear({0, 1}), 2, Metric::euclidean), std::invalid_argument);
    }

    TEST_CASE("knn equals a full scan on random matrices") {
        Rng rng(17);
        for (std::size_t n : {20u, 150u, 500u}) {
            for (auto metric : {Metric::euclidean, Metric::cosine}) {
                const auto m = fixtures::random_matrix(n, 1 + rng.below(12), rng);
                const std::size_t k = std::min<std::size_t>(15, n - 1);
                const auto g = knn(m, k, metric);
                const auto ref = oracle::knn(m, k, [&](std::size_t i, std::size_t j) {
                    return distance(m.row(i), m.row(j), metric);
                });
                for (std::size_t i = 0; i < n; ++i) {
                    const auto nb = g.neighbors(i);
                    REQUIRE(std::vector<std::size_t>(nb.begin(), nb.end()) == ref[i]);
                }
            }
        }
    }

    TEST_CASE("knn equals a full scan at n = 2000") {
        Rng rng(23);
        const auto m = fixtures::random_matrix(2000, 3, rng);
        const auto g = knn(m, 15, Metric::euclidean);
        const auto ref = oracle::knn(m, 15, [&](std::size_t i, std::size_t j) { return oracle::euclid(m, i, j); });
        std::size_t mismatches = 0;
        for (std::size_t i = 0; i < 2000; ++i) {
            const auto nb = g.neighbors(i);
            if (std::vector<std::size_t>(nb.begin(), nb.end()) != ref[i]) ++mismatches;
        }
        CHECK(mismatches == 0);
    }

    TEST_CASE("calibration hits log2(k)") {
        Rng rng(5);
        const auto m = fixtures::random_matrix(300, 6, rng);
        const auto g = knn(m, 15, Metric::euclidean);
        const auto cal = calibrate(g);
        const double target = std::log2(15.0);
        for (std::size_t i = 0; i < g.n; ++i) {
            const auto d = g.dists(i);
            std::set<double> distinct(d.begin(), d.end());
            if (distinct.size() != d.size()) continue;
            CHECK(cal.rho[i] == d[0]);
            double s = 0.0;
            for (double dij : d) s += std::exp(-std::max(0.0, dij - cal.rho[i]) / cal.sigma[i]);
            CHECK(std::abs(s - target) <= 1e-4);
        }
    }

    TEST_CASE("fuzzy union is symmetric and follows the probabilistic sum") {
        Rng rng(6);
        const auto m = fixtures::random_matrix(120, 4, rng);
        const auto g = knn(m, 10, Metric::euclidean);
        const auto cal = calibrate(g);
        const auto fg = fuzzy_union(g, cal);
        std::map<std::pair<std::size_t, std::size_t>, double> w;
        for (const auto& e : fg.edges) {
            CHECK(e.weight > 0.0);
            CHECK(e.weight <= 1.0);
            w[{e.head, e.tail}] = e.weight;
        }
        for (const auto& [key, v] : w) {
            REQUIRE(w.contains({key.second, key.first}));
            CHECK(w[{key.second, key.first}] == v);
        }
        auto membership = [&](std::size_t i, std::size_t j) {
            const auto nb = g.neighbors(i);
            for (std::size_t r = 0; r < g.k; ++r) {
                if (nb[r] == j) return std::exp(-std::max(0.0, g.dists(i)[r] - cal.rho[i]) / cal.sigma[i]);
            }
            return 0.0;
        };
        for (const auto& [key, v] : w) {
            const double a = membership(key.first, key.second);
            const double b = membership(key.second, key.first);
            CHECK(v == doctest::Approx(a + b - a * b).epsilon(1e-12));
        }
        CHECK(is_connected(fg));
    }

    TEST_CASE("curve parameters match the reference fit") {
        // Reference values from scipy.optimize.curve_fit on the same 300-point grid.
        const auto p01 = find_ab(0.1);
        CHECK(p01.a == doctest::Approx(1.5769434602697652).epsilon(1e-6));
        CHECK(p01.b == doctest::Approx(0.8950608778515733).epsilon(1e-6));
        const auto p0 = find_ab(0.0);
        CHECK(p0.a == doctest::Approx(1.93280839734315).epsilon(1e-6));
        CHECK(p0.b == doctest::Approx(0.7904949732233831).epsilon(1e-6));
        const auto p05 = find_ab(0.5);
        CHECK(p05.a == doctest::Approx(0.5830300203414425).epsilon(1e-6));
        CHECK(p05.b == doctest::Approx(1.3341669924314914).epsilon(1e-6));
    }

    TEST_CASE("spectral init") {
        Rng rng(8);
        const auto m = fixtures::random_matrix(80, 5, rng);
        const auto g = knn(m, 10, Metric::euclidean);
        const auto fg = fuzzy_union(g, calibrate(g));
        const auto init = spectral_init(fg, 3);
        REQUIRE(init.has_value());
        CHECK(init->rows() == 80);
        CHECK(init->cols() == 3);
        double mx = 0.0;
        for (double v : init->data()) mx = std::max(mx, std::abs(v));
        CHECK(mx == doctest::Approx(10.0));

        // Two far groups give a disconnected graph.
        Matrix two(10, 1);
        for (std::size_t i = 0; i < 10; ++i) two(i, 0) = i < 5 ? static_cast<double>(i) : 1000.0 + static_cast<double>(i);
        const auto g2 = knn(two, 2, Metric::euclidean);
        const auto fg2 = fuzzy_union(g2, calibrate(g2));
        CHECK_FALSE(is_connected(fg2));
        CHECK_FALSE(spectral_init(fg2, 2).has_value());
    }

    TEST_CASE("fit_layout shape and determinism") {
        Rng rng(12);
        Matrix centers(3, 40);
        for (auto& v : centers.data()) v = rng.uniform(-5.0, 5.0);
        const auto m = fixtures::blobs(centers, 30, 0.5, rng);
        ReduceParams p;
        p.target_dim = 10;
        p.n_epochs = 50;
        const auto a = fit_layout(m, p);
        CHECK(a.rows() == 90);
        CHECK(a.cols() == 10);
        CHECK(a.all_finite());
        const auto b = fit_layout(m, p);
        CHECK(a.data() == b.data());
        p.seed = 43;
        CHECK_FALSE(fit_layout(m, p).data() == a.data());
    }

    TEST_CASE("fit_layout on a disconnected graph uses a seeded random start") {
        Matrix m(12, 2);
        for (std::size_t i = 0; i < 12; ++i) {
            m(i, 0) = i < 6 ? 0.1 * static_cast<double>(i) : 100.0 + 0.1 * static_cast<double>(i);
            m(i, 1) = static_cast<double>(i % 3);
        }
        ReduceParams p;
        p.n_neighbors = 3;
        p.metric = Metric::euclidean;
        const auto a = fit_layout(m, p);
        CHECK(a.all_finite());
        CHECK(a.data() == fit_layout(m, p).data());
    }

    TEST_CASE("fit_layout preconditions") {
        ReduceParams p;
        CHECK_THROWS_AS(fit_layout(Matrix(10, 3, 1.0), p), std::invalid_argument);
        Rng rng(1);
        auto m = fixtures::random_matrix(30, 3, rng);
        m(4, 1) = std::nan("");
        CHECK_THROWS_AS(fit_layout(m, p), std::invalid_argument);
        p.target_dim = 4;
        CHECK_THROWS_AS(p.validate(), std::invalid_argument);
        p.target_dim = 2;
        p.min_dist = -1.0;
        CHECK_THROWS_AS(p.validate(), std::invalid_argument);
    }

    TEST_CASE("trustworthiness") {
        Rng rng(31);
        // Data already in a 2D subspace: the first two coordinates are a perfect layout.
        Matrix m(60, 5, 0.0);
        Matrix flat(60, 2);
        for (std::size_t i = 0; i < 60; ++i) {
            m(i, 0) = flat(i, 0) = rng.uniform();
            m(i, 1) = flat(i, 1) = rng.uniform();
        }
        CHECK(trustworthiness(m, flat, 5) == doctest::Approx(1.0).epsilon(1e-12));

        std::vector<std::size_t> perm(60);
        std::iota(perm.begin(), perm.end(), 0);
        for (std::size_t i = 59; i > 0; --i) std::swap(perm[i], perm[rng.below(i + 1)]);
        const auto shuffled = flat.select_rows(perm);
        CHECK(trustworthiness(m, shuffled, 5) < 1.0);

        const auto x = fixtures::random_matrix(80, 6, rng);
        const auto y = fixtures::random_matrix(80, 2, rng);
        CHECK(trustworthiness(x, y, 7) == doctest::Approx(oracle::trustworthiness(x, y, 7)).epsilon(1e-12));

        // Two coincident points in both spaces cost nothing.
        Matrix d(30, 2);
        for (std::size_t i = 0; i < 30; ++i) {
            d(i, 0) = static_cast<double>(i);
            d(i, 1) = 0.0;
        }
        d(29, 0) = d(28, 0);
        CHECK(trustworthiness(d, d, 3) == doctest::Approx(1.0));

        CHECK_THROWS_AS(trustworthiness(x, y, 40), std::invalid_argument);
        CHECK_THROWS_AS(trustworthiness(x, Matrix(79, 2), 5), std::invalid_argument);
    }
}
