#include "emergent/cluster.hpp"

#include "fixtures.hpp"
#include "oracles.hpp"

#include <doctest.h>

#include <algorithm>
#include <numeric>

using namespace emergent;
using namespace emergent::cluster;

namespace {

/// Two 10-point blobs far apart plus one far isolated point (index 20).
Matrix two_blobs_and_loner(std::uint64_t seed) {
    Rng rng(seed);
    Matrix centers(2, 2, std::vector<double>{0, 0, 20, 0});
    auto b = fixtures::blobs(centers, 10, 0.5, rng);
    Matrix m(21, 2);
    for (std::size_t i = 0; i < 20; ++i) {
        m(i, 0) = b(i, 0);
        m(i, 1) = b(i, 1);
    }
    m(20, 0) = 10.0;
    m(20, 1) = 40.0;
    return m;
}

Matrix three_blobs(Rng& rng, std::size_t n) {
    Matrix centers(3, 2);
    for (auto& v : centers.data()) v = rng.uniform(-10.0, 10.0);
    Matrix m(n, 2);
    for (std::size_t i = 0; i < n; ++i) {
        const auto c = i % 3;
        m(i, 0) = centers(c, 0) + rng.normal();
        m(i, 1) = centers(c, 1) + rng.normal();
    }
    return m;
}

double selection_stability(const CondensedTree& tree, const std::vector<std::size_t>& selected) {
    const auto s = tree.stabilities();
    double total = 0.0;
    for (auto c : selected) total += s[c - tree.n_points];
    return total;
}

}  // namespace

TEST_SUITE("cluster") {
    TEST_CASE("mutual reachability") {
        CHECK(mutual_reachability(5, 1, 2) == 5);
        CHECK(mutual_reachability(1, 4, 2) == 4);
        CHECK(mutual_reachability(3, 3, 3) == 3);
    }

    TEST_CASE("core distances") {
        Matrix m(4, 1, std::vector<double>{0, 1, 3, 7});
        const auto g = reduce::knn(m, 3, reduce::Metric::euclidean);
        const auto c1 = core_distances(g, 1);
        CHECK(c1 == std::vector<double>{1, 1, 2, 4});
        const auto c2 = core_distances(g, 2);
        CHECK(c2 == std::vector<double>{3, 2, 3, 6});

        Matrix dup(5, 2, 1.5);
        const auto gd = reduce::knn(dup, 3, reduce::Metric::euclidean);
        for (double v : core_distances(gd, 3)) CHECK(v == 0.0);

        Rng rng(3);
        const auto r = fixtures::random_matrix(100, 4, rng);
        const auto gr = reduce::knn(r, 5, reduce::Metric::euclidean);
        const auto cr = core_distances(gr, 5);
        for (std::size_t i = 0; i < 100; ++i) {
            std::vector<double> d;
            for (std::size_t j = 0; j < 100; ++j) {
                if (j != i) d.push_back(oracle::euclid(r, i, j));
            }
            std::sort(d.begin(), d.end());
            CHECK(cr[i] == doctest::Approx(d[4]).epsilon(1e-15));
        }
    }

    TEST_CASE("two blobs and an isolated point") {
        const auto m = two_blobs_and_loner(2024);
        const auto r = hdbscan(m, {5, 5});
        CHECK(r.n_clusters == 2);
        CHECK(std::count(r.labels.begin(), r.labels.end(), -1) == 1);
        CHECK(r.labels[20] == -1);
        CHECK(r.labels[0] == 0);
        CHECK(r.labels[10] == 1);
        for (std::size_t i = 0; i < 20; ++i) CHECK(r.glosh[i] <= r.glosh[20]);
        CHECK(r.glosh[20] > 0.5);
    }

    TEST_CASE("fewer points than min_cluster_size are all outliers") {
        const auto r = hdbscan(Matrix(4, 3, 2.0), {5, 5});
        CHECK(r.n_clusters == 0);
        CHECK(r.labels == std::vector<int>(4, -1));
        CHECK(hdbscan(Matrix(1, 3, 2.0), {5, 5}).labels == std::vector<int>{-1});
        CHECK_THROWS_AS(hdbscan(Matrix(0, 3), {5, 5}), std::invalid_argument);
    }

    TEST_CASE("identical points form one cluster with zero GLOSH") {
        for (std::size_t n : {5u, 8u, 30u}) {
            const auto r = hdbscan(Matrix(n, 2, 1.0), {5, 5});
            CHECK(r.n_clusters == 1);
            CHECK(r.labels == std::vector<int>(n, 0));
            for (double g : r.glosh) CHECK(g == 0.0);
        }
    }

    TEST_CASE("parameter validation") {
        CHECK_THROWS_AS(HdbscanParams({1, 1}).validate(), std::invalid_argument);
        CHECK_THROWS_AS(HdbscanParams({5, 6}).validate(), std::invalid_argument);
        CHECK_THROWS_AS(HdbscanParams({5, 0}).validate(), std::invalid_argument);
    }

    TEST_CASE("MST weight equals a brute-force Prim run") {
        Rng rng(41);
        for (int trial = 0; trial < 10; ++trial) {
            const std::size_t n = 20 + rng.below(281);
            const auto m = fixtures::random_matrix(n, 1 + rng.below(4), rng);
            const std::size_t ms = 1 + rng.below(6);
            const auto g = reduce::knn(m, ms, reduce::Metric::euclidean);
            const auto core = core_distances(g, ms);
            const auto mst = mutual_reachability_mst(m, core);
            REQUIRE(mst.size() == n - 1);
            double total = 0.0;
            for (const auto& e : mst) total += e.weight;

            std::vector<bool> in(n, false);
            std::vector<double> best(n, std::numeric_limits<double>::infinity());
            best[0] = 0.0;
            double ref = 0.0;
            for (std::size_t step = 0; step < n; ++step) {
                std::size_t u = n;
                for (std::size_t v = 0; v < n; ++v) {
                    if (!in[v] && (u == n || best[v] < best[u])) u = v;
                }
                in[u] = true;
                ref += best[u];
                for (std::size_t v = 0; v < n; ++v) {
                    if (!in[v]) {
                        best[v] = std::min(best[v], std::max({oracle::euclid(m, u, v), core[u], core[v]}));
                    }
                }
            }
            CHECK(total == doctest::Approx(ref).epsilon(1e-12));
        }
    }

    TEST_CASE("MST ties go to the lexicographically smaller edge") {
        // Four corners of a unit square: every side has weight 1.
        Matrix m(4, 2, std::vector<double>{0, 0, 1, 0, 0, 1, 1, 1});
        const std::vector<double> core(4, 0.0);
        const auto mst = mutual_reachability_mst(m, core);
        std::vector<std::pair<std::size_t, std::size_t>> edges;
        for (const auto& e : mst) edges.emplace_back(e.a, e.b);
        std::sort(edges.begin(), edges.end());
        CHECK(edges == std::vector<std::pair<std::size_t, std::size_t>>{{0, 1}, {0, 2}, {1, 3}});
    }

    TEST_CASE("cluster sizes and outliers account for every point") {
        Rng rng(9);
        for (int trial = 0; trial < 20; ++trial) {
            const auto m = three_blobs(rng, 60 + rng.below(100));
            const auto r = hdbscan(m, {5, 5});
            std::size_t total = static_cast<std::size_t>(std::count(r.labels.begin(), r.labels.end(), -1));
            for (int c = 0; c < r.n_clusters; ++c) {
                const auto size = static_cast<std::size_t>(std::count(r.labels.begin(), r.labels.end(), c));
                CHECK(size >= 1);
                total += size;
            }
            CHECK(total == m.rows());
            for (double g : r.glosh) {
                CHECK(g >= 0.0);
                CHECK(g <= 1.0);
            }
        }
    }

    TEST_CASE("excess of mass is optimal over every valid selection") {
        Rng rng(77);
        int checked = 0;
        for (int trial = 0; trial < 200 && checked < 40; ++trial) {
            const auto m = three_blobs(rng, 30 + rng.below(60));
            const auto res = hdbscan_detailed(m, {3 + rng.below(4), 3});
            const auto& tree = res.tree;
            if (tree.n_clusters < 2 || tree.n_clusters > 12) continue;
            ++checked;
            const auto children = tree.cluster_children();
            // ancestor[c] holds every strict ancestor of cluster c (offsets from the root).
            std::vector<std::vector<bool>> ancestor(tree.n_clusters, std::vector<bool>(tree.n_clusters, false));
            for (std::size_t c = 0; c < tree.n_clusters; ++c) {
                for (auto ch : children[c]) {
                    const auto off = ch - tree.n_points;
                    ancestor[off] = ancestor[c];
                    ancestor[off][c] = true;
                }
            }
            const auto s = tree.stabilities();
            double best = 0.0;
            const std::size_t others = tree.n_clusters - 1;
            for (std::uint32_t mask = 1; mask < (1u << others); ++mask) {
                std::vector<std::size_t> sel;
                for (std::size_t b = 0; b < others; ++b) {
                    if (mask & (1u << b)) sel.push_back(b + 1);
                }
                bool valid = true;
                for (auto a : sel) {
                    for (auto b : sel) {
                        if (ancestor[b][a]) valid = false;
                    }
                }
                if (!valid) continue;
                double total = 0.0;
                for (auto c : sel) total += s[c];
                best = std::max(best, total);
            }
            CHECK(selection_stability(tree, res.selected) == doctest::Approx(best).epsilon(1e-12));
        }
        CHECK(checked >= 10);
    }

    TEST_CASE("labels and GLOSH are scale invariant") {
        Rng rng(13);
        for (int trial = 0; trial < 10; ++trial) {
            const auto m = three_blobs(rng, 90);
            auto scaled = m;
            for (auto& v : scaled.data()) v *= 3.7;
            const auto a = hdbscan(m, {5, 5});
            const auto b = hdbscan(scaled, {5, 5});
            CHECK(a.labels == b.labels);
            for (std::size_t i = 0; i < a.glosh.size(); ++i) {
                CHECK(a.glosh[i] == doctest::Approx(b.glosh[i]).epsilon(1e-9));
            }
        }
    }

    TEST_CASE("permuting rows permutes labels") {
        Rng rng(19);
        for (int trial = 0; trial < 10; ++trial) {
            const auto m = three_blobs(rng, 75);
            std::vector<std::size_t> perm(m.rows());
            std::iota(perm.begin(), perm.end(), 0);
            for (std::size_t i = perm.size() - 1; i > 0; --i) std::swap(perm[i], perm[rng.below(i + 1)]);
            const auto a = hdbscan(m, {5, 5});
            const auto b = hdbscan(m.select_rows(perm), {5, 5});
            std::vector<int> mapped(m.rows());
            for (std::size_t i = 0; i < perm.size(); ++i) mapped[i] = a.labels[perm[i]];
            CHECK(oracle::adjusted_rand(mapped, b.labels) == doctest::Approx(1.0));
            for (std::size_t i = 0; i < perm.size(); ++i) CHECK((mapped[i] == -1) == (b.labels[i] == -1));
        }
    }

    TEST_CASE("tied distances on a lattice do not depend on row order") {
        std::vector<double> coords;
        for (int blob = 0; blob < 2; ++blob) {
            for (int i = 0; i < 4; ++i) {
                for (int j = 0; j < 4; ++j) {
                    coords.push_back(blob * 20.0 + i);
                    coords.push_back(j);
                }
            }
        }
        coords.push_back(10.0);
        coords.push_back(1.5);
        const Matrix m(33, 2, coords);
        const auto a = hdbscan(m, {5, 5});
        CHECK(a.labels == oracle::hdbscan(m, 5, 5));
        Rng rng(4);
        for (int trial = 0; trial < 20; ++trial) {
            std::vector<std::size_t> perm(m.rows());
            std::iota(perm.begin(), perm.end(), 0);
            for (std::size_t i = perm.size() - 1; i > 0; --i) std::swap(perm[i], perm[rng.below(i + 1)]);
            const auto b = hdbscan(m.select_rows(perm), {5, 5});
            std::vector<int> mapped(m.rows());
            for (std::size_t i = 0; i < perm.size(); ++i) mapped[i] = a.labels[perm[i]];
            CHECK(oracle::adjusted_rand(mapped, b.labels) == 1.0);
            for (std::size_t i = 0; i < perm.size(); ++i) {
                CHECK((mapped[i] == -1) == (b.labels[i] == -1));
                CHECK(a.glosh[perm[i]] == doctest::Approx(b.glosh[i]).epsilon(1e-12));
            }
        }
    }

    TEST_CASE("cluster ids are canonical") {
        Rng rng(21);
        for (int trial = 0; trial < 10; ++trial) {
            const auto r = hdbscan(three_blobs(rng, 90), {5, 5});
            int next = 0;
            for (int l : r.labels) {
                if (l < 0) continue;
                CHECK(l <= next);
                if (l == next) ++next;
            }
            CHECK(next == r.n_clusters);
        }
    }

    TEST_CASE("agrees with the textbook reference") {
        Rng rng(99);
        for (int trial = 0; trial < 15; ++trial) {
            const auto m = three_blobs(rng, 60 + rng.below(90));
            const std::size_t mcs = 3 + rng.below(6);
            const std::size_t ms = 1 + rng.below(mcs);
            const auto ours = hdbscan(m, {mcs, ms});
            const auto ref = oracle::hdbscan(m, mcs, ms);
            CHECK(ours.labels == ref);
        }
    }
}
