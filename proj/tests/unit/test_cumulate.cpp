#include "emergent/cumulate.hpp"

#include "fixtures.hpp"
#include "oracles.hpp"

#include <doctest.h>

using namespace emergent;
using namespace emergent::cumulate;
using corpus_io::Date;

namespace {

Trajectory traj(std::vector<int> labels, std::size_t first = 1, std::string id = "d") {
    return Trajectory{std::move(id), first, std::move(labels)};
}

/// Results for a hand-written label grid: labels[t][i] for corpus index i,
/// a missing entry (INT_MIN) means the document has not arrived yet.
struct Grid {
    corpus_io::Corpus corpus;
    std::vector<WindowResult> results;
};

Grid grid(const std::vector<std::vector<int>>& labels) {
    constexpr int kAbsent = std::numeric_limits<int>::min();
    const std::size_t n = labels.front().size();
    std::vector<corpus_io::Document> docs;
    for (std::size_t i = 0; i < n; ++i) {
        std::size_t first = 0;
        while (labels[first][i] == kAbsent) ++first;
        docs.push_back(fixtures::doc("d" + std::to_string(i), Date{2022, static_cast<int>(first) + 1, 1}.to_string(), "x"));
    }
    Grid g{corpus_io::Corpus(docs), {}};
    for (std::size_t t = 0; t < labels.size(); ++t) {
        WindowResult w;
        w.window = t + 1;
        w.end_date = Date{2022, static_cast<int>(t) + 1, 1}.end_of_month();
        for (std::size_t i = 0; i < n; ++i) {
            // Corpus order matches input order because dates are nondecreasing in i here.
            if (labels[t][i] != kAbsent) {
                w.members.push_back(i);
                w.labeling.labels.push_back(labels[t][i]);
                w.labeling.glosh.push_back(0.0);
            }
        }
        g.results.push_back(w);
    }
    return g;
}

constexpr int X = std::numeric_limits<int>::min();

corpus_io::SyntheticData small_scenario(std::uint64_t seed) {
    corpus_io::ScenarioSpec spec;
    spec.dim = 12;
    spec.models = 1;
    spec.windows = 4;
    spec.topics = {{"a", 20, 1, 2, 0, 1}, {"b", 20, 3, 2, 2, 2}};
    return corpus_io::generate_synthetic(spec, seed);
}

RunConfig config_for(const corpus_io::Corpus& corpus) {
    RunConfig rc;
    rc.model_id = "pseudo-0";
    rc.reduce.target_dim = 5;
    rc.reduce.n_epochs = 60;
    rc.schedule = corpus_io::build_schedule(corpus, corpus_io::ScheduleMode::calendar_month, std::nullopt);
    return rc;
}

}  // namespace

TEST_SUITE("cumulate") {
    TEST_CASE("conversion records") {
        auto r = conversion_record(traj({-1, 3}), "m");
        CHECK(r.ever_outlier);
        CHECK(r.validates_h);
        CHECK(r.first_outlier_window == 1);
        CHECK(r.first_conversion_window == 2);

        r = conversion_record(traj({0, 0, -1}), "m");
        CHECK(r.ever_outlier);
        CHECK_FALSE(r.validates_h);
        CHECK(r.first_outlier_window == 3);
        CHECK_FALSE(r.first_conversion_window.has_value());

        r = conversion_record(traj({-1, 0, -1, 1}), "m");
        CHECK(r.validates_h);
        CHECK(r.first_conversion_window == 2);

        r = conversion_record(traj({2, 0}, 3), "m");
        CHECK_FALSE(r.ever_outlier);
        CHECK_FALSE(r.validates_h);

        r = conversion_record(traj({-1, -1, 4}, 2), "m");
        CHECK(r.first_outlier_window == 2);
        CHECK(r.first_conversion_window == 4);
    }

    TEST_CASE("validates_H only gains from extra windows") {
        Rng rng(4);
        std::size_t outliers = 0, validated = 0;
        for (int trial = 0; trial < 2000; ++trial) {
            std::vector<int> labels(1 + rng.below(8));
            for (auto& l : labels) l = static_cast<int>(rng.below(3)) - 1;
            const auto full = conversion_record(traj(labels), "m");
            outliers += full.ever_outlier;
            validated += full.validates_h;
            CHECK((!full.validates_h || full.ever_outlier));
            for (std::size_t cut = 1; cut < labels.size(); ++cut) {
                const auto prefix = conversion_record(traj({labels.begin(), labels.begin() + static_cast<long>(cut)}), "m");
                if (prefix.validates_h) CHECK(full.validates_h);
            }
            CHECK_FALSE(conversion_record(traj({labels.front()}), "m").validates_h);
        }
        CHECK(outliers >= validated);
    }

    TEST_CASE("trajectories") {
        const auto g = grid({{-1, X, X}, {-1, 0, X}, {2, 0, X}, {2, 1, -1}});
        const auto tr = build_trajectories(g.corpus, g.results);
        REQUIRE(tr.size() == 3);
        CHECK(tr[0].labels == std::vector<int>{-1, -1, 2, 2});
        CHECK(tr[0].first_window == 1);
        CHECK(tr[1].first_window == 2);
        CHECK(tr[2].labels == std::vector<int>{-1});
        CHECK(tr[2].first_window == 4);

        auto broken = g.results;
        broken[2].members.erase(broken[2].members.begin());
        broken[2].labeling.labels.erase(broken[2].labeling.labels.begin());
        CHECK_THROWS_AS(build_trajectories(g.corpus, broken), IntegrityError);
    }

    TEST_CASE("window table") {
        const auto g = grid({{-1, -1, 0}, {-1, 0, 0}, {-1, 0, 0}, {0, 0, 0}});
        const auto tr = build_trajectories(g.corpus, g.results);
        std::vector<Date> ends;
        for (const auto& w : g.results) ends.push_back(w.end_date);
        const auto rows = window_table(tr, ends, {1, 3, 4});
        REQUIRE(rows.size() == 3);
        CHECK(format_ratio(rows[0]) == "2/3");
        CHECK(rows[0].percent_converted == 100.0);
        CHECK(format_percent(rows[0]) == "100.00%");
        CHECK(format_ratio(rows[1]) == "1/3");
        CHECK(rows[1].converted_later == 1);
        CHECK(format_ratio(rows[2]) == "0/3");
        CHECK_FALSE(rows[2].percent_converted.has_value());
        CHECK(format_percent(rows[2]) == "-");

        const auto none = grid({{0, 0}, {0, 0}});
        const auto zero = window_table(build_trajectories(none.corpus, none.results), ends, {1});
        CHECK(format_ratio(zero[0]) == "0/2");
        CHECK(zero[0].percent_converted == 0.0);

        const auto partial = grid({{-1, -1, -1}, {-1, 0, -1}, {-1, 0, -1}});
        const auto p = window_table(build_trajectories(partial.corpus, partial.results), ends, {1});
        CHECK(format_percent(p[0]) == "33.33%");
        CHECK_THROWS(window_table(tr, ends, {5}));
        CHECK_THROWS(window_table(tr, ends, {0}));
    }

    TEST_CASE("window seeds") {
        const auto a = window_seed(42, "m", corpus_io::Variant::body, 1);
        CHECK(a == window_seed(42, "m", corpus_io::Variant::body, 1));
        CHECK(a != window_seed(42, "m", corpus_io::Variant::body, 2));
        CHECK(a != window_seed(42, "m", corpus_io::Variant::headline, 1));
        CHECK(a != window_seed(42, "n", corpus_io::Variant::body, 1));
        CHECK(a != window_seed(7, "m", corpus_io::Variant::body, 1));
    }

    TEST_CASE("cumulative windows are nested and end with the full corpus") {
        const auto data = small_scenario(3);
        const auto& emb = data.embeddings.begin()->second;
        const auto rc = config_for(data.corpus);
        const auto results = run_cumulative(data.corpus, emb, rc);
        REQUIRE(results.size() == 4);
        for (std::size_t t = 0; t + 1 < results.size(); ++t) {
            const auto& a = results[t].members;
            const auto& b = results[t + 1].members;
            CHECK(std::includes(b.begin(), b.end(), a.begin(), a.end()));
        }
        CHECK(results.back().members.size() == data.corpus.size());
        for (const auto& w : results) {
            CHECK(w.labeling.labels.size() == w.members.size());
            CHECK(w.layout.rows() == w.members.size());
            CHECK(w.layout.cols() == 5);
        }

        const auto again = run_cumulative(data.corpus, emb, rc);
        auto threaded = rc;
        threaded.threads = 4;
        const auto par = run_cumulative(data.corpus, emb, threaded);
        for (std::size_t t = 0; t < results.size(); ++t) {
            CHECK(results[t].layout.data() == again[t].layout.data());
            CHECK(results[t].labeling.labels == again[t].labeling.labels);
            CHECK(results[t].layout.data() == par[t].layout.data());
            CHECK(results[t].labeling.glosh == par[t].labeling.glosh);
        }
    }

    TEST_CASE("a one-window schedule is a single clustering of the corpus") {
        const auto data = small_scenario(8);
        const auto& emb = data.embeddings.begin()->second;
        auto rc = config_for(data.corpus);
        rc.schedule.boundaries = {rc.schedule.boundaries.back()};
        const auto results = run_cumulative(data.corpus, emb, rc);
        REQUIRE(results.size() == 1);
        auto params = rc.reduce;
        params.seed = window_seed(rc.seed, rc.model_id, rc.variant, 1);
        const auto layout = reduce::fit_layout(emb.matrix, params);
        const auto direct = cluster::hdbscan(layout, rc.hdbscan);
        CHECK(results[0].layout.data() == layout.data());
        CHECK(results[0].labeling.labels == direct.labels);
        for (const auto& r : conversion_records(build_trajectories(data.corpus, results), "m")) {
            CHECK_FALSE(r.validates_h);
        }
    }

    TEST_CASE("tiny windows are all outliers and neighbors clamp") {
        std::vector<corpus_io::Document> docs{fixtures::doc("a", "2022-01-01", "x"), fixtures::doc("b", "2022-01-02", "x")};
        for (int i = 0; i < 6; ++i) docs.push_back(fixtures::doc("c" + std::to_string(i), "2022-02-01", "x"));
        corpus_io::Corpus corpus(docs);
        Rng rng(1);
        corpus_io::EmbeddingSet emb{"m", corpus_io::Variant::body, fixtures::random_matrix(8, 4, rng)};
        auto rc = config_for(corpus);
        const auto results = run_cumulative(corpus, emb, rc);
        CHECK(results[0].labeling.labels == std::vector<int>{-1, -1});
        CHECK(results[0].layout.empty());
        CHECK(results[1].effective_neighbors == 7);
    }

    TEST_CASE("input mismatches are integrity errors") {
        const auto data = small_scenario(3);
        auto emb = data.embeddings.begin()->second;
        auto rc = config_for(data.corpus);
        corpus_io::EmbeddingSet bad{"m", corpus_io::Variant::body, Matrix(3, 12)};
        CHECK_THROWS_AS(run_cumulative(data.corpus, bad, rc), IntegrityError);
        rc.schedule.boundaries.pop_back();
        CHECK_THROWS_AS(run_cumulative(data.corpus, emb, rc), IntegrityError);
    }

    TEST_CASE("csv surfaces round trip") {
        const auto data = small_scenario(5);
        const auto& emb = data.embeddings.begin()->second;
        const auto rc = config_for(data.corpus);
        const auto results = run_cumulative(data.corpus, emb, rc);
        const auto tr = build_trajectories(data.corpus, results);
        const auto recs = conversion_records(tr, "pseudo-0");
        std::vector<Date> ends;
        for (const auto& w : results) ends.push_back(w.end_date);
        const auto table = window_table(tr, ends, {1, 2, 3, 4});

        fixtures::TempDir dir("csv");
        write_window_csv(dir / "windows.csv", data.corpus, results);
        write_trajectories_csv(dir / "trajectories.csv", tr);
        write_conversions_csv(dir / "conversions.csv", recs);
        write_window_table_csv(dir / "window_table.csv", table);
        write_window_summary_csv(dir / "window_summary.csv", results);

        const auto rows = read_window_csv(dir / "windows.csv");
        const auto rebuilt = trajectories_from_rows(rows);
        REQUIRE(rebuilt.size() == tr.size());
        for (const auto& t : tr) {
            const auto it = std::find_if(rebuilt.begin(), rebuilt.end(), [&](const Trajectory& r) { return r.doc_id == t.doc_id; });
            REQUIRE(it != rebuilt.end());
            CHECK(it->first_window == t.first_window);
            CHECK(it->labels == t.labels);
        }
        const auto read_tr = read_trajectories_csv(dir / "trajectories.csv");
        for (std::size_t i = 0; i < tr.size(); ++i) {
            CHECK(read_tr[i].doc_id == tr[i].doc_id);
            CHECK(read_tr[i].labels == tr[i].labels);
        }
        CHECK(read_conversions_csv(dir / "conversions.csv") == recs);
        const auto read_table = read_window_table_csv(dir / "window_table.csv");
        REQUIRE(read_table.size() == table.size());
        const auto ref = oracle::window_table_from_csv((dir / "windows.csv").string());
        for (std::size_t i = 0; i < table.size(); ++i) {
            CHECK(read_table[i].outliers == table[i].outliers);
            CHECK(read_table[i].members == table[i].members);
            CHECK(read_table[i].converted_later == table[i].converted_later);
            CHECK(read_table[i].percent_converted.has_value() == table[i].percent_converted.has_value());
            const auto& cell = ref.at(table[i].window);
            CHECK(cell.outliers == table[i].outliers);
            CHECK(cell.members == table[i].members);
            CHECK(cell.converted_later == table[i].converted_later);
        }
        const auto summary = read_window_summary_csv(dir / "window_summary.csv");
        REQUIRE(summary.size() == results.size());
        for (std::size_t t = 0; t < results.size(); ++t) {
            CHECK(summary[t].members == results[t].members.size());
            CHECK(summary[t].clusters == static_cast<std::size_t>(results[t].labeling.n_clusters));
            CHECK(summary[t].silhouette == results[t].silhouette);
        }

        fixtures::spit(dir / "bad.csv", "window,end_date,doc_id,label\n1,2022-01-31,a,0\n");
        CHECK_THROWS_AS(read_window_csv(dir / "bad.csv"), IntegrityError);
        fixtures::spit(dir / "bad2.csv", "window,end_date,doc_id,label,glosh\n1,2022-01-31,a,zero,0\n");
        CHECK_THROWS_AS(read_window_csv(dir / "bad2.csv"), IntegrityError);
    }
}
