#include "emergent/corpus_io.hpp"

#include "fixtures.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>

using namespace emergent;
using namespace emergent::corpus_io;
using fixtures::doc;

TEST_SUITE("corpus_io") {
    TEST_CASE("dates") {
        CHECK(Date::parse("2022-02-28").has_value());
        CHECK_FALSE(Date::parse("2022-02-29").has_value());
        CHECK(Date::parse("2024-02-29").has_value());
        CHECK_FALSE(Date::parse("2022-2-01").has_value());
        CHECK_FALSE(Date::parse("2022-13-01").has_value());
        CHECK(Date{2022, 2, 10}.end_of_month() == Date{2022, 2, 28});
        CHECK(Date{2024, 2, 10}.end_of_month() == Date{2024, 2, 29});
        for (std::int64_t d = -1000; d < 30000; d += 37) {
            CHECK(Date::from_days(d).to_days() == d);
        }
        CHECK(Date{1970, 1, 1}.to_days() == 0);
        CHECK(Date{2000, 3, 1}.to_days() == 11017);
    }

    TEST_CASE("three records sort by date then id") {
        Corpus c({doc("b", "2022-03-01", "x"), doc("c", "2022-01-05", "y"), doc("a", "2022-03-01", "z")});
        REQUIRE(c.size() == 3);
        CHECK(c[0].doc_id == "c");
        CHECK(c[1].doc_id == "a");
        CHECK(c[2].doc_id == "b");
        CHECK(c.index_of("b") == 2);
        CHECK_FALSE(c.index_of("zz").has_value());
    }

    TEST_CASE("duplicate ids are rejected") {
        CHECK_THROWS_AS(Corpus({doc("a1", "2022-01-01", "x"), doc("a1", "2022-02-01", "y")}), IntegrityError);
    }

    TEST_CASE("invalid documents are rejected") {
        CHECK_THROWS_AS(Corpus({doc("a", "2022-01-01", "")}), IntegrityError);
        auto d = doc("a", "2022-01-01", "abc");
        d.subjectivity = 1.5;
        CHECK_THROWS_AS(Corpus({d}), IntegrityError);
        d = doc("a", "2022-01-01", "abc");
        d.entities = std::vector<EntitySpan>{{0, 4, EntityKind::person}};
        CHECK_THROWS_AS(Corpus({d}), IntegrityError);
        d.entities = std::vector<EntitySpan>{{0, 2, EntityKind::person}, {1, 3, EntityKind::location}};
        CHECK_THROWS_AS(Corpus({d}), IntegrityError);
    }

    TEST_CASE("entity spans count code points") {
        auto d = doc("a", "2022-01-01", "\xc3\xa9t\xc3\xa9");  // 3 code points, 5 bytes
        d.entities = std::vector<EntitySpan>{{0, 3, EntityKind::location}};
        CHECK_NOTHROW(Corpus({d}));
    }

    TEST_CASE("record parsing") {
        const auto d = parse_document(
            R"({"doc_id":"x","date":"2022-01-02","headline":"h","body":"b","lang":"fr","pos":["NOUN"],)"
            R"("entities":[[0,1,"organization"]],"subjectivity":0.25})",
            1);
        CHECK(d.lang == "fr");
        CHECK(d.pos_tags == std::vector<std::string>{"NOUN"});
        CHECK(d.entities->at(0).kind == EntityKind::organization);
        CHECK(d.subjectivity == 0.25);
        CHECK_FALSE(d.neutrality.has_value());
        CHECK_THROWS_AS(parse_document(R"({"doc_id":"x"})", 3), IntegrityError);
        CHECK_THROWS_AS(parse_document(R"({"doc_id":"x","date":"2022-01-02","headline":"h","body":"b","lang":"en","extra":1})", 3),
                        IntegrityError);
        CHECK_THROWS_AS(parse_document(R"({"doc_id":"x","date":"2022-01-32","headline":"h","body":"b","lang":"en"})", 3),
                        IntegrityError);
        CHECK_THROWS_AS(parse_document("not json", 3), IntegrityError);
    }

    TEST_CASE("corpus save and load round trip") {
        fixtures::TempDir dir("corpus");
        auto d = doc("q", "2022-05-06", "Line one.\nLine \"two\", \xc3\xa9.", "fr");
        d.pos_tags = std::vector<std::string>{"DET", "NOUN"};
        d.entities = std::vector<EntitySpan>{{0, 4, EntityKind::person}};
        d.subjectivity = 0.1;
        d.neutrality = 0.9;
        Corpus c({d, doc("p", "2022-01-01", "plain")});
        save_corpus(c, dir / "c.jsonl");
        CHECK(load_corpus(dir / "c.jsonl") == c);
    }

    TEST_CASE("synthetic corpus round trips field by field") {
        ScenarioSpec spec;
        spec.topics = {{"t", 12, 2, 2, 1, 1}};
        const auto data = generate_synthetic(spec, 5);
        fixtures::TempDir dir("synth");
        save_corpus(data.corpus, dir / "c.jsonl");
        CHECK(load_corpus(dir / "c.jsonl") == data.corpus);
    }

    TEST_CASE("embeddings reorder to corpus order and both encodings agree") {
        fixtures::TempDir dir("emb");
        Corpus c({doc("a", "2022-01-01", "x"), doc("b", "2022-01-02", "y"), doc("c", "2022-01-03", "z")});
        const std::vector<std::string> shuffled{"c", "a", "b"};
        Matrix m(3, 2, std::vector<double>{3.0, 3.5, 1.0, 1.5, 2.0, 0.1});
        write_embeddings_jsonl(dir / "e.jsonl", shuffled, m);
        write_embeddings_binary(dir / "e.emb", shuffled, m);
        const auto j = load_embeddings(dir / "e.jsonl", c, "m");
        const auto b = load_embeddings(dir / "e.emb", c, "m");
        CHECK(j == b);
        CHECK(j.matrix(0, 0) == 1.0);
        CHECK(j.matrix(1, 0) == 2.0);
        CHECK(j.matrix(2, 0) == 3.0);
        CHECK(j.matrix(2, 1) == 3.5);
        CHECK(std::abs(j.matrix(1, 1) - 0.1) < 1e-7);
    }

    TEST_CASE("random matrices encode identically in both formats") {
        fixtures::TempDir dir("emb2");
        Rng rng(9);
        std::vector<Document> docs;
        std::vector<std::string> ids;
        for (int i = 0; i < 20; ++i) {
            ids.push_back("d" + std::to_string(i));
            docs.push_back(doc(ids.back(), "2022-01-01", "x"));
        }
        Corpus c(docs);
        const auto m = fixtures::random_matrix(20, 7, rng);
        write_embeddings_jsonl(dir / "e.jsonl", ids, m);
        write_embeddings_binary(dir / "e.emb", ids, m);
        const auto j = load_embeddings(dir / "e.jsonl", c);
        const auto b = load_embeddings(dir / "e.emb", c);
        CHECK(j.matrix.data() == b.matrix.data());
    }

    TEST_CASE("embedding integrity errors") {
        fixtures::TempDir dir("emb3");
        Corpus c({doc("a", "2022-01-01", "x"), doc("b", "2022-01-02", "y")});
        fixtures::spit(dir / "short.jsonl", "{\"doc_id\":\"a\",\"vector\":[1,2,3]}\n{\"doc_id\":\"b\",\"vector\":[1,2]}\n");
        CHECK_THROWS_AS(load_embeddings(dir / "short.jsonl", c), IntegrityError);
        fixtures::spit(dir / "missing.jsonl", "{\"doc_id\":\"a\",\"vector\":[1,2]}\n");
        try {
            load_embeddings(dir / "missing.jsonl", c);
            FAIL("expected an error");
        } catch (const IntegrityError& e) {
            CHECK(std::string(e.what()).find("'b'") != std::string::npos);
        }
        fixtures::spit(dir / "nan.jsonl", "{\"doc_id\":\"a\",\"vector\":[1,2]}\n{\"doc_id\":\"b\",\"vector\":[1,\"x\"]}\n");
        CHECK_THROWS_AS(load_embeddings(dir / "nan.jsonl", c), IntegrityError);
        fixtures::spit(dir / "extra.jsonl",
                       "{\"doc_id\":\"a\",\"vector\":[1]}\n{\"doc_id\":\"b\",\"vector\":[1]}\n{\"doc_id\":\"z\",\"vector\":[1]}\n");
        CHECK_THROWS_AS(load_embeddings(dir / "extra.jsonl", c), IntegrityError);
    }

    TEST_CASE("calendar schedules") {
        Corpus c({doc("a", "2022-01-15", "x"), doc("b", "2022-02-03", "y"), doc("c", "2022-03-31", "z")});
        const auto s = build_schedule(c, ScheduleMode::calendar_month, std::nullopt);
        REQUIRE(s.count() == 3);
        CHECK(s.boundaries[0] == Date{2022, 1, 31});
        CHECK(s.boundaries[1] == Date{2022, 2, 28});
        CHECK(s.boundaries[2] == Date{2022, 3, 31});
        CHECK(s.first_window(Date{2022, 2, 28}) == 2);
        CHECK(s.first_window(Date{2022, 3, 1}) == 3);
        CHECK_FALSE(s.first_window(Date{2022, 4, 1}).has_value());

        Corpus one({doc("a", "2022-05-01", "x"), doc("b", "2022-05-31", "y")});
        CHECK(build_schedule(one, ScheduleMode::calendar_month, std::nullopt).count() == 1);
    }

    TEST_CASE("twenty months of documents give twenty windows") {
        std::vector<Document> docs;
        Rng rng(2);
        const auto lo = Date{2022, 1, 1}.to_days();
        const auto hi = Date{2023, 8, 31}.to_days();
        docs.push_back(doc("first", "2022-01-01", "x"));
        docs.push_back(doc("last", "2023-08-31", "x"));
        for (int i = 0; i < 310; ++i) {
            const auto day = lo + static_cast<std::int64_t>(rng.below(static_cast<std::uint64_t>(hi - lo + 1)));
            docs.push_back(doc("d" + std::to_string(i), Date::from_days(day).to_string(), "x"));
        }
        Corpus c(docs);
        REQUIRE(c.size() == 312);
        CHECK(build_schedule(c, ScheduleMode::calendar_month, std::nullopt).count() == 20);
    }

    TEST_CASE("calendar window count equals months spanned") {
        Rng rng(4);
        for (int trial = 0; trial < 50; ++trial) {
            const auto a = Date{2019, 1, 1}.to_days() + static_cast<std::int64_t>(rng.below(2000));
            const auto b = a + static_cast<std::int64_t>(rng.below(1500));
            const Date da = Date::from_days(a), db = Date::from_days(b);
            Corpus c({doc("a", da.to_string(), "x"), doc("b", db.to_string(), "y")});
            const auto expected = static_cast<std::size_t>((db.year - da.year) * 12 + db.month - da.month + 1);
            CHECK(build_schedule(c, ScheduleMode::calendar_month, std::nullopt).count() == expected);
        }
    }

    TEST_CASE("quantile schedules") {
        std::vector<Document> docs;
        for (int i = 0; i < 10; ++i) {
            docs.push_back(doc("d" + std::to_string(i), Date::from_days(Date{2022, 1, 1}.to_days() + i).to_string(), "x"));
        }
        Corpus c(docs);
        const auto s = build_schedule(c, ScheduleMode::quantile, 5);
        REQUIRE(s.count() == 5);
        CHECK(s.boundaries.back() == c[9].date);
        std::size_t prev = 0;
        for (const auto& b : s.boundaries) {
            const auto upto = static_cast<std::size_t>(
                std::count_if(c.begin(), c.end(), [&](const Document& d) { return d.date <= b; }));
            CHECK(upto - prev == 2);
            prev = upto;
        }
        CHECK_THROWS(build_schedule(c, ScheduleMode::quantile, 11));
        CHECK_THROWS(build_schedule(c, ScheduleMode::quantile, std::nullopt));

        Corpus same({doc("a", "2022-01-01", "x"), doc("b", "2022-01-01", "y"), doc("c", "2022-01-01", "z")});
        CHECK(build_schedule(same, ScheduleMode::quantile, 3).count() == 1);
    }

    TEST_CASE("every document maps to the earliest boundary not before it") {
        ScenarioSpec spec;
        spec.topics = {{"t", 40, 1, 6, 0, 1}};
        const auto data = generate_synthetic(spec, 1);
        const auto s = build_schedule(data.corpus, ScheduleMode::calendar_month, std::nullopt);
        for (const auto& d : data.corpus) {
            const auto w = s.first_window(d.date);
            REQUIRE(w.has_value());
            CHECK(d.date <= s.boundaries[*w - 1]);
            if (*w > 1) CHECK(d.date > s.boundaries[*w - 2]);
        }
    }

    TEST_CASE("synthetic generation") {
        ScenarioSpec spec;
        spec.dim = 8;
        spec.models = 2;
        spec.topics = {{"a", 10, 1, 1, 0, 1}, {"b", 10, 4, 2, 2, 3}};
        const auto x = generate_synthetic(spec, 42);
        const auto y = generate_synthetic(spec, 42);
        CHECK(x.corpus == y.corpus);
        CHECK(x.embeddings == y.embeddings);
        CHECK(x.precursor_ids == y.precursor_ids);
        CHECK_FALSE(generate_synthetic(spec, 43).embeddings == x.embeddings);
        CHECK(x.corpus.size() == 22);
        CHECK(x.embeddings.size() == 2);
        for (const auto& [model, emb] : x.embeddings) {
            CHECK(emb.matrix.rows() == 22);
            CHECK(emb.dim() == 8);
            for (double v : emb.matrix.data()) CHECK(static_cast<double>(static_cast<float>(v)) == v);
        }
        const auto s = build_schedule(x.corpus, ScheduleMode::calendar_month, std::nullopt);
        CHECK(s.count() == 5);  // January to May: the last bulk window is 5
        REQUIRE(x.precursor_ids.size() == 2);
        for (const auto& id : x.precursor_ids) {
            CHECK(s.first_window(x.corpus[*x.corpus.index_of(id)].date) == 1);
        }
        for (const auto& d : x.corpus) {
            if (d.doc_id.rfind("b-0", 0) == 0) {
                const auto w = *s.first_window(d.date);
                CHECK(w >= 4);
                CHECK(w <= 5);
            }
        }
    }

    TEST_CASE("pseudo-models are rotations of one latent layout") {
        ScenarioSpec spec;
        spec.dim = 6;
        spec.models = 2;
        spec.topics = {{"a", 15, 1, 1, 0, 1}};
        const auto data = generate_synthetic(spec, 3);
        const auto& m0 = data.embeddings.begin()->second.matrix;
        const auto& m1 = std::next(data.embeddings.begin())->second.matrix;
        // Rotations preserve pairwise distances (up to float rounding).
        for (std::size_t i = 0; i < m0.rows(); ++i) {
            for (std::size_t j = i + 1; j < m0.rows(); ++j) {
                double d0 = 0.0, d1 = 0.0;
                for (std::size_t c = 0; c < m0.cols(); ++c) {
                    d0 += (m0(i, c) - m0(j, c)) * (m0(i, c) - m0(j, c));
                    d1 += (m1(i, c) - m1(j, c)) * (m1(i, c) - m1(j, c));
                }
                CHECK(std::sqrt(d0) == doctest::Approx(std::sqrt(d1)).epsilon(1e-5));
            }
        }
        CHECK_FALSE(m0 == m1);
    }

    TEST_CASE("zero precursors: every document arrives with its bulk") {
        ScenarioSpec spec;
        spec.topics = {{"a", 10, 3, 2, 0, 1}};
        const auto data = generate_synthetic(spec, 1);
        CHECK(data.precursor_ids.empty());
        const auto s = build_schedule(data.corpus, ScheduleMode::calendar_month, std::nullopt);
        for (const auto& d : data.corpus) {
            CHECK(d.date >= Date{2022, 3, 1});
        }
        CHECK(s.count() == 2);
    }

    TEST_CASE("scenario validation") {
        CHECK_THROWS_AS(parse_scenario(R"({"topics":[{"name":"a","docs":0,"onset":1}]})"), ConfigError);
        CHECK_THROWS_AS(parse_scenario(R"({"dim":0,"topics":[{"name":"a","docs":3,"onset":1}]})"), ConfigError);
        CHECK_THROWS_AS(parse_scenario(R"({"bogus":1,"topics":[{"name":"a","docs":3,"onset":1}]})"), ConfigError);
        CHECK_THROWS_AS(parse_scenario(R"({"topics":[{"name":"a","docs":3,"onset":2,"precursors":1,"lead":3}]})"),
                        ConfigError);
        const auto s = parse_scenario(R"({"windows":4,"topics":[{"name":"a","docs":3,"onset":2}]})");
        CHECK(s.windows == 4);
        CHECK(s.topics[0].docs == 3);
    }
}
