#include "emergent/common.hpp"
#include "emergent/csv.hpp"
#include "emergent/utf8.hpp"

#include <doctest.h>

#include <cmath>
#include <limits>

using namespace emergent;

TEST_SUITE("common") {
    TEST_CASE("fnv1a matches published test vectors") {
        CHECK(fnv1a("") == 0xcbf29ce484222325ULL);
        CHECK(fnv1a("a") == 0xaf63dc4c8601ec8cULL);
        CHECK(fnv1a("foobar") == 0x85944171f73967e8ULL);
    }

    TEST_CASE("hex64 is zero padded") {
        CHECK(hex64(0) == "0000000000000000");
        CHECK(hex64(0xabcULL) == "0000000000000abc");
    }

    TEST_CASE("derive_seed separates parts") {
        const auto a = derive_seed(42, {"m", "body", "1"});
        CHECK(a == derive_seed(42, {"m", "body", "1"}));
        CHECK(a != derive_seed(43, {"m", "body", "1"}));
        CHECK(a != derive_seed(42, {"m", "body", "2"}));
        CHECK(derive_seed(42, {"ab", "c"}) != derive_seed(42, {"a", "bc"}));
    }

    TEST_CASE("rng streams are reproducible and roughly uniform") {
        Rng a(7), b(7), c(8);
        bool differs = false;
        for (int i = 0; i < 100; ++i) {
            const auto x = a.next();
            CHECK(x == b.next());
            differs = differs || x != c.next();
        }
        CHECK(differs);

        Rng r(1);
        double sum = 0.0, sq = 0.0, nsum = 0.0, nsq = 0.0;
        const int n = 200000;
        for (int i = 0; i < n; ++i) {
            const double u = r.uniform();
            REQUIRE(u >= 0.0);
            REQUIRE(u < 1.0);
            sum += u;
            sq += u * u;
            const double z = r.normal();
            nsum += z;
            nsq += z * z;
        }
        CHECK(sum / n == doctest::Approx(0.5).epsilon(0.01));
        CHECK(sq / n - (sum / n) * (sum / n) == doctest::Approx(1.0 / 12.0).epsilon(0.02));
        CHECK(std::abs(nsum / n) < 0.01);
        CHECK(nsq / n == doctest::Approx(1.0).epsilon(0.02));
    }

    TEST_CASE("rng below stays in range and hits every value") {
        Rng r(3);
        std::vector<int> seen(7, 0);
        for (int i = 0; i < 7000; ++i) {
            const auto v = r.below(7);
            REQUIRE(v < 7);
            ++seen[v];
        }
        for (int s : seen) CHECK(s > 800);
    }

    TEST_CASE("matrix shape and row selection") {
        Matrix m(3, 2, std::vector<double>{1, 2, 3, 4, 5, 6});
        CHECK(m(1, 1) == 4);
        const std::vector<std::size_t> idx{2, 0};
        const auto s = m.select_rows(idx);
        CHECK(s == Matrix(2, 2, std::vector<double>{5, 6, 1, 2}));
        CHECK_THROWS_AS(Matrix(2, 2, std::vector<double>{1, 2, 3}), std::invalid_argument);
        m(0, 0) = std::numeric_limits<double>::quiet_NaN();
        CHECK_FALSE(m.all_finite());
    }
}

TEST_SUITE("csv") {
    TEST_CASE("escape and split round trip") {
        const std::vector<std::string> fields{"plain", "with,comma", "with \"quote\"", ""};
        CHECK(csv::split(csv::join(fields)) == fields);
        CHECK(csv::escape("a,b") == "\"a,b\"");
    }

    TEST_CASE("format_double round trips") {
        Rng r(11);
        for (int i = 0; i < 1000; ++i) {
            const double v = (r.uniform() - 0.5) * std::pow(10.0, static_cast<double>(r.below(20)) - 10.0);
            CHECK(csv::parse_double(csv::format_double(v)) == v);
        }
        CHECK(csv::format_double(0.5) == "0.5");
    }

    TEST_CASE("parse errors throw") {
        CHECK_THROWS(csv::parse_double("abc"));
        CHECK_THROWS(csv::parse_int("1.5"));
    }
}

TEST_SUITE("utf8") {
    TEST_CASE("decode and encode") {
        const std::string s = "caf\xc3\xa9 \xe2\x80\xa6";
        CHECK(utf8::length(s) == 6);
        CHECK(utf8::encode(utf8::decode(s)) == s);
        CHECK(utf8::decode("\xff")[0] == U'�');
    }
}
