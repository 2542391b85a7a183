#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "dside/errors.hpp"
#include "dside/similarity.hpp"
#include "dside/synthetic.hpp"
#include "oracle.hpp"

using namespace dside;

namespace {

std::vector<float> v2(float a, float b) { return {a, b}; }

EmbeddingSet set2(std::initializer_list<std::pair<const char*, std::vector<float>>> rows) {
    EmbeddingSet s(2);
    int i = 0;
    for (const auto& [cls, v] : rows) s.add("i" + std::to_string(i++), cls, v);
    return s;
}

void check_against_oracle(const EmbeddingSet& set, double tol) {
    const auto got = similarity_report(set);
    const auto want = oracle::report(set);
    REQUIRE(got.s2.labels() == want.labels);
    for (std::size_t m = 0; m < want.labels.size(); ++m)
        for (std::size_t n = 0; n < want.labels.size(); ++n)
            if (m != n) CHECK(std::abs(*got.s2.at(m, n) - want.s2[m][n]) <= tol);
    CHECK(std::abs(got.s2_max - want.s2_max) <= tol);
    CHECK(std::abs(got.s2_mean - want.s2_mean) <= tol);
    REQUIRE(got.delta_s2.has_value() == want.delta.has_value());
    // ΔS2 divides by the mean, so its absolute error scales with 1/mean.
    if (want.delta) CHECK(std::abs(*got.delta_s2 - *want.delta) <= tol * std::max(1.0, 1.0 / want.s2_mean));
    for (const auto& [cls, in] : want.intra) {
        const auto* s = got.stats_for(cls);
        REQUIRE(s != nullptr);
        CHECK(std::abs(s->s1 - in.s1) <= tol);
        CHECK(std::abs(s->sigma2 - in.sigma2) <= tol);
        CHECK(s->pair_count == in.pairs);
    }
}

}  // namespace

TEST_CASE("cosine of hand-computed pairs") {
    CHECK(cosine(v2(1, 0), v2(1, 0)) == 1.0);
    CHECK(cosine(v2(1, 0), v2(0, 1)) == 0.0);
    CHECK(cosine(v2(1, 0), v2(1, 1)) == doctest::Approx(0.707107).epsilon(1e-6));
    const auto a = v2(0.3f, -2.f), b = v2(5.f, 1.f);
    CHECK(cosine(a, b) == cosine(b, a));
    CHECK(std::abs(cosine(a, a) - 1.0) < 1e-9);
}

TEST_CASE("cosine rejects bad input") {
    std::vector<float> three{1, 2, 3};
    CHECK_THROWS_AS(cosine(v2(1, 0), three), InputError);
    CHECK_THROWS_AS(cosine(v2(0, 0), v2(1, 0)), InputError);
}

TEST_CASE("embedding set ingestion rejects invalid records") {
    EmbeddingSet s(2);
    s.add("a", "x", v2(1, 0));
    CHECK_THROWS_AS(s.add("b", "x", v2(0, 0)), InputError);
    CHECK_THROWS_AS(s.add("a", "x", v2(1, 1)), InputError);
    std::vector<float> three{1, 2, 3};
    CHECK_THROWS_AS(s.add("c", "x", three), InputError);
    CHECK_THROWS_AS(s.add("d", "x", v2(NAN, 1)), InputError);
    CHECK_THROWS_AS(EmbeddingSet(0), InputError);
    CHECK(s.size() == 1);
}

TEST_CASE("intra-class statistics") {
    SUBCASE("identical pair") {
        auto s = set2({{"a", v2(1, 0)}, {"a", v2(1, 0)}});
        auto st = intra_class(s, "a");
        CHECK(st.s1 == doctest::Approx(1.0));
        CHECK(st.sigma2 == doctest::Approx(0.0));
        CHECK(st.pair_count == 1);
    }
    SUBCASE("three pairs enumerated by hand") {
        // cosines 0, 1/√2, 1/√2 → mean √2/3, variance 1/3 − 2/9 = 1/9
        auto s = set2({{"a", v2(1, 0)}, {"a", v2(0, 1)}, {"a", v2(0.7071f, 0.7071f)}});
        auto st = intra_class(s, "a");
        CHECK(st.s1 == doctest::Approx(0.4714).epsilon(1e-4));
        CHECK(st.sigma2 == doctest::Approx(0.1111).epsilon(1e-3));
        CHECK(st.pair_count == 3);
    }
    SUBCASE("50 random unit vectors match the pairwise oracle") {
        auto s = synthetic::random_set(1, 8, 50, 50, 11);
        auto st = intra_class(s, "k0");
        auto want = oracle::intra(s, s.members("k0"));
        CHECK(std::abs(st.s1 - want.s1) < 1e-9);
        CHECK(std::abs(st.sigma2 - want.sigma2) < 1e-9);
        CHECK(st.pair_count == 50 * 49 / 2);
    }
    SUBCASE("singleton class names the class") {
        auto s = set2({{"lonely", v2(1, 0)}, {"b", v2(0, 1)}});
        try {
            (void)intra_class(s, "lonely");
            FAIL("expected InsufficientDataError");
        } catch (const InsufficientDataError& e) {
            CHECK(e.class_id() == "lonely");
        }
    }
}

TEST_CASE("inter-class similarity") {
    CHECK(inter_class(set2({{"a", v2(1, 0)}, {"b", v2(1, 0)}}), "a", "b") == doctest::Approx(1.0));
    auto s = set2({{"a", v2(1, 0)}, {"b", v2(0, 1)}, {"b", v2(0.7071f, 0.7071f)}});
    CHECK(inter_class(s, "a", "b") == doctest::Approx(0.353553).epsilon(1e-6));
    CHECK(inter_class(s, "a", "b") == inter_class(s, "b", "a"));
    CHECK_THROWS_AS(inter_class(s, "a", "zzz"), InputError);
    CHECK_THROWS_AS(inter_class(s, "a", "a"), InputError);

    SUBCASE("30 x 40 random split matches the brute-force oracle") {
        auto r = synthetic::random_set(2, 12, 30, 30, 5);
        EmbeddingSet split(12);
        for (std::size_t i = 0; i < 70 && i < r.size(); ++i) split.add(r.instance_id(i), i < 30 ? "p" : "q", r.vector(i));
        auto extra = synthetic::random_set(1, 12, 10, 10, 6);
        for (std::size_t i = 0; i < extra.size(); ++i) split.add("x" + std::to_string(i), "q", extra.vector(i));
        REQUIRE(split.members("p").size() == 30);
        REQUIRE(split.members("q").size() == 40);
        CHECK(std::abs(inter_class(split, "p", "q") - oracle::inter(split, split.members("p"), split.members("q"))) < 1e-9);
    }
}

TEST_CASE("report summary arithmetic") {
    SimilarityReport r;
    r.s2 = S2Matrix({"a", "b", "c"});
    r.s2.set(0, 1, 0.1);
    r.s2.set(0, 2, 0.2);
    r.s2.set(1, 2, 0.6);
    summarize_s2(r);
    CHECK(r.s2_max == doctest::Approx(0.6));
    CHECK(r.s2_mean == doctest::Approx(0.3));
    REQUIRE(r.delta_s2);
    CHECK(*r.delta_s2 == doctest::Approx(1.0));
    CHECK(r.argmax_pair == std::pair<std::string, std::string>{"b", "c"});
    CHECK_FALSE(r.s2.at(1, 1).has_value());
    CHECK(*r.s2.at(2, 1) == *r.s2.at(1, 2));
}

TEST_CASE("similarity report edge cases") {
    SUBCASE("two identical singletons") {
        auto r = similarity_report(set2({{"a", v2(1, 0)}, {"b", v2(1, 0)}}));
        CHECK(r.s2_max == 1.0);
        CHECK(r.s2_mean == 1.0);
        CHECK(*r.delta_s2 == 0.0);
        CHECK(r.per_class.empty());
        CHECK(r.insufficient == std::vector<std::string>{"a", "b"});
    }
    SUBCASE("negative mean leaves delta undefined") {
        auto r = similarity_report(set2({{"a", v2(1, 0)}, {"b", v2(-1, 0)}}));
        CHECK(r.s2_max == -1.0);
        CHECK_FALSE(r.delta_s2.has_value());
    }
    SUBCASE("one class is rejected") {
        CHECK_THROWS_AS(similarity_report(set2({{"a", v2(1, 0)}, {"a", v2(0, 1)}})), InputError);
    }
    SUBCASE("grouping that drops down to one class is rejected") {
        auto s = set2({{"a", v2(1, 0)}, {"b", v2(0, 1)}, {"c", v2(1, 1)}});
        ClassGrouping g{"g", {{"a", "x"}, {"b", "x"}, {"c", std::nullopt}}};
        CHECK_THROWS_AS(similarity_report(s, g), InputError);
    }
    SUBCASE("grouping with an unknown class is rejected") {
        auto s = set2({{"a", v2(1, 0)}, {"b", v2(0, 1)}});
        ClassGrouping g{"g", {{"a", "a"}, {"b", "b"}, {"ghost", "b"}}};
        CHECK_THROWS_AS(similarity_report(s, g), InputError);
    }
}

TEST_CASE("separated clusters are less similar than overlapping ones") {
    auto separated = synthetic::separated_clusters(4, 16, 4.0, 40, 3);
    auto overlapping = synthetic::separated_clusters(4, 16, 0.5, 40, 3);
    const auto a = similarity_report(separated), b = similarity_report(overlapping);
    CHECK(a.s2_max < b.s2_max);
    // direct Eq.-style recomputation agrees
    CHECK(std::abs(a.s2_max - oracle::report(separated).s2_max) < 1e-9);
}

TEST_CASE("pearson correlation") {
    const std::vector<double> x3{1, 2, 3};
    CHECK(pearson(x3, std::vector<double>{2, 4, 6}) == doctest::Approx(1.0));
    CHECK(pearson(x3, std::vector<double>{3, 2, 1}) == doctest::Approx(-1.0));
    CHECK(pearson(std::vector<double>{1, 2, 3, 4}, std::vector<double>{1, 3, 2, 4}) == doctest::Approx(0.8).epsilon(1e-12));
    CHECK_THROWS_AS(pearson(x3, std::vector<double>{5, 5, 5}), UndefinedCorrelationError);
    CHECK_THROWS_AS(pearson(x3, std::vector<double>{1, 2}), InputError);
    CHECK_THROWS_AS(pearson(std::vector<double>{1}, std::vector<double>{1}), InputError);
}

TEST_CASE("properties over random sets") {
    std::mt19937_64 rng(99);
    for (int trial = 0; trial < 20; ++trial) {
        const std::size_t classes = 2 + rng() % 4, dim = 1 + rng() % 24;
        auto set = synthetic::random_set(classes, dim, 1, 30, rng());
        CAPTURE(trial);

        check_against_oracle(set, 1e-9);

        const auto base = similarity_report(set);
        // bounds
        for (const auto& s : base.per_class) {
            CHECK(s.s1 >= -1.0);
            CHECK(s.s1 <= 1.0);
            CHECK(s.sigma2 >= 0.0);
            CHECK(s.sigma2 <= 4.0);
        }
        if (base.s2_mean > 0) CHECK(*base.delta_s2 >= 0.0);

        // permutation invariance
        std::vector<std::size_t> order(set.size());
        for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
        std::shuffle(order.begin(), order.end(), rng);
        EmbeddingSet shuffled(set.dimension());
        for (auto i : order) shuffled.add(set.instance_id(i), set.class_id(i), set.vector(i));
        const auto p = similarity_report(shuffled);
        CHECK(std::abs(p.s2_max - base.s2_max) <= 1e-12);
        CHECK(std::abs(p.s2_mean - base.s2_mean) <= 1e-12);
        for (const auto& s : base.per_class) {
            CHECK(std::abs(p.stats_for(s.class_id)->s1 - s.s1) <= 1e-12);
            CHECK(std::abs(p.stats_for(s.class_id)->sigma2 - s.sigma2) <= 1e-12);
        }

        // scale invariance (powers of two keep float values exact)
        const float factor = static_cast<float>(std::ldexp(1.0, static_cast<int>(rng() % 16) - 8));
        EmbeddingSet scaled(set.dimension());
        std::vector<float> v(set.dimension());
        for (std::size_t i = 0; i < set.size(); ++i) {
            auto src = set.vector(i);
            for (std::size_t k = 0; k < v.size(); ++k) v[k] = src[k] * factor;
            scaled.add(set.instance_id(i), set.class_id(i), v);
        }
        const auto q = similarity_report(scaled);
        CHECK(std::abs(q.s2_max - base.s2_max) <= 1e-12);
        CHECK(std::abs(q.s2_mean - base.s2_mean) <= 1e-12);

        // symmetry
        const auto cls = set.classes();
        CHECK(inter_class(set, cls[0], cls[1]) == inter_class(set, cls[1], cls[0]));
    }
}

TEST_CASE("class moments merge like concatenation") {
    auto set = synthetic::random_set(3, 6, 3, 9, 17);
    auto per_class = class_moments(set, nullptr, true);
    ClassGrouping all{"all", {{"k0", "x"}, {"k1", "x"}, {"k2", "y"}}};
    auto grouped = class_moments(set, &all, true);
    ClassMoments merged = per_class.at("k0");
    merged.merge(per_class.at("k1"));
    CHECK(merged.count == grouped.at("x").count);
    const auto a = intra_stats("x", merged), b = intra_stats("x", grouped.at("x"));
    CHECK(std::abs(a.s1 - b.s1) < 1e-12);
    CHECK(std::abs(a.sigma2 - b.sigma2) < 1e-12);
}
