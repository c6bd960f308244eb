#include <cmath>
#include <random>

#include <doctest.h>

#include "curator/embedding.hpp"
#include "test_util.hpp"

using namespace curator;
using curator::testutil::TempDir;

namespace {

Dataset small_corpus() {
    Dataset d;
    d.push_back(make_record("alpha instruction", "", "o1"));
    d.push_back(make_record("beta instruction", "extra", "o2"));
    d.push_back(make_record("alpha instruction", "", "o3"));  // same instruction as [0]
    d.push_back(make_record("gamma", "", "o4"));
    return d;
}

}  // namespace

TEST_CASE("embed_dataset yields unit-norm rows in dataset order") {
    LocalEmbedder embedder(16, 42);
    auto d = small_corpus();
    auto m = embed_dataset(d, embedder);
    REQUIRE(m.size() == d.size());
    CHECK(m.dim() == 16);
    for (size_t i = 0; i < m.size(); ++i) {
        CHECK(m.id(i) == d.records()[i].id);
        double norm2 = 0.0;
        for (double x : m.row(i)) norm2 += x * x;
        CHECK(std::abs(std::sqrt(norm2) - 1.0) <= 1e-6);
    }
}

TEST_CASE("identical instructions embed identically") {
    LocalEmbedder embedder(32, 1);
    auto d = small_corpus();
    auto m = embed_dataset(d, embedder);
    auto r0 = m.row(0);
    auto r2 = m.row(2);
    for (size_t j = 0; j < m.dim(); ++j) CHECK(r0[j] == r2[j]);
}

TEST_CASE("embed_fields instruction+input changes the embedded text") {
    LocalEmbedder embedder(32, 1);
    auto d = small_corpus();
    auto plain = embed_dataset(d, embedder, EmbedFields::instruction);
    auto both = embed_dataset(d, embedder, EmbedFields::instruction_input);
    // record 1 has an input, record 0 does not
    CHECK(pairwise_distance(plain.row(0), both.row(0)) == 0.0);
    CHECK(pairwise_distance(plain.row(1), both.row(1)) > 0.0);
}

TEST_CASE("replay transcript fixture is normalized into the matrix") {
    // 4 records, 8-dim recorded stub vectors
    std::vector<std::vector<double>> rows = {
        {2, 0, 0, 0, 0, 0, 0, 0},
        {0, 1, 1, 0, 0, 0, 0, 0},
        {0.5, 0.5, 0.5, 0.5, 0, 0, 0, 0},
        {0, 0, 0, 0, 0, 0, 0, 3},
    };
    ReplayEmbedder embedder(rows);
    Dataset d;
    for (int i = 0; i < 4; ++i) d.push_back(make_record("t" + std::to_string(i), "", "o"));
    auto m = embed_dataset(d, embedder);
    CHECK(m.dim() == 8);
    CHECK(m.row(0)[0] == doctest::Approx(1.0));
    CHECK(m.row(1)[1] == doctest::Approx(1.0 / std::sqrt(2.0)));
    CHECK(m.row(2)[3] == doctest::Approx(0.5));
    CHECK(m.row(3)[7] == doctest::Approx(1.0));
}

TEST_CASE("backend faults are protocol errors") {
    Dataset d;
    d.push_back(make_record("a", "", "o"));
    d.push_back(make_record("b", "", "o"));

    SUBCASE("dimension mismatch across rows") {
        ReplayEmbedder embedder({{1, 0}, {1, 0, 0}});
        CHECK_THROWS_AS(embed_dataset(d, embedder), StageError);
    }
    SUBCASE("non-finite component") {
        ReplayEmbedder embedder({{1, 0}, {std::nan(""), 0}});
        CHECK_THROWS_AS(embed_dataset(d, embedder), StageError);
    }
    SUBCASE("zero vector") {
        ReplayEmbedder embedder({{1, 0}, {0, 0}});
        CHECK_THROWS_AS(embed_dataset(d, embedder), StageError);
    }
}

TEST_CASE("pairwise_distance") {
    std::vector<double> e1 = {1, 0, 0};
    std::vector<double> e2 = {0, 1, 0};
    CHECK(pairwise_distance(e1, e1) == 0.0);
    CHECK(pairwise_distance(e1, e2) == doctest::Approx(std::sqrt(2.0)));
    CHECK_THROWS_AS(pairwise_distance(e1, std::vector<double>{1, 0}), ContractError);

    std::mt19937_64 rng(17);
    std::uniform_real_distribution<double> dist(-2.0, 2.0);
    for (int trial = 0; trial < 50; ++trial) {
        std::vector<double> a(5), b(5), c(5);
        for (size_t j = 0; j < 5; ++j) {
            a[j] = dist(rng);
            b[j] = dist(rng);
            c[j] = dist(rng);
        }
        CHECK(pairwise_distance(a, b) == pairwise_distance(b, a));
        // triangle inequality with slack for rounding
        CHECK(pairwise_distance(a, c) <=
              pairwise_distance(a, b) + pairwise_distance(b, c) + 1e-9);
    }
}

TEST_CASE("on unit vectors Euclidean ordering equals cosine ordering") {
    std::mt19937_64 rng(23);
    std::normal_distribution<double> gauss(0.0, 1.0);
    auto unit = [&] {
        std::vector<double> v(6);
        double norm2 = 0;
        for (auto& x : v) {
            x = gauss(rng);
            norm2 += x * x;
        }
        for (auto& x : v) x /= std::sqrt(norm2);
        return v;
    };
    auto cosine_dist = [](const std::vector<double>& a, const std::vector<double>& b) {
        double dot = 0;
        for (size_t j = 0; j < a.size(); ++j) dot += a[j] * b[j];
        return 1.0 - dot;
    };
    for (int trial = 0; trial < 100; ++trial) {
        auto q = unit(), a = unit(), b = unit();
        double ea = pairwise_distance(q, a), eb = pairwise_distance(q, b);
        double ca = cosine_dist(q, a), cb = cosine_dist(q, b);
        if (std::abs(ca - cb) < 1e-12) continue;  // effectively tied
        CHECK((ea < eb) == (ca < cb));
    }
}

TEST_CASE("embedding cache round-trips matrix, dim and identity") {
    TempDir dir("embed");
    LocalEmbedder embedder(12, 9);
    auto m = embed_dataset(small_corpus(), embedder);
    save_embedding_cache(m, embedder.identity(), dir.file("cache.jsonl"));

    auto cache = load_embedding_cache(dir.file("cache.jsonl"));
    CHECK(cache.embedder_identity == embedder.identity());
    REQUIRE(cache.matrix.size() == m.size());
    CHECK(cache.matrix.dim() == m.dim());
    for (size_t i = 0; i < m.size(); ++i) {
        CHECK(cache.matrix.id(i) == m.id(i));
        CHECK(pairwise_distance(cache.matrix.row(i), m.row(i)) <= 1e-12);
    }
}

TEST_CASE("matrix subset restricts and reorders") {
    auto m = curator::testutil::random_matrix(5, 3, 11);
    auto sub = m.subset({"p003", "p001"});
    REQUIRE(sub.size() == 2);
    CHECK(sub.id(0) == "p003");
    CHECK(sub.id(1) == "p001");
    CHECK(pairwise_distance(sub.row(0), m.row(3)) == 0.0);
    CHECK_THROWS_AS(m.subset({"missing"}), ContractError);
}
