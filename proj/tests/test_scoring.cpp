#include <algorithm>
#include <cmath>
#include <random>

#include <doctest.h>

#include "curator/scoring.hpp"

using namespace curator;

namespace {

Dataset fixture(size_t n) {
    Dataset d("fixture");
    for (size_t i = 0; i < n; ++i)
        d.push_back(make_record("task " + std::to_string(i), i % 2 ? "ctx" : "",
                                "answer " + std::to_string(i)));
    return d;
}

std::vector<ScoredRecord> with_scores(const std::vector<double>& scores, ScoreKind kind) {
    std::vector<ScoredRecord> out;
    for (size_t i = 0; i < scores.size(); ++i)
        out.push_back({make_record("r" + std::to_string(i), "", "o"), scores[i], kind});
    return out;
}

}  // namespace

TEST_CASE("score_quality basics") {
    LocalScorer scorer(7);

    SUBCASE("empty dataset") {
        CHECK(score_quality(Dataset{}, scorer).empty());
    }
    SUBCASE("one score per record, order preserved, kind quality") {
        auto d = fixture(8);
        auto scored = score_quality(d, scorer);
        REQUIRE(scored.size() == 8);
        for (size_t i = 0; i < 8; ++i) {
            CHECK(scored[i].record.id == d.records()[i].id);
            CHECK(scored[i].kind == ScoreKind::quality);
            CHECK(std::isfinite(scored[i].score));
        }
    }
    SUBCASE("identical records score identically") {
        Dataset d;
        d.push_back(make_record("same", "same", "same"));
        d.push_back(make_record("same", "same", "same"));
        auto scored = score_quality(d, scorer);
        CHECK(scored[0].score == scored[1].score);
    }
    SUBCASE("local scores land in [-4,4]") {
        for (const auto& s : score_quality(fixture(50), scorer)) {
            CHECK(s.score >= -4.0);
            CHECK(s.score <= 4.0);
        }
    }
}

TEST_CASE("scoring is a pure mapping: permuting input permutes output") {
    LocalScorer scorer(3);
    auto d = fixture(10);
    auto scored = score_quality(d, scorer);

    std::vector<InstructionRecord> shuffled = d.records();
    std::mt19937_64 rng(99);
    std::shuffle(shuffled.begin(), shuffled.end(), rng);
    auto scored_shuffled = score_quality(Dataset(shuffled, "s"), scorer);

    for (const auto& s : scored_shuffled) {
        auto it = std::find_if(scored.begin(), scored.end(),
                               [&](const auto& t) { return t.record.id == s.record.id; });
        REQUIRE(it != scored.end());
        CHECK(it->score == s.score);
    }
}

TEST_CASE("recorded transcript replay carries exact values in order") {
    ReplayScorer scorer({2.1, -0.3, 0.7, -1.9, 4.0});
    auto d = fixture(5);
    auto scored = score_quality(d, scorer);
    REQUIRE(scored.size() == 5);
    CHECK(scored[0].score == 2.1);
    CHECK(scored[1].score == -0.3);
    CHECK(scored[2].score == 0.7);
    CHECK(scored[3].score == -1.9);
    CHECK(scored[4].score == 4.0);
}

TEST_CASE("NaN from backend is an error, never silently dropped") {
    ReplayScorer scorer({1.0, std::nan("")});
    CHECK_THROWS_AS(score_quality(fixture(2), scorer), StageError);
}

TEST_CASE("filter_quality is strictly greater-than") {
    auto scored = with_scores({1.2, 0.0, -0.5}, ScoreKind::quality);
    auto kept = filter_quality(scored, 0.0);
    REQUIRE(kept.size() == 1);
    CHECK(kept.records()[0].id == scored[0].record.id);

    SUBCASE("alpha = -inf keeps all") {
        CHECK(filter_quality(scored, -std::numeric_limits<double>::infinity()).size() == 3);
    }
    SUBCASE("mixed kinds rejected") {
        auto mixed = scored;
        mixed[1].kind = ScoreKind::necessity;
        CHECK_THROWS_AS(filter_quality(mixed, 0.0), ContractError);
    }
}

TEST_CASE("filter_necessity is strictly less-than") {
    auto scored = with_scores({-2.0, 0.5, -0.9}, ScoreKind::necessity);
    auto kept = filter_necessity(scored, -1.0);
    REQUIRE(kept.size() == 1);
    CHECK(kept.records()[0].id == scored[0].record.id);
    CHECK(filter_necessity(scored, std::numeric_limits<double>::infinity()).size() == 3);
    CHECK_THROWS_AS(filter_necessity(with_scores({0.0}, ScoreKind::quality), 0.0),
                    ContractError);
}

TEST_CASE("filter monotonicity over a threshold sweep") {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> dist(-4.0, 4.0);
    std::vector<double> values(60);
    for (auto& v : values) v = dist(rng);
    auto q = with_scores(values, ScoreKind::quality);
    auto n = with_scores(values, ScoreKind::necessity);

    size_t prev_q = q.size();
    for (double alpha = -4.0; alpha <= 4.0; alpha += 0.8) {
        size_t now = filter_quality(q, alpha).size();
        CHECK(now <= prev_q);
        prev_q = now;
    }
    size_t prev_n = 0;
    for (double beta = -4.0; beta <= 4.0; beta += 0.8) {
        size_t now = filter_necessity(n, beta).size();
        CHECK(now >= prev_n);
        prev_n = now;
    }
}

TEST_CASE("score_necessity uses generated responses, folds input into the prompt") {
    auto rec_plain = make_record("summarize", "", "gold");
    auto rec_ctx = make_record("summarize", "the context", "gold");
    CHECK(necessity_prompt(rec_plain) == "summarize");
    CHECK(necessity_prompt(rec_ctx) == "summarize\n\nthe context");

    SUBCASE("empty pair list") {
        LocalScorer scorer;
        CHECK(score_necessity({}, scorer).empty());
    }
    SUBCASE("gold output plays no role") {
        LocalScorer scorer;
        auto other_gold = make_record("summarize", "the context", "different gold");
        auto a = score_necessity({{rec_ctx, "generated"}}, scorer);
        auto b = score_necessity({{other_gold, "generated"}}, scorer);
        CHECK(a[0].score == b[0].score);
        CHECK(a[0].kind == ScoreKind::necessity);
    }
    SUBCASE("transcript replay") {
        ReplayScorer scorer({-2.0, 0.5, -0.9});
        auto scored = score_necessity(
            {{rec_plain, "r1"}, {rec_ctx, "r2"}, {make_record("x", "", "y"), "r3"}}, scorer);
        REQUIRE(scored.size() == 3);
        CHECK(scored[0].score == -2.0);
        CHECK(scored[1].score == 0.5);
        CHECK(scored[2].score == -0.9);
    }
}
