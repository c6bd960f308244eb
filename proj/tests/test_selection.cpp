#include <algorithm>
#include <cmath>
#include <set>

#include <doctest.h>

#include "curator/selection.hpp"
#include "test_util.hpp"

using namespace curator;
using curator::testutil::line_matrix;
using curator::testutil::random_matrix;

TEST_CASE("farthest point is forced on the line {0,1,10}") {
    auto m = line_matrix({0.0, 1.0, 10.0});
    auto r = k_center_greedy(m, {"a"}, 1);
    REQUIRE(r.selected_ids.size() == 1);
    CHECK(r.selected_ids[0] == "c");
    CHECK(r.radius_trace[0] == doctest::Approx(10.0));
    CHECK_FALSE(r.truncated);
}

TEST_CASE("exhaustion covers every point and flags truncation beyond") {
    auto m = random_matrix(9, 2, 3);
    auto r = k_center_greedy(m, {"p000"}, 8);
    std::set<std::string> covered(r.selected_ids.begin(), r.selected_ids.end());
    covered.insert(r.initial_pool_ids.begin(), r.initial_pool_ids.end());
    CHECK(covered.size() == 9);
    CHECK_FALSE(r.truncated);
    CHECK(coverage_radius(m, std::vector<std::string>(covered.begin(), covered.end())) == 0.0);

    auto over = k_center_greedy(m, {"p000"}, 100);
    CHECK(over.selected_ids.size() == 8);
    CHECK(over.truncated);
}

TEST_CASE("empty pool bootstraps from the smallest id") {
    auto m = line_matrix({5.0, 0.0, 9.0});
    auto r = k_center_greedy(m, {}, 2);
    CHECK(r.selected_ids[0] == "a");  // smallest id, not an extreme point
    CHECK(std::isinf(r.radius_trace[0]));
    CHECK(r.selected_ids[1] == "b");  // then farthest from a=5: |0-5| > |9-5|
}

TEST_CASE("centroid-farthest bootstrap picks the point farthest from the mean") {
    auto m = line_matrix({0.0, 1.0, 2.0, 11.0});  // mean 3.5
    SelectionOptions opts;
    opts.first_center = FirstCenter::centroid_farthest;
    auto r = k_center_greedy(m, {}, 1, opts);
    CHECK(r.selected_ids[0] == "d");
}

TEST_CASE("argmax ties break to the smallest record id") {
    // b and c are duplicates equidistant from a
    EmbeddingMatrix m(1);
    m.add_row("a", {0.0});
    m.add_row("c", {4.0});
    m.add_row("b", {4.0});
    auto r = k_center_greedy(m, {"a"}, 1);
    CHECK(r.selected_ids[0] == "b");
}

TEST_CASE("contract errors") {
    auto m = line_matrix({0.0, 1.0});
    CHECK_THROWS_AS(k_center_greedy(m, {}, 0), ContractError);
    CHECK_THROWS_AS(k_center_greedy(m, {"zzz"}, 1), ContractError);
    CHECK_THROWS_AS(coverage_radius(m, {}), ContractError);
    CHECK_THROWS_AS(brute_force_k_center(m, 0), ContractError);
    CHECK_THROWS_AS(brute_force_k_center(m, 5), ContractError);
}

TEST_CASE("coverage_radius") {
    auto m = line_matrix({0.0, 1.0, 10.0});
    CHECK(coverage_radius(m, {"a", "b", "c"}) == 0.0);
    CHECK(coverage_radius(m, {"a"}) == doctest::Approx(10.0));
    CHECK(coverage_radius(m, {"a", "c"}) == doctest::Approx(1.0));
}

TEST_CASE("brute force oracle on hand-checkable instances") {
    auto m = line_matrix({0.0, 1.0, 10.0});
    auto sol = brute_force_k_center(m, 2);
    CHECK(sol.radius == doctest::Approx(1.0));
    CHECK(sol.centers.size() == 2);
    CHECK(sol.centers[1] == "c");  // the far point must be a center

    auto all = brute_force_k_center(m, 3);
    CHECK(all.radius == 0.0);

    CHECK_THROWS_AS(brute_force_k_center(random_matrix(40, 2, 1), 10, 1000), ContractError);
}

TEST_CASE("greedy radius dominates the optimum and stays within 2x") {
    for (uint64_t seed = 0; seed < 20; ++seed) {
        auto m = random_matrix(10, 2, 1000 + seed);
        size_t k = 3;
        auto sol = brute_force_k_center(m, k);
        auto greedy = k_center_greedy(m, {}, k);
        double gr = coverage_radius(m, greedy.selected_ids);
        CHECK(sol.radius <= gr + 1e-12);
        CHECK(gr <= 2.0 * sol.radius + 1e-12);
    }
}

TEST_CASE("radius trace is non-increasing and bounds the final radius") {
    for (uint64_t seed = 0; seed < 10; ++seed) {
        auto m = random_matrix(30, 4, 500 + seed);
        auto r = k_center_greedy(m, {}, 12);
        for (size_t i = 1; i < r.radius_trace.size(); ++i)
            CHECK(r.radius_trace[i] <= r.radius_trace[i - 1]);
        CHECK(coverage_radius(m, r.selected_ids) <= r.radius_trace.back() + 1e-12);
    }
}

TEST_CASE("monotone coverage: radius never grows with budget") {
    auto m = random_matrix(40, 3, 77);
    double prev = coverage_radius(m, k_center_greedy(m, {}, 1).selected_ids);
    for (size_t b = 2; b <= 10; ++b) {
        double now = coverage_radius(m, k_center_greedy(m, {}, b).selected_ids);
        CHECK(now <= prev + 1e-12);
        prev = now;
    }
}

TEST_CASE("parallel runs agree bit-for-bit with serial runs") {
    // n above the parallel threshold so worker scans actually run
    auto m = random_matrix(4096, 4, 4242);
    SelectionOptions serial{1, FirstCenter::smallest_id};
    SelectionOptions parallel{8, FirstCenter::smallest_id};
    auto a = k_center_greedy(m, {}, 40, serial);
    auto b = k_center_greedy(m, {}, 40, parallel);
    CHECK(a.selected_ids == b.selected_ids);
    REQUIRE(a.radius_trace.size() == b.radius_trace.size());
    for (size_t i = 0; i < a.radius_trace.size(); ++i)
        CHECK((a.radius_trace[i] == b.radius_trace[i] ||
               (std::isinf(a.radius_trace[i]) && std::isinf(b.radius_trace[i]))));
    CHECK(selection_report_json(a, 40, serial) == selection_report_json(b, 40, serial));
}

TEST_CASE("selection report JSON round-trips, inf trace entry as null") {
    auto m = line_matrix({0.0, 3.0});
    SelectionOptions opts;
    auto r = k_center_greedy(m, {}, 2, opts);
    auto text = selection_report_json(r, 2, opts);
    CHECK(text.find("null") != std::string::npos);
    auto back = selection_result_from_json(text);
    CHECK(back.selected_ids == r.selected_ids);
    CHECK(std::isinf(back.radius_trace[0]));
    CHECK(back.radius_trace[1] == r.radius_trace[1]);
}

TEST_CASE("incremental cache equals fresh recomputation on small instances") {
    // mirror of the greedy loop with a fresh O(n^2) recomputation each step
    for (uint64_t seed = 0; seed < 5; ++seed) {
        auto m = random_matrix(12, 2, 9000 + seed);
        auto r = k_center_greedy(m, {}, 6);
        std::vector<std::string> centers;
        for (size_t step = 0; step < r.selected_ids.size(); ++step) {
            if (step > 0) {
                // recompute the chosen point's min distance from scratch
                auto idx = *m.index_of(r.selected_ids[step]);
                double fresh = std::numeric_limits<double>::infinity();
                for (const auto& c : centers)
                    fresh = std::min(fresh,
                                     pairwise_distance(m.row(idx), m.row(*m.index_of(c))));
                CHECK(std::abs(fresh - r.radius_trace[step]) <= 1e-9);
            }
            centers.push_back(r.selected_ids[step]);
        }
    }
}
