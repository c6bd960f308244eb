#include "curator/selection.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <thread>

#include <json.hpp>

namespace curator {

using nlohmann::json;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr size_t kNone = std::numeric_limits<size_t>::max();

struct Candidate {
    double dist = -1.0;
    size_t idx = kNone;
};

// dist descending, then id ascending. Reduction order over chunks is fixed,
// so parallel and serial runs agree bit-for-bit.
bool beats(const Candidate& a, const Candidate& b, const EmbeddingMatrix& points) {
    if (b.idx == kNone) return true;
    if (a.dist != b.dist) return a.dist > b.dist;
    return points.id(a.idx) < points.id(b.idx);
}

template <typename Fn>
void parallel_chunks(size_t n, int jobs, Fn&& fn) {
    if (jobs <= 1 || n < 2048) {
        fn(0, 0, n);
        return;
    }
    size_t workers = std::min<size_t>(static_cast<size_t>(jobs), n);
    size_t chunk = (n + workers - 1) / workers;
    std::vector<std::thread> threads;
    for (size_t w = 0; w < workers; ++w) {
        size_t begin = w * chunk;
        size_t end = std::min(n, begin + chunk);
        if (begin >= end) break;
        threads.emplace_back([&fn, w, begin, end] { fn(w, begin, end); });
    }
    for (auto& t : threads) t.join();
}

size_t worker_count(size_t n, int jobs) {
    if (jobs <= 1 || n < 2048) return 1;
    size_t workers = std::min<size_t>(static_cast<size_t>(jobs), n);
    size_t chunk = (n + workers - 1) / workers;
    return (n + chunk - 1) / chunk;
}

}  // namespace

const char* to_string(FirstCenter f) {
    return f == FirstCenter::smallest_id ? "smallest-id" : "centroid-farthest";
}

FirstCenter first_center_from_string(const std::string& s) {
    if (s == "smallest-id") return FirstCenter::smallest_id;
    if (s == "centroid-farthest") return FirstCenter::centroid_farthest;
    throw ContractError("unknown first-center mode: " + s);
}

SelectionResult k_center_greedy(const EmbeddingMatrix& points,
                                const std::vector<std::string>& initial_pool, size_t budget,
                                const SelectionOptions& opts) {
    const size_t n = points.size();
    if (n == 0) throw ContractError("k_center_greedy: empty point set");
    if (budget == 0) throw ContractError("k_center_greedy: budget must be >= 1");

    std::vector<bool> in_set(n, false);
    std::vector<double> min_dist(n, kInf);

    SelectionResult result;
    result.initial_pool_ids = initial_pool;

    for (const auto& id : initial_pool) {
        auto idx = points.index_of(id);
        if (!idx) throw ContractError("initial pool id not in point set: " + id);
        if (in_set[*idx]) throw ContractError("duplicate id in initial pool: " + id);
        in_set[*idx] = true;
    }

    auto update_cache = [&](size_t center) {
        // A new center can only lower cached values.
        auto crow = points.row(center);
        parallel_chunks(n, opts.jobs, [&](size_t, size_t begin, size_t end) {
            for (size_t i = begin; i < end; ++i) {
                if (in_set[i]) continue;
                double d = pairwise_distance(points.row(i), crow);
                if (d < min_dist[i]) min_dist[i] = d;
            }
        });
    };
    for (size_t i = 0; i < n; ++i)
        if (in_set[i]) update_cache(i);

    size_t remaining = n - initial_pool.size();
    size_t steps = std::min(budget, remaining);
    result.truncated = budget > remaining;

    bool set_empty = initial_pool.empty();
    for (size_t step = 0; step < steps; ++step) {
        size_t chosen = kNone;
        double chosen_dist = kInf;
        if (set_empty) {
            if (opts.first_center == FirstCenter::smallest_id) {
                for (size_t i = 0; i < n; ++i)
                    if (chosen == kNone || points.id(i) < points.id(chosen)) chosen = i;
            } else {
                std::vector<double> mean(points.dim(), 0.0);
                for (size_t i = 0; i < n; ++i) {
                    auto r = points.row(i);
                    for (size_t j = 0; j < mean.size(); ++j) mean[j] += r[j];
                }
                for (double& x : mean) x /= static_cast<double>(n);
                Candidate best;
                for (size_t i = 0; i < n; ++i) {
                    Candidate c{pairwise_distance(points.row(i), mean), i};
                    if (beats(c, best, points)) best = c;
                }
                chosen = best.idx;
            }
            set_empty = false;
        } else {
            size_t workers = worker_count(n, opts.jobs);
            std::vector<Candidate> locals(workers);
            parallel_chunks(n, opts.jobs, [&](size_t w, size_t begin, size_t end) {
                Candidate best;
                for (size_t i = begin; i < end; ++i) {
                    if (in_set[i]) continue;
                    Candidate c{min_dist[i], i};
                    if (beats(c, best, points)) best = c;
                }
                locals[w] = best;
            });
            Candidate best;
            for (const auto& c : locals)
                if (c.idx != kNone && beats(c, best, points)) best = c;
            chosen = best.idx;
            chosen_dist = best.dist;
        }

        in_set[chosen] = true;
        result.selected_ids.push_back(points.id(chosen));
        result.radius_trace.push_back(chosen_dist);
        update_cache(chosen);
        if (opts.on_iteration) opts.on_iteration(min_dist, in_set);
    }
    return result;
}

double coverage_radius(const EmbeddingMatrix& points,
                       const std::vector<std::string>& centers) {
    if (centers.empty()) throw ContractError("coverage_radius: empty center set");
    std::vector<size_t> center_idx;
    center_idx.reserve(centers.size());
    for (const auto& id : centers) {
        auto idx = points.index_of(id);
        if (!idx) throw ContractError("center id not in point set: " + id);
        center_idx.push_back(*idx);
    }
    double radius = 0.0;
    for (size_t i = 0; i < points.size(); ++i) {
        double best = kInf;
        for (size_t c : center_idx) {
            double d = pairwise_distance(points.row(i), points.row(c));
            if (d < best) best = d;
        }
        radius = std::max(radius, best);
    }
    return radius;
}

KCenterSolution brute_force_k_center(const EmbeddingMatrix& points, size_t k,
                                     size_t combination_cap) {
    const size_t n = points.size();
    if (n == 0) throw ContractError("brute_force_k_center: empty point set");
    if (k == 0 || k > n) throw ContractError("brute_force_k_center: k out of range");

    // choose(n, k) with overflow guard against the cap
    double combos = 1.0;
    for (size_t i = 0; i < k; ++i)
        combos *= static_cast<double>(n - i) / static_cast<double>(i + 1);
    if (combos > static_cast<double>(combination_cap))
        throw ContractError("brute_force_k_center: choose(n,k) exceeds cap of " +
                            std::to_string(combination_cap));

    // Sort by id so subset enumeration order is id-lexicographic; the first
    // optimum found is then the lexicographically smallest id tuple.
    std::vector<size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](size_t a, size_t b) { return points.id(a) < points.id(b); });

    std::vector<size_t> pick(k);
    std::iota(pick.begin(), pick.end(), 0);

    KCenterSolution best;
    best.radius = kInf;
    std::vector<std::string> ids(k);
    while (true) {
        for (size_t i = 0; i < k; ++i) ids[i] = points.id(order[pick[i]]);
        double r = coverage_radius(points, ids);
        if (r < best.radius) {
            best.radius = r;
            best.centers = ids;
        }
        // next combination
        size_t i = k;
        while (i > 0) {
            --i;
            if (pick[i] != i + n - k) {
                ++pick[i];
                for (size_t j = i + 1; j < k; ++j) pick[j] = pick[j - 1] + 1;
                break;
            }
            if (i == 0) return best;
        }
    }
}

std::string selection_report_json(const SelectionResult& r, size_t budget,
                                  const SelectionOptions& opts) {
    json report;
    report["parameters"] = {{"budget", budget},
                            {"first_center", to_string(opts.first_center)},
                            {"pool_size", r.initial_pool_ids.size()}};
    report["selected_ids"] = r.selected_ids;
    report["initial_pool_ids"] = r.initial_pool_ids;
    json trace = json::array();
    for (double v : r.radius_trace) {
        if (std::isinf(v))
            trace.push_back(nullptr);
        else
            trace.push_back(v);
    }
    report["radius_trace"] = trace;
    report["truncated"] = r.truncated;
    return report.dump(2) + "\n";
}

SelectionResult selection_result_from_json(const std::string& text) {
    json report = json::parse(text);
    SelectionResult r;
    r.selected_ids = report.at("selected_ids").get<std::vector<std::string>>();
    r.initial_pool_ids = report.at("initial_pool_ids").get<std::vector<std::string>>();
    for (const auto& v : report.at("radius_trace"))
        r.radius_trace.push_back(v.is_null() ? kInf : v.get<double>());
    r.truncated = report.at("truncated").get<bool>();
    return r;
}

}  // namespace curator
