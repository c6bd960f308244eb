#pragma once

#include <functional>
#include <span>
#include <string>
#include <vector>

#include "curator/embedding.hpp"

namespace curator {

enum class FirstCenter { smallest_id, centroid_farthest };

const char* to_string(FirstCenter f);
FirstCenter first_center_from_string(const std::string& s);

struct SelectionOptions {
    int jobs = 1;
    FirstCenter first_center = FirstCenter::smallest_id;
    /// Called after each iteration's cache update with the cached
    /// min-distances and the membership mask. Verification hook; the cached
    /// value for members is stale by design.
    std::function<void(std::span<const double> min_dist, const std::vector<bool>& in_set)>
        on_iteration;
};

/// Result of one greedy selection run. radius_trace holds, for each chosen
/// point, its min-distance to the centers at the moment of selection; the
/// bootstrap center of an empty pool records +inf. The trace is
/// non-increasing by construction.
struct SelectionResult {
    std::vector<std::string> selected_ids;      // selection order
    std::vector<std::string> initial_pool_ids;
    std::vector<double> radius_trace;
    bool truncated = false;                     // budget exceeded remaining points
};

/// Farthest-first traversal with an incremental min-distance cache. Each
/// iteration picks the unselected point maximizing its distance to the
/// current centers; ties break to the smallest record id. With an empty
/// initial pool the first center is the point of smallest record id (or the
/// point farthest from the dataset mean, by option), consuming one unit of
/// budget. Deterministic across runs and across job counts: the parallel
/// argmax reduces (distance, id) pairs with the id tie-break.
SelectionResult k_center_greedy(const EmbeddingMatrix& points,
                                const std::vector<std::string>& initial_pool, size_t budget,
                                const SelectionOptions& opts = {});

/// Max over all points of min distance to any center.
double coverage_radius(const EmbeddingMatrix& points,
                       const std::vector<std::string>& centers);

struct KCenterSolution {
    std::vector<std::string> centers;  // sorted by id
    double radius = 0.0;
};

/// Exhaustive k-center minimizer, for verification only. Enumerates all
/// k-subsets (id-lexicographic order, first optimum wins) and refuses when
/// choose(n, k) exceeds the cap.
KCenterSolution brute_force_k_center(const EmbeddingMatrix& points, size_t k,
                                     size_t combination_cap = 200000);

std::string selection_report_json(const SelectionResult& r, size_t budget,
                                  const SelectionOptions& opts);

SelectionResult selection_result_from_json(const std::string& text);

}  // namespace curator
