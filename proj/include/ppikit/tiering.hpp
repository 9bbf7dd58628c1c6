#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ppikit/core.hpp"

namespace ppikit::tiering {

struct KmeansResult {
    std::vector<double> centroids;  // ascending
    std::vector<int> labels;        // per input point, index into centroids
    double inertia = 0.0;
};

// Lloyd's algorithm with k-means++ initialization, best of `restarts` runs by
// (inertia, restart index). 1D structure is exploited internally (sorted
// prefix sums make each iteration O(k log n)), but the algorithm is Lloyd's.
// Deterministic for fixed seed. Throws if k exceeds the distinct-value count.
KmeansResult kmeans_1d(const std::vector<double>& scores, int k, std::uint64_t seed,
                       int restarts = 8);

struct KSelectionDiagnostics {
    std::vector<int> k_candidates;
    std::vector<double> inertia;         // per candidate
    std::vector<int> silhouette_k;       // k >= 2 entries actually probed
    std::vector<double> silhouette;      // aligned with silhouette_k
    std::vector<double> kneedle_curve;   // normalized difference curve per candidate
    int chosen_k = 1;
    std::vector<double> centroids;       // centroids of the chosen-k run
    std::string warning;                 // degenerate-input note, empty otherwise

    json to_json() const;
};

// Inertia for k in [1, k_max], silhouette on a capped uniform subsample,
// kneedle knee on the inertia curve decides chosen_k (silhouette is reported,
// not arbitrated). Degenerate all-equal input yields k = 1 plus a warning.
KSelectionDiagnostics select_k(const std::vector<double>& scores, int k_max,
                               std::size_t subsample_cap, std::uint64_t seed);

// Exact mean silhouette for 1D points under given labels (prefix-sum based,
// O(n k log n)). Singleton clusters contribute s = 0.
double silhouette_1d(const std::vector<double>& points, const std::vector<int>& labels, int k);

// Kneedle on a decreasing convex curve: min-max normalize both axes, flip y,
// difference against x, knee at the argmax (ties toward the smaller x).
// Returns the difference curve; knee_index receives the argmax position.
std::vector<double> kneedle_difference(const std::vector<double>& xs,
                                       const std::vector<double>& ys, std::size_t* knee_index);

struct TierAssignment {
    PairKey pair;
    int tier = 0;           // 1-based, ascending centroid order
    std::string tier_name;  // "T1".."Tk"
    double score = 0.0;
    double centroid = 0.0;
};

// Nearest-centroid labeling; ties break toward the lower centroid.
std::vector<TierAssignment> assign_tiers(const std::vector<std::pair<PairKey, double>>& scored,
                                         const std::vector<double>& centroids);

std::string dump_tiers_jsonl(const std::vector<TierAssignment>& tiers);

}  // namespace ppikit::tiering
