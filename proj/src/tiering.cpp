#include "ppikit/tiering.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>

namespace ppikit::tiering {

namespace {

std::size_t distinct_count(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    return static_cast<std::size_t>(std::unique(v.begin(), v.end()) - v.begin());
}

// One Lloyd run over the sorted points. `sorted`, `prefix`, `prefix_sq` are
// shared across restarts; initial centroids come from k-means++.
struct LloydRun {
    std::vector<double> centroids;
    double inertia = std::numeric_limits<double>::infinity();
};

// Segment [segment_begin[i], segment_begin[i+1]) of the sorted points belongs
// to centroid i, with boundaries at centroid midpoints; a point exactly on a
// midpoint joins the lower cluster.
std::vector<std::size_t> segment_bounds(const std::vector<double>& sorted,
                                        const std::vector<double>& centroids) {
    std::size_t k = centroids.size();
    std::vector<std::size_t> begin(k + 1, 0);
    begin[k] = sorted.size();
    for (std::size_t i = 0; i + 1 < k; ++i) {
        double mid = 0.5 * (centroids[i] + centroids[i + 1]);
        // first element strictly greater than the midpoint starts cluster i+1
        begin[i + 1] = static_cast<std::size_t>(
            std::upper_bound(sorted.begin(), sorted.end(), mid) - sorted.begin());
        begin[i + 1] = std::max(begin[i + 1], begin[i]);
    }
    return begin;
}

LloydRun lloyd(const std::vector<double>& sorted, const std::vector<double>& prefix,
               const std::vector<double>& prefix_sq, std::vector<double> centroids) {
    std::size_t k = centroids.size();
    std::sort(centroids.begin(), centroids.end());
    std::vector<std::size_t> bounds;
    for (int iter = 0; iter < 300; ++iter) {
        auto next = segment_bounds(sorted, centroids);

        // Empty-cluster repair: move the centroid onto the point farthest from
        // its current assignment (smallest index on ties), then re-partition.
        bool repaired = false;
        for (std::size_t i = 0; i < k; ++i) {
            if (next[i + 1] > next[i]) continue;
            double best_dist = -1.0;
            std::size_t best_idx = 0;
            for (std::size_t c = 0; c < k; ++c) {
                for (std::size_t j = next[c]; j < next[c + 1]; ++j) {
                    double d = std::abs(sorted[j] - centroids[c]);
                    if (d > best_dist) {
                        best_dist = d;
                        best_idx = j;
                    }
                }
            }
            centroids[i] = sorted[best_idx];
            std::sort(centroids.begin(), centroids.end());
            repaired = true;
            break;
        }
        if (repaired) continue;

        if (!bounds.empty() && next == bounds) break;  // assignments stable
        bounds = next;
        for (std::size_t i = 0; i < k; ++i) {
            std::size_t lo = bounds[i], hi = bounds[i + 1];
            double sum = prefix[hi] - prefix[lo];
            centroids[i] = sum / static_cast<double>(hi - lo);
        }
        std::sort(centroids.begin(), centroids.end());
    }

    LloydRun run;
    run.centroids = centroids;
    auto final_bounds = segment_bounds(sorted, centroids);
    double inertia = 0.0;
    for (std::size_t i = 0; i < k; ++i) {
        std::size_t lo = final_bounds[i], hi = final_bounds[i + 1];
        double n = static_cast<double>(hi - lo);
        if (hi == lo) continue;
        double sum = prefix[hi] - prefix[lo];
        double sumsq = prefix_sq[hi] - prefix_sq[lo];
        inertia += sumsq - 2.0 * centroids[i] * sum + n * centroids[i] * centroids[i];
    }
    run.inertia = std::max(inertia, 0.0);
    return run;
}

// k-means++ seeding over the sorted points.
std::vector<double> kmeanspp(const std::vector<double>& sorted, int k, Rng& rng) {
    std::vector<double> centroids;
    centroids.reserve(static_cast<std::size_t>(k));
    centroids.push_back(sorted[rng.next_below(sorted.size())]);
    std::vector<double> d2(sorted.size());
    while (centroids.size() < static_cast<std::size_t>(k)) {
        double total = 0.0;
        for (std::size_t i = 0; i < sorted.size(); ++i) {
            double best = std::numeric_limits<double>::infinity();
            for (double c : centroids) best = std::min(best, (sorted[i] - c) * (sorted[i] - c));
            d2[i] = best;
            total += best;
        }
        if (total <= 0.0) {
            // all points covered; fall back to uniform choice among distinct values
            centroids.push_back(sorted[rng.next_below(sorted.size())]);
            continue;
        }
        double r = rng.next_double() * total;
        double acc = 0.0;
        std::size_t chosen = sorted.size() - 1;
        for (std::size_t i = 0; i < sorted.size(); ++i) {
            acc += d2[i];
            if (acc >= r) {
                chosen = i;
                break;
            }
        }
        centroids.push_back(sorted[chosen]);
    }
    return centroids;
}

}  // namespace

KmeansResult kmeans_1d(const std::vector<double>& scores, int k, std::uint64_t seed,
                       int restarts) {
    if (scores.empty()) throw std::invalid_argument("kmeans_1d: empty input");
    if (k < 1) throw std::invalid_argument("kmeans_1d: k must be >= 1");
    std::size_t distinct = distinct_count(scores);
    if (static_cast<std::size_t>(k) > distinct)
        throw std::invalid_argument("kmeans_1d: k=" + std::to_string(k) +
                                    " exceeds distinct value count " + std::to_string(distinct));

    std::vector<double> sorted(scores);
    std::sort(sorted.begin(), sorted.end());
    std::vector<double> prefix(sorted.size() + 1, 0.0), prefix_sq(sorted.size() + 1, 0.0);
    for (std::size_t i = 0; i < sorted.size(); ++i) {
        prefix[i + 1] = prefix[i] + sorted[i];
        prefix_sq[i + 1] = prefix_sq[i] + sorted[i] * sorted[i];
    }

    Rng master(seed);
    LloydRun best;
    for (int r = 0; r < restarts; ++r) {
        Rng restart_rng(master.next_u64());
        // k-means++ can seed duplicate centroids when values repeat; dedup and
        // retry within the restart keeps every run at full k.
        std::vector<double> init;
        for (int attempt = 0; attempt < 16; ++attempt) {
            init = kmeanspp(sorted, k, restart_rng);
            std::sort(init.begin(), init.end());
            if (std::unique(init.begin(), init.end()) == init.end()) break;
            init.clear();
        }
        if (init.empty() || init.size() != static_cast<std::size_t>(k)) {
            // deterministic fallback: k evenly spaced distinct values
            std::vector<double> uniq(sorted);
            uniq.erase(std::unique(uniq.begin(), uniq.end()), uniq.end());
            init.clear();
            for (int i = 0; i < k; ++i)
                init.push_back(uniq[i * (uniq.size() - 1) / std::max(1, k - 1)]);
            std::sort(init.begin(), init.end());
            init.erase(std::unique(init.begin(), init.end()), init.end());
            while (init.size() < static_cast<std::size_t>(k)) init.push_back(uniq[init.size()]);
        }
        LloydRun run = lloyd(sorted, prefix, prefix_sq, std::move(init));
        if (run.inertia < best.inertia) best = std::move(run);  // ties keep earlier restart
    }

    KmeansResult result;
    result.centroids = best.centroids;
    result.inertia = best.inertia;
    result.labels.resize(scores.size());
    for (std::size_t i = 0; i < scores.size(); ++i) {
        int label = 0;
        double bd = std::numeric_limits<double>::infinity();
        for (std::size_t c = 0; c < best.centroids.size(); ++c) {
            double d = std::abs(scores[i] - best.centroids[c]);
            if (d < bd) {  // strict <: ties stay with the lower centroid
                bd = d;
                label = static_cast<int>(c);
            }
        }
        result.labels[i] = label;
    }
    return result;
}

double silhouette_1d(const std::vector<double>& points, const std::vector<int>& labels, int k) {
    if (points.size() != labels.size())
        throw std::invalid_argument("silhouette_1d: size mismatch");
    std::vector<std::vector<double>> clusters(static_cast<std::size_t>(k));
    for (std::size_t i = 0; i < points.size(); ++i)
        clusters[static_cast<std::size_t>(labels[i])].push_back(points[i]);
    std::vector<std::vector<double>> prefixes(clusters.size());
    for (std::size_t c = 0; c < clusters.size(); ++c) {
        std::sort(clusters[c].begin(), clusters[c].end());
        prefixes[c].assign(clusters[c].size() + 1, 0.0);
        for (std::size_t i = 0; i < clusters[c].size(); ++i)
            prefixes[c][i + 1] = prefixes[c][i] + clusters[c][i];
    }
    // Sum of |v - y| over sorted y with prefix sums.
    auto dist_sum = [&](double v, std::size_t c) {
        const auto& ys = clusters[c];
        const auto& ps = prefixes[c];
        std::size_t idx = static_cast<std::size_t>(
            std::upper_bound(ys.begin(), ys.end(), v) - ys.begin());
        double left = v * static_cast<double>(idx) - ps[idx];
        double right = (ps[ys.size()] - ps[idx]) - v * static_cast<double>(ys.size() - idx);
        return left + right;
    };

    double total = 0.0;
    for (std::size_t i = 0; i < points.size(); ++i) {
        std::size_t own = static_cast<std::size_t>(labels[i]);
        std::size_t own_n = clusters[own].size();
        if (own_n <= 1) continue;  // singleton: s = 0 by convention
        double a = dist_sum(points[i], own) / static_cast<double>(own_n - 1);
        double b = std::numeric_limits<double>::infinity();
        for (std::size_t c = 0; c < clusters.size(); ++c) {
            if (c == own || clusters[c].empty()) continue;
            b = std::min(b, dist_sum(points[i], c) / static_cast<double>(clusters[c].size()));
        }
        if (!std::isfinite(b)) continue;  // single non-empty cluster
        double denom = std::max(a, b);
        total += denom > 0.0 ? (b - a) / denom : 0.0;
    }
    return total / static_cast<double>(points.size());
}

std::vector<double> kneedle_difference(const std::vector<double>& xs,
                                       const std::vector<double>& ys, std::size_t* knee_index) {
    if (xs.size() != ys.size() || xs.empty())
        throw std::invalid_argument("kneedle_difference: bad curve");
    double xmin = *std::min_element(xs.begin(), xs.end());
    double xmax = *std::max_element(xs.begin(), xs.end());
    double ymin = *std::min_element(ys.begin(), ys.end());
    double ymax = *std::max_element(ys.begin(), ys.end());
    double xspan = xmax > xmin ? xmax - xmin : 1.0;
    double yspan = ymax > ymin ? ymax - ymin : 1.0;
    std::vector<double> diff(xs.size());
    for (std::size_t i = 0; i < xs.size(); ++i) {
        double xn = (xs[i] - xmin) / xspan;
        double yn = (ys[i] - ymin) / yspan;
        diff[i] = (1.0 - yn) - xn;  // flip: curve is decreasing-convex
    }
    if (knee_index) {
        std::size_t best = 0;
        for (std::size_t i = 1; i < diff.size(); ++i)
            if (diff[i] > diff[best]) best = i;
        *knee_index = best;
    }
    return diff;
}

KSelectionDiagnostics select_k(const std::vector<double>& scores, int k_max,
                               std::size_t subsample_cap, std::uint64_t seed) {
    if (k_max < 2) throw std::invalid_argument("select_k: k_max must be >= 2");
    if (scores.empty()) throw std::invalid_argument("select_k: empty input");
    KSelectionDiagnostics diag;

    std::size_t distinct = distinct_count(scores);
    int k_hi = static_cast<int>(std::min<std::size_t>(static_cast<std::size_t>(k_max), distinct));
    if (distinct == 1) {
        diag.k_candidates = {1};
        diag.inertia = {0.0};
        diag.chosen_k = 1;
        diag.centroids = {scores.front()};
        diag.kneedle_curve = {0.0};
        diag.warning = "degenerate input: all scores equal; k forced to 1";
        return diag;
    }

    Rng master(seed);
    std::uint64_t kmeans_seed = master.next_u64();
    std::uint64_t subsample_seed = master.next_u64();

    std::map<int, KmeansResult> runs;
    for (int k = 1; k <= k_hi; ++k) {
        diag.k_candidates.push_back(k);
        runs[k] = kmeans_1d(scores, k, kmeans_seed + static_cast<std::uint64_t>(k));
        diag.inertia.push_back(runs[k].inertia);
    }

    // Silhouette on a uniform subsample (labels re-derived from the full-run
    // centroids, so the probe reflects the actual clustering).
    std::vector<std::size_t> order(scores.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    Rng sub_rng(subsample_seed);
    sub_rng.shuffle(order);
    std::size_t take = std::min(subsample_cap, scores.size());
    std::vector<double> sample;
    sample.reserve(take);
    for (std::size_t i = 0; i < take; ++i) sample.push_back(scores[order[i]]);

    for (int k = 2; k <= k_hi; ++k) {
        const auto& centroids = runs[k].centroids;
        std::vector<int> labels(sample.size());
        for (std::size_t i = 0; i < sample.size(); ++i) {
            int label = 0;
            double bd = std::numeric_limits<double>::infinity();
            for (std::size_t c = 0; c < centroids.size(); ++c) {
                double d = std::abs(sample[i] - centroids[c]);
                if (d < bd) {
                    bd = d;
                    label = static_cast<int>(c);
                }
            }
            labels[i] = label;
        }
        diag.silhouette_k.push_back(k);
        diag.silhouette.push_back(silhouette_1d(sample, labels, k));
    }

    if (diag.k_candidates.size() < 3) {
        // Two candidates offer no interior knee; the richer model wins.
        diag.kneedle_curve.assign(diag.k_candidates.size(), 0.0);
        diag.chosen_k = k_hi;
    } else {
        std::vector<double> xs(diag.k_candidates.begin(), diag.k_candidates.end());
        std::size_t knee = 0;
        diag.kneedle_curve = kneedle_difference(xs, diag.inertia, &knee);
        diag.chosen_k = diag.k_candidates[knee];
    }
    diag.centroids = runs[diag.chosen_k].centroids;
    return diag;
}

json KSelectionDiagnostics::to_json() const {
    json j;
    j["k_candidates"] = k_candidates;
    j["inertia"] = inertia;
    j["silhouette_k"] = silhouette_k;
    j["silhouette"] = silhouette;
    j["kneedle_curve"] = kneedle_curve;
    j["chosen_k"] = chosen_k;
    j["centroids"] = centroids;
    if (!warning.empty()) j["warning"] = warning;
    return j;
}

std::vector<TierAssignment> assign_tiers(const std::vector<std::pair<PairKey, double>>& scored,
                                         const std::vector<double>& centroids) {
    if (centroids.empty()) throw std::invalid_argument("assign_tiers: no centroids");
    std::vector<double> sorted_centroids(centroids);
    std::sort(sorted_centroids.begin(), sorted_centroids.end());
    std::vector<TierAssignment> out;
    out.reserve(scored.size());
    for (const auto& [pair, value] : scored) {
        int label = 0;
        double bd = std::numeric_limits<double>::infinity();
        for (std::size_t c = 0; c < sorted_centroids.size(); ++c) {
            double d = std::abs(value - sorted_centroids[c]);
            if (d < bd) {
                bd = d;
                label = static_cast<int>(c);
            }
        }
        TierAssignment t;
        t.pair = pair;
        t.tier = label + 1;
        t.tier_name = "T" + std::to_string(label + 1);
        t.score = value;
        t.centroid = sorted_centroids[static_cast<std::size_t>(label)];
        out.push_back(std::move(t));
    }
    return out;
}

std::string dump_tiers_jsonl(const std::vector<TierAssignment>& tiers) {
    std::string out;
    for (const auto& t : tiers) {
        json j;
        j["pair"] = t.pair.to_string();
        j["tier"] = t.tier_name;
        j["score"] = t.score;
        j["centroid"] = t.centroid;
        out += j.dump();
        out += '\n';
    }
    return out;
}

}  // namespace ppikit::tiering
