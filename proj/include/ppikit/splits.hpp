#pragma once

#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "ppikit/core.hpp"
#include "ppikit/homology.hpp"

namespace ppikit::splits {

// Decontamination predicate flavor. Pair-level: train (A,B) conflicts with
// test (C,D) iff (A~C and B~D) or (A~D and B~C). Protein-level: iff any of
// A~C, A~D, B~C, B~D. Protein-level is strictly easier to trigger, so for a
// shared test set its removed superset contains the pair-level one.
enum class Decontamination { pair_level, protein_level };

bool pair_conflicts(const PairKey& train_pair, const PairKey& test_pair,
                    homology::SimilarityCache& sim, Decontamination kind);

struct RemovedPair {
    PairKey pair;
    std::string reason;                // "undated" | "homology"
    std::optional<PairKey> test_pair;  // first offending test pair, for "homology"
    bool operator==(const RemovedPair&) const = default;
};

struct AuditReport {
    std::size_t comparisons = 0;
    std::size_t violations = 0;
    bool passed = false;
    std::string checksum;  // sha256 of the manifest content the audit covered
};

struct SplitManifest {
    std::string name;  // "temporal_holdout" | "c3_hard"
    std::set<PairKey> train;
    std::set<PairKey> test;
    std::vector<RemovedPair> removed;  // sorted by pair
    std::optional<Date> cutoff_date;   // temporal only
    std::optional<double> test_fraction;  // c3 sampling only
    std::optional<std::uint64_t> seed;    // c3 sampling only
    homology::SimilarityParams params;
    AuditReport audit;

    // Manifest content without the audit block; its dump is what the audit
    // checksum covers.
    nlohmann::json content_json() const;
    nlohmann::json to_json() const;
    static SplitManifest from_json(const nlohmann::json& j);
};

struct DatedPair {
    PairKey pair;
    std::optional<Date> first_annotated;
};

// Independent brute-force scan over train x test; counts predicate violations.
// Builders run this as a mandatory pass and embed the report.
AuditReport audit_split(const std::set<PairKey>& train, const std::set<PairKey>& test,
                        homology::SimilarityCache& sim, Decontamination kind, int jobs = 1);

// Temporal holdout: test = pairs first annotated strictly after the cutoff;
// undated pairs are removed with reason "undated"; remaining train pairs are
// removed under the pair-level predicate. Throws if the embedded audit fails.
SplitManifest split_temporal(const std::vector<DatedPair>& pairs, homology::SimilarityCache& sim,
                             const Date& cutoff, int jobs = 1);

// C3-hard with an explicit test set (must be a subset of pairs); train pairs
// removed under the protein-level predicate.
SplitManifest split_c3(const std::vector<PairKey>& pairs, homology::SimilarityCache& sim,
                       const std::set<PairKey>& test, int jobs = 1);

// C3-hard sampling whole sequence clusters (shuffled by seed) into a test
// protein pool until pairs fully inside the pool reach test_fraction of all
// pairs; those pairs form the test set.
SplitManifest split_c3(const std::vector<PairKey>& pairs, homology::SimilarityCache& sim,
                       const std::vector<homology::SequenceCluster>& clusters,
                       double test_fraction, std::uint64_t seed, int jobs = 1);

}  // namespace ppikit::splits
