#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <mutex>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "ppikit/core.hpp"

namespace ppikit::homology {

struct SimilarityParams {
    double min_identity = 0.50;   // strict >: identity must exceed this
    double min_coverage = 0.80;   // inclusive >=: both sequences
    int kmer_size = 5;            // prefilter only (cluster scans)
    double kmer_jaccard_min = 0.02;  // prefilter only; 0 disables

    nlohmann::json to_json() const;
    static SimilarityParams from_json(const nlohmann::json& j);
};

// Fixed global-alignment scoring: match +1, mismatch 0, gap open -2,
// gap extend -1 (a gap of length g costs 2 + g). Integer arithmetic
// throughout so equality against an independent oracle is exact.
struct AlignmentStats {
    long long score = 0;
    std::size_t columns = 0;  // total alignment columns, terminal gaps included
    std::size_t matches = 0;
    // Residues of each sequence inside the alignment region after trimming
    // terminal gap runs (columns outside the first/last residue-residue column).
    std::size_t span_a = 0;
    std::size_t span_b = 0;

    double identity() const {
        return columns == 0 ? 0.0 : static_cast<double>(matches) / static_cast<double>(columns);
    }
};

// Affine-gap global alignment (Gotoh). Traceback tie-break is canonical
// (match state preferred, then gap-in-B, then gap-in-A) so the reported
// column/match/span counts are deterministic.
AlignmentStats align_global(const std::string& a, const std::string& b);

// A ~ B: identity strictly above min_identity over alignment columns AND
// coverage of BOTH sequences at least min_coverage. Throws on empty or
// non-amino-acid sequences. Symmetric by construction.
bool similar(const std::string& seq_a, const std::string& seq_b, const SimilarityParams& params);

// Sound reject-prescreen used inside similar(): matches <= min(len), columns >=
// max(len), so identity can never exceed min(len)/max(len).
bool length_ratio_passes(std::size_t len_a, std::size_t len_b, const SimilarityParams& params);

// Jaccard similarity of the two k-mer sets; returns 1.0 when either set is
// empty (sequence shorter than k) so short sequences are never prefiltered out.
double kmer_jaccard(const std::string& a, const std::string& b, int kmer_size);

struct SequenceCluster {
    std::string representative;        // accession; always a member
    std::vector<std::string> members;  // accessions in join order
};

// Greedy incremental clustering: proteins sorted by (length desc, accession
// asc); each joins the first representative it is similar to, else founds a
// new cluster. Proteins with empty sequences become singleton clusters.
std::vector<SequenceCluster> cluster(const std::vector<ProteinRecord>& proteins,
                                     const SimilarityParams& params, int jobs = 1);

std::string dump_clusters_tsv(const std::vector<SequenceCluster>& clusters);

struct SubsampleInput {
    PairKey pair;
    double total = 0.0;  // evidence-score total
    int tier = 0;        // 1-based tier label
};

// Representative subsampling: tier-3 pairs retained unconditionally; tier-2
// pairs grouped by the unordered (cluster(a), cluster(b)) signature and the
// highest-scoring pair per group retained (ties: smaller PairKey). Tier-1
// input or a protein missing from the clustering is an error.
std::set<PairKey> subsample_t2(const std::vector<SubsampleInput>& items,
                               const std::vector<SequenceCluster>& clusters);

// FASTA: ">accession" header lines (text after the first whitespace ignored),
// sequence lines concatenated and upper-cased. Validates the amino-acid
// alphabet; throws with a line number on malformed input.
std::vector<ProteinRecord> parse_fasta(const std::string& text);

// Memoized accession-level similarity, shared by the split builders and their
// audits. Thread-safe.
class SimilarityCache {
public:
    SimilarityCache(std::map<std::string, std::string> sequences, SimilarityParams params);

    // Accession lookup failures throw; empty sequences are dissimilar to
    // everything (including themselves) rather than an error, mirroring
    // cluster()'s singleton routing.
    bool similar(const std::string& acc_a, const std::string& acc_b);

    std::size_t calls() const { return calls_; }
    std::size_t memo_hits() const { return hits_; }
    const SimilarityParams& params() const { return params_; }

private:
    std::map<std::string, std::string> sequences_;
    SimilarityParams params_;
    std::map<std::pair<std::string, std::string>, bool> memo_;
    std::size_t calls_ = 0;
    std::size_t hits_ = 0;
    std::mutex mu_;
};

}  // namespace ppikit::homology
