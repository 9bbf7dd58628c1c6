#pragma once

#include <string>
#include <vector>

#include "ppikit/core.hpp"

namespace ppikit::scoring {

struct TraceEntry {
    std::string rule;
    double weight = 0.0;
    bool operator==(const TraceEntry&) const = default;
};

struct ComponentScore {
    double value = 0.0;
    std::vector<TraceEntry> trace;
};

// Every weight in the rule table is a multiple of 0.25, an exact binary
// fraction, so score comparisons throughout the project are exact ==.
struct EvidenceScore {
    double e_map = 0.0;
    double e_mech = 0.0;
    double e_lit = 0.0;
    double e_src = 0.0;
    double e_ctx = 0.0;  // capped at 4.0
    double e_int = 0.0;  // e_map + e_mech + e_lit + e_src
    double total = 0.0;
    bool gated = false;  // the no-experimental-detection cap applied
    std::vector<TraceEntry> trace;
};

// Rows whose field lists the rule table leaves open-ended are configurable;
// defaults cover the enumerated fields.
struct ScoringConfig {
    std::vector<std::string> enzymatic_stems{"phospho", "ubiq", "cleav", "acetyl", "methyl"};
    std::vector<std::string> paired_fields{"function", "domains", "similarity"};
    std::vector<std::string> either_side_fields{"tissue",           "catalytic_activity",
                                                "ptm",              "modified_residues",
                                                "regulation",       "sites",
                                                "motifs",           "zinc_fingers",
                                                "free_text"};
    bool abstract_length_summed = true;  // sum abstract chars vs per-abstract max
};

ComponentScore score_map(const EvidenceCard& card, const ScoringConfig& cfg = {});
ComponentScore score_mech(const EvidenceCard& card, const ScoringConfig& cfg = {});
ComponentScore score_lit(const EvidenceCard& card, const ScoringConfig& cfg = {});
ComponentScore score_src(const EvidenceCard& card, const ScoringConfig& cfg = {});
ComponentScore score_ctx(const EvidenceCard& card, const ScoringConfig& cfg = {});

EvidenceScore score(const EvidenceCard& card, const ScoringConfig& cfg = {});

// Shared signal helpers (the tags module reuses the same definitions so the
// two stages can never drift apart).
bool has_experimental_detection(const EvidenceCard& card);
bool enzymatic_signal(const EvidenceCard& card, const ScoringConfig& cfg = {});
bool subunit_mentions_partner(const EvidenceCard& card);

json to_json(const EvidenceScore& s, bool with_trace);
std::string dump_scores_jsonl(const std::vector<PairKey>& pairs,
                              const std::vector<EvidenceScore>& scores, bool with_trace);

}  // namespace ppikit::scoring
