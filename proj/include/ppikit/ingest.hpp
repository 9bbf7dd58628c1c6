#pragma once

#include <string>
#include <vector>

#include "ppikit/core.hpp"

namespace ppikit::ingest {

struct Reject {
    long line = 0;  // 1-based line number in the input stream
    std::string source;
    std::string reason;
    bool operator==(const Reject&) const = default;
};

struct ParseResult {
    std::vector<PartialCard> cards;
    std::vector<Reject> rejects;
    long skipped = 0;  // header / blank lines
    long total_lines = 0;
};

// PSI-MITAB column subset: columns 1-2 interactor IDs (uniprotkb: prefix),
// 7 detection method, 9 publications, 12 interaction type, 15 confidence
// (intact-miscore). Extra columns are ignored; lines starting with '#' and
// blank lines are skipped. Malformed lines land in `rejects`, never abort.
ParseResult parse_mitab(const std::string& text);

// One captured line back to a 15-column MITAB row (uncaptured columns "-").
std::string serialize_mitab(const PartialCard& card);

// STRING links format: one header line, then `protein1 protein2 combined_score`.
ParseResult parse_string_links(const std::string& text);

// Normalized JSONL interchange for the remaining sources (any of the ten is
// accepted). Schema violations reject the line with a JSON-pointer path.
ParseResult parse_generic_jsonl(const std::string& text, Source source);

// Groups partials by canonical PairKey and merges payloads: lists union+sort,
// bools OR, counts sum, scores max, dates earliest. Protein-level records merge
// into the cards they belong to. Deterministic; throws on sequence conflicts.
std::vector<EvidenceCard> merge_cards(const std::vector<PartialCard>& partials);

// EvidenceCards viewed as partials, so merge can be re-applied (idempotence).
std::vector<PartialCard> cards_as_partials(const std::vector<EvidenceCard>& cards);

std::string dump_rejects_jsonl(const std::vector<Reject>& rejects);

}  // namespace ppikit::ingest
