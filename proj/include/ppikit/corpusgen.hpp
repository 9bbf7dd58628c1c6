#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "ppikit/core.hpp"
#include "ppikit/util.hpp"

namespace ppikit::corpusgen {

// Synthetic evidence corpus with three quality strata (sparse / supported /
// deeply characterized), sequence families for homology structure, and a
// slice of recently annotated pairs for temporal splitting. Used for demo
// data, end-to-end tests, and benchmarks.
struct CorpusSpec {
    std::size_t n_pairs = 300;
    std::uint64_t seed = 1;
    double recent_fraction = 0.10;  // pairs first annotated after the cutoff
    Date cutoff{2025, 5, 1};
};

struct GeneratedCorpus {
    std::string mitab;       // IntAct evidence lines
    std::string string_tsv;  // STRING links (header + rows)
    // source name -> JSONL text; always includes "UniProt" protein records
    std::map<std::string, std::string> jsonl;
    std::string fasta;       // sequences for every protein
};

GeneratedCorpus generate_files(const CorpusSpec& spec);

// In-memory cards with randomized payload shapes across every scoring
// surface; cheap enough for million-card benchmarks (no sequences).
std::vector<EvidenceCard> generate_cards(std::size_t n, std::uint64_t seed);

// Sequence helpers shared with the tests.
std::string random_sequence(Rng& rng, std::size_t length);
std::string mutate_sequence(Rng& rng, const std::string& base, double rate);

}  // namespace ppikit::corpusgen
