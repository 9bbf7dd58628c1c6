#pragma once

#include <compare>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "ppikit/util.hpp"

namespace ppikit {

using json = nlohmann::json;

// The ten evidence sources, in the canonical rendering/merge order.
enum class Source {
    IntAct,
    PubMed,
    UniProt,
    ThreeDid,
    Pfam,
    STRING,
    SIGNOR,
    Reactome,
    CORUM,
    ComplexPortal,
};

inline constexpr int kSourceCount = 10;

const char* source_name(Source s);                // "IntAct", "3did", ...
std::optional<Source> source_from_name(std::string_view name);

// -- protein-side data ---------------------------------------------------------

struct ProteinRecord {
    std::string accession;
    // May be empty when the corpus carries no sequence for this accession;
    // homology operations require it and throw otherwise.
    std::string sequence;
    // Named annotation fields (function, domains, subcellular, go_*, ...).
    std::map<std::string, std::string> annotations;
    std::vector<std::string> keywords;  // UniProt-style keyword strings
    std::vector<std::string> aliases;   // protein/gene names besides the accession
    std::optional<Date> first_annotated;

    bool operator==(const ProteinRecord&) const = default;
};

// Validates the amino-acid alphabet: 20 canonical codes plus B, Z, X, U, O.
bool valid_sequence(std::string_view seq);

struct PairKey {
    std::string a;
    std::string b;

    PairKey() = default;
    PairKey(std::string x, std::string y);  // canonicalizes so a <= b

    auto operator<=>(const PairKey&) const = default;

    std::string to_string() const { return a + "__" + b; }
    static PairKey parse(std::string_view text);  // inverse of to_string
};

// -- per-source payloads --------------------------------------------------------

struct DetectionMethod {
    std::string name;
    bool computational = false;
    bool spoke_expanded = false;
    bool operator==(const DetectionMethod&) const = default;
};

struct IntactPayload {
    std::string interaction_type;
    double miscore = 0.0;
    bool has_miscore = false;
    long evidence_lines = 0;
    std::vector<DetectionMethod> detection_methods;
    std::vector<std::string> publications;
    bool binding_region_a = false;
    bool binding_region_b = false;
    std::string interaction_annotations;  // curator free text about the interaction
    bool stoichiometry = false;
    std::vector<std::string> biophysical;        // e.g. "kd=2.1e-7M"
    std::vector<std::string> biological_roles;   // e.g. "bait", "unspecified role"
    bool self_interaction = false;
    bool operator==(const IntactPayload&) const = default;
};

struct PubmedPayload {
    std::vector<std::string> publications;
    std::vector<std::string> abstracts;
    bool operator==(const PubmedPayload&) const = default;
};

// UniProt enters as protein-level records (see PartialCard), so its pair-level
// payload is empty; it exists so "one block per source" stays uniform.
struct UniprotPayload {
    bool operator==(const UniprotPayload&) const = default;
};

struct ThreeDidPayload {
    bool side_a = false;
    bool side_b = false;
    std::vector<std::string> domain_pairs;  // "PFxxxxx:PFyyyyy"
    std::string interface_summary;
    bool operator==(const ThreeDidPayload&) const = default;
};

struct PfamPayload {
    std::vector<std::string> domain_pairs;
    bool operator==(const PfamPayload&) const = default;
};

struct StringActionEntry {
    std::string mode;  // "binding", "catalysis", ...
    int score = 0;     // 0-1000
    bool operator==(const StringActionEntry&) const = default;
};

struct StringPayload {
    int combined_score = 0;  // 0-1000
    std::vector<StringActionEntry> actions;
    bool operator==(const StringPayload&) const = default;
};

struct SignorEntry {
    std::string mechanism;      // "phosphorylation", ...
    std::string causal_effect;  // "up-regulates", ...
    bool direct = false;
    bool operator==(const SignorEntry&) const = default;
};

struct SignorPayload {
    std::vector<SignorEntry> entries;
    bool operator==(const SignorPayload&) const = default;
};

struct ReactomePayload {
    long shared_pathways = 0;
    std::vector<std::string> pathway_names;
    bool operator==(const ReactomePayload&) const = default;
};

// CORUM and ComplexPortal share a shape.
struct ComplexPayload {
    std::vector<std::string> complex_names;
    bool operator==(const ComplexPayload&) const = default;
};

using Payload = std::variant<IntactPayload, PubmedPayload, UniprotPayload, ThreeDidPayload,
                             PfamPayload, StringPayload, SignorPayload, ReactomePayload,
                             ComplexPayload>;

struct SourceBlock {
    Source source = Source::IntAct;
    Payload payload;
    bool operator==(const SourceBlock&) const = default;
};

// Default-constructed payload for a source, with the variant alternative set right.
Payload empty_payload(Source s);

// -- cards ----------------------------------------------------------------------

// One parsed line (or one already-merged card) before/within merging. Exactly
// one of {pair-level blocks, protein-level records} is usually populated.
struct PartialCard {
    PairKey pair;
    std::optional<Date> first_annotated;
    std::vector<SourceBlock> blocks;
    std::vector<ProteinRecord> proteins;
    bool operator==(const PartialCard&) const = default;
};

struct EvidenceCard {
    PairKey pair;
    std::pair<ProteinRecord, ProteinRecord> proteins;  // ordered as (pair.a, pair.b)
    std::vector<SourceBlock> blocks;                   // at most one per source, source order
    std::optional<Date> first_annotated;
    std::set<std::string> keywords;  // union of both sides, for the bias report

    const SourceBlock* block(Source s) const;
    template <typename T>
    const T* payload(Source s) const {
        const SourceBlock* b = block(s);
        return b ? std::get_if<T>(&b->payload) : nullptr;
    }
    const IntactPayload* intact() const { return payload<IntactPayload>(Source::IntAct); }
    const PubmedPayload* pubmed() const { return payload<PubmedPayload>(Source::PubMed); }
    const ThreeDidPayload* threedid() const { return payload<ThreeDidPayload>(Source::ThreeDid); }
    const PfamPayload* pfam() const { return payload<PfamPayload>(Source::Pfam); }
    const StringPayload* string_db() const { return payload<StringPayload>(Source::STRING); }
    const SignorPayload* signor() const { return payload<SignorPayload>(Source::SIGNOR); }
    const ReactomePayload* reactome() const { return payload<ReactomePayload>(Source::Reactome); }
    const ComplexPayload* corum() const { return payload<ComplexPayload>(Source::CORUM); }
    const ComplexPayload* complexportal() const {
        return payload<ComplexPayload>(Source::ComplexPortal);
    }

    bool operator==(const EvidenceCard&) const = default;
};

// -- JSON (all serialization is key-sorted via nlohmann's std::map backing,
//    so dumped artifacts are byte-stable) ---------------------------------------

json to_json(const ProteinRecord& r);
ProteinRecord protein_from_json(const json& j);

json to_json(const SourceBlock& b);
SourceBlock block_from_json(const json& j);

json to_json(const EvidenceCard& c);
EvidenceCard card_from_json(const json& j);

std::string dump_cards_jsonl(const std::vector<EvidenceCard>& cards);
std::vector<EvidenceCard> load_cards_jsonl(const std::string& text);

}  // namespace ppikit
