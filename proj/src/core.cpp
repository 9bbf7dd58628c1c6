#include "ppikit/core.hpp"

#include <array>
#include <sstream>

namespace ppikit {

namespace {

constexpr std::array<const char*, kSourceCount> kSourceNames = {
    "IntAct", "PubMed", "UniProt", "3did", "Pfam",
    "STRING", "SIGNOR", "Reactome", "CORUM", "ComplexPortal",
};

}  // namespace

const char* source_name(Source s) { return kSourceNames[static_cast<int>(s)]; }

std::optional<Source> source_from_name(std::string_view name) {
    for (int i = 0; i < kSourceCount; ++i)
        if (name == kSourceNames[i]) return static_cast<Source>(i);
    return std::nullopt;
}

bool valid_sequence(std::string_view seq) {
    static constexpr std::string_view kAlphabet = "ACDEFGHIKLMNPQRSTVWYBZXUO";
    if (seq.empty()) return false;
    for (char c : seq)
        if (kAlphabet.find(c) == std::string_view::npos) return false;
    return true;
}

PairKey::PairKey(std::string x, std::string y) {
    if (y < x) std::swap(x, y);
    a = std::move(x);
    b = std::move(y);
}

PairKey PairKey::parse(std::string_view text) {
    std::size_t pos = text.find("__");
    if (pos == std::string_view::npos)
        throw std::invalid_argument("bad pair key: '" + std::string(text) + "'");
    return PairKey(std::string(text.substr(0, pos)), std::string(text.substr(pos + 2)));
}

Payload empty_payload(Source s) {
    switch (s) {
        case Source::IntAct: return IntactPayload{};
        case Source::PubMed: return PubmedPayload{};
        case Source::UniProt: return UniprotPayload{};
        case Source::ThreeDid: return ThreeDidPayload{};
        case Source::Pfam: return PfamPayload{};
        case Source::STRING: return StringPayload{};
        case Source::SIGNOR: return SignorPayload{};
        case Source::Reactome: return ReactomePayload{};
        case Source::CORUM:
        case Source::ComplexPortal: return ComplexPayload{};
    }
    throw std::logic_error("unreachable source");
}

const SourceBlock* EvidenceCard::block(Source s) const {
    for (const auto& b : blocks)
        if (b.source == s) return &b;
    return nullptr;
}

// -- JSON ------------------------------------------------------------------------

json to_json(const ProteinRecord& r) {
    json j;
    j["accession"] = r.accession;
    j["sequence"] = r.sequence;
    j["annotations"] = r.annotations;
    j["keywords"] = r.keywords;
    j["aliases"] = r.aliases;
    if (r.first_annotated) j["first_annotated"] = r.first_annotated->to_string();
    return j;
}

ProteinRecord protein_from_json(const json& j) {
    ProteinRecord r;
    r.accession = j.value("accession", std::string());
    r.sequence = j.value("sequence", std::string());
    if (j.contains("annotations"))
        r.annotations = j.at("annotations").get<std::map<std::string, std::string>>();
    r.keywords = j.value("keywords", std::vector<std::string>());
    r.aliases = j.value("aliases", std::vector<std::string>());
    if (j.contains("first_annotated"))
        r.first_annotated = Date::parse(j.at("first_annotated").get<std::string>());
    return r;
}

namespace {

json payload_to_json(const Payload& p) {
    json j;
    std::visit(
        [&](const auto& v) {
            using T = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<T, IntactPayload>) {
                j["interaction_type"] = v.interaction_type;
                if (v.has_miscore) j["miscore"] = v.miscore;
                j["evidence_lines"] = v.evidence_lines;
                json methods = json::array();
                for (const auto& m : v.detection_methods)
                    methods.push_back({{"name", m.name},
                                       {"computational", m.computational},
                                       {"spoke_expanded", m.spoke_expanded}});
                j["detection_methods"] = std::move(methods);
                j["publications"] = v.publications;
                j["binding_region_a"] = v.binding_region_a;
                j["binding_region_b"] = v.binding_region_b;
                j["interaction_annotations"] = v.interaction_annotations;
                j["stoichiometry"] = v.stoichiometry;
                j["biophysical"] = v.biophysical;
                j["biological_roles"] = v.biological_roles;
                j["self_interaction"] = v.self_interaction;
            } else if constexpr (std::is_same_v<T, PubmedPayload>) {
                j["publications"] = v.publications;
                j["abstracts"] = v.abstracts;
            } else if constexpr (std::is_same_v<T, UniprotPayload>) {
                // no pair-level fields
            } else if constexpr (std::is_same_v<T, ThreeDidPayload>) {
                j["side_a"] = v.side_a;
                j["side_b"] = v.side_b;
                j["domain_pairs"] = v.domain_pairs;
                j["interface_summary"] = v.interface_summary;
            } else if constexpr (std::is_same_v<T, PfamPayload>) {
                j["domain_pairs"] = v.domain_pairs;
            } else if constexpr (std::is_same_v<T, StringPayload>) {
                j["combined_score"] = v.combined_score;
                json actions = json::array();
                for (const auto& a : v.actions)
                    actions.push_back({{"mode", a.mode}, {"score", a.score}});
                j["actions"] = std::move(actions);
            } else if constexpr (std::is_same_v<T, SignorPayload>) {
                json entries = json::array();
                for (const auto& e : v.entries)
                    entries.push_back({{"mechanism", e.mechanism},
                                       {"causal_effect", e.causal_effect},
                                       {"direct", e.direct}});
                j["entries"] = std::move(entries);
            } else if constexpr (std::is_same_v<T, ReactomePayload>) {
                j["shared_pathways"] = v.shared_pathways;
                j["pathway_names"] = v.pathway_names;
            } else if constexpr (std::is_same_v<T, ComplexPayload>) {
                j["complex_names"] = v.complex_names;
            }
        },
        p);
    return j;
}

Payload payload_from_json(Source s, const json& j) {
    Payload p = empty_payload(s);
    std::visit(
        [&](auto& v) {
            using T = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<T, IntactPayload>) {
                v.interaction_type = j.value("interaction_type", std::string());
                if (j.contains("miscore")) {
                    v.miscore = j.at("miscore").get<double>();
                    v.has_miscore = true;
                }
                v.evidence_lines = j.value("evidence_lines", 0L);
                for (const auto& m : j.value("detection_methods", json::array()))
                    v.detection_methods.push_back({m.value("name", std::string()),
                                                   m.value("computational", false),
                                                   m.value("spoke_expanded", false)});
                v.publications = j.value("publications", std::vector<std::string>());
                v.binding_region_a = j.value("binding_region_a", false);
                v.binding_region_b = j.value("binding_region_b", false);
                v.interaction_annotations = j.value("interaction_annotations", std::string());
                v.stoichiometry = j.value("stoichiometry", false);
                v.biophysical = j.value("biophysical", std::vector<std::string>());
                v.biological_roles = j.value("biological_roles", std::vector<std::string>());
                v.self_interaction = j.value("self_interaction", false);
            } else if constexpr (std::is_same_v<T, PubmedPayload>) {
                v.publications = j.value("publications", std::vector<std::string>());
                v.abstracts = j.value("abstracts", std::vector<std::string>());
            } else if constexpr (std::is_same_v<T, ThreeDidPayload>) {
                v.side_a = j.value("side_a", false);
                v.side_b = j.value("side_b", false);
                v.domain_pairs = j.value("domain_pairs", std::vector<std::string>());
                v.interface_summary = j.value("interface_summary", std::string());
            } else if constexpr (std::is_same_v<T, PfamPayload>) {
                v.domain_pairs = j.value("domain_pairs", std::vector<std::string>());
            } else if constexpr (std::is_same_v<T, StringPayload>) {
                v.combined_score = j.value("combined_score", 0);
                for (const auto& a : j.value("actions", json::array()))
                    v.actions.push_back({a.value("mode", std::string()), a.value("score", 0)});
            } else if constexpr (std::is_same_v<T, SignorPayload>) {
                for (const auto& e : j.value("entries", json::array()))
                    v.entries.push_back({e.value("mechanism", std::string()),
                                         e.value("causal_effect", std::string()),
                                         e.value("direct", false)});
            } else if constexpr (std::is_same_v<T, ReactomePayload>) {
                v.shared_pathways = j.value("shared_pathways", 0L);
                v.pathway_names = j.value("pathway_names", std::vector<std::string>());
            } else if constexpr (std::is_same_v<T, ComplexPayload>) {
                v.complex_names = j.value("complex_names", std::vector<std::string>());
            }
        },
        p);
    return p;
}

}  // namespace

json to_json(const SourceBlock& b) {
    json j = payload_to_json(b.payload);
    j["source"] = source_name(b.source);
    return j;
}

SourceBlock block_from_json(const json& j) {
    auto name = j.at("source").get<std::string>();
    auto src = source_from_name(name);
    if (!src) throw std::invalid_argument("unknown source: '" + name + "'");
    return SourceBlock{*src, payload_from_json(*src, j)};
}

json to_json(const EvidenceCard& c) {
    json j;
    j["pair"] = c.pair.to_string();
    j["protein_a"] = to_json(c.proteins.first);
    j["protein_b"] = to_json(c.proteins.second);
    json blocks = json::array();
    for (const auto& b : c.blocks) blocks.push_back(to_json(b));
    j["blocks"] = std::move(blocks);
    if (c.first_annotated) j["first_annotated"] = c.first_annotated->to_string();
    j["keywords"] = c.keywords;
    return j;
}

EvidenceCard card_from_json(const json& j) {
    EvidenceCard c;
    c.pair = PairKey::parse(j.at("pair").get<std::string>());
    c.proteins.first = protein_from_json(j.at("protein_a"));
    c.proteins.second = protein_from_json(j.at("protein_b"));
    for (const auto& b : j.value("blocks", json::array())) c.blocks.push_back(block_from_json(b));
    if (j.contains("first_annotated"))
        c.first_annotated = Date::parse(j.at("first_annotated").get<std::string>());
    for (const auto& k : j.value("keywords", json::array()))
        c.keywords.insert(k.get<std::string>());
    return c;
}

std::string dump_cards_jsonl(const std::vector<EvidenceCard>& cards) {
    std::string out;
    for (const auto& c : cards) {
        out += to_json(c).dump();
        out += '\n';
    }
    return out;
}

std::vector<EvidenceCard> load_cards_jsonl(const std::string& text) {
    std::vector<EvidenceCard> cards;
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) {
        if (trim(line).empty()) continue;
        cards.push_back(card_from_json(json::parse(line)));
    }
    return cards;
}

}  // namespace ppikit
