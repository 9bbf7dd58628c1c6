#include "ppikit/ingest.hpp"

#include <algorithm>
#include <charconv>
#include <map>
#include <set>
#include <sstream>

namespace ppikit::ingest {

namespace {

// Pulls "label" out of MITAB's `psi-mi:"MI:0007"(label)` form; falls back to the
// whole field (quotes stripped) when there are no parentheses.
std::string parenthesized_label(const std::string& field) {
    std::size_t open = field.rfind('(');
    if (open != std::string::npos) {
        std::size_t close = field.find(')', open);
        if (close != std::string::npos) return field.substr(open + 1, close - open - 1);
    }
    std::string out;
    for (char c : field)
        if (c != '"') out.push_back(c);
    return out;
}

std::optional<std::string> uniprot_accession(const std::string& field) {
    for (const auto& entry : split(field, '|')) {
        if (entry.rfind("uniprotkb:", 0) == 0) {
            std::string acc = entry.substr(10);
            if (!acc.empty()) return acc;
        }
    }
    return std::nullopt;
}

bool is_blank(const std::string& line) { return trim(line).empty(); }

template <typename T>
void sort_unique(std::vector<T>& v) {
    std::sort(v.begin(), v.end());
    v.erase(std::unique(v.begin(), v.end()), v.end());
}

}  // namespace

ParseResult parse_mitab(const std::string& text) {
    ParseResult result;
    std::istringstream in(text);
    std::string line;
    long lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        ++result.total_lines;
        if (is_blank(line) || line[0] == '#') {
            ++result.skipped;
            continue;
        }
        auto cols = split(line, '\t');
        if (cols.size() < 15) {
            result.rejects.push_back({lineno, "IntAct",
                                      "expected >= 15 tab-separated columns, got " +
                                          std::to_string(cols.size())});
            continue;
        }
        auto acc_a = uniprot_accession(cols[0]);
        auto acc_b = uniprot_accession(cols[1]);
        if (!acc_a || !acc_b) {
            result.rejects.push_back(
                {lineno, "IntAct",
                 std::string("no uniprotkb identifier for interactor ") + (!acc_a ? "A" : "B")});
            continue;
        }

        IntactPayload p;
        p.evidence_lines = 1;
        for (const auto& m : split(cols[6], '|')) {
            if (trim(m).empty() || m == "-") continue;
            std::string label = parenthesized_label(m);
            p.detection_methods.push_back({label, contains_ci(label, "computational"),
                                           contains_ci(label, "spoke")});
        }
        for (const auto& pub : split(cols[8], '|')) {
            if (!trim(pub).empty() && pub != "-") p.publications.push_back(trim(pub));
        }
        if (cols[11] != "-") p.interaction_type = parenthesized_label(cols[11]);

        bool bad_miscore = false;
        for (const auto& conf : split(cols[14], '|')) {
            if (conf.rfind("intact-miscore:", 0) != 0) continue;
            std::string num = conf.substr(15);
            try {
                std::size_t used = 0;
                double v = std::stod(num, &used);
                if (used != num.size() || v < 0.0 || v > 1.0) throw std::invalid_argument(num);
                p.miscore = v;
                p.has_miscore = true;
            } catch (const std::exception&) {
                bad_miscore = true;
            }
        }
        if (bad_miscore) {
            result.rejects.push_back({lineno, "IntAct", "unparseable intact-miscore value"});
            continue;
        }
        p.self_interaction = (*acc_a == *acc_b);

        PartialCard card;
        card.pair = PairKey(*acc_a, *acc_b);
        card.blocks.push_back({Source::IntAct, std::move(p)});
        result.cards.push_back(std::move(card));
    }
    return result;
}

std::string serialize_mitab(const PartialCard& card) {
    const auto* block =
        card.blocks.empty() ? nullptr : std::get_if<IntactPayload>(&card.blocks.front().payload);
    if (!block) throw std::invalid_argument("serialize_mitab: card has no IntAct payload");
    std::vector<std::string> cols(15, "-");
    cols[0] = "uniprotkb:" + card.pair.a;
    cols[1] = "uniprotkb:" + card.pair.b;
    if (!block->detection_methods.empty()) {
        std::string field;
        for (const auto& m : block->detection_methods) {
            if (!field.empty()) field += '|';
            field += "psi-mi:\"MI:0000\"(" + m.name + ")";
        }
        cols[6] = field;
    }
    if (!block->publications.empty()) {
        std::string field;
        for (const auto& pub : block->publications) {
            if (!field.empty()) field += '|';
            field += pub;
        }
        cols[8] = field;
    }
    if (!block->interaction_type.empty())
        cols[11] = "psi-mi:\"MI:0000\"(" + block->interaction_type + ")";
    if (block->has_miscore) cols[14] = "intact-miscore:" + format_double(block->miscore);
    std::string out;
    for (std::size_t i = 0; i < cols.size(); ++i) {
        if (i) out += '\t';
        out += cols[i];
    }
    return out;
}

ParseResult parse_string_links(const std::string& text) {
    ParseResult result;
    std::istringstream in(text);
    std::string line;
    long lineno = 0;
    bool seen_header = false;
    while (std::getline(in, line)) {
        ++lineno;
        ++result.total_lines;
        if (is_blank(line)) {
            ++result.skipped;
            continue;
        }
        if (!seen_header) {
            seen_header = true;  // format mandates one header row
            ++result.skipped;
            continue;
        }
        auto fields = split_ws(line);
        if (fields.size() < 3) {
            result.rejects.push_back({lineno, "STRING",
                                      "expected `protein1 protein2 combined_score`, got " +
                                          std::to_string(fields.size()) + " fields"});
            continue;
        }
        int score = 0;
        auto [ptr, ec] =
            std::from_chars(fields[2].data(), fields[2].data() + fields[2].size(), score);
        if (ec != std::errc{} || ptr != fields[2].data() + fields[2].size() || score < 0 ||
            score > 1000) {
            result.rejects.push_back(
                {lineno, "STRING", "combined_score not an integer in [0,1000]: '" + fields[2] + "'"});
            continue;
        }
        PartialCard card;
        card.pair = PairKey(fields[0], fields[1]);
        card.blocks.push_back({Source::STRING, StringPayload{score, {}}});
        result.cards.push_back(std::move(card));
    }
    return result;
}

// -- JSONL schema validation -------------------------------------------------

namespace {

// Thrown internally to carry the JSON-pointer of the offending field.
struct SchemaError {
    std::string pointer;
    std::string what;
};

void expect_type(const json& j, const std::string& ptr, json::value_t t, const char* name) {
    if (t == json::value_t::number_integer) {
        if (!j.is_number_integer()) throw SchemaError{ptr, std::string("expected ") + name};
        return;
    }
    if (t == json::value_t::number_float) {
        if (!j.is_number()) throw SchemaError{ptr, std::string("expected ") + name};
        return;
    }
    if (j.type() != t) throw SchemaError{ptr, std::string("expected ") + name};
}

std::string get_string(const json& j, const std::string& key, const std::string& ptr) {
    if (!j.contains(key)) return {};
    expect_type(j.at(key), ptr + "/" + key, json::value_t::string, "string");
    return j.at(key).get<std::string>();
}

bool get_bool(const json& j, const std::string& key, const std::string& ptr) {
    if (!j.contains(key)) return false;
    expect_type(j.at(key), ptr + "/" + key, json::value_t::boolean, "boolean");
    return j.at(key).get<bool>();
}

long get_count(const json& j, const std::string& key, const std::string& ptr) {
    if (!j.contains(key)) return 0;
    expect_type(j.at(key), ptr + "/" + key, json::value_t::number_integer, "integer");
    long v = j.at(key).get<long>();
    if (v < 0) throw SchemaError{ptr + "/" + key, "expected non-negative integer"};
    return v;
}

int get_score1000(const json& j, const std::string& key, const std::string& ptr) {
    if (!j.contains(key)) return 0;
    expect_type(j.at(key), ptr + "/" + key, json::value_t::number_integer, "integer");
    long v = j.at(key).get<long>();
    if (v < 0 || v > 1000) throw SchemaError{ptr + "/" + key, "expected integer in [0,1000]"};
    return static_cast<int>(v);
}

std::vector<std::string> get_string_array(const json& j, const std::string& key,
                                          const std::string& ptr) {
    std::vector<std::string> out;
    if (!j.contains(key)) return out;
    const json& arr = j.at(key);
    expect_type(arr, ptr + "/" + key, json::value_t::array, "array");
    for (std::size_t i = 0; i < arr.size(); ++i) {
        const std::string p = ptr + "/" + key + "/" + std::to_string(i);
        expect_type(arr[i], p, json::value_t::string, "string");
        out.push_back(arr[i].get<std::string>());
    }
    return out;
}

std::optional<Date> get_date(const json& j, const std::string& key, const std::string& ptr) {
    if (!j.contains(key)) return std::nullopt;
    expect_type(j.at(key), ptr + "/" + key, json::value_t::string, "string");
    auto d = Date::try_parse(j.at(key).get<std::string>());
    if (!d) throw SchemaError{ptr + "/" + key, "expected YYYY-MM-DD date"};
    return d;
}

PartialCard parse_jsonl_object(const json& j, Source source) {
    PartialCard card;
    if (source == Source::UniProt) {
        ProteinRecord r;
        r.accession = get_string(j, "accession", "");
        if (r.accession.empty()) throw SchemaError{"/accession", "required non-empty string"};
        r.sequence = get_string(j, "sequence", "");
        if (!r.sequence.empty() && !valid_sequence(r.sequence))
            throw SchemaError{"/sequence", "invalid amino-acid alphabet"};
        if (j.contains("annotations")) {
            expect_type(j.at("annotations"), "/annotations", json::value_t::object, "object");
            for (const auto& [k, v] : j.at("annotations").items()) {
                expect_type(v, "/annotations/" + k, json::value_t::string, "string");
                r.annotations[k] = v.get<std::string>();
            }
        }
        r.keywords = get_string_array(j, "keywords", "");
        r.aliases = get_string_array(j, "aliases", "");
        r.first_annotated = get_date(j, "first_annotated", "");
        card.proteins.push_back(std::move(r));
        return card;
    }

    card.pair = PairKey(get_string(j, "a", ""), get_string(j, "b", ""));
    card.first_annotated = get_date(j, "first_annotated", "");

    Payload payload = empty_payload(source);
    switch (source) {
        case Source::IntAct: {
            IntactPayload p;
            p.interaction_type = get_string(j, "interaction_type", "");
            if (j.contains("miscore")) {
                expect_type(j.at("miscore"), "/miscore", json::value_t::number_float, "number");
                p.miscore = j.at("miscore").get<double>();
                if (p.miscore < 0.0 || p.miscore > 1.0)
                    throw SchemaError{"/miscore", "expected number in [0,1]"};
                p.has_miscore = true;
            }
            p.evidence_lines = get_count(j, "evidence_lines", "");
            if (j.contains("detection_methods")) {
                const json& arr = j.at("detection_methods");
                expect_type(arr, "/detection_methods", json::value_t::array, "array");
                for (std::size_t i = 0; i < arr.size(); ++i) {
                    const std::string ptr = "/detection_methods/" + std::to_string(i);
                    expect_type(arr[i], ptr, json::value_t::object, "object");
                    p.detection_methods.push_back({get_string(arr[i], "name", ptr),
                                                   get_bool(arr[i], "computational", ptr),
                                                   get_bool(arr[i], "spoke_expanded", ptr)});
                }
            }
            p.publications = get_string_array(j, "publications", "");
            p.binding_region_a = get_bool(j, "binding_region_a", "");
            p.binding_region_b = get_bool(j, "binding_region_b", "");
            p.interaction_annotations = get_string(j, "interaction_annotations", "");
            p.stoichiometry = get_bool(j, "stoichiometry", "");
            p.biophysical = get_string_array(j, "biophysical", "");
            p.biological_roles = get_string_array(j, "biological_roles", "");
            p.self_interaction = get_bool(j, "self_interaction", "");
            payload = std::move(p);
            break;
        }
        case Source::PubMed: {
            PubmedPayload p;
            p.publications = get_string_array(j, "publications", "");
            p.abstracts = get_string_array(j, "abstracts", "");
            payload = std::move(p);
            break;
        }
        case Source::ThreeDid: {
            ThreeDidPayload p;
            p.side_a = get_bool(j, "side_a", "");
            p.side_b = get_bool(j, "side_b", "");
            p.domain_pairs = get_string_array(j, "domain_pairs", "");
            p.interface_summary = get_string(j, "interface_summary", "");
            payload = std::move(p);
            break;
        }
        case Source::Pfam: {
            PfamPayload p;
            p.domain_pairs = get_string_array(j, "domain_pairs", "");
            payload = std::move(p);
            break;
        }
        case Source::STRING: {
            StringPayload p;
            p.combined_score = get_score1000(j, "combined_score", "");
            if (j.contains("actions")) {
                const json& arr = j.at("actions");
                expect_type(arr, "/actions", json::value_t::array, "array");
                for (std::size_t i = 0; i < arr.size(); ++i) {
                    const std::string ptr = "/actions/" + std::to_string(i);
                    expect_type(arr[i], ptr, json::value_t::object, "object");
                    p.actions.push_back(
                        {get_string(arr[i], "mode", ptr), get_score1000(arr[i], "score", ptr)});
                }
            }
            payload = std::move(p);
            break;
        }
        case Source::SIGNOR: {
            SignorPayload p;
            if (j.contains("entries")) {
                const json& arr = j.at("entries");
                expect_type(arr, "/entries", json::value_t::array, "array");
                for (std::size_t i = 0; i < arr.size(); ++i) {
                    const std::string ptr = "/entries/" + std::to_string(i);
                    expect_type(arr[i], ptr, json::value_t::object, "object");
                    p.entries.push_back({get_string(arr[i], "mechanism", ptr),
                                         get_string(arr[i], "causal_effect", ptr),
                                         get_bool(arr[i], "direct", ptr)});
                }
            }
            payload = std::move(p);
            break;
        }
        case Source::Reactome: {
            ReactomePayload p;
            p.shared_pathways = get_count(j, "shared_pathways", "");
            p.pathway_names = get_string_array(j, "pathway_names", "");
            payload = std::move(p);
            break;
        }
        case Source::CORUM:
        case Source::ComplexPortal: {
            ComplexPayload p;
            p.complex_names = get_string_array(j, "complex_names", "");
            payload = std::move(p);
            break;
        }
        case Source::UniProt: break;  // handled above
    }
    card.blocks.push_back({source, std::move(payload)});
    return card;
}

}  // namespace

ParseResult parse_generic_jsonl(const std::string& text, Source source) {
    ParseResult result;
    std::istringstream in(text);
    std::string line;
    long lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        ++result.total_lines;
        if (is_blank(line)) {
            ++result.skipped;
            continue;
        }
        json j = json::parse(line, nullptr, false);
        if (j.is_discarded() || !j.is_object()) {
            result.rejects.push_back({lineno, source_name(source), "not a JSON object"});
            continue;
        }
        try {
            result.cards.push_back(parse_jsonl_object(j, source));
        } catch (const SchemaError& e) {
            result.rejects.push_back({lineno, source_name(source), e.pointer + ": " + e.what});
        }
    }
    return result;
}

// -- merge ---------------------------------------------------------------------

namespace {

// Higher rank = stronger mapping evidence; used to pick between conflicting
// interaction-type strings.
int type_rank(const std::string& t) {
    if (contains_ci(t, "direct")) return 2;
    if (contains_ci(t, "physical association")) return 1;
    return t.empty() ? -1 : 0;
}

void merge_text_prefer_longer(std::string& into, const std::string& other) {
    if (other.size() > into.size() || (other.size() == into.size() && other < into)) {
        if (!other.empty()) into = other;
    }
}

void merge_payload(Payload& into, const Payload& other) {
    std::visit(
        [&](auto& a) {
            using T = std::decay_t<decltype(a)>;
            const T& b = std::get<T>(other);
            if constexpr (std::is_same_v<T, IntactPayload>) {
                int ra = type_rank(a.interaction_type), rb = type_rank(b.interaction_type);
                if (rb > ra || (rb == ra && !b.interaction_type.empty() &&
                                (a.interaction_type.empty() ||
                                 b.interaction_type < a.interaction_type)))
                    a.interaction_type = b.interaction_type;
                if (b.has_miscore && (!a.has_miscore || b.miscore > a.miscore)) {
                    a.miscore = b.miscore;
                    a.has_miscore = true;
                }
                a.evidence_lines += b.evidence_lines;
                a.detection_methods.insert(a.detection_methods.end(), b.detection_methods.begin(),
                                           b.detection_methods.end());
                std::sort(a.detection_methods.begin(), a.detection_methods.end(),
                          [](const DetectionMethod& x, const DetectionMethod& y) {
                              return std::tie(x.name, x.computational, x.spoke_expanded) <
                                     std::tie(y.name, y.computational, y.spoke_expanded);
                          });
                a.detection_methods.erase(
                    std::unique(a.detection_methods.begin(), a.detection_methods.end()),
                    a.detection_methods.end());
                a.publications.insert(a.publications.end(), b.publications.begin(),
                                      b.publications.end());
                sort_unique(a.publications);
                a.binding_region_a |= b.binding_region_a;
                a.binding_region_b |= b.binding_region_b;
                merge_text_prefer_longer(a.interaction_annotations, b.interaction_annotations);
                a.stoichiometry |= b.stoichiometry;
                a.biophysical.insert(a.biophysical.end(), b.biophysical.begin(),
                                     b.biophysical.end());
                sort_unique(a.biophysical);
                a.biological_roles.insert(a.biological_roles.end(), b.biological_roles.begin(),
                                          b.biological_roles.end());
                sort_unique(a.biological_roles);
                a.self_interaction |= b.self_interaction;
            } else if constexpr (std::is_same_v<T, PubmedPayload>) {
                a.publications.insert(a.publications.end(), b.publications.begin(),
                                      b.publications.end());
                sort_unique(a.publications);
                a.abstracts.insert(a.abstracts.end(), b.abstracts.begin(), b.abstracts.end());
                sort_unique(a.abstracts);
            } else if constexpr (std::is_same_v<T, ThreeDidPayload>) {
                a.side_a |= b.side_a;
                a.side_b |= b.side_b;
                a.domain_pairs.insert(a.domain_pairs.end(), b.domain_pairs.begin(),
                                      b.domain_pairs.end());
                sort_unique(a.domain_pairs);
                merge_text_prefer_longer(a.interface_summary, b.interface_summary);
            } else if constexpr (std::is_same_v<T, PfamPayload>) {
                a.domain_pairs.insert(a.domain_pairs.end(), b.domain_pairs.begin(),
                                      b.domain_pairs.end());
                sort_unique(a.domain_pairs);
            } else if constexpr (std::is_same_v<T, StringPayload>) {
                a.combined_score = std::max(a.combined_score, b.combined_score);
                a.actions.insert(a.actions.end(), b.actions.begin(), b.actions.end());
                std::sort(a.actions.begin(), a.actions.end(),
                          [](const StringActionEntry& x, const StringActionEntry& y) {
                              return std::tie(x.mode, x.score) < std::tie(y.mode, y.score);
                          });
                a.actions.erase(std::unique(a.actions.begin(), a.actions.end()), a.actions.end());
            } else if constexpr (std::is_same_v<T, SignorPayload>) {
                a.entries.insert(a.entries.end(), b.entries.begin(), b.entries.end());
                std::sort(a.entries.begin(), a.entries.end(),
                          [](const SignorEntry& x, const SignorEntry& y) {
                              return std::tie(x.mechanism, x.causal_effect, x.direct) <
                                     std::tie(y.mechanism, y.causal_effect, y.direct);
                          });
                a.entries.erase(std::unique(a.entries.begin(), a.entries.end()), a.entries.end());
            } else if constexpr (std::is_same_v<T, ReactomePayload>) {
                a.shared_pathways = std::max(a.shared_pathways, b.shared_pathways);
                a.pathway_names.insert(a.pathway_names.end(), b.pathway_names.begin(),
                                       b.pathway_names.end());
                sort_unique(a.pathway_names);
            } else if constexpr (std::is_same_v<T, ComplexPayload>) {
                a.complex_names.insert(a.complex_names.end(), b.complex_names.begin(),
                                       b.complex_names.end());
                sort_unique(a.complex_names);
            }
        },
        into);
}

void merge_protein(ProteinRecord& into, const ProteinRecord& other) {
    if (!other.sequence.empty()) {
        if (!into.sequence.empty() && into.sequence != other.sequence)
            throw std::runtime_error("conflicting sequences for accession " + into.accession);
        into.sequence = other.sequence;
    }
    for (const auto& [k, v] : other.annotations) {
        auto it = into.annotations.find(k);
        if (it == into.annotations.end()) {
            into.annotations[k] = v;
        } else {
            merge_text_prefer_longer(it->second, v);
        }
    }
    into.keywords.insert(into.keywords.end(), other.keywords.begin(), other.keywords.end());
    sort_unique(into.keywords);
    into.aliases.insert(into.aliases.end(), other.aliases.begin(), other.aliases.end());
    sort_unique(into.aliases);
    if (other.first_annotated &&
        (!into.first_annotated || *other.first_annotated < *into.first_annotated))
        into.first_annotated = other.first_annotated;
}

}  // namespace

std::vector<EvidenceCard> merge_cards(const std::vector<PartialCard>& partials) {
    std::map<std::string, ProteinRecord> proteins;
    // (source-indexed payload slots, earliest date) per pair
    struct Group {
        std::array<std::optional<Payload>, kSourceCount> slots;
        std::optional<Date> first_annotated;
    };
    std::map<PairKey, Group> groups;

    for (const auto& partial : partials) {
        for (const auto& rec : partial.proteins) {
            auto [it, fresh] = proteins.try_emplace(rec.accession, rec);
            if (!fresh) merge_protein(it->second, rec);
        }
        if (partial.blocks.empty() && !partial.first_annotated) continue;
        if (partial.blocks.empty() && partial.pair.a.empty() && partial.pair.b.empty()) continue;
        Group& g = groups[partial.pair];
        if (partial.first_annotated &&
            (!g.first_annotated || *partial.first_annotated < *g.first_annotated))
            g.first_annotated = partial.first_annotated;
        for (const auto& block : partial.blocks) {
            auto& slot = g.slots[static_cast<int>(block.source)];
            if (!slot) {
                slot = block.payload;
            } else {
                merge_payload(*slot, block.payload);
            }
        }
    }

    std::vector<EvidenceCard> cards;
    cards.reserve(groups.size());
    for (auto& [pair, group] : groups) {
        EvidenceCard card;
        card.pair = pair;
        card.first_annotated = group.first_annotated;
        for (int s = 0; s < kSourceCount; ++s) {
            if (group.slots[s])
                card.blocks.push_back({static_cast<Source>(s), std::move(*group.slots[s])});
        }
        auto lookup = [&](const std::string& acc) {
            auto it = proteins.find(acc);
            if (it != proteins.end()) return it->second;
            ProteinRecord r;
            r.accession = acc;
            return r;
        };
        card.proteins.first = lookup(pair.a);
        card.proteins.second = lookup(pair.b);
        for (const auto& k : card.proteins.first.keywords) card.keywords.insert(k);
        for (const auto& k : card.proteins.second.keywords) card.keywords.insert(k);
        cards.push_back(std::move(card));
    }
    return cards;  // std::map iteration -> already sorted by PairKey
}

std::vector<PartialCard> cards_as_partials(const std::vector<EvidenceCard>& cards) {
    std::vector<PartialCard> out;
    out.reserve(cards.size());
    for (const auto& c : cards) {
        PartialCard p;
        p.pair = c.pair;
        p.first_annotated = c.first_annotated;
        p.blocks = c.blocks;
        if (!c.proteins.first.accession.empty()) p.proteins.push_back(c.proteins.first);
        if (!c.proteins.second.accession.empty() && c.pair.b != c.pair.a)
            p.proteins.push_back(c.proteins.second);
        out.push_back(std::move(p));
    }
    return out;
}

std::string dump_rejects_jsonl(const std::vector<Reject>& rejects) {
    std::string out;
    for (const auto& r : rejects) {
        json j;
        j["line"] = r.line;
        j["source"] = r.source;
        j["reason"] = r.reason;
        out += j.dump();
        out += '\n';
    }
    return out;
}

}  // namespace ppikit::ingest
