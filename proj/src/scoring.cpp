#include "ppikit/scoring.hpp"

#include <algorithm>
#include <set>

namespace ppikit::scoring {

namespace {

void fire(ComponentScore& c, const char* rule, double weight) {
    c.value += weight;
    c.trace.push_back({rule, weight});
}

void fire(ComponentScore& c, const std::string& rule, double weight) {
    c.value += weight;
    c.trace.push_back({rule, weight});
}

std::string annotation(const ProteinRecord& p, const std::string& key) {
    auto it = p.annotations.find(key);
    return it == p.annotations.end() ? std::string() : it->second;
}

std::set<std::string> term_set(const ProteinRecord& p, const std::string& key) {
    std::set<std::string> out;
    for (const auto& term : split(annotation(p, key), ';')) {
        std::string t = trim(term);
        if (!t.empty()) out.insert(to_lower(t));
    }
    return out;
}

bool shares_term(const EvidenceCard& card, const std::string& key) {
    auto a = term_set(card.proteins.first, key);
    if (a.empty()) return false;
    for (const auto& t : term_set(card.proteins.second, key))
        if (a.count(t)) return true;
    return false;
}

// Distinct publication identifiers across the IntAct and PubMed blocks.
std::size_t publication_count(const EvidenceCard& card) {
    std::set<std::string> pubs;
    if (const auto* p = card.intact()) pubs.insert(p->publications.begin(), p->publications.end());
    if (const auto* p = card.pubmed()) pubs.insert(p->publications.begin(), p->publications.end());
    return pubs.size();
}

}  // namespace

bool has_experimental_detection(const EvidenceCard& card) {
    const auto* p = card.intact();
    if (!p) return false;
    return std::any_of(p->detection_methods.begin(), p->detection_methods.end(),
                       [](const DetectionMethod& m) { return !m.computational; });
}

bool enzymatic_signal(const EvidenceCard& card, const ScoringConfig& cfg) {
    // Deliberately scoped to interaction-level text (type label, curator
    // annotations, causal entries), not per-protein function text: a kinase
    // partner alone does not make THIS pair enzymatic.
    std::vector<std::string> haystacks;
    if (const auto* p = card.intact()) {
        haystacks.push_back(p->interaction_type);
        haystacks.push_back(p->interaction_annotations);
    }
    if (const auto* s = card.signor())
        for (const auto& e : s->entries) haystacks.push_back(e.mechanism);
    for (const auto& h : haystacks)
        for (const auto& stem : cfg.enzymatic_stems)
            if (!h.empty() && contains_ci(h, stem)) return true;
    return false;
}

bool subunit_mentions_partner(const EvidenceCard& card) {
    auto mentions = [](const ProteinRecord& side, const ProteinRecord& partner) {
        auto it = side.annotations.find("subunit");
        if (it == side.annotations.end() || it->second.empty()) return false;
        if (!partner.accession.empty() && contains_ci(it->second, partner.accession)) return true;
        for (const auto& alias : partner.aliases)
            if (alias.size() >= 2 && contains_ci(it->second, alias)) return true;
        return false;
    };
    return mentions(card.proteins.first, card.proteins.second) ||
           mentions(card.proteins.second, card.proteins.first);
}

ComponentScore score_map(const EvidenceCard& card, const ScoringConfig&) {
    ComponentScore c;
    if (const auto* p = card.intact()) {
        if (contains_ci(p->interaction_type, "direct")) {
            fire(c, "map.type.direct", 2.0);
        } else if (contains_ci(p->interaction_type, "physical association")) {
            fire(c, "map.type.physical_association", 1.0);
        }
        if (p->binding_region_a && p->binding_region_b) {
            fire(c, "map.binding_regions.both", 2.0);
        } else if (p->binding_region_a || p->binding_region_b) {
            fire(c, "map.binding_regions.one", 1.0);
        }
    }
    if (const auto* t = card.threedid()) {
        if (t->side_a && t->side_b) {
            fire(c, "map.3did.both", 2.0);
        } else if (t->side_a || t->side_b) {
            fire(c, "map.3did.one", 1.0);
        }
    }
    bool named_complex = (card.corum() && !card.corum()->complex_names.empty()) ||
                         (card.complexportal() && !card.complexportal()->complex_names.empty());
    if (named_complex) fire(c, "map.named_complex", 2.0);
    if (subunit_mentions_partner(card)) fire(c, "map.subunit_mentions_partner", 1.0);
    return c;
}

ComponentScore score_mech(const EvidenceCard& card, const ScoringConfig& cfg) {
    ComponentScore c;
    if (enzymatic_signal(card, cfg)) fire(c, "mech.enzymatic", 1.0);
    if (const auto* s = card.string_db()) {
        if (!s->actions.empty()) {
            fire(c, "mech.string_modes", 1.0);
            if (std::any_of(s->actions.begin(), s->actions.end(),
                            [](const StringActionEntry& a) { return a.score >= 700; }))
                fire(c, "mech.string_modes.strong", 0.5);
        }
    }
    if (const auto* p = card.intact()) {
        if (!p->biophysical.empty()) fire(c, "mech.biophysical", 1.0);
        if (p->stoichiometry) fire(c, "mech.stoichiometry", 0.5);
        bool nondefault_role =
            std::any_of(p->biological_roles.begin(), p->biological_roles.end(),
                        [](const std::string& r) { return r != "unspecified role"; });
        if (nondefault_role) fire(c, "mech.biological_roles", 0.5);
        if (p->self_interaction || (!card.pair.a.empty() && card.pair.a == card.pair.b))
            fire(c, "mech.self_interaction", 0.5);
    } else if (!card.pair.a.empty() && card.pair.a == card.pair.b) {
        fire(c, "mech.self_interaction", 0.5);
    }
    return c;
}

ComponentScore score_lit(const EvidenceCard& card, const ScoringConfig& cfg) {
    ComponentScore c;
    // Threshold-crossing semantics: +w for every threshold the value meets or
    // exceeds (inclusive).
    std::size_t pubs = publication_count(card);
    if (pubs >= 2) fire(c, "lit.publications.2", 1.0);
    if (pubs >= 5) fire(c, "lit.publications.5", 1.0);

    if (const auto* p = card.intact()) {
        std::set<std::string> families;
        for (const auto& m : p->detection_methods)
            if (!m.computational) families.insert(m.name);
        if (families.size() >= 2) fire(c, "lit.method_families.2", 1.0);

        if (p->has_miscore) {
            if (p->miscore >= 0.45) fire(c, "lit.miscore.0.45", 0.5);
            if (p->miscore >= 0.56) fire(c, "lit.miscore.0.56", 0.5);
            if (p->miscore >= 0.65) fire(c, "lit.miscore.0.65", 0.5);
        }
        if (p->evidence_lines >= 5) fire(c, "lit.evidence_lines.5", 0.5);
        if (p->interaction_annotations.size() >= 250) fire(c, "lit.annotations.250", 0.5);

        bool experimental = false, nonspoke = false;
        for (const auto& m : p->detection_methods) {
            if (m.computational) continue;
            experimental = true;
            if (!m.spoke_expanded) nonspoke = true;
        }
        if (experimental) fire(c, "lit.detection.experimental", 1.0);
        if (nonspoke) fire(c, "lit.detection.not_spoke", 0.5);
    }

    if (const auto* p = card.pubmed()) {
        std::size_t len = 0;
        if (cfg.abstract_length_summed) {
            for (const auto& a : p->abstracts) len += a.size();
        } else {
            for (const auto& a : p->abstracts) len = std::max(len, a.size());
        }
        if (len >= 1500) fire(c, "lit.abstract.1500", 1.0);
        if (len >= 3000) fire(c, "lit.abstract.3000", 1.0);
        if (len >= 5000) fire(c, "lit.abstract.5000", 1.0);
    }

    if (const auto* r = card.reactome()) {
        long shared = std::max<long>(r->shared_pathways,
                                     static_cast<long>(r->pathway_names.size()));
        if (shared >= 1) fire(c, "lit.pathways.1", 0.5);
        if (shared >= 3) fire(c, "lit.pathways.3", 0.5);
    }

    if (const auto* s = card.string_db()) {
        if (s->combined_score >= 400) fire(c, "lit.string.400", 0.25);
        if (s->combined_score >= 700) fire(c, "lit.string.700", 0.25);
    }
    return c;
}

ComponentScore score_src(const EvidenceCard& card, const ScoringConfig&) {
    ComponentScore c;
    bool corum = card.corum() && !card.corum()->complex_names.empty();
    bool portal = card.complexportal() && !card.complexportal()->complex_names.empty();
    if (const auto* s = card.signor(); s && !s->entries.empty()) {
        fire(c, "src.signor", 2.0);
        if (std::any_of(s->entries.begin(), s->entries.end(),
                        [](const SignorEntry& e) { return e.direct; }))
            fire(c, "src.signor.direct", 1.0);
    }
    if (corum) fire(c, "src.corum", 2.0);
    if (portal) fire(c, "src.complexportal", 2.0);
    if (corum && portal) fire(c, "src.cross_validated", 1.0);
    return c;
}

ComponentScore score_ctx(const EvidenceCard& card, const ScoringConfig& cfg) {
    ComponentScore c;
    const ProteinRecord& a = card.proteins.first;
    const ProteinRecord& b = card.proteins.second;

    for (const auto& field : cfg.paired_fields) {
        if (!annotation(a, field).empty() && !annotation(b, field).empty())
            fire(c, "ctx.paired." + field, 0.25);
    }
    if (shares_term(card, "subcellular")) fire(c, "ctx.subcellular", 0.5);
    if (shares_term(card, "go_component")) fire(c, "ctx.go.component", 0.25);
    if (shares_term(card, "go_process")) fire(c, "ctx.go.process", 0.25);
    if (shares_term(card, "go_function")) fire(c, "ctx.go.function", 0.25);
    for (const auto& field : cfg.either_side_fields) {
        if (!annotation(a, field).empty() || !annotation(b, field).empty())
            fire(c, "ctx.either." + field, 0.25);
    }
    bool disease_a = !annotation(a, "disease").empty();
    bool disease_b = !annotation(b, "disease").empty();
    if (disease_a || disease_b) fire(c, "ctx.disease.either", 0.5);
    if (disease_a && disease_b) fire(c, "ctx.disease.both", 0.25);

    if (c.value > 4.0) {
        // Negative adjustment entry keeps the trace-sum == component invariant.
        fire(c, "ctx.cap", 4.0 - c.value);
    }
    return c;
}

EvidenceScore score(const EvidenceCard& card, const ScoringConfig& cfg) {
    EvidenceScore s;
    ComponentScore map = score_map(card, cfg);
    ComponentScore mech = score_mech(card, cfg);
    ComponentScore lit = score_lit(card, cfg);
    ComponentScore src = score_src(card, cfg);
    ComponentScore ctx = score_ctx(card, cfg);
    s.e_map = map.value;
    s.e_mech = mech.value;
    s.e_lit = lit.value;
    s.e_src = src.value;
    s.e_ctx = ctx.value;
    s.e_int = s.e_map + s.e_mech + s.e_lit + s.e_src;
    if (!has_experimental_detection(card)) {
        s.total = std::min(s.e_int + s.e_ctx, 5.0);
        s.gated = true;
    } else {
        s.total = s.e_int + s.e_ctx;
    }
    for (auto* comp : {&map, &mech, &lit, &src, &ctx})
        s.trace.insert(s.trace.end(), comp->trace.begin(), comp->trace.end());
    return s;
}

json to_json(const EvidenceScore& s, bool with_trace) {
    json j;
    j["components"] = {{"e_map", s.e_map}, {"e_mech", s.e_mech}, {"e_lit", s.e_lit},
                       {"e_src", s.e_src}, {"e_ctx", s.e_ctx},   {"e_int", s.e_int}};
    j["total"] = s.total;
    j["gated"] = s.gated;
    if (with_trace) {
        json trace = json::array();
        for (const auto& t : s.trace) trace.push_back({{"rule", t.rule}, {"weight", t.weight}});
        j["trace"] = std::move(trace);
    }
    return j;
}

std::string dump_scores_jsonl(const std::vector<PairKey>& pairs,
                              const std::vector<EvidenceScore>& scores, bool with_trace) {
    if (pairs.size() != scores.size())
        throw std::invalid_argument("dump_scores_jsonl: pairs/scores size mismatch");
    std::string out;
    for (std::size_t i = 0; i < pairs.size(); ++i) {
        json j = to_json(scores[i], with_trace);
        j["pair"] = pairs[i].to_string();
        out += j.dump();
        out += '\n';
    }
    return out;
}

}  // namespace ppikit::scoring
