#pragma once

// Independent re-statement of the evidence-score rule table as data: a flat
// list of (axis, weight, trigger) rows walked by a four-line interpreter.
// Deliberately shares no helper code with the production scorer so the two
// implementations can cross-check each other. Keep this header free of
// ppikit::scoring includes.

#include <algorithm>
#include <cstddef>
#include <functional>
#include <set>
#include <string>
#include <vector>

#include "ppikit/core.hpp"

namespace oracle {

enum class Axis { map, mech, lit, src, ctx };

struct Rule {
    Axis axis;
    double weight;
    std::function<bool(const ppikit::EvidenceCard&)> fires;
};

struct Score {
    double e_map = 0.0;
    double e_mech = 0.0;
    double e_lit = 0.0;
    double e_src = 0.0;
    double e_ctx = 0.0;
    double e_int = 0.0;
    double total = 0.0;
    bool gated = false;
};

namespace detail {

inline std::string lower(std::string s) {
    std::transform(s.begin(), s.end(), s.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return s;
}

inline bool icontains(const std::string& hay, const std::string& needle) {
    if (needle.empty()) return true;
    return lower(hay).find(lower(needle)) != std::string::npos;
}

inline std::string anno(const ppikit::ProteinRecord& p, const std::string& key) {
    auto it = p.annotations.find(key);
    return it == p.annotations.end() ? std::string() : it->second;
}

inline std::set<std::string> terms(const ppikit::ProteinRecord& p, const std::string& key) {
    std::set<std::string> out;
    std::string cur;
    for (char ch : anno(p, key) + ";") {
        if (ch == ';') {
            std::size_t b = cur.find_first_not_of(" \t");
            std::size_t e = cur.find_last_not_of(" \t");
            if (b != std::string::npos) out.insert(lower(cur.substr(b, e - b + 1)));
            cur.clear();
        } else {
            cur += ch;
        }
    }
    return out;
}

inline bool share(const ppikit::EvidenceCard& c, const std::string& key) {
    std::set<std::string> a = terms(c.proteins.first, key);
    std::set<std::string> b = terms(c.proteins.second, key);
    for (const auto& t : a)
        if (b.count(t)) return true;
    return false;
}

inline std::size_t distinct_pubs(const ppikit::EvidenceCard& c) {
    std::set<std::string> pubs;
    if (const auto* p = c.intact())
        for (const auto& x : p->publications) pubs.insert(x);
    if (const auto* p = c.pubmed())
        for (const auto& x : p->publications) pubs.insert(x);
    return pubs.size();
}

inline std::size_t abstract_chars(const ppikit::EvidenceCard& c) {
    std::size_t n = 0;
    if (const auto* p = c.pubmed())
        for (const auto& a : p->abstracts) n += a.size();
    return n;
}

inline long pathways(const ppikit::EvidenceCard& c) {
    const auto* r = c.reactome();
    if (!r) return 0;
    return std::max<long>(r->shared_pathways, static_cast<long>(r->pathway_names.size()));
}

inline bool experimental_detection(const ppikit::EvidenceCard& c) {
    const auto* p = c.intact();
    if (!p) return false;
    for (const auto& m : p->detection_methods)
        if (!m.computational) return true;
    return false;
}

inline bool nonspoke_detection(const ppikit::EvidenceCard& c) {
    const auto* p = c.intact();
    if (!p) return false;
    for (const auto& m : p->detection_methods)
        if (!m.computational && !m.spoke_expanded) return true;
    return false;
}

inline bool enzymatic(const ppikit::EvidenceCard& c) {
    static const std::vector<std::string> stems{"phospho", "ubiq", "cleav", "acetyl", "methyl"};
    std::vector<std::string> texts;
    if (const auto* p = c.intact()) {
        texts.push_back(p->interaction_type);
        texts.push_back(p->interaction_annotations);
    }
    if (const auto* s = c.signor())
        for (const auto& e : s->entries) texts.push_back(e.mechanism);
    for (const auto& t : texts) {
        if (t.empty()) continue;
        for (const auto& stem : stems)
            if (icontains(t, stem)) return true;
    }
    return false;
}

inline bool subunit_names_partner(const ppikit::EvidenceCard& c) {
    auto hit = [](const ppikit::ProteinRecord& side, const ppikit::ProteinRecord& other) {
        std::string text = anno(side, "subunit");
        if (text.empty()) return false;
        if (!other.accession.empty() && icontains(text, other.accession)) return true;
        for (const auto& alias : other.aliases)
            if (alias.size() >= 2 && icontains(text, alias)) return true;
        return false;
    };
    return hit(c.proteins.first, c.proteins.second) || hit(c.proteins.second, c.proteins.first);
}

inline std::size_t method_families(const ppikit::EvidenceCard& c) {
    std::set<std::string> fams;
    if (const auto* p = c.intact())
        for (const auto& m : p->detection_methods)
            if (!m.computational) fams.insert(m.name);
    return fams.size();
}

inline bool has_complex(const ppikit::EvidenceCard& c, ppikit::Source s) {
    const auto* p = c.payload<ppikit::ComplexPayload>(s);
    return p && !p->complex_names.empty();
}

}  // namespace detail

// The rule table, one row per trigger from the evidence-score formula.
inline const std::vector<Rule>& rule_table() {
    using ppikit::EvidenceCard;
    using ppikit::Source;
    namespace d = detail;
    static const std::vector<Rule> table = [] {
        std::vector<Rule> t;
        auto add = [&t](Axis axis, double w, std::function<bool(const EvidenceCard&)> f) {
            t.push_back({axis, w, std::move(f)});
        };

        // E_map: interaction type, interface mapping, named-complex grounding.
        add(Axis::map, 2.0, [](const EvidenceCard& c) {
            const auto* p = c.intact();
            return p && d::icontains(p->interaction_type, "direct");
        });
        add(Axis::map, 1.0, [](const EvidenceCard& c) {
            const auto* p = c.intact();
            return p && !d::icontains(p->interaction_type, "direct") &&
                   d::icontains(p->interaction_type, "physical association");
        });
        add(Axis::map, 2.0, [](const EvidenceCard& c) {
            const auto* p = c.intact();
            return p && p->binding_region_a && p->binding_region_b;
        });
        add(Axis::map, 1.0, [](const EvidenceCard& c) {
            const auto* p = c.intact();
            return p && (p->binding_region_a != p->binding_region_b);
        });
        add(Axis::map, 2.0, [](const EvidenceCard& c) {
            const auto* t3 = c.threedid();
            return t3 && t3->side_a && t3->side_b;
        });
        add(Axis::map, 1.0, [](const EvidenceCard& c) {
            const auto* t3 = c.threedid();
            return t3 && (t3->side_a != t3->side_b);
        });
        add(Axis::map, 2.0, [](const EvidenceCard& c) {
            return d::has_complex(c, Source::CORUM) || d::has_complex(c, Source::ComplexPortal);
        });
        add(Axis::map, 1.0, [](const EvidenceCard& c) { return d::subunit_names_partner(c); });

        // E_mech: mechanistic detail.
        add(Axis::mech, 1.0, [](const EvidenceCard& c) { return d::enzymatic(c); });
        add(Axis::mech, 1.0, [](const EvidenceCard& c) {
            const auto* s = c.string_db();
            return s && !s->actions.empty();
        });
        add(Axis::mech, 0.5, [](const EvidenceCard& c) {
            const auto* s = c.string_db();
            if (!s) return false;
            for (const auto& a : s->actions)
                if (a.score >= 700) return true;
            return false;
        });
        add(Axis::mech, 1.0, [](const EvidenceCard& c) {
            const auto* p = c.intact();
            return p && !p->biophysical.empty();
        });
        add(Axis::mech, 0.5, [](const EvidenceCard& c) {
            const auto* p = c.intact();
            return p && p->stoichiometry;
        });
        add(Axis::mech, 0.5, [](const EvidenceCard& c) {
            const auto* p = c.intact();
            if (!p) return false;
            for (const auto& r : p->biological_roles)
                if (r != "unspecified role") return true;
            return false;
        });
        add(Axis::mech, 0.5, [](const EvidenceCard& c) {
            const auto* p = c.intact();
            bool self_pair = !c.pair.a.empty() && c.pair.a == c.pair.b;
            return (p && p->self_interaction) || self_pair;
        });

        // E_lit: literature and experimental redundancy.
        add(Axis::lit, 1.0, [](const EvidenceCard& c) { return d::distinct_pubs(c) >= 2; });
        add(Axis::lit, 1.0, [](const EvidenceCard& c) { return d::distinct_pubs(c) >= 5; });
        add(Axis::lit, 1.0, [](const EvidenceCard& c) { return d::method_families(c) >= 2; });
        for (double threshold : {0.45, 0.56, 0.65})
            add(Axis::lit, 0.5, [threshold](const EvidenceCard& c) {
                const auto* p = c.intact();
                return p && p->has_miscore && p->miscore >= threshold;
            });
        add(Axis::lit, 0.5, [](const EvidenceCard& c) {
            const auto* p = c.intact();
            return p && p->evidence_lines >= 5;
        });
        for (std::size_t threshold : {std::size_t{1500}, std::size_t{3000}, std::size_t{5000}})
            add(Axis::lit, 1.0, [threshold](const EvidenceCard& c) {
                return c.pubmed() && d::abstract_chars(c) >= threshold;
            });
        add(Axis::lit, 0.5, [](const EvidenceCard& c) {
            const auto* p = c.intact();
            return p && p->interaction_annotations.size() >= 250;
        });
        add(Axis::lit, 1.0, [](const EvidenceCard& c) { return d::experimental_detection(c); });
        add(Axis::lit, 0.5, [](const EvidenceCard& c) { return d::nonspoke_detection(c); });
        for (long threshold : {1L, 3L})
            add(Axis::lit, 0.5, [threshold](const EvidenceCard& c) {
                return c.reactome() && d::pathways(c) >= threshold;
            });
        for (int threshold : {400, 700})
            add(Axis::lit, 0.25, [threshold](const EvidenceCard& c) {
                const auto* s = c.string_db();
                return s && s->combined_score >= threshold;
            });

        // E_src: curator-graded complex / mechanism sources.
        add(Axis::src, 2.0, [](const EvidenceCard& c) {
            const auto* s = c.signor();
            return s && !s->entries.empty();
        });
        add(Axis::src, 1.0, [](const EvidenceCard& c) {
            const auto* s = c.signor();
            if (!s) return false;
            for (const auto& e : s->entries)
                if (e.direct) return true;
            return false;
        });
        add(Axis::src, 2.0, [](const EvidenceCard& c) { return d::has_complex(c, Source::CORUM); });
        add(Axis::src, 2.0,
            [](const EvidenceCard& c) { return d::has_complex(c, Source::ComplexPortal); });
        add(Axis::src, 1.0, [](const EvidenceCard& c) {
            return d::has_complex(c, Source::CORUM) && d::has_complex(c, Source::ComplexPortal);
        });

        // E_ctx: contextual biological coherence (capped by the evaluator).
        for (const char* field : {"function", "domains", "similarity"})
            add(Axis::ctx, 0.25, [field](const EvidenceCard& c) {
                return !d::anno(c.proteins.first, field).empty() &&
                       !d::anno(c.proteins.second, field).empty();
            });
        add(Axis::ctx, 0.5, [](const EvidenceCard& c) { return d::share(c, "subcellular"); });
        for (const char* field : {"go_component", "go_process", "go_function"})
            add(Axis::ctx, 0.25, [field](const EvidenceCard& c) { return d::share(c, field); });
        for (const char* field : {"tissue", "catalytic_activity", "ptm", "modified_residues",
                                  "regulation", "sites", "motifs", "zinc_fingers", "free_text"})
            add(Axis::ctx, 0.25, [field](const EvidenceCard& c) {
                return !d::anno(c.proteins.first, field).empty() ||
                       !d::anno(c.proteins.second, field).empty();
            });
        add(Axis::ctx, 0.5, [](const EvidenceCard& c) {
            return !d::anno(c.proteins.first, "disease").empty() ||
                   !d::anno(c.proteins.second, "disease").empty();
        });
        add(Axis::ctx, 0.25, [](const EvidenceCard& c) {
            return !d::anno(c.proteins.first, "disease").empty() &&
                   !d::anno(c.proteins.second, "disease").empty();
        });
        return t;
    }();
    return table;
}

inline Score score(const ppikit::EvidenceCard& card) {
    Score s;
    for (const Rule& rule : rule_table()) {
        if (!rule.fires(card)) continue;
        switch (rule.axis) {
            case Axis::map: s.e_map += rule.weight; break;
            case Axis::mech: s.e_mech += rule.weight; break;
            case Axis::lit: s.e_lit += rule.weight; break;
            case Axis::src: s.e_src += rule.weight; break;
            case Axis::ctx: s.e_ctx += rule.weight; break;
        }
    }
    s.e_ctx = std::min(s.e_ctx, 4.0);
    s.e_int = s.e_map + s.e_mech + s.e_lit + s.e_src;
    if (detail::experimental_detection(card)) {
        s.total = s.e_int + s.e_ctx;
    } else {
        s.total = std::min(s.e_int + s.e_ctx, 5.0);
        s.gated = true;
    }
    return s;
}

}  // namespace oracle
