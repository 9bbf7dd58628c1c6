#include "ppikit/corpusgen.hpp"

#include <algorithm>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "ppikit/ingest.hpp"

namespace ppikit::corpusgen {

using nlohmann::json;

namespace {

constexpr const char* kAlphabet = "ACDEFGHIKLMNPQRSTVWY";

const std::vector<std::string> kKeywords = {
    "kinase",     "phosphatase", "transcription", "membrane",      "signaling",
    "ubiquitin",  "chaperone",   "receptor",      "transport",     "nuclear",
    "metabolism", "immune",      "rna-binding",   "structural",    "mitochondrial"};

const std::vector<std::string> kGoComponent = {"nucleus", "cytosol", "plasma membrane",
                                               "mitochondrion", "nucleolus"};
const std::vector<std::string> kGoProcess = {"transcription regulation", "signal transduction",
                                             "protein transport", "cell cycle", "rna processing"};
const std::vector<std::string> kGoFunction = {"atp binding", "dna binding", "kinase activity",
                                              "structural molecule", "metal ion binding"};
const std::vector<std::string> kSubcell = {"Nucleus", "Cytoplasm", "Membrane", "Mitochondrion"};
const std::vector<std::string> kTissue = {"ubiquitous", "brain", "liver", "testis"};

const std::vector<std::string> kComplexNames = {
    "Septin ring module",    "Exocyst tether",        "Clamp loader",
    "Decapping module",      "Outer kinetochore plate", "Lid subcomplex",
    "Anaphase trigger",      "Import receptor cargo", "Polarity scaffold",
    "Stress granule seed",   "Gamma tubulin ring",    "Retromer sorting core"};

const std::vector<std::string> kExperimentalMethods = {
    "pull down",
    "tandem affinity purification",
    "two hybrid",
    "x-ray crystallography",
    "isothermal titration calorimetry",
    "fluorescence microscopy",
    "surface plasmon resonance",
    "cross-linking study"};

const std::vector<std::string> kActionModes = {"binding", "catalysis", "reaction",
                                               "activation", "inhibition", "ptmod"};

const std::vector<std::string> kFunctionSentences = {
    "Core component of a multiprotein assembly required for normal progression of the cell cycle.",
    "Acts as a scaffold that recruits downstream effectors to sites of active signaling.",
    "Regulates the stability of its binding partners under stress conditions.",
    "Participates in vesicle tethering at the donor compartment.",
    "Modulates chromatin accessibility at a subset of developmental promoters.",
    "Required for the fidelity of chromosome segregation during anaphase.",
    "Couples nutrient availability to the translational output of the cell.",
    "Controls the nucleation of branched filament networks at the cell cortex."};

const std::vector<std::string> kAbstractSentences = {
    "Here we characterize a conserved assembly implicated in cellular homeostasis.",
    "Quantitative proteomics identified a stable stoichiometric association between the two factors.",
    "Structural analysis reveals an extended interface burying a hydrophobic surface patch.",
    "Mutational disruption of the interface abolishes co-purification from cell extracts.",
    "The interaction is conserved from yeast to human and is essential for viability.",
    "Binding affinity measured in vitro falls in the low micromolar range.",
    "Depletion of either factor destabilizes the other, consistent with an obligate module.",
    "These findings suggest a regulatory checkpoint acting on complex assembly."};

template <typename T>
const T& pick(Rng& rng, const std::vector<T>& pool) {
    return pool[static_cast<std::size_t>(rng.next_below(pool.size()))];
}

bool chance(Rng& rng, double p) { return rng.next_double() < p; }

// Distinct samples (without replacement) from pool indices.
std::vector<std::string> sample(Rng& rng, const std::vector<std::string>& pool, std::size_t n) {
    std::vector<std::size_t> idx(pool.size());
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    rng.shuffle(idx);
    n = std::min(n, pool.size());
    std::vector<std::string> out;
    for (std::size_t i = 0; i < n; ++i) out.push_back(pool[idx[i]]);
    std::sort(out.begin(), out.end());
    return out;
}

std::string sentences(Rng& rng, const std::vector<std::string>& pool, std::size_t n) {
    std::string out;
    for (std::size_t i = 0; i < n; ++i) {
        if (i) out += ' ';
        out += pick(rng, pool);
    }
    return out;
}

std::string pubmed_id(Rng& rng) {
    return "pubmed:" + std::to_string(10000000 + rng.next_below(80000000));
}

Date random_date(Rng& rng, int y0, int y1) {
    int year = y0 + static_cast<int>(rng.next_below(static_cast<std::uint64_t>(y1 - y0 + 1)));
    int month = 1 + static_cast<int>(rng.next_below(12));
    int day = 1 + static_cast<int>(rng.next_below(28));
    return Date{year, month, day};
}

enum class Richness { bare, medium, rich };

}  // namespace

std::string random_sequence(Rng& rng, std::size_t length) {
    std::string s(length, 'A');
    for (auto& c : s) c = kAlphabet[rng.next_below(20)];
    return s;
}

std::string mutate_sequence(Rng& rng, const std::string& base, double rate) {
    std::string s = base;
    for (auto& c : s)
        if (rng.next_double() < rate) c = kAlphabet[rng.next_below(20)];
    return s;
}

GeneratedCorpus generate_files(const CorpusSpec& spec) {
    Rng rng(spec.seed);
    const std::size_t n_proteins = std::max<std::size_t>(24, spec.n_pairs * 2 / 3);
    const std::size_t n_families = std::max<std::size_t>(6, n_proteins / 12);

    struct Protein {
        std::string accession;
        std::string alias;
        std::string sequence;
        Richness richness = Richness::bare;
        std::map<std::string, std::string> annotations;
        std::vector<std::string> keywords;
    };

    std::vector<std::string> family_base(n_families);
    std::vector<Protein> proteins(n_proteins);
    for (std::size_t i = 0; i < n_proteins; ++i) {
        Protein& p = proteins[i];
        p.accession = "P" + std::to_string(10000 + i);
        p.alias = "GV" + std::to_string(100 + i);
        if (chance(rng, 0.25)) {
            p.sequence = random_sequence(rng, 100 + rng.next_below(400));
        } else {
            std::size_t fam = rng.next_below(n_families);
            if (family_base[fam].empty())
                family_base[fam] = random_sequence(rng, 120 + rng.next_below(360));
            p.sequence = mutate_sequence(rng, family_base[fam], 0.03);
        }
        const double r = rng.next_double();
        p.richness = r < 0.25 ? Richness::bare : r < 0.70 ? Richness::medium : Richness::rich;
        switch (p.richness) {
            case Richness::rich:
                p.annotations["function"] = sentences(rng, kFunctionSentences, 2 + rng.next_below(2));
                p.annotations["domains"] = "Contains an N-terminal coiled coil and a C-terminal beta propeller.";
                p.annotations["similarity"] = "Belongs to a deeply conserved eukaryotic family.";
                p.annotations["subcellular_location"] = pick(rng, kSubcell);
                p.annotations["go_component"] = pick(rng, kGoComponent);
                p.annotations["go_process"] = pick(rng, kGoProcess);
                p.annotations["go_function"] = pick(rng, kGoFunction);
                if (chance(rng, 0.5)) p.annotations["tissue"] = pick(rng, kTissue);
                if (chance(rng, 0.3))
                    p.annotations["catalytic_activity"] = "Transfers a gamma phosphate to protein substrates.";
                if (chance(rng, 0.3)) p.annotations["ptm"] = "Modified in response to stress.";
                if (chance(rng, 0.2)) p.annotations["disease"] = "Variants associated with a recessive disorder.";
                p.keywords = sample(rng, kKeywords, 2 + rng.next_below(3));
                break;
            case Richness::medium:
                p.annotations["function"] = sentences(rng, kFunctionSentences, 1);
                if (chance(rng, 0.5)) p.annotations["go_process"] = pick(rng, kGoProcess);
                if (chance(rng, 0.4)) p.annotations["subcellular_location"] = pick(rng, kSubcell);
                if (chance(rng, 0.3)) p.annotations["domains"] = "Single PDZ domain protein.";
                p.keywords = sample(rng, kKeywords, 1 + rng.next_below(3));
                break;
            case Richness::bare:
                if (chance(rng, 0.3)) p.annotations["go_component"] = pick(rng, kGoComponent);
                if (chance(rng, 0.4)) p.keywords = sample(rng, kKeywords, 1 + rng.next_below(2));
                break;
        }
    }

    // distinct unordered pairs
    std::set<std::pair<std::size_t, std::size_t>> seen;
    struct PairPlan {
        std::size_t a, b;
        int cls;  // 0 sparse, 1 supported, 2 deep
        Date date;
    };
    std::vector<PairPlan> plans;
    while (plans.size() < spec.n_pairs) {
        std::size_t a = rng.next_below(n_proteins), b = rng.next_below(n_proteins);
        if (a == b) continue;
        if (a > b) std::swap(a, b);
        if (!seen.insert({a, b}).second) continue;
        const double u = rng.next_double();
        PairPlan plan{a, b, u < 0.40 ? 0 : u < 0.75 ? 1 : 2, {}};
        if (chance(rng, spec.recent_fraction)) {
            plan.date = random_date(rng, spec.cutoff.year, spec.cutoff.year + 1);
            while (!(spec.cutoff < plan.date)) plan.date = random_date(rng, spec.cutoff.year, spec.cutoff.year + 1);
        } else {
            plan.date = random_date(rng, 2005, spec.cutoff.year - 1);
        }
        plans.push_back(plan);
    }

    // a third of deep pairs get a subunit note naming the partner
    for (const auto& plan : plans) {
        if (plan.cls == 2 && chance(rng, 0.33)) {
            proteins[plan.a].annotations["subunit"] =
                "Component of a stable assembly with " + proteins[plan.b].alias + ".";
        }
    }

    GeneratedCorpus corpus;
    std::string mitab;
    std::string string_tsv = "protein1 protein2 combined_score\n";
    std::map<std::string, std::string> jsonl;

    auto add_jsonl = [&](const char* source, json j) {
        jsonl[source] += j.dump();
        jsonl[source] += '\n';
    };

    for (const auto& plan : plans) {
        const Protein& pa = proteins[plan.a];
        const Protein& pb = proteins[plan.b];
        json base{{"a", pa.accession}, {"b", pb.accession}};

        // every pair: a PubMed line carrying the annotation date
        json pubmed = base;
        pubmed["first_annotated"] = plan.date.to_string();
        std::vector<std::string> pubs;

        if (plan.cls == 0) {
            string_tsv += pa.accession + " " + pb.accession + " " +
                          std::to_string(150 + rng.next_below(350)) + "\n";
            if (chance(rng, 0.4)) {
                json s = base;
                s["actions"] = json::array({{{"mode", pick(rng, kActionModes)},
                                             {"score", 200 + static_cast<int>(rng.next_below(400))}}});
                add_jsonl("STRING", s);
            }
            if (chance(rng, 0.3)) {
                PartialCard pc;
                pc.pair = PairKey(pa.accession, pb.accession);
                IntactPayload ip;
                ip.detection_methods.push_back({"computational analysis", true, false});
                ip.interaction_type = "association";
                ip.publications.push_back(pubmed_id(rng));
                pubs = ip.publications;
                pc.blocks.push_back({Source::IntAct, ip});
                mitab += ingest::serialize_mitab(pc) + "\n";
            }
        } else if (plan.cls == 1) {
            // supported: one bump of stable mid-range evidence
            PartialCard pc;
            pc.pair = PairKey(pa.accession, pb.accession);
            IntactPayload ip;
            for (const auto& m : sample(rng, kExperimentalMethods, 2))
                ip.detection_methods.push_back({m, false, false});
            ip.interaction_type = "physical association";
            const std::size_t n_pubs = 2 + rng.next_below(3);
            for (std::size_t i = 0; i < n_pubs; ++i) ip.publications.push_back(pubmed_id(rng));
            pubs = ip.publications;
            ip.miscore = 0.57 + 0.07 * rng.next_double();
            ip.has_miscore = true;
            pc.blocks.push_back({Source::IntAct, ip});
            mitab += ingest::serialize_mitab(pc) + "\n";

            string_tsv += pa.accession + " " + pb.accession + " " +
                          std::to_string(450 + rng.next_below(230)) + "\n";
            json s = base;
            s["actions"] = json::array({{{"mode", pick(rng, kActionModes)},
                                         {"score", 400 + static_cast<int>(rng.next_below(280))}}});
            add_jsonl("STRING", s);

            json r = base;
            r["shared_pathways"] = 3;
            add_jsonl("Reactome", r);

            json pm_abs = json::array();
            pm_abs.push_back(sentences(rng, kAbstractSentences, 3 + rng.next_below(3)));
            pubmed["abstracts"] = std::move(pm_abs);
        } else {
            // deeply characterized: direct mapping, interface evidence, causal entry
            PartialCard pc;
            pc.pair = PairKey(pa.accession, pb.accession);
            IntactPayload ip;
            ip.detection_methods.push_back({"x-ray crystallography", false, false});
            std::string second = pick(rng, kExperimentalMethods);
            while (second == "x-ray crystallography") second = pick(rng, kExperimentalMethods);
            ip.detection_methods.push_back({std::move(second), false, false});
            ip.interaction_type = "direct interaction";
            const std::size_t n_pubs = 5 + rng.next_below(5);
            for (std::size_t i = 0; i < n_pubs; ++i) ip.publications.push_back(pubmed_id(rng));
            pubs = ip.publications;
            ip.miscore = 0.60 + 0.04 * rng.next_double();
            ip.has_miscore = true;
            pc.blocks.push_back({Source::IntAct, ip});
            mitab += ingest::serialize_mitab(pc) + "\n";

            json extra_line = base;
            extra_line["evidence_lines"] = 1 + static_cast<int>(rng.next_below(2));
            extra_line["binding_region_a"] = true;
            extra_line["binding_region_b"] = true;
            extra_line["interaction_annotations"] =
                "Curated interface mapping narrows the contact to a short linear motif recognized "
                "by the partner groove; alanine scanning across the motif weakens binding by two "
                "orders of magnitude while distal substitutions are tolerated, and the bound state "
                "stimulates phosphorylation of the motif.";
            if (chance(rng, 0.3))
                extra_line["detection_methods"] =
                    json::array({{{"name", "anti bait coimmunoprecipitation"},
                                  {"computational", false},
                                  {"spoke_expanded", true}}});
            add_jsonl("IntAct", extra_line);

            string_tsv += pa.accession + " " + pb.accession + " " +
                          std::to_string(850 + rng.next_below(150)) + "\n";
            json s = base;
            s["actions"] = json::array(
                {{{"mode", "binding"}, {"score", 700 + static_cast<int>(rng.next_below(300))}}});
            add_jsonl("STRING", s);

            json td = base;
            td["side_a"] = true;
            td["domain_pairs"] = json::array({"PF00001-PF00500"});
            if (chance(rng, 0.5))
                td["interface_summary"] =
                    "Buried surface spans two beta strands and the loop between them.";
            add_jsonl("3did", td);

            json sig = base;
            sig["entries"] = json::array({{{"mechanism", "phosphorylation"},
                                           {"causal_effect", "up-regulates activity"},
                                           {"direct", true}}});
            add_jsonl("SIGNOR", sig);

            // a small slice also lands in a curated complex (heavier evidence tail)
            if (chance(rng, 0.10)) {
                json co = base;
                co["complex_names"] = sample(rng, kComplexNames, 1 + rng.next_below(2));
                add_jsonl("CORUM", co);
            }

            json pm_abs = json::array();
            pm_abs.push_back(sentences(rng, kAbstractSentences, 4 + rng.next_below(4)));
            pubmed["abstracts"] = std::move(pm_abs);
        }

        pubmed["publications"] = pubs;
        add_jsonl("PubMed", pubmed);
    }

    // protein records (annotations, keywords, aliases) + sequences as FASTA
    std::string fasta;
    for (const auto& p : proteins) {
        json j;
        j["accession"] = p.accession;
        if (!p.annotations.empty()) {
            json ann = json::object();
            for (const auto& [k, v] : p.annotations) ann[k] = v;
            j["annotations"] = std::move(ann);
        }
        if (!p.keywords.empty()) j["keywords"] = p.keywords;
        j["aliases"] = json::array({p.alias});
        add_jsonl("UniProt", j);

        fasta += ">" + p.accession + " synthetic\n";
        for (std::size_t at = 0; at < p.sequence.size(); at += 60)
            fasta += p.sequence.substr(at, 60) + "\n";
    }

    corpus.mitab = std::move(mitab);
    corpus.string_tsv = std::move(string_tsv);
    corpus.jsonl = std::move(jsonl);
    corpus.fasta = std::move(fasta);
    return corpus;
}

std::vector<EvidenceCard> generate_cards(std::size_t n, std::uint64_t seed) {
    Rng rng(seed);
    std::vector<EvidenceCard> cards;
    cards.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        EvidenceCard card;
        card.pair = PairKey("P" + std::to_string(100000 + 2 * i), "P" + std::to_string(100001 + 2 * i));
        card.proteins.first.accession = card.pair.a;
        card.proteins.second.accession = card.pair.b;

        auto decorate = [&](ProteinRecord& p) {
            if (chance(rng, 0.5)) p.annotations["function"] = pick(rng, kFunctionSentences);
            if (chance(rng, 0.3)) p.annotations["domains"] = "Tandem repeat region.";
            if (chance(rng, 0.2)) p.annotations["similarity"] = "Conserved family member.";
            if (chance(rng, 0.3)) p.annotations["subcellular_location"] = pick(rng, kSubcell);
            if (chance(rng, 0.3)) p.annotations["go_component"] = pick(rng, kGoComponent);
            if (chance(rng, 0.3)) p.annotations["go_process"] = pick(rng, kGoProcess);
            if (chance(rng, 0.2)) p.annotations["go_function"] = pick(rng, kGoFunction);
            if (chance(rng, 0.2)) p.annotations["tissue"] = pick(rng, kTissue);
            if (chance(rng, 0.1)) p.annotations["ptm"] = "Acetylated at the N terminus.";
            if (chance(rng, 0.1)) p.annotations["disease"] = "Linked to a dominant syndrome.";
            if (chance(rng, 0.1)) p.annotations["regulation"] = "Induced by heat shock.";
            if (chance(rng, 0.4)) p.keywords = sample(rng, kKeywords, 1 + rng.next_below(3));
        };
        decorate(card.proteins.first);
        decorate(card.proteins.second);
        for (const auto& kw : card.proteins.first.keywords) card.keywords.insert(kw);
        for (const auto& kw : card.proteins.second.keywords) card.keywords.insert(kw);

        if (chance(rng, 0.75)) {
            IntactPayload p;
            const double t = rng.next_double();
            p.interaction_type = t < 0.25   ? "direct interaction"
                                 : t < 0.55 ? "physical association"
                                 : t < 0.8  ? "association"
                                            : "";
            p.evidence_lines = 1 + static_cast<long>(rng.next_below(8));
            const std::size_t n_methods = rng.next_below(4);
            for (std::size_t m = 0; m < n_methods; ++m)
                p.detection_methods.push_back({pick(rng, kExperimentalMethods), chance(rng, 0.3),
                                               chance(rng, 0.2)});
            const std::size_t n_pubs = rng.next_below(9);
            for (std::size_t m = 0; m < n_pubs; ++m) p.publications.push_back(pubmed_id(rng));
            if (chance(rng, 0.6)) {
                p.miscore = rng.next_double();
                p.has_miscore = true;
            }
            p.binding_region_a = chance(rng, 0.3);
            p.binding_region_b = chance(rng, 0.3);
            if (chance(rng, 0.3))
                p.interaction_annotations = sentences(rng, kAbstractSentences, 1 + rng.next_below(5));
            if (chance(rng, 0.1)) p.interaction_annotations += " Stimulates ubiquitination of the substrate.";
            p.stoichiometry = chance(rng, 0.3);
            if (chance(rng, 0.2)) p.biophysical.push_back("isothermal titration calorimetry");
            if (chance(rng, 0.2)) p.biological_roles = {"enzyme", "enzyme target"};
            else if (chance(rng, 0.3)) p.biological_roles = {"unspecified role"};
            p.self_interaction = chance(rng, 0.05);
            card.blocks.push_back({Source::IntAct, std::move(p)});
        }
        if (chance(rng, 0.6)) {
            PubmedPayload p;
            const std::size_t n_pubs = rng.next_below(7);
            for (std::size_t m = 0; m < n_pubs; ++m) p.publications.push_back(pubmed_id(rng));
            const std::size_t n_abs = rng.next_below(4);
            for (std::size_t m = 0; m < n_abs; ++m)
                p.abstracts.push_back(sentences(rng, kAbstractSentences, 2 + rng.next_below(16)));
            card.blocks.push_back({Source::PubMed, std::move(p)});
        }
        if (chance(rng, 0.2)) {
            ThreeDidPayload p;
            p.side_a = chance(rng, 0.7);
            p.side_b = chance(rng, 0.7);
            if (chance(rng, 0.5)) p.domain_pairs.push_back("PF00001-PF00500");
            if (chance(rng, 0.4)) p.interface_summary = "Strand-swap dimer interface.";
            card.blocks.push_back({Source::ThreeDid, std::move(p)});
        }
        if (chance(rng, 0.15)) {
            PfamPayload p;
            p.domain_pairs.push_back("PF00010-PF00020");
            card.blocks.push_back({Source::Pfam, std::move(p)});
        }
        if (chance(rng, 0.7)) {
            StringPayload p;
            p.combined_score = static_cast<int>(rng.next_below(1001));
            const std::size_t n_actions = rng.next_below(4);
            for (std::size_t m = 0; m < n_actions; ++m)
                p.actions.push_back({pick(rng, kActionModes), static_cast<int>(rng.next_below(1001))});
            card.blocks.push_back({Source::STRING, std::move(p)});
        }
        if (chance(rng, 0.2)) {
            SignorPayload p;
            p.entries.push_back({chance(rng, 0.5) ? "phosphorylation" : "binding",
                                 "up-regulates activity", chance(rng, 0.6)});
            card.blocks.push_back({Source::SIGNOR, std::move(p)});
        }
        if (chance(rng, 0.4)) {
            ReactomePayload p;
            p.shared_pathways = static_cast<long>(rng.next_below(6));
            if (chance(rng, 0.5)) p.pathway_names = sample(rng, kGoProcess, 1 + rng.next_below(2));
            card.blocks.push_back({Source::Reactome, std::move(p)});
        }
        if (chance(rng, 0.2)) {
            ComplexPayload p;
            p.complex_names = sample(rng, kComplexNames, 1 + rng.next_below(2));
            card.blocks.push_back({Source::CORUM, std::move(p)});
        }
        if (chance(rng, 0.15)) {
            ComplexPayload p;
            p.complex_names = sample(rng, kComplexNames, 1);
            card.blocks.push_back({Source::ComplexPortal, std::move(p)});
        }
        cards.push_back(std::move(card));
    }
    return cards;
}

}  // namespace ppikit::corpusgen
