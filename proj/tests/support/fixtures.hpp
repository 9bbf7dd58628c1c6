#pragma once

// Shared hand-built fixtures. The demo card is the project's worked example:
// a deeply annotated pair whose component scores are frozen in the scoring
// suite (map 4.0, mech 1.5, lit 9.0, src 2.0, ctx 2.5, total 19.0) and whose
// rendered prompt is byte-frozen under data/fixtures/.

#include <string>
#include <vector>

#include "ppikit/core.hpp"
#include "ppikit/tiering.hpp"

namespace fixtures {

inline std::string repeated_sentence(const std::string& sentence, std::size_t times) {
    std::string out;
    for (std::size_t i = 0; i < times; ++i) out += sentence;
    return out;
}

// An inhibitor/kinase pair modeled on the classic pause-release module.
// Deliberate traps baked in: protein B's function text says "phosphorylates"
// (protein-level text must NOT make the pair enzymatic or mechanism-bearing),
// and the subunit note names the partner only by alias.
inline ppikit::EvidenceCard demo_card() {
    using namespace ppikit;
    EvidenceCard card;
    card.pair = PairKey("P80250", "Q64381");
    card.first_annotated = Date{2009, 3, 14};

    ProteinRecord& a = card.proteins.first;
    a.accession = "P80250";
    a.sequence = "MAEPRQEFEVMEDHAGTYGLGDRKDQGGYTMHQDQEGDTDAGLKESPLQTPTEDGSEEPGSETSDAKSTPTAEDVTAPLVDEGAPGKQAAAQPHTEIPEGTTAEEAGIGDTPSLEDEAAGHVTQARMVSKSKDGTGSDDKKAKGADGKTKIATPRGAAPPGQKGQANATRIPAKTPPAPKTPPSSGEPPKSGDRSGYSSPGSPGTPGSRSRTPSLPTPPTREPKKVAVVRT";
    a.aliases = {"NTR2", "Nucleotide release factor 2"};
    a.annotations["function"] =
        "Transcriptional regulator that sequesters the elongation kinase module in an inactive "
        "ribonucleoprotein particle and releases it in response to growth signals.";
    a.annotations["subunit"] =
        "Component of an inhibitory ribonucleoprotein particle with KIN28L.";
    a.annotations["subcellular"] = "Nucleus; Cytoplasm";
    a.annotations["go_component"] = "nucleoplasm; ribonucleoprotein complex";
    a.annotations["go_process"] = "regulation of transcription elongation";
    a.annotations["go_function"] = "protein binding; kinase inhibitor activity";
    a.annotations["disease"] = "Cardiac hypertrophy susceptibility";
    a.keywords = {"Transcription regulation", "RNA-binding"};

    ProteinRecord& b = card.proteins.second;
    b.accession = "Q64381";
    b.sequence = "MSGSMETVKEFEKLNRIGEGTYGVVYKARDKVTGQIVAMKKIRLESEDEGVPSTAIREISLLKELQHPNIVRLLDVVHSERKLYLVFEFLSQDLKKYMDSTPGSELPLHLIKSYLFQLLQGLSFCHSHRVLHRDLKPQNLLINELGAIKLADFGLARAFGVPVRTYTHEVVTLWYRAPEILLG";
    b.aliases = {"KIN28L", "Elongation kinase 9"};
    b.annotations["function"] =
        "Catalytic subunit of the transcription elongation checkpoint module; phosphorylates the "
        "carboxy-terminal repeat domain of the polymerase to drive pause release.";
    b.annotations["catalytic_activity"] =
        "ATP + protein serine = ADP + protein serine phosphate";
    b.annotations["ptm"] =
        "Autophosphorylation within the activation segment modulates substrate affinity.";
    b.annotations["subcellular"] = "Nucleus";
    b.annotations["go_component"] = "nucleoplasm";
    b.annotations["go_process"] = "regulation of transcription elongation";
    b.annotations["go_function"] = "protein binding";
    b.annotations["domains"] = "Protein kinase domain";
    b.keywords = {"Kinase", "Transferase", "Nucleotide-binding"};

    for (const auto& kw : a.keywords) card.keywords.insert(kw);
    for (const auto& kw : b.keywords) card.keywords.insert(kw);

    IntactPayload intact;
    intact.interaction_type = "physical association";
    intact.miscore = 0.94;
    intact.has_miscore = true;
    intact.evidence_lines = 18;
    intact.detection_methods = {{"two hybrid", false, false},
                                {"tandem affinity purification", false, false}};
    intact.publications = {"PMID:2144001", "PMID:2144002", "PMID:2144003",
                           "PMID:2144004", "PMID:2144005", "PMID:2144006"};
    card.blocks.push_back({Source::IntAct, intact});

    PubmedPayload pubmed;
    pubmed.publications = {"PMID:2144007", "PMID:2144008", "PMID:2144009", "PMID:2144010",
                           "PMID:2144011"};
    // Two abstracts totalling 3,240 characters: inside the [3000, 5000) band.
    const std::string s1 =
        "The inhibitory particle keeps the checkpoint kinase inactive until release signals "
        "arrive, and reconstitution shows the switch is fully reversible in vitro. ";  // 162 chars
    pubmed.abstracts = {repeated_sentence(s1, 12), repeated_sentence(s1, 8)};
    card.blocks.push_back({Source::PubMed, pubmed});

    StringPayload string_db;
    string_db.combined_score = 990;
    string_db.actions = {{"binding", 980}};
    card.blocks.push_back({Source::STRING, string_db});

    ComplexPayload corum;
    corum.complex_names = {"Elongation checkpoint particle", "Kinase sequestration module"};
    card.blocks.push_back({Source::CORUM, corum});

    return card;
}

inline ppikit::tiering::TierAssignment tier_of(const ppikit::PairKey& pair, int tier,
                                               double score) {
    ppikit::tiering::TierAssignment t;
    t.pair = pair;
    t.tier = tier;
    t.tier_name = "T" + std::to_string(tier);
    t.score = score;
    t.centroid = score;
    return t;
}

}  // namespace fixtures
