#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <unistd.h>

#include <filesystem>
#include <set>

#include "ppikit/scoring.hpp"
#include "ppikit/synthesis.hpp"
#include "ppikit/util.hpp"
#include "support/fixtures.hpp"

using namespace ppikit;
using namespace ppikit::synthesis;

namespace {

struct TaggedDemo {
    EvidenceCard card;
    scoring::EvidenceScore score;
    TagThresholds thresholds;
};

TaggedDemo tagged_demo() {
    TaggedDemo d;
    d.card = fixtures::demo_card();
    d.score = scoring::score(d.card);
    d.thresholds.t2_e_int_median = 7.75;
    return d;
}

PromptBundle make_bundle(const std::string& a, const std::string& b) {
    PromptBundle bundle;
    bundle.pair = PairKey(a, b);
    bundle.system = "system";
    bundle.user = "user for " + bundle.pair.to_string();
    bundle.tags.band = band_for(bundle.tags.length).to_string();
    return bundle;
}

std::vector<PromptBundle> make_bundles(std::size_t n) {
    std::vector<PromptBundle> out;
    for (std::size_t i = 0; i < n; ++i)
        out.push_back(make_bundle("A" + std::to_string(1000 + i), "B" + std::to_string(1000 + i)));
    return out;
}

struct TempDir {
    std::filesystem::path path;
    TempDir() {
        path = std::filesystem::temp_directory_path() /
               ("ppikit_synth_" + std::to_string(::getpid()) + "_" +
                std::to_string(reinterpret_cast<std::uintptr_t>(this)));
        std::filesystem::create_directories(path);
    }
    ~TempDir() { std::filesystem::remove_all(path); }
    std::string file(const std::string& name) const { return (path / name).string(); }
};

SynthesisOptions fast_options() {
    SynthesisOptions opts;
    opts.rate_per_sec = 0.0;
    opts.sleep_ms = [](double) {};  // tests never really sleep
    opts.validate_responses = false;
    return opts;
}

}  // namespace

TEST_CASE("the demo card derives tags long/firm/absent/none at tier 3") {
    TaggedDemo d = tagged_demo();
    ControlTags tags = compute_tags(d.card, d.score, fixtures::tier_of(d.card.pair, 3, d.score.total),
                                    d.thresholds);
    CHECK(tags.length == LengthTag::long_band);
    CHECK(tags.verb == VerbTag::firm);
    CHECK(tags.mechanism == MechanismTag::absent);
    CHECK(tags.silence == SilenceTag::none);
    CHECK(tags.band == "240-350 words, approximately 9-13 sentences");
    CHECK(std::string(length_name(tags.length)) == "long");
    CHECK(std::string(verb_name(tags.verb)) == "firm");
    CHECK(std::string(mechanism_name(tags.mechanism)) == "absent");
    CHECK(std::string(silence_name(tags.silence)) == "none");

    ControlTags back = ControlTags::from_json(tags.to_json());
    CHECK(back == tags);
}

TEST_CASE("tier-2 length splits on the running e_int median") {
    TaggedDemo d = tagged_demo();  // e_int = 16.5
    auto t2 = fixtures::tier_of(d.card.pair, 2, d.score.total);

    d.thresholds.t2_e_int_median = 16.5;  // at the median -> medium
    CHECK(compute_tags(d.card, d.score, t2, d.thresholds).length == LengthTag::medium_band);
    d.thresholds.t2_e_int_median = 16.75;  // below the median -> short
    CHECK(compute_tags(d.card, d.score, t2, d.thresholds).length == LengthTag::short_band);

    SUBCASE("tier 1 is rejected") {
        CHECK_THROWS_WITH_AS((void)compute_tags(d.card, d.score,
                                             fixtures::tier_of(d.card.pair, 1, d.score.total),
                                             d.thresholds),
                             doctest::Contains("T1"), std::runtime_error);
    }
}

TEST_CASE("verb tag decision ladder") {
    TaggedDemo d = tagged_demo();
    auto t3 = fixtures::tier_of(d.card.pair, 3, d.score.total);

    // Demo card: e_map 4.0 >= firm threshold -> firm (already covered above).
    // Raise the bar so e_map falls short; non-direct type + ungated -> mixed.
    d.thresholds.firm_e_map = 4.5;
    CHECK(compute_tags(d.card, d.score, t3, d.thresholds).verb == VerbTag::mixed);

    // A direct interaction type is firm regardless of e_map.
    EvidenceCard direct = d.card;
    for (auto& block : direct.blocks)
        if (auto* p = std::get_if<IntactPayload>(&block.payload))
            p->interaction_type = "direct interaction";
    scoring::EvidenceScore ds = scoring::score(direct);
    CHECK(compute_tags(direct, ds, t3, d.thresholds).verb == VerbTag::firm);

    // A gated card (no experimental detection) is hedged.
    EvidenceCard gated = d.card;
    for (auto& block : gated.blocks)
        if (auto* p = std::get_if<IntactPayload>(&block.payload))
            for (auto& m : p->detection_methods) m.computational = true;
    scoring::EvidenceScore gs = scoring::score(gated);
    REQUIRE(gs.gated);
    CHECK(compute_tags(gated, gs, t3, d.thresholds).verb == VerbTag::hedged);
}

TEST_CASE("mechanism tag tracks interaction-level mechanistic signals") {
    TaggedDemo d = tagged_demo();
    auto t3 = fixtures::tier_of(d.card.pair, 3, d.score.total);
    // The demo card has none (protein-level kinase text does not count).
    CHECK(compute_tags(d.card, d.score, t3, d.thresholds).mechanism == MechanismTag::absent);

    SUBCASE("a binding region flips it") {
        EvidenceCard card = d.card;
        for (auto& block : card.blocks)
            if (auto* p = std::get_if<IntactPayload>(&block.payload)) p->binding_region_b = true;
        CHECK(compute_tags(card, scoring::score(card), t3, d.thresholds).mechanism ==
              MechanismTag::present);
    }
    SUBCASE("a SIGNOR entry flips it") {
        EvidenceCard card = d.card;
        SignorPayload sig;
        sig.entries = {{"binding", "up-regulates activity", true}};
        card.blocks.push_back({Source::SIGNOR, sig});
        CHECK(compute_tags(card, scoring::score(card), t3, d.thresholds).mechanism ==
              MechanismTag::present);
    }
    SUBCASE("a 3did interface summary flips it") {
        EvidenceCard card = d.card;
        ThreeDidPayload td;
        td.interface_summary = "central helix packs against the kinase N-lobe";
        card.blocks.push_back({Source::ThreeDid, td});
        CHECK(compute_tags(card, scoring::score(card), t3, d.thresholds).mechanism ==
              MechanismTag::present);
    }
}

TEST_CASE("silence tag reflects per-side annotation sparsity") {
    TaggedDemo d = tagged_demo();
    auto t3 = fixtures::tier_of(d.card.pair, 3, d.score.total);

    auto strip = [&](ProteinRecord& r) {
        r.annotations.clear();  // no function, nothing else -> silenced
    };
    SUBCASE("A silenced") {
        EvidenceCard card = d.card;
        strip(card.proteins.first);
        CHECK(compute_tags(card, scoring::score(card), t3, d.thresholds).silence == SilenceTag::a);
    }
    SUBCASE("B silenced") {
        EvidenceCard card = d.card;
        strip(card.proteins.second);
        CHECK(compute_tags(card, scoring::score(card), t3, d.thresholds).silence == SilenceTag::b);
    }
    SUBCASE("both silenced") {
        EvidenceCard card = d.card;
        strip(card.proteins.first);
        strip(card.proteins.second);
        CHECK(compute_tags(card, scoring::score(card), t3, d.thresholds).silence ==
              SilenceTag::a_plus_b);
    }
    SUBCASE("a function-less side with enough other fields is not silenced") {
        EvidenceCard card = d.card;
        auto& anns = card.proteins.first.annotations;
        anns.erase("function");
        // Still has subunit, subcellular, go_* etc. >= silence_min_fields.
        CHECK(compute_tags(card, scoring::score(card), t3, d.thresholds).silence ==
              SilenceTag::none);
    }
}

TEST_CASE("word bands match the published ranges") {
    CHECK(band_for(LengthTag::short_band).to_string() ==
          "80-140 words, approximately 4-6 sentences");
    CHECK(band_for(LengthTag::medium_band).to_string() ==
          "140-220 words, approximately 6-9 sentences");
    CHECK(band_for(LengthTag::long_band).to_string() ==
          "240-350 words, approximately 9-13 sentences");
}

TEST_CASE("the demo prompt renders byte-identically to the frozen goldens") {
    TaggedDemo d = tagged_demo();
    ControlTags tags = compute_tags(d.card, d.score, fixtures::tier_of(d.card.pair, 3, d.score.total),
                                    d.thresholds);
    std::string system_text = read_file("data/prompts/synthesis_system.txt");
    PromptBundle bundle = render_prompt(d.card, tags, system_text);
    CHECK(bundle.system == system_text);
    CHECK(bundle.user == read_file("data/fixtures/demo_prompt_user.txt"));

    // Decision blocks appear first, in fixed order, as `[Tag] value` lines.
    auto lines = split(bundle.user, '\n');
    REQUIRE(lines.size() > 5);
    CHECK(lines[0] == "[Length] 240-350 words, approximately 9-13 sentences");
    CHECK(lines[1] == "[Verb] firm");
    CHECK(lines[2] == "[Mechanism] absent");
    CHECK(lines[3] == "[Silence] none");
    CHECK(lines[4].empty());

    // Leak terms cover both accessions and all long-enough aliases.
    std::set<std::string> terms(bundle.leak_terms.begin(), bundle.leak_terms.end());
    CHECK(terms.contains("P80250"));
    CHECK(terms.contains("Q64381"));
    CHECK(terms.contains("NTR2"));
    CHECK(terms.contains("KIN28L"));
    for (const std::string& term : bundle.leak_terms) {
        CAPTURE(term);
        CHECK_FALSE(contains_ci(bundle.user, term));
    }
}

TEST_CASE("the frozen demo card fixture round-trips and re-scores identically") {
    json j = json::parse(read_file("data/fixtures/demo_card.json"));
    EvidenceCard card = card_from_json(j);
    CHECK(card == fixtures::demo_card());
    CHECK(to_json(card) == j);
    CHECK(scoring::score(card).total == 19.0);
}

TEST_CASE("evidence blocks render every source in canonical order with null gaps") {
    TaggedDemo d = tagged_demo();
    std::string blocks = render_evidence_blocks(d.card);
    auto lines = split(blocks, '\n');
    REQUIRE(lines.size() == 11);  // ten sources, UniProt twice (one per side)
    CHECK(lines[0].rfind("[IntAct] 18 evidence lines, MIscore 0.94; physical association", 0) == 0);
    CHECK(lines[1].rfind("[PubMed] 5 publications; Abstract:", 0) == 0);
    CHECK(lines[2].rfind("[UniProt] Protein A:", 0) == 0);
    CHECK(lines[3].rfind("[UniProt] Protein B:", 0) == 0);
    CHECK(lines[4] == "[3did] null");
    CHECK(lines[5] == "[Pfam] null");
    CHECK(lines[6] == "[STRING] 0.99 hybrid confidence; Actions: binding (980)");
    CHECK(lines[7] == "[SIGNOR] null");
    CHECK(lines[8] == "[Reactome] null");
    CHECK(lines[9] == "[CORUM] 2 complexes; Elongation checkpoint particle, Kinase sequestration module");
    CHECK(lines[10] == "[ComplexPortal] null");

    // Aliases are replaced case-insensitively, longest needle first; the
    // subunit note spells the partner by alias and must come out as Protein B.
    CHECK(contains_ci(blocks, "particle with Protein B."));
    CHECK_FALSE(contains_ci(blocks, "KIN28L"));
    CHECK_FALSE(contains_ci(blocks, "NTR2"));

    SUBCASE("a card with no protein annotations renders a single null UniProt line") {
        EvidenceCard bare;
        bare.pair = PairKey("X1", "Y1");
        bare.proteins.first.accession = "X1";
        bare.proteins.second.accession = "Y1";
        std::string empty_blocks = render_evidence_blocks(bare);
        auto empty_lines = split(empty_blocks, '\n');
        REQUIRE(empty_lines.size() == 10);
        CHECK(empty_lines[0] == "[IntAct] null");
        CHECK(empty_lines[2] == "[UniProt] null");
    }
}

TEST_CASE("alias replacement prefers the longest needle and keeps side-A for shared aliases") {
    EvidenceCard card = fixtures::demo_card();
    // "Nucleotide release factor 2" contains "NTR2"? No - but it does contain
    // shorter alias-like fragments; craft an explicit nesting instead.
    card.proteins.first.aliases = {"KIN", "KIN28 LONG FORM"};
    card.proteins.second.aliases = {"KIN28"};
    card.proteins.first.annotations["function"] = "Stabilizes KIN28 LONG FORM during assembly.";
    card.proteins.second.annotations["function"] = "Counteracts KIN28 in the nucleus.";
    std::string blocks = render_evidence_blocks(card);
    // The longest needle wins: side A's full alias is replaced as one unit and
    // never torn apart by the shorter side-B alias.
    CHECK(contains_ci(blocks, "Stabilizes Protein A during assembly."));
    CHECK(contains_ci(blocks, "Counteracts Protein B in the nucleus."));

    // A shared alias maps to Protein A (deterministic tie).
    EvidenceCard shared = fixtures::demo_card();
    shared.proteins.first.aliases = {"CDK-module"};
    shared.proteins.second.aliases = {"CDK-module"};
    shared.proteins.first.annotations["function"] = "Part of the CDK-module core.";
    std::string out = render_evidence_blocks(shared);
    CHECK(contains_ci(out, "Part of the Protein A core."));
}

TEST_CASE("rendering throws when an accession would survive") {
    EvidenceCard card = fixtures::demo_card();
    ControlTags tags;
    tags.band = band_for(tags.length).to_string();
    // Complex names render verbatim by design; an accession inside one is the
    // one place a leak can still happen, and it must be caught.
    for (auto& block : card.blocks)
        if (auto* p = std::get_if<ComplexPayload>(&block.payload))
            p->complex_names.push_back("P80250 holo-complex");
    CHECK_THROWS_WITH_AS((void)render_prompt(card, tags, "sys"),
                         doctest::Contains("alias leakage"), std::runtime_error);
}

TEST_CASE("response validation enforces paragraph shape, band, and leak terms") {
    ControlTags tags;
    tags.length = LengthTag::short_band;  // 80-140 words -> accepts 68..161
    tags.band = band_for(tags.length).to_string();
    std::vector<std::string> leaks{"P80250", "NTR2"};

    auto words = [](int n) {
        std::string out;
        for (int i = 0; i < n; ++i) out += (i ? " word" : "word");
        return out;
    };

    CHECK(validate_response(words(100), tags, leaks) == std::nullopt);
    CHECK(validate_response(words(68), tags, leaks) == std::nullopt);   // floor(80*.85)
    CHECK(validate_response(words(161), tags, leaks) == std::nullopt);  // ceil(140*1.15)
    CHECK(validate_response(words(67), tags, leaks) == "length");
    CHECK(validate_response(words(162), tags, leaks) == "length");
    CHECK(validate_response("", tags, leaks) == "paragraph");
    CHECK(validate_response("   \t ", tags, leaks) == "paragraph");
    CHECK(validate_response(words(50) + "\n" + words(50), tags, leaks) == "paragraph");
    CHECK(validate_response(words(99) + " ntr2", tags, leaks) == "leak");  // case-insensitive
    std::string padded = "  " + words(100) + "  ";
    CHECK(validate_response(padded, tags, leaks) == std::nullopt);  // trimmed before checks
}

TEST_CASE("synthesize produces one journaled record per bundle") {
    TempDir tmp;
    std::vector<PromptBundle> bundles = make_bundles(100);
    MockClient client([](const LlmRequest& req, int) {
        LlmResponse r = MockClient::ok("echo: " + req.user);
        r.prompt_tokens = 11;
        r.completion_tokens = 5;
        return r;
    });
    SynthesisOptions opts = fast_options();
    opts.concurrency = 8;
    std::string journal = tmp.file("journal.jsonl");
    std::vector<SynthesisRecord> records = synthesize(bundles, client, "mock-labeler", journal, opts);

    REQUIRE(records.size() == 100);
    CHECK(client.calls() == 100);
    for (std::size_t i = 0; i < records.size(); ++i) {
        CHECK(records[i].pair == bundles[i].pair);  // bundle order, not completion order
        CHECK(records[i].status == SynthesisStatus::ok);
        CHECK(records[i].description == "echo: " + bundles[i].user);
        CHECK(records[i].model_id == "mock-labeler");
        CHECK(records[i].prompt_tokens == 11);
    }
    JournalState state = load_journal(journal);
    CHECK(state.records.size() == 100);
    CHECK_FALSE(state.trailing_partial_dropped);

    SUBCASE("a second run re-sends nothing") {
        MockClient quiet([](const LlmRequest&, int) { return MockClient::ok("should not happen"); });
        std::vector<SynthesisRecord> again =
            synthesize(bundles, quiet, "mock-labeler", journal, opts);
        CHECK(quiet.calls() == 0);
        REQUIRE(again.size() == 100);
        for (std::size_t i = 0; i < again.size(); ++i)
            CHECK(again[i].description == records[i].description);
    }
}

TEST_CASE("resume after a mid-line kill re-sends only the missing pairs") {
    TempDir tmp;
    std::vector<PromptBundle> bundles = make_bundles(100);
    std::string journal = tmp.file("journal.jsonl");
    MockClient client([](const LlmRequest& req, int) { return MockClient::ok("v1 " + req.user); });
    SynthesisOptions opts = fast_options();
    opts.concurrency = 4;
    synthesize(bundles, client, "mock-labeler", journal, opts);

    // Simulate a kill: keep 40 full records, then a torn 41st line.
    std::string text = read_file(journal);
    std::vector<std::string> lines = split(text, '\n');
    REQUIRE(lines.size() >= 42);
    std::string truncated;
    for (int i = 0; i < 40; ++i) truncated += lines[i] + "\n";
    truncated += lines[40].substr(0, lines[40].size() / 2);  // no trailing newline
    write_file(journal, truncated);

    JournalState torn = load_journal(journal);
    CHECK(torn.records.size() == 40);
    CHECK(torn.trailing_partial_dropped);

    std::set<PairKey> already;
    for (const auto& r : torn.records) already.insert(r.pair);

    MockClient resume_client(
        [](const LlmRequest& req, int) { return MockClient::ok("v2 " + req.user); });
    std::vector<SynthesisRecord> records =
        synthesize(bundles, resume_client, "mock-labeler", journal, opts);

    REQUIRE(records.size() == 100);
    CHECK(resume_client.calls() == 60);
    std::set<PairKey> seen;
    for (std::size_t i = 0; i < records.size(); ++i) {
        CHECK(seen.insert(records[i].pair).second);  // exactly one record per pair
        bool resumed = already.contains(records[i].pair);
        CHECK(records[i].description ==
              (resumed ? "v1 " : "v2 ") + bundles[i].user);
    }
    // The rewritten journal is clean: all 100 parse, no partial tail.
    JournalState final_state = load_journal(journal);
    CHECK(final_state.records.size() == 100);
    CHECK_FALSE(final_state.trailing_partial_dropped);
}

TEST_CASE("an interior malformed journal line aborts with recovery instructions") {
    TempDir tmp;
    std::string journal = tmp.file("journal.jsonl");
    std::vector<PromptBundle> bundles = make_bundles(3);
    MockClient client([](const LlmRequest& req, int) { return MockClient::ok("x " + req.user); });
    synthesize(bundles, client, "m", journal, fast_options());

    std::vector<std::string> lines = split(read_file(journal), '\n');
    std::string corrupted = lines[0] + "\n{not json}\n" + lines[2] + "\n";
    write_file(journal, corrupted);

    CHECK_THROWS_WITH_AS((void)load_journal(journal), doctest::Contains("corrupted at line 2"),
                         std::runtime_error);
    CHECK_THROWS_WITH_AS((void)load_journal(journal), doctest::Contains("Recovery:"),
                         std::runtime_error);
}

TEST_CASE("duplicate bundles are rejected up front") {
    TempDir tmp;
    std::vector<PromptBundle> bundles = make_bundles(2);
    bundles.push_back(bundles[0]);
    MockClient client([](const LlmRequest&, int) { return MockClient::ok("x"); });
    CHECK_THROWS_WITH_AS((void)synthesize(bundles, client, "m", tmp.file("j.jsonl"), fast_options()),
                         doctest::Contains("duplicate bundle"), std::runtime_error);
}

TEST_CASE("transient failures back off and eventually succeed") {
    TempDir tmp;
    std::vector<PromptBundle> bundles = make_bundles(1);
    int failures = 0;
    MockClient client([&](const LlmRequest&, int call) -> LlmResponse {
        if (call == 0) {
            ++failures;
            return {429, "", 0, 0, "rate limited"};
        }
        if (call == 1) {
            ++failures;
            return {503, "", 0, 0, "overloaded"};
        }
        if (call == 2) {
            ++failures;
            return {0, "", 0, 0, "connection reset"};
        }
        return MockClient::ok("recovered");
    });
    SynthesisOptions opts = fast_options();
    opts.concurrency = 1;
    std::vector<double> delays;
    opts.sleep_ms = [&](double ms) { delays.push_back(ms); };
    opts.backoff_initial_ms = 100.0;
    opts.backoff_max_ms = 250.0;

    std::vector<SynthesisRecord> records =
        synthesize(bundles, client, "m", tmp.file("j.jsonl"), opts);
    REQUIRE(records.size() == 1);
    CHECK(records[0].status == SynthesisStatus::ok);
    CHECK(records[0].description == "recovered");
    CHECK(failures == 3);
    // One backoff per retry, exponential with jitter in [0.5, 1.0] of the base,
    // capped at backoff_max_ms.
    REQUIRE(delays.size() == 3);
    CHECK(delays[0] >= 50.0);
    CHECK(delays[0] <= 100.0);
    CHECK(delays[1] >= 100.0);
    CHECK(delays[1] <= 200.0);
    CHECK(delays[2] >= 125.0);  // base would be 400, capped at 250
    CHECK(delays[2] <= 250.0);
}

TEST_CASE("retry exhaustion and hard failures refuse with informative reasons") {
    TempDir tmp;
    SynthesisOptions opts = fast_options();
    opts.concurrency = 1;
    opts.max_retries = 2;

    SUBCASE("permanent 429 exhausts retries") {
        std::vector<PromptBundle> bundles = make_bundles(1);
        MockClient client([](const LlmRequest&, int) -> LlmResponse {
            return {429, "", 0, 0, "rate limited"};
        });
        std::vector<SynthesisRecord> records =
            synthesize(bundles, client, "m", tmp.file("j1.jsonl"), opts);
        REQUIRE(records.size() == 1);
        CHECK(records[0].status == SynthesisStatus::refused);
        CHECK(records[0].reason ==
              "retries exhausted after 3 attempts (last http 429: rate limited)");
        CHECK(client.calls() == 3);  // initial + 2 retries
    }
    SUBCASE("a non-retryable status fails immediately") {
        std::vector<PromptBundle> bundles = make_bundles(1);
        MockClient client([](const LlmRequest&, int) -> LlmResponse {
            return {400, "", 0, 0, "bad request"};
        });
        std::vector<SynthesisRecord> records =
            synthesize(bundles, client, "m", tmp.file("j2.jsonl"), opts);
        CHECK(client.calls() == 1);
        CHECK(records[0].status == SynthesisStatus::refused);
        CHECK(records[0].reason == "http 400: bad request");
    }
    SUBCASE("responses are validated when requested") {
        std::vector<PromptBundle> bundles = make_bundles(1);
        bundles[0].tags.length = LengthTag::short_band;
        bundles[0].tags.band = band_for(LengthTag::short_band).to_string();
        bundles[0].leak_terms = {"SECRETX"};
        MockClient client([](const LlmRequest&, int) {
            return MockClient::ok("too short to pass the band");
        });
        SynthesisOptions validating = opts;
        validating.validate_responses = true;
        std::vector<SynthesisRecord> records =
            synthesize(bundles, client, "m", tmp.file("j3.jsonl"), validating);
        CHECK(records[0].status == SynthesisStatus::invalid);
        CHECK(records[0].reason == "length");
        CHECK(records[0].description.empty());
    }
    SUBCASE("empty completions are invalid even without validation") {
        std::vector<PromptBundle> bundles = make_bundles(1);
        MockClient client([](const LlmRequest&, int) { return MockClient::ok("   "); });
        std::vector<SynthesisRecord> records =
            synthesize(bundles, client, "m", tmp.file("j4.jsonl"), opts);
        CHECK(records[0].status == SynthesisStatus::invalid);
        CHECK(records[0].reason == "empty");
    }
}

TEST_CASE("synthesis records serialize with the documented shape") {
    SynthesisRecord rec;
    rec.pair = PairKey("P80250", "Q64381");
    rec.tags.band = band_for(rec.tags.length).to_string();
    rec.description = "Protein A binds Protein B.";
    rec.model_id = "mock-labeler";
    rec.prompt_tokens = 321;
    rec.completion_tokens = 45;
    rec.status = SynthesisStatus::ok;

    json j = rec.to_json();
    CHECK(j.at("pair") == "P80250__Q64381");
    CHECK(j.at("usage").at("prompt_tokens") == 321);
    CHECK(j.at("usage").at("completion_tokens") == 45);
    CHECK(j.at("status") == "ok");
    SynthesisRecord back = SynthesisRecord::from_json(j);
    CHECK(back.pair == rec.pair);
    CHECK(back.description == rec.description);
    CHECK(back.status == rec.status);
    CHECK(back.prompt_tokens == rec.prompt_tokens);

    std::string jsonl = dump_records_jsonl({rec});
    CHECK(json::parse(split(jsonl, '\n')[0]) == j);
}
