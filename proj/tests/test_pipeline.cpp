#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <unistd.h>

#include <cstdint>
#include <filesystem>
#include <map>
#include <set>
#include <string>

#include "ppikit/corpusgen.hpp"
#include "ppikit/eval.hpp"
#include "ppikit/pipeline.hpp"
#include "ppikit/scoring.hpp"
#include "ppikit/tiering.hpp"
#include "ppikit/util.hpp"

using namespace ppikit;
namespace fs = std::filesystem;

namespace {

struct TempDir {
    fs::path path;
    TempDir() {
        path = fs::temp_directory_path() /
               ("ppikit_pipe_" + std::to_string(::getpid()) + "_" +
                std::to_string(reinterpret_cast<std::uintptr_t>(this)));
        fs::create_directories(path);
    }
    ~TempDir() {
        std::error_code ec;
        fs::remove_all(path, ec);
    }
    std::string str(const std::string& name) const { return (path / name).string(); }
};

// Relative path -> bytes for every file under root, minus the synthesis
// journal: its line order depends on worker scheduling, and the sorted
// records.jsonl is the deterministic artifact derived from it.
std::map<std::string, std::string> snapshot_tree(const fs::path& root) {
    std::map<std::string, std::string> out;
    for (const auto& entry : fs::recursive_directory_iterator(root)) {
        if (!entry.is_regular_file()) continue;
        std::string rel = fs::relative(entry.path(), root).string();
        if (rel == "synth_journal.jsonl") continue;
        out[rel] = read_file(entry.path().string());
    }
    return out;
}

EvidenceCard keyword_card(const std::string& a, const std::string& b,
                          std::initializer_list<const char*> keywords) {
    EvidenceCard card;
    card.pair = PairKey(a, b);
    card.proteins.first.accession = card.pair.a;
    card.proteins.second.accession = card.pair.b;
    for (const char* kw : keywords) card.keywords.insert(kw);
    return card;
}

}  // namespace

TEST_CASE("config parsing fills defaults and rejects anything it does not know") {
    pipeline::PipelineConfig def = pipeline::PipelineConfig::from_json(json::object());
    CHECK(def.paths.out_dir == "out");
    CHECK(def.tiering.k_max == 8);
    CHECK(def.splits.cutoff == Date{2025, 5, 1});
    CHECK(def.splits.test_fraction == 0.01);
    CHECK(def.jobs == 0);
    CHECK_FALSE(def.client.has_value());

    // from_json(to_json()) is a fixed point.
    pipeline::PipelineConfig demo = pipeline::PipelineConfig::load("data/demo/config.json");
    CHECK(pipeline::PipelineConfig::from_json(demo.to_json()).to_json() == demo.to_json());
    REQUIRE(demo.client.has_value());
    CHECK(demo.client->endpoint == "mock://synth");

    auto reject = [](const json& j, const std::string& message) {
        CHECK_THROWS_WITH_AS((void)pipeline::PipelineConfig::from_json(j), message.c_str(),
                             std::runtime_error);
    };
    reject(json{{"bogus", 1}}, "config: unknown key \"bogus\"");
    reject(json{{"paths", {{"foo", 1}}}}, "config: unknown key \"paths/foo\"");
    reject(json{{"paths", {{"jsonl", 5}}}}, "config: paths/jsonl must be an array");
    reject(json{{"paths", {{"jsonl", json::array({{{"source", "UniProt"},
                                                   {"path", "x"},
                                                   {"extra", 1}}})}}}},
           "config: unknown key \"paths/jsonl/extra\"");
    reject(json{{"paths", {{"jsonl", json::array({{{"source", "Bogus"}, {"path", "x"}}})}}}},
           "config: unknown jsonl source \"Bogus\"");
    reject(json{{"paths", {{"jsonl", json::array({{{"source", "UniProt"}}})}}}},
           "config: paths/jsonl entry needs a path");
    reject(json{{"splits", {{"test_fraction", 1.5}}}},
           "config: splits/test_fraction must be in [0,1]");
    reject(json{{"splits", {{"test_fraction", -0.1}}}},
           "config: splits/test_fraction must be in [0,1]");
    reject(json{{"tiering", {{"k_max", 0}}}}, "config: tiering/k_max must be >= 1");
    reject(json{{"report", {{"min_count", 0}}}}, "config: report/min_count must be >= 1");
    reject(json{{"report", {{"bias_threshold", -1.0}}}},
           "config: report/bias_threshold must be >= 0");
    reject(json{{"jobs", -1}}, "config: jobs must be >= 0");
    reject(json{{"paths", {{"mitab", 5}}}}, "config: mitab must be a string");
    reject(json{{"jobs", "many"}}, "config: jobs must be an integer");
    reject(json{{"tags", {{"firm_e_map", "high"}}}}, "config: firm_e_map must be a number");
    CHECK_THROWS_AS(
        (void)pipeline::PipelineConfig::from_json(json{{"splits", {{"cutoff", "2025-13-01"}}}}),
        std::invalid_argument);

    TempDir tmp;
    write_file(tmp.str("broken.json"), "not json");
    CHECK_THROWS_WITH_AS((void)pipeline::PipelineConfig::load(tmp.str("broken.json")),
                         ("config: " + tmp.str("broken.json") + " is not valid JSON").c_str(),
                         std::runtime_error);
}

TEST_CASE("the config hash tracks content but ignores parallelism") {
    pipeline::PipelineConfig base = pipeline::PipelineConfig::from_json(json::object());
    pipeline::PipelineConfig more_jobs = base;
    more_jobs.jobs = 8;
    CHECK(base.config_hash() == more_jobs.config_hash());

    pipeline::PipelineConfig new_seed = base;
    new_seed.tiering.seed = 43;
    CHECK(base.config_hash() != new_seed.config_hash());

    pipeline::PipelineConfig new_path = base;
    new_path.paths.mitab = "elsewhere.mitab";
    CHECK(base.config_hash() != new_path.config_hash());
}

TEST_CASE("the stage runner caches on content hashes and self-heals") {
    TempDir tmp;
    const std::string in = tmp.str("in.txt");
    const std::string artifact = tmp.str("artifact.txt");
    write_file(in, "v1");
    int calls = 0;
    auto compute = [&]() {
        ++calls;
        write_file(artifact, "payload");
        return json{{"n", 1}};
    };

    pipeline::StageRunner r1(tmp.path.string(), "cfg-a");
    CHECK_FALSE(r1.run("alpha", {in}, {artifact}, compute));
    CHECK(calls == 1);
    CHECK(r1.log().at(0) == "stage alpha: ran {\"n\":1}");

    // A fresh runner over the same tree sees the manifest and skips.
    pipeline::StageRunner r2(tmp.path.string(), "cfg-a");
    CHECK(r2.run("alpha", {in}, {artifact}, compute));
    CHECK(calls == 1);
    CHECK(r2.log().at(0) == "stage alpha: cached");

    // Input content change invalidates.
    write_file(in, "v2");
    pipeline::StageRunner r3(tmp.path.string(), "cfg-a");
    CHECK_FALSE(r3.run("alpha", {in}, {artifact}, compute));
    CHECK(calls == 2);

    // A tampered artifact is detected and recomputed.
    write_file(artifact, "corrupted by hand");
    pipeline::StageRunner r4(tmp.path.string(), "cfg-a");
    CHECK_FALSE(r4.run("alpha", {in}, {artifact}, compute));
    CHECK(calls == 3);
    CHECK(read_file(artifact) == "payload");

    // A config change invalidates even with identical files.
    pipeline::StageRunner r5(tmp.path.string(), "cfg-b");
    CHECK_FALSE(r5.run("alpha", {in}, {artifact}, compute));
    CHECK(calls == 4);

    SUBCASE("manifests carry content hashes and counts, never timestamps") {
        json m = json::parse(read_file(r5.manifest_path("alpha")));
        std::set<std::string> keys;
        for (const auto& [k, v] : m.items()) {
            (void)v;
            keys.insert(k);
        }
        CHECK(keys == std::set<std::string>{"stage", "config_hash", "inputs", "outputs",
                                            "counts"});
        CHECK(m.at("config_hash") == "cfg-b");
        CHECK(m.at("inputs").at(in) == sha256_hex("v2"));
        CHECK(m.at("outputs").at(artifact) == sha256_hex("payload"));
        CHECK(m.at("counts") == json{{"n", 1}});
    }
    SUBCASE("failure modes are tagged with the stage name") {
        pipeline::StageRunner r(tmp.path.string(), "cfg-a");
        CHECK_THROWS_WITH_AS(
            (void)r.run("alpha", {tmp.str("missing.txt")}, {artifact}, compute),
            ("stage alpha: missing input " + tmp.str("missing.txt")).c_str(),
            std::runtime_error);
        CHECK_THROWS_WITH_AS(
            (void)r.run("beta", {in}, {tmp.str("never.txt")}, []() { return json::object(); }),
            ("stage beta: compute did not write " + tmp.str("never.txt")).c_str(),
            std::runtime_error);
        CHECK_THROWS_WITH_AS((void)r.run("gamma", {}, {},
                                         []() -> json { throw std::runtime_error("boom"); }),
                             "stage gamma: boom", std::runtime_error);
    }
}

TEST_CASE("tier indices map onto retention roles") {
    // k = 3: bottom dropped, middle subsampled, top kept.
    CHECK(pipeline::tier_role(1, 3) == 0);
    CHECK(pipeline::tier_role(2, 3) == 2);
    CHECK(pipeline::tier_role(3, 3) == 3);
    // k = 2: no middle band exists.
    CHECK(pipeline::tier_role(1, 2) == 0);
    CHECK(pipeline::tier_role(2, 2) == 3);
    // Degenerate single-cluster tierings keep everything.
    CHECK(pipeline::tier_role(1, 1) == 3);
    CHECK(pipeline::tier_role(1, 0) == 3);
}

TEST_CASE("artifact readers round-trip the dump formats") {
    SUBCASE("scores") {
        auto cards = corpusgen::generate_cards(6, 99);
        std::vector<PairKey> pairs;
        std::vector<scoring::EvidenceScore> scores;
        for (const auto& c : cards) {
            pairs.push_back(c.pair);
            scores.push_back(scoring::score(c));
        }
        auto rows = pipeline::load_scores_jsonl(scoring::dump_scores_jsonl(pairs, scores, false));
        REQUIRE(rows.size() == 6);
        for (std::size_t i = 0; i < rows.size(); ++i) {
            CHECK(rows[i].pair == pairs[i]);
            CHECK(rows[i].score.e_map == scores[i].e_map);
            CHECK(rows[i].score.e_mech == scores[i].e_mech);
            CHECK(rows[i].score.e_lit == scores[i].e_lit);
            CHECK(rows[i].score.e_src == scores[i].e_src);
            CHECK(rows[i].score.e_ctx == scores[i].e_ctx);
            CHECK(rows[i].score.e_int == scores[i].e_int);
            CHECK(rows[i].score.total == scores[i].total);
            CHECK(rows[i].score.gated == scores[i].gated);
        }
    }
    SUBCASE("tiers") {
        std::vector<tiering::TierAssignment> tiers{
            {PairKey("A1", "B1"), 1, "T1", 2.5, 2.0},
            {PairKey("A2", "B2"), 3, "T3", 18.0, 17.5},
        };
        auto rows = pipeline::load_tiers_jsonl(tiering::dump_tiers_jsonl(tiers));
        REQUIRE(rows.size() == 2);
        CHECK(rows[0].tier == 1);
        CHECK(rows[0].score == 2.5);
        CHECK(rows[0].centroid == 2.0);
        CHECK(rows[1].tier == 3);
        CHECK(rows[1].pair == PairKey("A2", "B2"));

        CHECK_THROWS_WITH_AS(
            (void)pipeline::load_tiers_jsonl(
                R"({"pair":"A__B","tier":"X2","score":1.0,"centroid":1.0})" "\n"),
            "tiers artifact: bad tier name X2", std::runtime_error);
    }
    SUBCASE("prompts reject tagged pairs without cards") {
        json row{{"pair", "X__Y"}, {"tier", 3}, {"tags", synthesis::ControlTags{}.to_json()}};
        CHECK_THROWS_WITH_AS(
            (void)pipeline::compute_prompt_rows({}, row.dump() + "\n", "sys", nullptr),
            "prompts: tagged pair X__Y has no card", std::runtime_error);
    }
}

TEST_CASE("the bias report reproduces hand-computed enrichment classes") {
    // 16 cards, 8 retained -> overall rate 1/2. Keyword design:
    //   alpha: raw 4, retained 4 -> rate 1,    bias log2(2)  = +1 -> enriched
    //   beta:  raw 8, retained 4 -> rate 1/2,  bias log2(1)  =  0 -> balanced
    //   gamma: raw 4, retained 1 -> rate 1/4,  bias log2(1/2)= -1 -> depleted
    //   zero:  raw 4, retained 0 -> rate 0,    bias -inf          -> depleted
    //   rare:  raw 2 < min_count 3 -> excluded
    std::vector<EvidenceCard> cards;
    for (int i = 0; i < 16; ++i) {
        char a[8], b[8];
        std::snprintf(a, sizeof a, "P%05d", i);
        std::snprintf(b, sizeof b, "Q%05d", i);
        cards.push_back(keyword_card(a, b, {}));
    }
    auto add = [&](int i, const char* kw) { cards[i].keywords.insert(kw); };
    for (int i : {0, 1, 2, 3}) add(i, "alpha");
    for (int i : {0, 1, 2, 3, 8, 9, 10, 11}) add(i, "beta");
    for (int i : {4, 8, 9, 10}) add(i, "gamma");
    for (int i : {12, 13, 14, 15}) add(i, "zero");
    for (int i : {0, 8}) add(i, "rare");
    std::set<PairKey> retained;
    for (int i = 0; i < 8; ++i) retained.insert(cards[i].pair);

    pipeline::BiasReport report = pipeline::bias_report(cards, retained, 3, 0.5);
    CHECK(report.overall_rate == 0.5);
    REQUIRE(report.rows.size() == 4);  // keyword-sorted, "rare" excluded
    CHECK(report.rows[0].keyword == "alpha");
    CHECK(report.rows[0].rate == 1.0);
    CHECK(report.rows[0].bias == 1.0);
    CHECK(report.rows[0].cls == "enriched");
    CHECK(report.rows[1].keyword == "beta");
    CHECK(report.rows[1].bias == 0.0);
    CHECK(report.rows[1].cls == "balanced");
    CHECK(report.rows[2].keyword == "gamma");
    CHECK(report.rows[2].bias == -1.0);
    CHECK(report.rows[2].cls == "depleted");
    CHECK(report.rows[3].keyword == "zero");
    CHECK(report.rows[3].bias_is_neg_inf);
    CHECK(report.rows[3].cls == "depleted");
    CHECK(report.enriched == 1);
    CHECK(report.balanced == 1);
    CHECK(report.depleted == 2);

    json j = report.to_json();
    CHECK(j.at("overall_rate") == 0.5);
    CHECK(j.at("keywords") == 4);
    CHECK(j.at("rows")[0].at("bias") == 1.0);
    CHECK(j.at("rows")[3].at("bias").is_null());  // JSON cannot carry -inf

    CHECK(report.to_csv() ==
          "keyword,raw,retained,rate,bias,class\n"
          "alpha,4,4,1,1,enriched\n"
          "beta,8,4,0.5,0,balanced\n"
          "gamma,4,1,0.25,-1,depleted\n"
          "zero,4,0,0,-inf,depleted\n");

    SUBCASE("degenerate inputs") {
        std::set<PairKey> foreign{PairKey("Z9999", "Z9998")};
        CHECK_THROWS_WITH_AS(
            (void)pipeline::bias_report(cards, foreign, 3, 0.5),
            "bias_report: retained pair Z9998__Z9999 not present in the raw corpus",
            std::runtime_error);
        CHECK_THROWS_WITH_AS((void)pipeline::bias_report(cards, {}, 3, 0.5),
                             "bias_report: nothing retained; rate ratios are undefined",
                             std::runtime_error);
        CHECK_THROWS_AS((void)pipeline::bias_report(cards, retained, 0, 0.5),
                        std::invalid_argument);
        pipeline::BiasReport empty = pipeline::bias_report({}, {}, 3, 0.5);
        CHECK(empty.rows.empty());
        CHECK(empty.overall_rate == 0.0);
        CHECK(empty.to_csv() == "keyword,raw,retained,rate,bias,class\n");
    }
}

TEST_CASE("the offline mock clients are deterministic and band-aware") {
    synthesis::ClientConfig cfg;
    cfg.endpoint = "mock://synth";
    cfg.model_id = "mock-labeler";
    auto client = pipeline::make_client(cfg);

    synthesis::LlmRequest req;
    req.system = "sys";
    req.model_id = cfg.model_id;
    req.user = "[Length] 80-140 words, approximately 4-6 sentences\n[Verb] firm\n\nbody";
    synthesis::LlmResponse r1 = client->complete(req);
    CHECK(r1.http_status == 200);
    CHECK(split_ws(r1.text).size() == 110);  // (80+140)/2 words
    CHECK(r1.text.back() == '.');
    CHECK(client->complete(req).text == r1.text);  // same prompt, same paragraph

    req.user = "[Length] 240-350 words, approximately 9-13 sentences\n\nbody";
    CHECK(split_ws(client->complete(req).text).size() == 295);

    synthesis::LlmRequest bare;
    bare.user = "no band line at all";
    CHECK(split_ws(client->complete(bare).text).size() == 110);  // default band

    SUBCASE("the judge mock emits parseable verdicts") {
        synthesis::ClientConfig jcfg;
        jcfg.endpoint = "mock://judge";
        auto judge = pipeline::make_client(jcfg);
        synthesis::LlmRequest jreq;
        jreq.user = "RAW EVIDENCE CARD\n...\n\nPREDICTION\nsomething";
        synthesis::LlmResponse jr = judge->complete(jreq);
        CHECK(jr.http_status == 200);
        eval::VerdictParse parsed = eval::parse_verdict(jr.text);
        REQUIRE(parsed.verdict.has_value());
        CHECK(parsed.verdict->interaction >= 4);
        CHECK(parsed.verdict->interaction <= 10);
        CHECK(judge->complete(jreq).text == jr.text);
    }
}

TEST_CASE("corpus generation is deterministic per spec") {
    corpusgen::CorpusSpec spec;
    spec.n_pairs = 60;
    spec.seed = 5;
    corpusgen::GeneratedCorpus a = corpusgen::generate_files(spec);
    corpusgen::GeneratedCorpus b = corpusgen::generate_files(spec);
    CHECK(a.mitab == b.mitab);
    CHECK(a.string_tsv == b.string_tsv);
    CHECK(a.fasta == b.fasta);
    CHECK(a.jsonl == b.jsonl);
    CHECK(a.jsonl.count("UniProt") == 1);
    CHECK_FALSE(a.fasta.empty());

    corpusgen::CorpusSpec other = spec;
    other.seed = 6;
    CHECK(corpusgen::generate_files(other).mitab != a.mitab);
}

TEST_CASE("the demo pipeline runs, caches, and reproduces byte-identical artifacts") {
    pipeline::PipelineConfig cfg = pipeline::PipelineConfig::load("data/demo/config.json");
    TempDir tmp;
    cfg.paths.out_dir = tmp.str("out");

    std::vector<std::string> log1 = pipeline::run_pipeline(cfg);
    REQUIRE(log1.size() == 7);
    CHECK(log1[0] == "stage ingest: ran {\"cards\":300,\"lines\":1499,\"rejects\":0,\"skipped\":1}");
    CHECK(log1[1] == "stage score: ran {\"cards\":300}");
    CHECK(log1[2] == "stage tier: ran {\"chosen_k\":3,\"pairs\":300}");
    CHECK(log1[3] == "stage subsample: ran {\"dropped\":143,\"input\":300,\"middle_in\":95,"
                     "\"middle_kept\":81,\"retained\":143,\"top_kept\":62}");
    CHECK(log1[4] == "stage tags: ran {\"long\":62,\"medium\":81,\"short\":0,"
                     "\"t2_e_int_median\":7.75,\"tagged\":143}");
    CHECK(log1[5] == "stage prompts: ran {\"prompts\":143}");
    CHECK(log1[6] == "stage synth: ran {\"invalid\":0,\"ok\":143,\"records\":143,\"refused\":0}");

    std::map<std::string, std::string> first = snapshot_tree(cfg.paths.out_dir);
    CHECK(first.count("cards.jsonl"));
    CHECK(first.count("scores.jsonl"));
    CHECK(first.count("tiers.jsonl"));
    CHECK(first.count("tier_diagnostics.json"));
    CHECK(first.count("clusters.tsv"));
    CHECK(first.count("retained.json"));
    CHECK(first.count("tags.jsonl"));
    CHECK(first.count("prompts.jsonl"));
    CHECK(first.count("records.jsonl"));
    CHECK(first.count("manifests/synth.json"));

    // Re-running over the existing tree is a full cache hit and changes nothing.
    std::vector<std::string> log2 = pipeline::run_pipeline(cfg);
    REQUIRE(log2.size() == 7);
    for (const std::string& line : log2) {
        CAPTURE(line);
        CHECK(line.find(": cached") != std::string::npos);
    }
    CHECK(snapshot_tree(cfg.paths.out_dir) == first);

    // A fresh run from scratch with the same seeds is byte-identical.
    fs::remove_all(cfg.paths.out_dir);
    std::vector<std::string> log3 = pipeline::run_pipeline(cfg);
    REQUIRE(log3.size() == 7);
    CHECK(log3[6].find(": ran") != std::string::npos);
    CHECK(snapshot_tree(cfg.paths.out_dir) == first);

    SUBCASE("the artifacts cross-check") {
        json diag = json::parse(first.at("tier_diagnostics.json"));
        CHECK(diag.at("chosen_k") == 3);

        json retained = json::parse(first.at("retained.json"));
        CHECK(retained.at("retained").size() == 143);
        CHECK(retained.at("counts").at("retained") == 143);

        auto count_lines = [&](const std::string& name) {
            std::size_t n = 0;
            for (const std::string& line : split(first.at(name), '\n'))
                if (!trim(line).empty()) ++n;
            return n;
        };
        CHECK(count_lines("tags.jsonl") == 143);
        CHECK(count_lines("prompts.jsonl") == 143);
        CHECK(count_lines("records.jsonl") == 143);

        // Every record is ok, one per retained pair, sorted by pair.
        std::set<std::string> pairs;
        std::string prev;
        for (const std::string& line : split(first.at("records.jsonl"), '\n')) {
            if (trim(line).empty()) continue;
            json rec = json::parse(line);
            CHECK(rec.at("status") == "ok");
            const std::string pair = rec.at("pair").get<std::string>();
            CHECK(pair > prev);
            prev = pair;
            pairs.insert(pair);
        }
        CHECK(pairs.size() == 143);
        for (const auto& p : json::parse(first.at("retained.json")).at("retained"))
            CHECK(pairs.count(p.get<std::string>()));
    }
}
