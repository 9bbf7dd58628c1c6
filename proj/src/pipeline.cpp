#include "ppikit/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <limits>
#include <map>
#include <memory>
#include <sstream>
#include <stdexcept>

#include "ppikit/ingest.hpp"
#include "ppikit/tiering.hpp"
#include "ppikit/util.hpp"

namespace ppikit::pipeline {

using nlohmann::json;
namespace fs = std::filesystem;

// -- strict config parsing ----------------------------------------------------------

namespace {

void check_keys(const json& j, const std::string& ctx,
                std::initializer_list<const char*> allowed) {
    if (!j.is_object())
        throw std::runtime_error("config: " + (ctx.empty() ? std::string("root") : ctx) +
                                 " must be an object");
    for (const auto& [key, value] : j.items()) {
        (void)value;
        bool ok = false;
        for (const char* a : allowed)
            if (key == a) ok = true;
        if (!ok) throw std::runtime_error("config: unknown key \"" + ctx + key + "\"");
    }
}

std::string get_str(const json& j, const char* key, const std::string& fallback) {
    if (!j.contains(key)) return fallback;
    if (!j.at(key).is_string()) throw std::runtime_error(std::string("config: ") + key + " must be a string");
    return j.at(key).get<std::string>();
}

double get_num(const json& j, const char* key, double fallback) {
    if (!j.contains(key)) return fallback;
    if (!j.at(key).is_number()) throw std::runtime_error(std::string("config: ") + key + " must be a number");
    return j.at(key).get<double>();
}

long get_int(const json& j, const char* key, long fallback) {
    if (!j.contains(key)) return fallback;
    if (!j.at(key).is_number_integer())
        throw std::runtime_error(std::string("config: ") + key + " must be an integer");
    return j.at(key).get<long>();
}

}  // namespace

json PipelineConfig::to_json() const {
    json p;
    p["mitab"] = paths.mitab;
    p["string_links"] = paths.string_links;
    json jl = json::array();
    for (const auto& in : paths.jsonl) jl.push_back({{"source", in.source}, {"path", in.path}});
    p["jsonl"] = std::move(jl);
    p["fasta"] = paths.fasta;
    p["out_dir"] = paths.out_dir;
    p["synthesis_system"] = paths.synthesis_system;
    p["judge_system"] = paths.judge_system;

    json j;
    j["paths"] = std::move(p);
    j["similarity"] = similarity.to_json();
    j["tiering"] = {{"k_max", tiering.k_max},
                    {"subsample_cap", tiering.subsample_cap},
                    {"seed", tiering.seed}};
    j["tags"] = {{"firm_e_map", tags.firm_e_map}, {"silence_min_fields", tags.silence_min_fields}};
    if (client) j["client"] = client->to_json();
    j["splits"] = {{"cutoff", splits.cutoff.to_string()},
                   {"test_fraction", splits.test_fraction},
                   {"seed", splits.seed}};
    j["report"] = {{"min_count", report.min_count}, {"bias_threshold", report.bias_threshold}};
    j["jobs"] = jobs;
    return j;
}

PipelineConfig PipelineConfig::from_json(const json& j) {
    PipelineConfig c;
    check_keys(j, "", {"paths", "similarity", "tiering", "tags", "client", "splits", "report",
                       "jobs"});

    if (j.contains("paths")) {
        const json& p = j.at("paths");
        check_keys(p, "paths/", {"mitab", "string_links", "jsonl", "fasta", "out_dir",
                                 "synthesis_system", "judge_system"});
        c.paths.mitab = get_str(p, "mitab", "");
        c.paths.string_links = get_str(p, "string_links", "");
        c.paths.fasta = get_str(p, "fasta", "");
        c.paths.out_dir = get_str(p, "out_dir", c.paths.out_dir);
        c.paths.synthesis_system = get_str(p, "synthesis_system", c.paths.synthesis_system);
        c.paths.judge_system = get_str(p, "judge_system", c.paths.judge_system);
        if (p.contains("jsonl")) {
            if (!p.at("jsonl").is_array())
                throw std::runtime_error("config: paths/jsonl must be an array");
            for (const json& e : p.at("jsonl")) {
                check_keys(e, "paths/jsonl/", {"source", "path"});
                JsonlInput in{get_str(e, "source", ""), get_str(e, "path", "")};
                if (!source_from_name(in.source))
                    throw std::runtime_error("config: unknown jsonl source \"" + in.source + "\"");
                if (in.path.empty())
                    throw std::runtime_error("config: paths/jsonl entry needs a path");
                c.paths.jsonl.push_back(std::move(in));
            }
        }
    }
    if (j.contains("similarity")) {
        check_keys(j.at("similarity"), "similarity/",
                   {"min_identity", "min_coverage", "kmer_size", "kmer_jaccard_min"});
        c.similarity = homology::SimilarityParams::from_json(j.at("similarity"));
    }
    if (j.contains("tiering")) {
        const json& t = j.at("tiering");
        check_keys(t, "tiering/", {"k_max", "subsample_cap", "seed"});
        c.tiering.k_max = static_cast<int>(get_int(t, "k_max", c.tiering.k_max));
        if (c.tiering.k_max < 1) throw std::runtime_error("config: tiering/k_max must be >= 1");
        c.tiering.subsample_cap = static_cast<std::uint64_t>(
            get_int(t, "subsample_cap", static_cast<long>(c.tiering.subsample_cap)));
        c.tiering.seed =
            static_cast<std::uint64_t>(get_int(t, "seed", static_cast<long>(c.tiering.seed)));
    }
    if (j.contains("tags")) {
        const json& t = j.at("tags");
        check_keys(t, "tags/", {"firm_e_map", "silence_min_fields"});
        c.tags.firm_e_map = get_num(t, "firm_e_map", c.tags.firm_e_map);
        c.tags.silence_min_fields =
            static_cast<int>(get_int(t, "silence_min_fields", c.tags.silence_min_fields));
    }
    if (j.contains("client")) {
        check_keys(j.at("client"), "client/",
                   {"endpoint", "model_id", "api_key_env", "concurrency", "rate_per_sec",
                    "max_retries"});
        c.client = synthesis::ClientConfig::from_json(j.at("client"));
    }
    if (j.contains("splits")) {
        const json& s = j.at("splits");
        check_keys(s, "splits/", {"cutoff", "test_fraction", "seed"});
        if (s.contains("cutoff")) c.splits.cutoff = Date::parse(get_str(s, "cutoff", ""));
        c.splits.test_fraction = get_num(s, "test_fraction", c.splits.test_fraction);
        if (c.splits.test_fraction < 0.0 || c.splits.test_fraction > 1.0)
            throw std::runtime_error("config: splits/test_fraction must be in [0,1]");
        c.splits.seed =
            static_cast<std::uint64_t>(get_int(s, "seed", static_cast<long>(c.splits.seed)));
    }
    if (j.contains("report")) {
        const json& r = j.at("report");
        check_keys(r, "report/", {"min_count", "bias_threshold"});
        c.report.min_count = get_int(r, "min_count", c.report.min_count);
        if (c.report.min_count < 1)
            throw std::runtime_error("config: report/min_count must be >= 1");
        c.report.bias_threshold = get_num(r, "bias_threshold", c.report.bias_threshold);
        if (c.report.bias_threshold < 0.0)
            throw std::runtime_error("config: report/bias_threshold must be >= 0");
    }
    if (j.contains("jobs")) c.jobs = static_cast<int>(get_int(j, "jobs", 0));
    if (c.jobs < 0) throw std::runtime_error("config: jobs must be >= 0");
    return c;
}

PipelineConfig PipelineConfig::load(const std::string& path) {
    json j = json::parse(read_file(path), nullptr, false);
    if (j.is_discarded()) throw std::runtime_error("config: " + path + " is not valid JSON");
    return from_json(j);
}

std::string PipelineConfig::config_hash() const {
    json j = to_json();
    j.erase("jobs");  // parallelism must not invalidate caches
    return sha256_hex(j.dump());
}

// -- stage runner -------------------------------------------------------------------

StageRunner::StageRunner(std::string out_dir, std::string config_hash)
    : out_dir_(std::move(out_dir)), config_hash_(std::move(config_hash)) {
    fs::create_directories(fs::path(out_dir_) / "manifests");
}

std::string StageRunner::manifest_path(const std::string& stage) const {
    return (fs::path(out_dir_) / "manifests" / (stage + ".json")).string();
}

bool StageRunner::run(const std::string& stage, const std::vector<std::string>& inputs,
                      const std::vector<std::string>& outputs,
                      const std::function<json()>& compute) {
    json input_hashes = json::object();
    for (const auto& path : inputs) {
        if (!fs::exists(path))
            throw std::runtime_error("stage " + stage + ": missing input " + path);
        input_hashes[path] = sha256_hex(read_file(path));
    }

    const std::string mpath = manifest_path(stage);
    if (fs::exists(mpath)) {
        json m = json::parse(read_file(mpath), nullptr, false);
        if (!m.is_discarded() && m.value("config_hash", "") == config_hash_ &&
            m.value("inputs", json::object()) == input_hashes && m.contains("outputs")) {
            bool fresh = true;
            for (const auto& path : outputs) {
                if (!fs::exists(path) || !m.at("outputs").contains(path) ||
                    m.at("outputs").at(path).get<std::string>() != sha256_hex(read_file(path))) {
                    fresh = false;
                    break;
                }
            }
            if (fresh) {
                log_.push_back("stage " + stage + ": cached");
                return true;
            }
        }
    }

    json counts;
    try {
        counts = compute();
    } catch (const std::exception& e) {
        throw std::runtime_error("stage " + stage + ": " + e.what());
    }

    json output_hashes = json::object();
    for (const auto& path : outputs) {
        if (!fs::exists(path))
            throw std::runtime_error("stage " + stage + ": compute did not write " + path);
        output_hashes[path] = sha256_hex(read_file(path));
    }

    json m;
    m["stage"] = stage;
    m["config_hash"] = config_hash_;
    m["inputs"] = std::move(input_hashes);
    m["outputs"] = std::move(output_hashes);
    m["counts"] = counts;
    write_file(mpath, m.dump(2) + "\n");
    log_.push_back("stage " + stage + ": ran " + counts.dump());
    return false;
}

// -- artifact readback --------------------------------------------------------------

std::vector<ScoreRow> load_scores_jsonl(const std::string& text) {
    std::vector<ScoreRow> rows;
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) {
        if (trim(line).empty()) continue;
        json j = json::parse(line);
        ScoreRow r;
        r.pair = PairKey::parse(j.at("pair").get<std::string>());
        const json& c = j.at("components");
        r.score.e_map = c.at("e_map").get<double>();
        r.score.e_mech = c.at("e_mech").get<double>();
        r.score.e_lit = c.at("e_lit").get<double>();
        r.score.e_src = c.at("e_src").get<double>();
        r.score.e_ctx = c.at("e_ctx").get<double>();
        r.score.e_int = c.at("e_int").get<double>();
        r.score.total = j.at("total").get<double>();
        r.score.gated = j.at("gated").get<bool>();
        rows.push_back(std::move(r));
    }
    return rows;
}

std::vector<TierRow> load_tiers_jsonl(const std::string& text) {
    std::vector<TierRow> rows;
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) {
        if (trim(line).empty()) continue;
        json j = json::parse(line);
        TierRow r;
        r.pair = PairKey::parse(j.at("pair").get<std::string>());
        const std::string name = j.at("tier").get<std::string>();
        if (name.size() < 2 || name[0] != 'T')
            throw std::runtime_error("tiers artifact: bad tier name " + name);
        r.tier = std::stoi(name.substr(1));
        r.score = j.at("score").get<double>();
        r.centroid = j.at("centroid").get<double>();
        rows.push_back(std::move(r));
    }
    return rows;
}

// Unique proteins across all cards, keyed by accession.
std::vector<ProteinRecord> collect_proteins(const std::vector<EvidenceCard>& cards) {
    std::map<std::string, const ProteinRecord*> by_acc;
    for (const auto& card : cards) {
        by_acc.emplace(card.proteins.first.accession, &card.proteins.first);
        by_acc.emplace(card.proteins.second.accession, &card.proteins.second);
    }
    std::vector<ProteinRecord> out;
    out.reserve(by_acc.size());
    for (const auto& [acc, rec] : by_acc) out.push_back(*rec);
    return out;
}

int tier_role(int tier, int k) {
    if (k <= 1) return 3;
    if (tier <= 1) return 0;  // dropped
    if (tier == k) return 3;
    return 2;
}

namespace {

double median(std::vector<double> v) {
    if (v.empty()) return 0.0;
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

}  // namespace

// -- stage kernels ------------------------------------------------------------------

SubsampleResult compute_subsample(const std::vector<EvidenceCard>& cards,
                                  const std::vector<TierRow>& tiers,
                                  const homology::SimilarityParams& sim, int jobs) {
    const auto clusters = homology::cluster(collect_proteins(cards), sim, jobs);

    int k = 0;
    for (const auto& t : tiers) k = std::max(k, t.tier);
    std::vector<homology::SubsampleInput> middles;
    std::set<PairKey> retained;
    long dropped = 0, top_kept = 0;
    for (const auto& t : tiers) {
        switch (tier_role(t.tier, k)) {
            case 0: ++dropped; break;
            case 3:
                retained.insert(t.pair);
                ++top_kept;
                break;
            default: middles.push_back({t.pair, t.score, 2}); break;
        }
    }
    std::set<PairKey> middle_kept = homology::subsample_t2(middles, clusters);
    retained.insert(middle_kept.begin(), middle_kept.end());

    json rj;
    rj["k"] = k;
    json arr = json::array();
    for (const auto& p : retained) arr.push_back(p.to_string());
    rj["retained"] = std::move(arr);
    rj["counts"] = {{"input", tiers.size()},
                    {"dropped", dropped},
                    {"top_kept", top_kept},
                    {"middle_in", middles.size()},
                    {"middle_kept", middle_kept.size()},
                    {"retained", retained.size()}};
    return {homology::dump_clusters_tsv(clusters), std::move(rj)};
}

TagsResult compute_tag_rows(const std::vector<EvidenceCard>& cards,
                            const std::vector<ScoreRow>& scores,
                            const std::vector<TierRow>& tiers, const std::set<PairKey>& retained,
                            const PipelineConfig::Tags& tag_config) {
    std::map<PairKey, const EvidenceCard*> card_by;
    for (const auto& c : cards) card_by[c.pair] = &c;
    std::map<PairKey, const scoring::EvidenceScore*> score_by;
    for (const auto& s : scores) score_by[s.pair] = &s.score;
    std::map<PairKey, TierRow> tier_by;
    for (const auto& t : tiers) tier_by[t.pair] = t;
    int k = 0;
    for (const auto& t : tiers) k = std::max(k, t.tier);

    std::vector<double> middle_e_int;
    for (const auto& p : retained)
        if (tier_role(tier_by.at(p).tier, k) == 2) middle_e_int.push_back(score_by.at(p)->e_int);
    synthesis::TagThresholds thresholds;
    thresholds.firm_e_map = tag_config.firm_e_map;
    thresholds.silence_min_fields = tag_config.silence_min_fields;
    thresholds.t2_e_int_median = median(middle_e_int);

    TagsResult result;
    long n_long = 0, n_medium = 0, n_short = 0;
    for (const auto& p : retained) {
        const TierRow& tr = tier_by.at(p);
        const int role = tier_role(tr.tier, k);
        tiering::TierAssignment ta{p, role, "T" + std::to_string(role), tr.score, tr.centroid};
        auto tags = synthesis::compute_tags(*card_by.at(p), *score_by.at(p), ta, thresholds);
        switch (tags.length) {
            case synthesis::LengthTag::long_band: ++n_long; break;
            case synthesis::LengthTag::medium_band: ++n_medium; break;
            case synthesis::LengthTag::short_band: ++n_short; break;
        }
        json row;
        row["pair"] = p.to_string();
        row["tier"] = role;
        row["tags"] = tags.to_json();
        result.jsonl += row.dump();
        result.jsonl += '\n';
    }
    result.counts = json{{"tagged", retained.size()},
                         {"long", n_long},
                         {"medium", n_medium},
                         {"short", n_short},
                         {"t2_e_int_median", thresholds.t2_e_int_median}};
    return result;
}

std::string compute_prompt_rows(const std::vector<EvidenceCard>& cards,
                                const std::string& tags_jsonl, const std::string& system_text,
                                long* count) {
    std::map<PairKey, const EvidenceCard*> card_by;
    for (const auto& c : cards) card_by[c.pair] = &c;

    std::string out;
    long n = 0;
    std::istringstream in(tags_jsonl);
    std::string line;
    while (std::getline(in, line)) {
        if (trim(line).empty()) continue;
        json row = json::parse(line);
        const PairKey pair = PairKey::parse(row.at("pair").get<std::string>());
        auto it = card_by.find(pair);
        if (it == card_by.end())
            throw std::runtime_error("prompts: tagged pair " + pair.to_string() + " has no card");
        auto tags = synthesis::ControlTags::from_json(row.at("tags"));
        auto bundle = synthesis::render_prompt(*it->second, tags, system_text);
        json pj;
        pj["pair"] = pair.to_string();
        pj["user"] = bundle.user;
        pj["tags"] = tags.to_json();
        pj["leak_terms"] = bundle.leak_terms;
        out += pj.dump();
        out += '\n';
        ++n;
    }
    if (count) *count = n;
    return out;
}

std::vector<synthesis::PromptBundle> bundles_from_prompts_jsonl(const std::string& prompts_jsonl,
                                                                const std::string& system_text) {
    std::vector<synthesis::PromptBundle> bundles;
    std::istringstream in(prompts_jsonl);
    std::string line;
    while (std::getline(in, line)) {
        if (trim(line).empty()) continue;
        json row = json::parse(line);
        synthesis::PromptBundle b;
        b.system = system_text;
        b.user = row.at("user").get<std::string>();
        b.pair = PairKey::parse(row.at("pair").get<std::string>());
        b.tags = synthesis::ControlTags::from_json(row.at("tags"));
        b.leak_terms = row.at("leak_terms").get<std::vector<std::string>>();
        bundles.push_back(std::move(b));
    }
    return bundles;
}

// -- offline mock client ------------------------------------------------------------

namespace {

// Deterministic paragraph sized to the "[Length] lo-hi words ..." line of the
// user prompt. Lexicon avoids digits, so generated text can never collide
// with accession-style leak terms.
std::string mock_paragraph(const std::string& user) {
    long lo = 0, hi = 0;
    const std::string tag = "[Length] ";
    std::size_t at = user.find(tag);
    if (at != std::string::npos) {
        std::istringstream in(user.substr(at + tag.size()));
        char dash = 0;
        in >> lo >> dash >> hi;
        if (!in || dash != '-') lo = hi = 0;
    }
    if (lo <= 0 || hi < lo) {
        lo = 80;
        hi = 140;
    }
    static const char* kLexicon[] = {
        "the",     "complex",  "binds",    "subunit",  "with",    "assembly", "interface",
        "stable",  "partner",  "activity", "observed", "support", "evidence", "suggests",
        "contact", "residues", "surface",  "affinity", "forms",   "module",
    };
    constexpr std::size_t kWords = sizeof(kLexicon) / sizeof(kLexicon[0]);
    Rng rng(0x9e3779b97f4a7c15ULL ^ std::hash<std::string>{}(user));
    const long target = (lo + hi) / 2;
    std::string out;
    for (long i = 0; i < target; ++i) {
        if (i) out += ' ';
        out += kLexicon[rng.next_below(kWords)];
    }
    out += '.';
    return out;
}

}  // namespace

std::unique_ptr<synthesis::LlmClient> make_client(const synthesis::ClientConfig& config) {
    if (config.endpoint == "mock://judge") {
        // Deterministic verdict JSON, for offline judge runs.
        return std::make_unique<synthesis::MockClient>(
            [](const synthesis::LlmRequest& req, int) {
                Rng rng(0x51ed270b2f6db2ULL ^ std::hash<std::string>{}(req.user));
                json v;
                v["entity"] = static_cast<int>(5 + rng.next_below(6));
                v["interaction"] = static_cast<int>(4 + rng.next_below(7));
                v["mechanism"] = rng.next_double() < 0.2
                                     ? json("NA")
                                     : json(static_cast<int>(3 + rng.next_below(8)));
                v["note"] = "Prediction tracks the card with minor omissions.";
                synthesis::LlmResponse resp;
                resp.http_status = 200;
                resp.text = v.dump();
                resp.prompt_tokens = static_cast<long>(req.user.size() / 4);
                resp.completion_tokens = 24;
                return resp;
            });
    }
    if (config.endpoint.rfind("mock://", 0) == 0) {
        return std::make_unique<synthesis::MockClient>(
            [](const synthesis::LlmRequest& req, int) {
                synthesis::LlmResponse resp;
                resp.http_status = 200;
                resp.text = mock_paragraph(req.user);
                resp.prompt_tokens = static_cast<long>(req.user.size() / 4);
                resp.completion_tokens = static_cast<long>(resp.text.size() / 4);
                return resp;
            });
    }
    return synthesis::make_http_client(config);
}

// -- pipeline -----------------------------------------------------------------------

std::vector<std::string> run_pipeline(const PipelineConfig& config) {
    const fs::path out(config.paths.out_dir);
    fs::create_directories(out);
    StageRunner runner(config.paths.out_dir, config.config_hash());

    const std::string cards_path = (out / "cards.jsonl").string();
    const std::string rejects_path = (out / "rejects.jsonl").string();
    const std::string scores_path = (out / "scores.jsonl").string();
    const std::string tiers_path = (out / "tiers.jsonl").string();
    const std::string diag_path = (out / "tier_diagnostics.json").string();
    const std::string clusters_path = (out / "clusters.tsv").string();
    const std::string retained_path = (out / "retained.json").string();
    const std::string tags_path = (out / "tags.jsonl").string();
    const std::string prompts_path = (out / "prompts.jsonl").string();
    const std::string records_path = (out / "records.jsonl").string();

    // ingest
    std::vector<std::string> ingest_inputs;
    if (!config.paths.mitab.empty()) ingest_inputs.push_back(config.paths.mitab);
    if (!config.paths.string_links.empty()) ingest_inputs.push_back(config.paths.string_links);
    for (const auto& in : config.paths.jsonl) ingest_inputs.push_back(in.path);
    if (!config.paths.fasta.empty()) ingest_inputs.push_back(config.paths.fasta);

    runner.run("ingest", ingest_inputs, {cards_path, rejects_path}, [&]() {
        std::vector<PartialCard> partials;
        std::vector<ingest::Reject> rejects;
        long skipped = 0, lines = 0;
        auto take = [&](ingest::ParseResult r) {
            std::move(r.cards.begin(), r.cards.end(), std::back_inserter(partials));
            std::move(r.rejects.begin(), r.rejects.end(), std::back_inserter(rejects));
            skipped += r.skipped;
            lines += r.total_lines;
        };
        if (!config.paths.mitab.empty()) take(ingest::parse_mitab(read_file(config.paths.mitab)));
        if (!config.paths.string_links.empty())
            take(ingest::parse_string_links(read_file(config.paths.string_links)));
        for (const auto& in : config.paths.jsonl)
            take(ingest::parse_generic_jsonl(read_file(in.path), *source_from_name(in.source)));
        if (!config.paths.fasta.empty()) {
            for (auto& rec : homology::parse_fasta(read_file(config.paths.fasta))) {
                PartialCard pc;
                pc.proteins.push_back(std::move(rec));
                partials.push_back(std::move(pc));
            }
        }
        std::vector<EvidenceCard> cards = ingest::merge_cards(partials);
        write_file(cards_path, dump_cards_jsonl(cards));
        write_file(rejects_path, ingest::dump_rejects_jsonl(rejects));
        return json{{"lines", lines},
                    {"cards", cards.size()},
                    {"rejects", rejects.size()},
                    {"skipped", skipped}};
    });

    // score
    runner.run("score", {cards_path}, {scores_path}, [&]() {
        const auto cards = load_cards_jsonl(read_file(cards_path));
        std::vector<PairKey> pairs;
        std::vector<scoring::EvidenceScore> scores;
        pairs.reserve(cards.size());
        scores.reserve(cards.size());
        for (const auto& card : cards) {
            pairs.push_back(card.pair);
            scores.push_back(scoring::score(card));
        }
        write_file(scores_path, scoring::dump_scores_jsonl(pairs, scores, false));
        return json{{"cards", cards.size()}};
    });

    // tier
    runner.run("tier", {scores_path}, {tiers_path, diag_path}, [&]() {
        const auto rows = load_scores_jsonl(read_file(scores_path));
        if (rows.empty()) {
            write_file(tiers_path, "");
            write_file(diag_path, json{{"chosen_k", 0}, {"warning", "empty input"}}.dump(2) + "\n");
            return json{{"pairs", 0}, {"chosen_k", 0}};
        }
        std::vector<double> totals;
        std::vector<std::pair<PairKey, double>> scored;
        totals.reserve(rows.size());
        for (const auto& r : rows) {
            totals.push_back(r.score.total);
            scored.emplace_back(r.pair, r.score.total);
        }
        auto diag = tiering::select_k(totals, config.tiering.k_max, config.tiering.subsample_cap,
                                      config.tiering.seed);
        auto tiers = tiering::assign_tiers(scored, diag.centroids);
        write_file(tiers_path, tiering::dump_tiers_jsonl(tiers));
        write_file(diag_path, diag.to_json().dump(2) + "\n");
        return json{{"pairs", rows.size()}, {"chosen_k", diag.chosen_k}};
    });

    // subsample
    runner.run("subsample", {cards_path, tiers_path}, {clusters_path, retained_path}, [&]() {
        const auto cards = load_cards_jsonl(read_file(cards_path));
        const auto tiers = load_tiers_jsonl(read_file(tiers_path));
        SubsampleResult r = compute_subsample(cards, tiers, config.similarity, config.jobs);
        write_file(clusters_path, r.clusters_tsv);
        write_file(retained_path, r.retained_json.dump(2) + "\n");
        return r.retained_json["counts"];
    });

    // tags
    runner.run("tags", {cards_path, scores_path, tiers_path, retained_path}, {tags_path}, [&]() {
        const auto cards = load_cards_jsonl(read_file(cards_path));
        const auto scores = load_scores_jsonl(read_file(scores_path));
        const auto tiers = load_tiers_jsonl(read_file(tiers_path));
        const json rj = json::parse(read_file(retained_path));
        std::set<PairKey> retained;
        for (const auto& p : rj.at("retained"))
            retained.insert(PairKey::parse(p.get<std::string>()));
        TagsResult r = compute_tag_rows(cards, scores, tiers, retained, config.tags);
        write_file(tags_path, r.jsonl);
        return r.counts;
    });

    // prompts
    runner.run("prompts", {cards_path, tags_path, config.paths.synthesis_system}, {prompts_path},
               [&]() {
                   const auto cards = load_cards_jsonl(read_file(cards_path));
                   const std::string system_text = read_file(config.paths.synthesis_system);
                   long n = 0;
                   write_file(prompts_path, compute_prompt_rows(cards, read_file(tags_path),
                                                                system_text, &n));
                   return json{{"prompts", n}};
               });

    // synth (only when a client is configured); the journal is a working file,
    // not an artifact - the sorted records file is the deterministic output.
    if (config.client) {
        runner.run("synth", {prompts_path, config.paths.synthesis_system}, {records_path}, [&]() {
            const std::string system_text = read_file(config.paths.synthesis_system);
            auto bundles = bundles_from_prompts_jsonl(read_file(prompts_path), system_text);
            auto client = make_client(*config.client);
            synthesis::SynthesisOptions options;
            options.concurrency = config.client->concurrency;
            options.rate_per_sec = config.client->rate_per_sec;
            options.max_retries = config.client->max_retries;
            auto records =
                synthesis::synthesize(bundles, *client, config.client->model_id,
                                      (out / "synth_journal.jsonl").string(), options);
            std::sort(records.begin(), records.end(),
                      [](const synthesis::SynthesisRecord& a, const synthesis::SynthesisRecord& b) {
                          return a.pair < b.pair;
                      });
            long ok = 0, refused = 0, invalid = 0;
            for (const auto& r : records) {
                if (r.status == synthesis::SynthesisStatus::ok) ++ok;
                else if (r.status == synthesis::SynthesisStatus::refused) ++refused;
                else ++invalid;
            }
            write_file(records_path, synthesis::dump_records_jsonl(records));
            return json{{"records", records.size()}, {"ok", ok},
                        {"refused", refused},        {"invalid", invalid}};
        });
    }

    return runner.log();
}

// -- retention-bias report ----------------------------------------------------------

BiasReport bias_report(const std::vector<EvidenceCard>& cards, const std::set<PairKey>& retained,
                       long min_count, double bias_threshold) {
    if (min_count < 1) throw std::invalid_argument("bias_report: min_count must be >= 1");
    std::set<PairKey> raw_pairs;
    for (const auto& c : cards) raw_pairs.insert(c.pair);
    for (const auto& p : retained)
        if (!raw_pairs.count(p))
            throw std::runtime_error("bias_report: retained pair " + p.to_string() +
                                     " not present in the raw corpus");

    BiasReport report;
    if (cards.empty()) return report;
    report.overall_rate = static_cast<double>(retained.size()) / static_cast<double>(cards.size());
    if (report.overall_rate == 0.0)
        throw std::runtime_error("bias_report: nothing retained; rate ratios are undefined");

    std::map<std::string, std::pair<long, long>> freq;  // keyword -> (raw, retained)
    for (const auto& c : cards) {
        const bool kept = retained.count(c.pair) != 0;
        for (const auto& kw : c.keywords) {
            auto& f = freq[kw];
            ++f.first;
            if (kept) ++f.second;
        }
    }

    for (const auto& [kw, f] : freq) {
        if (f.first < min_count) continue;
        BiasRow row;
        row.keyword = kw;
        row.raw = f.first;
        row.retained = f.second;
        row.rate = static_cast<double>(f.second) / static_cast<double>(f.first);
        if (row.rate == 0.0) {
            row.bias_is_neg_inf = true;
            row.bias = -std::numeric_limits<double>::infinity();
            row.cls = "depleted";
        } else {
            row.bias = std::log2(row.rate / report.overall_rate);
            row.cls = row.bias > bias_threshold    ? "enriched"
                      : row.bias < -bias_threshold ? "depleted"
                                                   : "balanced";
        }
        if (row.cls == "enriched") ++report.enriched;
        else if (row.cls == "depleted") ++report.depleted;
        else ++report.balanced;
        report.rows.push_back(std::move(row));
    }
    return report;
}

json BiasReport::to_json() const {
    json rows_json = json::array();
    for (const auto& r : rows) {
        json row;
        row["keyword"] = r.keyword;
        row["raw"] = r.raw;
        row["retained"] = r.retained;
        row["rate"] = r.rate;
        if (r.bias_is_neg_inf) row["bias"] = nullptr;  // JSON cannot carry -inf
        else row["bias"] = r.bias;
        row["class"] = r.cls;
        rows_json.push_back(std::move(row));
    }
    json j;
    j["overall_rate"] = overall_rate;
    j["keywords"] = rows.size();
    j["enriched"] = enriched;
    j["balanced"] = balanced;
    j["depleted"] = depleted;
    j["rows"] = std::move(rows_json);
    return j;
}

std::string BiasReport::to_csv() const {
    std::string out = "keyword,raw,retained,rate,bias,class\n";
    for (const auto& r : rows) {
        out += r.keyword;
        out += ',';
        out += std::to_string(r.raw);
        out += ',';
        out += std::to_string(r.retained);
        out += ',';
        out += format_double(r.rate);
        out += ',';
        out += r.bias_is_neg_inf ? "-inf" : format_double(r.bias);
        out += ',';
        out += r.cls;
        out += '\n';
    }
    return out;
}

}  // namespace ppikit::pipeline
