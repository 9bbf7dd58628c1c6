// ppikit: batch toolchain for evidence-card construction, tiering,
// split building, synthesis prompting, and evaluation.

#include <filesystem>
#include <functional>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "ppikit/corpusgen.hpp"
#include "ppikit/eval.hpp"
#include "ppikit/homology.hpp"
#include "ppikit/ingest.hpp"
#include "ppikit/pacorope.hpp"
#include "ppikit/pipeline.hpp"
#include "ppikit/scoring.hpp"
#include "ppikit/splits.hpp"
#include "ppikit/synthesis.hpp"
#include "ppikit/tiering.hpp"
#include "ppikit/util.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace ppikit;

namespace {

struct Globals {
    std::optional<std::uint64_t> seed;
    std::string config_path;
    int jobs = 0;
};

void write_out(const std::string& path, const std::string& text) {
    if (fs::path(path).has_parent_path()) fs::create_directories(fs::path(path).parent_path());
    write_file(path, text);
}

std::vector<EvidenceCard> read_cards(const std::string& path) {
    return load_cards_jsonl(read_file(path));
}

synthesis::ClientConfig read_client(const std::string& path) {
    return synthesis::ClientConfig::from_json(json::parse(read_file(path)));
}

std::set<PairKey> read_retained(const std::string& path) {
    const json j = json::parse(read_file(path));
    std::set<PairKey> retained;
    for (const auto& p : j.at("retained")) retained.insert(PairKey::parse(p.get<std::string>()));
    return retained;
}

// Accepts synthesis-records JSONL or any {"pair"/"id", "description"/"text"} rows.
struct PredRow {
    std::string id;
    std::string text;
    bool ok = true;
};

std::vector<PredRow> read_predictions(const std::string& path) {
    std::vector<PredRow> rows;
    std::istringstream in(read_file(path));
    std::string line;
    long lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (trim(line).empty()) continue;
        json j = json::parse(line, nullptr, false);
        if (j.is_discarded() || !j.is_object())
            throw std::runtime_error(path + ":" + std::to_string(lineno) + ": not a JSON object");
        PredRow r;
        if (j.contains("pair")) r.id = j.at("pair").get<std::string>();
        else if (j.contains("id")) r.id = j.at("id").get<std::string>();
        else
            throw std::runtime_error(path + ":" + std::to_string(lineno) +
                                     ": row needs a \"pair\" or \"id\" key");
        if (j.contains("description")) r.text = j.at("description").get<std::string>();
        else if (j.contains("text")) r.text = j.at("text").get<std::string>();
        else
            throw std::runtime_error(path + ":" + std::to_string(lineno) +
                                     ": row needs a \"description\" or \"text\" key");
        if (j.contains("status")) r.ok = j.at("status").get<std::string>() == "ok";
        rows.push_back(std::move(r));
    }
    return rows;
}

std::map<std::string, std::string> sequence_map(const std::vector<EvidenceCard>& cards) {
    std::map<std::string, std::string> sequences;
    for (const auto& p : pipeline::collect_proteins(cards)) sequences[p.accession] = p.sequence;
    return sequences;
}

// -- subcommand bodies ---------------------------------------------------------------

int cmd_ingest(const std::string& mitab, const std::string& string_links,
               const std::vector<std::string>& jsonl_specs, const std::string& fasta,
               const std::string& out, const std::string& rejects_out) {
    std::vector<PartialCard> partials;
    std::vector<ingest::Reject> rejects;
    auto take = [&](ingest::ParseResult r) {
        std::move(r.cards.begin(), r.cards.end(), std::back_inserter(partials));
        std::move(r.rejects.begin(), r.rejects.end(), std::back_inserter(rejects));
    };
    if (!mitab.empty()) take(ingest::parse_mitab(read_file(mitab)));
    if (!string_links.empty()) take(ingest::parse_string_links(read_file(string_links)));
    for (const auto& spec : jsonl_specs) {
        const auto eq = spec.find('=');
        if (eq == std::string::npos)
            throw std::runtime_error("--jsonl expects SOURCE=PATH, got \"" + spec + "\"");
        const auto source = source_from_name(spec.substr(0, eq));
        if (!source) throw std::runtime_error("unknown source \"" + spec.substr(0, eq) + "\"");
        take(ingest::parse_generic_jsonl(read_file(spec.substr(eq + 1)), *source));
    }
    if (!fasta.empty()) {
        for (auto& rec : homology::parse_fasta(read_file(fasta))) {
            PartialCard pc;
            pc.proteins.push_back(std::move(rec));
            partials.push_back(std::move(pc));
        }
    }
    auto cards = ingest::merge_cards(partials);
    write_out(out, dump_cards_jsonl(cards));
    if (!rejects_out.empty()) write_out(rejects_out, ingest::dump_rejects_jsonl(rejects));
    std::cout << "cards: " << cards.size() << "  rejects: " << rejects.size() << "\n";
    return 0;
}

int cmd_score(const std::string& cards_path, const std::string& out, bool with_trace) {
    const auto cards = read_cards(cards_path);
    std::vector<PairKey> pairs;
    std::vector<scoring::EvidenceScore> scores;
    for (const auto& card : cards) {
        pairs.push_back(card.pair);
        scores.push_back(scoring::score(card));
    }
    write_out(out, scoring::dump_scores_jsonl(pairs, scores, with_trace));
    std::cout << "scored: " << pairs.size() << "\n";
    return 0;
}

int cmd_tier(const std::string& scores_path, const std::string& out, const std::string& diag_out,
             int k_max, std::uint64_t cap, std::uint64_t seed) {
    const auto rows = pipeline::load_scores_jsonl(read_file(scores_path));
    if (rows.empty()) throw std::runtime_error("no scores in " + scores_path);
    std::vector<double> totals;
    std::vector<std::pair<PairKey, double>> scored;
    for (const auto& r : rows) {
        totals.push_back(r.score.total);
        scored.emplace_back(r.pair, r.score.total);
    }
    auto diag = tiering::select_k(totals, k_max, cap, seed);
    write_out(out, tiering::dump_tiers_jsonl(tiering::assign_tiers(scored, diag.centroids)));
    if (!diag_out.empty()) write_out(diag_out, diag.to_json().dump(2) + "\n");
    std::cout << "chosen_k: " << diag.chosen_k;
    if (!diag.warning.empty()) std::cout << "  warning: " << diag.warning;
    std::cout << "\n";
    return 0;
}

int cmd_subsample(const std::string& cards_path, const std::string& tiers_path,
                  const std::string& out, const std::string& clusters_out,
                  const homology::SimilarityParams& params, int jobs) {
    const auto cards = read_cards(cards_path);
    const auto tiers = pipeline::load_tiers_jsonl(read_file(tiers_path));
    auto result = pipeline::compute_subsample(cards, tiers, params, jobs);
    write_out(out, result.retained_json.dump(2) + "\n");
    if (!clusters_out.empty()) write_out(clusters_out, result.clusters_tsv);
    std::cout << result.retained_json["counts"].dump() << "\n";
    return 0;
}

int cmd_split_temporal(const std::string& cards_path, const std::string& cutoff,
                       const std::string& out, const homology::SimilarityParams& params,
                       int jobs) {
    const auto cards = read_cards(cards_path);
    std::vector<splits::DatedPair> pairs;
    for (const auto& c : cards) pairs.push_back({c.pair, c.first_annotated});
    homology::SimilarityCache cache(sequence_map(cards), params);
    auto manifest = splits::split_temporal(pairs, cache, Date::parse(cutoff), jobs);
    write_out(out, manifest.to_json().dump(2) + "\n");
    std::cout << "train: " << manifest.train.size() << "  test: " << manifest.test.size()
              << "  removed: " << manifest.removed.size()
              << "  audit: " << (manifest.audit.passed ? "pass" : "FAIL") << "\n";
    return 0;
}

int cmd_split_c3(const std::string& cards_path, double test_fraction, std::uint64_t seed,
                 const std::string& out, const homology::SimilarityParams& params, int jobs) {
    const auto cards = read_cards(cards_path);
    std::vector<PairKey> pairs;
    for (const auto& c : cards) pairs.push_back(c.pair);
    homology::SimilarityCache cache(sequence_map(cards), params);
    const auto clusters = homology::cluster(pipeline::collect_proteins(cards), params, jobs);
    auto manifest = splits::split_c3(pairs, cache, clusters, test_fraction, seed, jobs);
    write_out(out, manifest.to_json().dump(2) + "\n");
    std::cout << "train: " << manifest.train.size() << "  test: " << manifest.test.size()
              << "  removed: " << manifest.removed.size()
              << "  audit: " << (manifest.audit.passed ? "pass" : "FAIL") << "\n";
    return 0;
}

int cmd_synth_tags(const std::string& cards_path, const std::string& scores_path,
                   const std::string& tiers_path, const std::string& retained_path,
                   const std::string& out, double firm_e_map, int silence_min_fields) {
    const auto cards = read_cards(cards_path);
    const auto scores = pipeline::load_scores_jsonl(read_file(scores_path));
    const auto tiers = pipeline::load_tiers_jsonl(read_file(tiers_path));
    const auto retained = read_retained(retained_path);
    pipeline::PipelineConfig::Tags tag_config{firm_e_map, silence_min_fields};
    auto result = pipeline::compute_tag_rows(cards, scores, tiers, retained, tag_config);
    write_out(out, result.jsonl);
    std::cout << result.counts.dump() << "\n";
    return 0;
}

int cmd_synth_render(const std::string& cards_path, const std::string& tags_path,
                     const std::string& system_path, const std::string& out) {
    const auto cards = read_cards(cards_path);
    long n = 0;
    write_out(out, pipeline::compute_prompt_rows(cards, read_file(tags_path),
                                                 read_file(system_path), &n));
    std::cout << "prompts: " << n << "\n";
    return 0;
}

int cmd_synth_run(const std::string& prompts_path, const std::string& system_path,
                  const std::string& client_path, const std::string& journal_path,
                  const std::string& out, bool resume) {
    if (fs::exists(journal_path) && !resume)
        throw std::runtime_error("journal " + journal_path +
                                 " already exists; pass --resume to continue it or remove it");
    const auto client_config = read_client(client_path);
    auto bundles = pipeline::bundles_from_prompts_jsonl(read_file(prompts_path),
                                                        read_file(system_path));
    auto client = pipeline::make_client(client_config);
    synthesis::SynthesisOptions options;
    options.concurrency = client_config.concurrency;
    options.rate_per_sec = client_config.rate_per_sec;
    options.max_retries = client_config.max_retries;
    auto records = synthesis::synthesize(bundles, *client, client_config.model_id, journal_path,
                                         options);
    std::sort(records.begin(), records.end(),
              [](const synthesis::SynthesisRecord& a, const synthesis::SynthesisRecord& b) {
                  return a.pair < b.pair;
              });
    write_out(out, synthesis::dump_records_jsonl(records));
    long ok = 0;
    for (const auto& r : records)
        if (r.status == synthesis::SynthesisStatus::ok) ++ok;
    std::cout << "records: " << records.size() << "  ok: " << ok << "\n";
    return 0;
}

int cmd_eval_lexical(const std::string& pred_path, const std::string& ref_path,
                     const std::string& out_csv, const std::string& out_json) {
    const auto preds = read_predictions(pred_path);
    std::map<std::string, std::string> refs;
    for (const auto& r : read_predictions(ref_path)) refs[r.id] = r.text;
    std::vector<std::string> ids, candidates, references;
    for (const auto& p : preds) {
        auto it = refs.find(p.id);
        if (it == refs.end())
            throw std::runtime_error("no reference for prediction id \"" + p.id + "\"");
        ids.push_back(p.id);
        candidates.push_back(p.text);
        references.push_back(it->second);
    }
    auto report = eval::lexical_report(ids, candidates, references);
    if (!out_csv.empty()) write_out(out_csv, report.to_csv());
    if (!out_json.empty()) write_out(out_json, report.to_json().dump(2) + "\n");
    std::cout << "bleu2 " << format_double(report.mean.bleu2) << "  bleu4 "
              << format_double(report.mean.bleu4) << "  rouge1 "
              << format_double(report.mean.rouge1_f) << "  rouge2 "
              << format_double(report.mean.rouge2_f) << "  rougeL "
              << format_double(report.mean.rougeL_f) << "  (n=" << report.rows.size() << ")\n";
    return 0;
}

int cmd_eval_judge(const std::string& pred_path, const std::string& cards_path,
                   const std::string& system_path, const std::string& client_path,
                   const std::string& journal_path, const std::string& out, bool resume) {
    if (fs::exists(journal_path) && !resume)
        throw std::runtime_error("journal " + journal_path +
                                 " already exists; pass --resume to continue it or remove it");
    const auto all_cards = read_cards(cards_path);
    std::map<std::string, const EvidenceCard*> card_by;
    for (const auto& c : all_cards) card_by[c.pair.to_string()] = &c;

    std::vector<EvidenceCard> cards;
    std::vector<std::string> predictions;
    for (const auto& p : read_predictions(pred_path)) {
        if (!p.ok) continue;  // refused/invalid synthesis rows carry no text to judge
        auto it = card_by.find(p.id);
        if (it == card_by.end())
            throw std::runtime_error("no evidence card for prediction \"" + p.id + "\"");
        cards.push_back(*it->second);
        predictions.push_back(p.text);
    }

    const auto client_config = read_client(client_path);
    auto client = pipeline::make_client(client_config);
    synthesis::SynthesisOptions options;
    options.concurrency = client_config.concurrency;
    options.rate_per_sec = client_config.rate_per_sec;
    options.max_retries = client_config.max_retries;
    auto records = eval::run_judge(cards, predictions, read_file(system_path), *client,
                                   client_config.model_id, journal_path, options);
    auto verdicts = eval::parse_judge_records(records);
    auto agg = eval::aggregate(verdicts);

    json j;
    j["aggregate"] = agg.to_json();
    json rows = json::array();
    for (std::size_t i = 0; i < verdicts.size(); ++i) {
        json row = verdicts[i].to_json();
        row["pair"] = records[i].pair.to_string();
        rows.push_back(std::move(row));
    }
    j["verdicts"] = std::move(rows);
    write_out(out, j.dump(2) + "\n");
    std::cout << j["aggregate"].dump() << "\n";
    return 0;
}

int cmd_pacorope_check(std::size_t lmax, std::size_t grid, const std::string& out) {
    bool all_passed = true;
    double worst_margin = 1e300;
    json reports = json::array();
    for (std::size_t lp = 1; lp <= lmax; ++lp) {
        pacorope::PromptLayout layout;
        layout.segments.push_back(pacorope::TextSpan{4});
        layout.segments.push_back(pacorope::ProteinSpan{'A', lp, 4});
        layout.segments.push_back(pacorope::ProteinSpan{'B', lp, 4});
        layout.segments.push_back(pacorope::PairMapGrid{grid, grid, lp, lp});
        auto report = pacorope::check_alignment_bound(layout);
        all_passed = all_passed && report.passed;
        const double margin = std::min(report.bound_a - report.max_deviation_a,
                                       report.bound_b - report.max_deviation_b);
        worst_margin = std::min(worst_margin, margin);
        if (lp == lmax || !report.passed) reports.push_back(report.to_json());
    }
    json j;
    j["lmax"] = lmax;
    j["grid"] = grid;
    j["passed"] = all_passed;
    j["worst_margin"] = worst_margin;
    j["reports"] = std::move(reports);
    if (!out.empty()) write_out(out, j.dump(2) + "\n");
    std::cout << "alignment bound " << (all_passed ? "holds" : "VIOLATED") << " for L' in [1,"
              << lmax << "], grid " << grid << "x" << grid << "\n";
    return all_passed ? 0 : 1;
}

int cmd_pacorope_dump(std::size_t text, std::size_t la, std::size_t lb, std::size_t grid,
                      std::size_t stride, const std::string& out) {
    pacorope::PromptLayout layout;
    if (text) layout.segments.push_back(pacorope::TextSpan{text});
    if (la) layout.segments.push_back(pacorope::ProteinSpan{'A', la, stride});
    if (lb) layout.segments.push_back(pacorope::ProteinSpan{'B', lb, stride});
    if (grid) {
        if (!la || !lb) throw std::runtime_error("--grid needs both --la and --lb");
        layout.segments.push_back(pacorope::PairMapGrid{grid, grid, la, lb});
    }
    const json j = pacorope::positions_json(layout);
    if (!out.empty()) write_out(out, j.dump(2) + "\n");
    else std::cout << j.dump(2) << "\n";
    return 0;
}

int cmd_report(const std::string& cards_path, const std::string& retained_path, long min_count,
               double threshold, const std::string& out_csv, const std::string& out_json) {
    const auto cards = read_cards(cards_path);
    const auto retained = read_retained(retained_path);
    auto report = pipeline::bias_report(cards, retained, min_count, threshold);
    if (!out_csv.empty()) write_out(out_csv, report.to_csv());
    if (!out_json.empty()) write_out(out_json, report.to_json().dump(2) + "\n");
    std::cout << "keywords: " << report.rows.size() << "  enriched: " << report.enriched
              << "  balanced: " << report.balanced << "  depleted: " << report.depleted << "\n";
    return 0;
}

int cmd_run(const Globals& globals, bool print_effective) {
    if (globals.config_path.empty()) throw std::runtime_error("run requires --config");
    auto config = pipeline::PipelineConfig::load(globals.config_path);
    if (globals.jobs) config.jobs = globals.jobs;
    if (globals.seed) {
        config.tiering.seed = *globals.seed;
        config.splits.seed = *globals.seed;
    }
    if (print_effective) {
        std::cout << config.to_json().dump(2) << "\n";
        return 0;
    }
    for (const auto& line : pipeline::run_pipeline(config)) std::cout << line << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"evidence-card toolchain"};
    app.require_subcommand(1);

    Globals globals;
    std::uint64_t seed_arg = 0;
    auto* seed_opt = app.add_option("--seed", seed_arg, "override stage seeds");
    app.add_option("--config", globals.config_path, "pipeline config JSON");
    app.add_option("--jobs", globals.jobs, "worker threads (0 = hardware)");

    // ingest
    std::string mitab, string_links, fasta, out, rejects_out;
    std::vector<std::string> jsonl_specs;
    auto* ingest_cmd = app.add_subcommand("ingest", "parse + merge evidence inputs");
    ingest_cmd->add_option("--mitab", mitab, "PSI-MITAB file");
    ingest_cmd->add_option("--string", string_links, "STRING links file");
    ingest_cmd->add_option("--jsonl", jsonl_specs, "SOURCE=PATH evidence JSONL")->take_all();
    ingest_cmd->add_option("--fasta", fasta, "protein sequences");
    ingest_cmd->add_option("--out", out, "cards JSONL output")->required();
    ingest_cmd->add_option("--rejects", rejects_out, "rejected-lines JSONL output");

    // score
    std::string cards_path, scores_out;
    bool with_trace = false;
    auto* score_cmd = app.add_subcommand("score", "evidence-score cards");
    score_cmd->add_option("--cards", cards_path, "cards JSONL")->required();
    score_cmd->add_option("--out", scores_out, "scores JSONL output")->required();
    score_cmd->add_flag("--trace", with_trace, "include per-rule traces");

    // tier
    std::string scores_path, tiers_out, diag_out;
    int k_max = 8;
    std::uint64_t cap = 200000;
    auto* tier_cmd = app.add_subcommand("tier", "cluster scores into tiers");
    tier_cmd->add_option("--scores", scores_path, "scores JSONL")->required();
    tier_cmd->add_option("--out", tiers_out, "tiers JSONL output")->required();
    tier_cmd->add_option("--diagnostics", diag_out, "k-selection diagnostics JSON");
    tier_cmd->add_option("--k-max", k_max, "largest k probed");
    tier_cmd->add_option("--cap", cap, "silhouette subsample cap");

    // subsample
    std::string tiers_path, retained_out, clusters_out;
    homology::SimilarityParams sim_params;
    auto add_sim_options = [&sim_params](CLI::App* cmd) {
        cmd->add_option("--min-identity", sim_params.min_identity, "similarity identity floor");
        cmd->add_option("--min-coverage", sim_params.min_coverage, "similarity coverage floor");
    };
    auto* subsample_cmd = app.add_subcommand("subsample", "drop bottom tier, thin middle tiers");
    subsample_cmd->add_option("--cards", cards_path, "cards JSONL")->required();
    subsample_cmd->add_option("--tiers", tiers_path, "tiers JSONL")->required();
    subsample_cmd->add_option("--out", retained_out, "retained-set JSON output")->required();
    subsample_cmd->add_option("--clusters", clusters_out, "clusters TSV output");
    add_sim_options(subsample_cmd);

    // split
    auto* split_cmd = app.add_subcommand("split", "build decontaminated splits");
    split_cmd->require_subcommand(1);
    std::string cutoff, manifest_out;
    auto* temporal_cmd = split_cmd->add_subcommand("temporal", "annotation-date holdout");
    temporal_cmd->add_option("--cards", cards_path, "cards JSONL")->required();
    temporal_cmd->add_option("--cutoff", cutoff, "YYYY-MM-DD")->required();
    temporal_cmd->add_option("--out", manifest_out, "split manifest output")->required();
    add_sim_options(temporal_cmd);
    double test_fraction = 0.01;
    auto* c3_cmd = split_cmd->add_subcommand("c3", "cluster-sampled hard split");
    c3_cmd->add_option("--cards", cards_path, "cards JSONL")->required();
    c3_cmd->add_option("--test-fraction", test_fraction, "target test share");
    c3_cmd->add_option("--out", manifest_out, "split manifest output")->required();
    add_sim_options(c3_cmd);

    // synth
    auto* synth_cmd = app.add_subcommand("synth", "control tags, prompts, labeling runs");
    synth_cmd->require_subcommand(1);
    std::string retained_path, tags_out;
    double firm_e_map = 4.0;
    int silence_min_fields = 2;
    auto* tags_cmd = synth_cmd->add_subcommand("tags", "compute control tags");
    tags_cmd->add_option("--cards", cards_path, "cards JSONL")->required();
    tags_cmd->add_option("--scores", scores_path, "scores JSONL")->required();
    tags_cmd->add_option("--tiers", tiers_path, "tiers JSONL")->required();
    tags_cmd->add_option("--retained", retained_path, "retained-set JSON")->required();
    tags_cmd->add_option("--out", tags_out, "tags JSONL output")->required();
    tags_cmd->add_option("--firm-e-map", firm_e_map, "mapping score for a firm verb");
    tags_cmd->add_option("--silence-min-fields", silence_min_fields,
                         "annotation fields needed to escape silence");

    std::string tags_path, system_path, prompts_out;
    auto* render_cmd = synth_cmd->add_subcommand("render", "render labeled prompts");
    render_cmd->add_option("--cards", cards_path, "cards JSONL")->required();
    render_cmd->add_option("--tags", tags_path, "tags JSONL")->required();
    render_cmd->add_option("--system", system_path, "system prompt file")->required();
    render_cmd->add_option("--out", prompts_out, "prompts JSONL output")->required();

    std::string prompts_path, client_path, journal_path, records_out;
    bool resume = false;
    auto* run_synth_cmd = synth_cmd->add_subcommand("run", "journaled labeling run");
    run_synth_cmd->add_option("--prompts", prompts_path, "prompts JSONL")->required();
    run_synth_cmd->add_option("--system", system_path, "system prompt file")->required();
    run_synth_cmd->add_option("--client", client_path, "client config JSON")->required();
    run_synth_cmd->add_option("--journal", journal_path, "append-only journal path")->required();
    run_synth_cmd->add_option("--out", records_out, "records JSONL output")->required();
    run_synth_cmd->add_flag("--resume", resume, "continue an existing journal");

    // eval
    auto* eval_cmd = app.add_subcommand("eval", "lexical metrics and judge harness");
    eval_cmd->require_subcommand(1);
    std::string pred_path, ref_path, out_csv, out_json;
    auto* lexical_cmd = eval_cmd->add_subcommand("lexical", "BLEU/ROUGE against references");
    lexical_cmd->add_option("--pred", pred_path, "predictions JSONL")->required();
    lexical_cmd->add_option("--ref", ref_path, "references JSONL")->required();
    lexical_cmd->add_option("--out-csv", out_csv, "per-sample CSV output");
    lexical_cmd->add_option("--out-json", out_json, "report JSON output");

    std::string verdicts_out;
    bool judge_resume = false;
    auto* judge_cmd = eval_cmd->add_subcommand("judge", "rubric-based model grading");
    judge_cmd->add_option("--pred", pred_path, "predictions JSONL")->required();
    judge_cmd->add_option("--cards", cards_path, "cards JSONL")->required();
    judge_cmd->add_option("--system", system_path, "judge system prompt")->required();
    judge_cmd->add_option("--client", client_path, "client config JSON")->required();
    judge_cmd->add_option("--journal", journal_path, "append-only journal path")->required();
    judge_cmd->add_option("--out", verdicts_out, "verdicts JSON output")->required();
    judge_cmd->add_flag("--resume", judge_resume, "continue an existing journal");

    // pacorope
    auto* paco_cmd = app.add_subcommand("pacorope", "positional-encoding kernel checks");
    paco_cmd->require_subcommand(1);
    std::size_t lmax = 512, grid = 32;
    std::string paco_out;
    auto* check_cmd = paco_cmd->add_subcommand("check", "verify the grid alignment bound");
    check_cmd->add_option("--lmax", lmax, "largest compressed length probed");
    check_cmd->add_option("--grid", grid, "grid bins per side");
    check_cmd->add_option("--out", paco_out, "report JSON output");
    std::size_t dump_text = 4, dump_la = 8, dump_lb = 4, dump_grid = 2, dump_stride = 4;
    auto* dump_cmd = paco_cmd->add_subcommand("dump", "dump position triplets as JSON");
    dump_cmd->add_option("--text", dump_text, "text tokens");
    dump_cmd->add_option("--la", dump_la, "protein A compressed length");
    dump_cmd->add_option("--lb", dump_lb, "protein B compressed length");
    dump_cmd->add_option("--grid", dump_grid, "pair-map bins per side (0 = none)");
    dump_cmd->add_option("--stride", dump_stride, "protein token stride");
    dump_cmd->add_option("--out", paco_out, "JSON output (stdout when omitted)");

    // report
    long min_count = 20;
    double threshold = 0.5;
    auto* report_cmd = app.add_subcommand("report", "keyword retention-bias report");
    report_cmd->add_option("--cards", cards_path, "raw cards JSONL")->required();
    report_cmd->add_option("--retained", retained_path, "retained-set JSON")->required();
    report_cmd->add_option("--min-count", min_count, "minimum raw keyword count");
    report_cmd->add_option("--threshold", threshold, "|log2 ratio| class boundary");
    report_cmd->add_option("--out-csv", out_csv, "CSV output");
    report_cmd->add_option("--out-json", out_json, "JSON output");

    // run
    bool print_effective = false;
    auto* run_cmd = app.add_subcommand("run", "execute the staged pipeline from --config");
    run_cmd->add_flag("--print-effective-config", print_effective,
                      "print the filled config and exit");

    // allow the global options (--seed/--config/--jobs) after a subcommand name
    std::function<void(CLI::App*)> enable_fallthrough = [&](CLI::App* cmd) {
        cmd->fallthrough();
        for (auto* sub : cmd->get_subcommands(nullptr)) enable_fallthrough(sub);
    };
    enable_fallthrough(&app);

    CLI11_PARSE(app, argc, argv);
    if (!seed_opt->empty()) globals.seed = seed_arg;

    try {
        if (ingest_cmd->parsed())
            return cmd_ingest(mitab, string_links, jsonl_specs, fasta, out, rejects_out);
        if (score_cmd->parsed()) return cmd_score(cards_path, scores_out, with_trace);
        if (tier_cmd->parsed())
            return cmd_tier(scores_path, tiers_out, diag_out, k_max, cap,
                            globals.seed.value_or(42));
        if (subsample_cmd->parsed())
            return cmd_subsample(cards_path, tiers_path, retained_out, clusters_out, sim_params,
                                 globals.jobs);
        if (temporal_cmd->parsed())
            return cmd_split_temporal(cards_path, cutoff, manifest_out, sim_params, globals.jobs);
        if (c3_cmd->parsed())
            return cmd_split_c3(cards_path, test_fraction, globals.seed.value_or(7), manifest_out,
                                sim_params, globals.jobs);
        if (tags_cmd->parsed())
            return cmd_synth_tags(cards_path, scores_path, tiers_path, retained_path, tags_out,
                                  firm_e_map, silence_min_fields);
        if (render_cmd->parsed())
            return cmd_synth_render(cards_path, tags_path, system_path, prompts_out);
        if (run_synth_cmd->parsed())
            return cmd_synth_run(prompts_path, system_path, client_path, journal_path,
                                 records_out, resume);
        if (lexical_cmd->parsed()) return cmd_eval_lexical(pred_path, ref_path, out_csv, out_json);
        if (judge_cmd->parsed())
            return cmd_eval_judge(pred_path, cards_path, system_path, client_path, journal_path,
                                  verdicts_out, judge_resume);
        if (check_cmd->parsed()) return cmd_pacorope_check(lmax, grid, paco_out);
        if (dump_cmd->parsed())
            return cmd_pacorope_dump(dump_text, dump_la, dump_lb, dump_grid, dump_stride,
                                     paco_out);
        if (report_cmd->parsed())
            return cmd_report(cards_path, retained_path, min_count, threshold, out_csv, out_json);
        if (run_cmd->parsed()) return cmd_run(globals, print_effective);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
