#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "ppikit/core.hpp"
#include "ppikit/homology.hpp"
#include "ppikit/scoring.hpp"
#include "ppikit/synthesis.hpp"

namespace ppikit::pipeline {

struct JsonlInput {
    std::string source;  // canonical source name, e.g. "UniProt"
    std::string path;
};

struct PipelineConfig {
    struct Paths {
        std::string mitab;                // optional inputs; empty = absent
        std::string string_links;
        std::vector<JsonlInput> jsonl;
        std::string fasta;
        std::string out_dir = "out";
        std::string synthesis_system = "data/prompts/synthesis_system.txt";
        std::string judge_system = "data/prompts/judge_system.txt";
    } paths;

    homology::SimilarityParams similarity;

    struct Tiering {
        int k_max = 8;
        std::uint64_t subsample_cap = 200000;
        std::uint64_t seed = 42;
    } tiering;

    struct Tags {
        double firm_e_map = 4.0;
        int silence_min_fields = 2;
    } tags;

    std::optional<synthesis::ClientConfig> client;  // synth stage runs iff present

    struct Splits {
        Date cutoff{2025, 5, 1};
        double test_fraction = 0.01;
        std::uint64_t seed = 7;
    } splits;

    struct Report {
        long min_count = 20;
        double bias_threshold = 0.5;
    } report;

    int jobs = 0;  // 0 = hardware concurrency

    nlohmann::json to_json() const;  // effective config, defaults filled
    // Strict: unknown keys anywhere reject the whole config.
    static PipelineConfig from_json(const nlohmann::json& j);
    static PipelineConfig load(const std::string& path);

    // Content hash of everything that affects artifacts (jobs excluded).
    std::string config_hash() const;
};

// Content-addressed stage execution: a stage re-runs only when its config
// hash, input hashes, or output hashes changed; manifests carry no timestamps
// so identical runs are byte-identical.
class StageRunner {
  public:
    StageRunner(std::string out_dir, std::string config_hash);

    // compute() must write every path in `outputs`; it returns the counts
    // block stored in the manifest. Returns true on a cache hit (compute not
    // called). Any exception is rethrown tagged with the stage name.
    bool run(const std::string& stage, const std::vector<std::string>& inputs,
             const std::vector<std::string>& outputs,
             const std::function<nlohmann::json()>& compute);

    std::string manifest_path(const std::string& stage) const;
    const std::vector<std::string>& log() const { return log_; }

  private:
    std::string out_dir_;
    std::string config_hash_;
    std::vector<std::string> log_;
};

// Executes ingest -> score -> tier -> subsample -> tags -> prompts
// (-> synth when a client is configured). Returns the stage log.
std::vector<std::string> run_pipeline(const PipelineConfig& config);

// -- artifact readback & stage kernels (shared by run_pipeline and the CLI) --------

struct ScoreRow {
    PairKey pair;
    scoring::EvidenceScore score;
};
std::vector<ScoreRow> load_scores_jsonl(const std::string& text);

struct TierRow {
    PairKey pair;
    int tier = 0;  // 1-based
    double score = 0.0;
    double centroid = 0.0;
};
std::vector<TierRow> load_tiers_jsonl(const std::string& text);

std::vector<ProteinRecord> collect_proteins(const std::vector<EvidenceCard>& cards);

// Tier index -> retention role for a k-way tiering: 0 = dropped (bottom),
// 3 = kept whole (top), 2 = subsampled (in between). k <= 1 keeps everything.
int tier_role(int tier, int k);

struct SubsampleResult {
    std::string clusters_tsv;
    nlohmann::json retained_json;  // {"k", "retained": [...], "counts": {...}}
};
SubsampleResult compute_subsample(const std::vector<EvidenceCard>& cards,
                                  const std::vector<TierRow>& tiers,
                                  const homology::SimilarityParams& sim, int jobs);

struct TagsResult {
    std::string jsonl;
    nlohmann::json counts;
};
TagsResult compute_tag_rows(const std::vector<EvidenceCard>& cards,
                            const std::vector<ScoreRow>& scores,
                            const std::vector<TierRow>& tiers, const std::set<PairKey>& retained,
                            const PipelineConfig::Tags& tag_config);

// Renders one prompt row per tags row; returns JSONL ({"pair","user","tags","leak_terms"}).
std::string compute_prompt_rows(const std::vector<EvidenceCard>& cards,
                                const std::string& tags_jsonl, const std::string& system_text,
                                long* count = nullptr);

std::vector<synthesis::PromptBundle> bundles_from_prompts_jsonl(const std::string& prompts_jsonl,
                                                                const std::string& system_text);

// "mock://..." endpoints yield the deterministic offline client (it reads the
// band off the prompt and emits a seeded paragraph of fitting length);
// anything else goes over HTTP.
std::unique_ptr<synthesis::LlmClient> make_client(const synthesis::ClientConfig& config);

// -- retention-bias report ---------------------------------------------------------

struct BiasRow {
    std::string keyword;
    long raw = 0;
    long retained = 0;
    double rate = 0.0;
    double bias = 0.0;         // log2(rate / overall rate); -inf when rate is 0
    bool bias_is_neg_inf = false;
    std::string cls;           // enriched | balanced | depleted
};

struct BiasReport {
    std::vector<BiasRow> rows;  // keyword-sorted
    double overall_rate = 0.0;
    std::size_t enriched = 0;
    std::size_t balanced = 0;
    std::size_t depleted = 0;

    nlohmann::json to_json() const;
    std::string to_csv() const;
};

// Keywords rarer than min_count are excluded; class thresholds on |bias|.
// Throws if retained is not a subset of the cards' pairs, or if nothing at
// all was retained from a non-empty corpus (the rate ratio degenerates).
BiasReport bias_report(const std::vector<EvidenceCard>& cards, const std::set<PairKey>& retained,
                       long min_count, double bias_threshold);

}  // namespace ppikit::pipeline
