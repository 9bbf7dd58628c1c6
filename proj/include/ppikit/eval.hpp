#pragma once

#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "ppikit/core.hpp"
#include "ppikit/synthesis.hpp"

namespace ppikit::eval {

// Lowercase; split on runs of non-alphanumeric characters; drop empties.
std::vector<std::string> tokenize(std::string_view text);

// Default metric: geometric mean over orders 1..n of the per-order clipped
// n-gram F1 (no brevity penalty). Per-order convention: both sides without
// o-grams -> F1 1 (vacuous), exactly one side without -> 0. classic=true
// instead computes standard BLEU (add-one smoothing on orders above 1,
// brevity penalty). Returns [0,100]; throws when n < 1.
double bleu_n(const std::vector<std::string>& candidate, const std::vector<std::string>& reference,
              int n, bool classic = false);

// Clipped n-gram F1 in [0,100] (same empty-side convention as bleu_n).
double rouge_n(const std::vector<std::string>& candidate,
               const std::vector<std::string>& reference, int n);

// Longest-common-subsequence F1 in [0,100].
double rouge_l(const std::vector<std::string>& candidate,
               const std::vector<std::string>& reference);

struct LexicalRow {
    std::string id;
    double bleu2 = 0.0;
    double bleu4 = 0.0;
    double rouge1_f = 0.0;
    double rouge2_f = 0.0;
    double rougeL_f = 0.0;
};

struct LexicalReport {
    std::vector<LexicalRow> rows;
    LexicalRow mean;  // id "mean"; zeros when rows is empty

    nlohmann::json to_json() const;
    std::string to_csv() const;
};

LexicalReport lexical_report(const std::vector<std::string>& ids,
                             const std::vector<std::string>& candidates,
                             const std::vector<std::string>& references);

// -- judge harness ------------------------------------------------------------------

// System text must be the golden judge prompt; the evidence card renders
// through the synthesis renderer (shared code path). Throws on an empty
// prediction or on accession leakage in the card rendering.
synthesis::PromptBundle judge_prompt(const EvidenceCard& card, const std::string& prediction,
                                     const std::string& system_text);

struct JudgeVerdict {
    std::optional<int> entity;     // nullopt = NA
    int interaction = 0;
    std::optional<int> mechanism;  // nullopt = NA
    std::string note;
    double avg = 0.0;  // mean of the non-NA axes
    bool clamp_warning = false;
};

struct VerdictParse {
    std::optional<JudgeVerdict> verdict;
    std::string reject_reason;  // set iff verdict is empty

    nlohmann::json to_json() const;
};

// Extracts the first balanced JSON object (fenced blocks and surrounding prose
// tolerated). All three axis keys are required; entity/mechanism accept the
// literal "NA"; out-of-range integers clamp to [0,10] with a warning; a
// missing or non-numeric interaction axis rejects the verdict.
VerdictParse parse_verdict(const std::string& response);

struct JudgeAggregate {
    std::size_t n_input = 0;
    std::size_t n_accepted = 0;
    std::size_t n_rejected = 0;
    std::size_t entity_na = 0;
    std::size_t mechanism_na = 0;
    std::size_t clamp_warnings = 0;
    std::optional<double> entity_mean;       // over non-NA entity axes
    std::optional<double> interaction_mean;  // over accepted verdicts
    std::optional<double> mechanism_mean;    // over non-NA mechanism axes
    std::optional<double> avg_mean;          // mean of per-sample avg values
    std::optional<double> axis_mean_avg;     // mean of the axis means (secondary view)

    nlohmann::json to_json() const;
};

JudgeAggregate aggregate(const std::vector<VerdictParse>& verdicts);

// Sends one judge request per (card, prediction) through the synthesis runner
// (resumable via the same journal format; raw responses land in
// record.description). parse_judge_records turns the raw records into
// verdicts, rejecting refused/invalid ones with the client reason.
std::vector<synthesis::SynthesisRecord> run_judge(
    const std::vector<EvidenceCard>& cards, const std::vector<std::string>& predictions,
    const std::string& system_text, synthesis::LlmClient& client, const std::string& model_id,
    const std::string& journal_path, synthesis::SynthesisOptions options);

std::vector<VerdictParse> parse_judge_records(const std::vector<synthesis::SynthesisRecord>& records);

}  // namespace ppikit::eval
