#pragma once

#include <atomic>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "ppikit/core.hpp"
#include "ppikit/scoring.hpp"
#include "ppikit/tiering.hpp"

namespace ppikit::synthesis {

// -- control tags --------------------------------------------------------------

enum class LengthTag { short_band, medium_band, long_band };
enum class VerbTag { firm, mixed, hedged };
enum class MechanismTag { present, absent };
enum class SilenceTag { none, a, b, a_plus_b };

const char* length_name(LengthTag t);        // "short" | "medium" | "long"
const char* verb_name(VerbTag t);            // "firm" | "mixed" | "hedged"
const char* mechanism_name(MechanismTag t);  // "present" | "absent"
const char* silence_name(SilenceTag t);      // "none" | "A" | "B" | "A+B"

struct WordBand {
    int lo_words = 0;
    int hi_words = 0;
    int lo_sentences = 0;
    int hi_sentences = 0;
    // "240-350 words, approximately 9-13 sentences"
    std::string to_string() const;
};

WordBand band_for(LengthTag t);

struct ControlTags {
    LengthTag length = LengthTag::short_band;
    std::string band;  // band_for(length).to_string()
    VerbTag verb = VerbTag::mixed;
    MechanismTag mechanism = MechanismTag::absent;
    SilenceTag silence = SilenceTag::none;

    bool operator==(const ControlTags&) const = default;
    nlohmann::json to_json() const;
    static ControlTags from_json(const nlohmann::json& j);
};

// The length/verb/silence cutoffs the tag rules need beyond the card itself.
// t2_e_int_median comes from the score distribution of the surviving T2
// population and is supplied by the pipeline.
struct TagThresholds {
    double firm_e_map = 4.0;
    double t2_e_int_median = 0.0;
    int silence_min_fields = 2;  // non-empty annotation fields below this => silenced
};

// Pure tag derivation. The tier must be T2 or T3; T1 is discarded upstream and
// is an error here.
ControlTags compute_tags(const EvidenceCard& card, const scoring::EvidenceScore& score,
                         const tiering::TierAssignment& tier, const TagThresholds& thresholds,
                         const scoring::ScoringConfig& cfg = {});

// -- prompt rendering ------------------------------------------------------------

struct PromptBundle {
    std::string system;
    std::string user;
    PairKey pair;
    ControlTags tags;
    // Terms the rendered output and any downstream completion must never
    // contain: both accessions plus all aliases (>= 2 chars).
    std::vector<std::string> leak_terms;
};

// One "[SourceName] ..." line per source in the canonical order; absent
// sources render "null". Protein names are replaced by "Protein A"/"Protein B"
// in every text field (longest alias first, case-insensitive); complex names
// are kept verbatim. Shared verbatim by the judge harness.
std::string render_evidence_blocks(const EvidenceCard& card);

// Decision-block lines + blank line + evidence blocks. Throws if either
// accession survives anywhere in the rendered user text.
PromptBundle render_prompt(const EvidenceCard& card, const ControlTags& tags,
                           const std::string& system_text);

// -- labeler client ---------------------------------------------------------------

struct LlmRequest {
    std::string system;
    std::string user;
    std::string model_id;
};

struct LlmResponse {
    int http_status = 0;  // 200 = success; 429/5xx retryable; 0 = transport error
    std::string text;
    long prompt_tokens = 0;
    long completion_tokens = 0;
    std::string error;
};

class LlmClient {
  public:
    virtual ~LlmClient() = default;
    virtual LlmResponse complete(const LlmRequest& request) = 0;
};

// Deterministic in-process client for tests and dry runs; the handler sees a
// global call index so failure scripts can vary per attempt.
class MockClient : public LlmClient {
  public:
    using Handler = std::function<LlmResponse(const LlmRequest&, int call_index)>;
    explicit MockClient(Handler handler) : handler_(std::move(handler)) {}
    static LlmResponse ok(std::string text);

    LlmResponse complete(const LlmRequest& request) override {
        return handler_(request, calls_.fetch_add(1));
    }
    int calls() const { return calls_.load(); }

  private:
    Handler handler_;
    std::atomic<int> calls_{0};
};

struct ClientConfig {
    std::string endpoint;  // e.g. "http://127.0.0.1:8080/v1/chat/completions"
    std::string model_id;
    std::string api_key_env = "PPIKIT_API_KEY";
    int concurrency = 4;
    double rate_per_sec = 2.0;
    int max_retries = 5;

    nlohmann::json to_json() const;
    static ClientConfig from_json(const nlohmann::json& j);
};

// Generic JSON-over-HTTP chat-completions client (the only network
// implementation shipped). Reads the API key from config.api_key_env; an
// unset variable sends no Authorization header.
std::unique_ptr<LlmClient> make_http_client(const ClientConfig& config);

// -- records & journal -------------------------------------------------------------

enum class SynthesisStatus { ok, refused, invalid };
const char* status_name(SynthesisStatus s);

struct SynthesisRecord {
    PairKey pair;
    ControlTags tags;
    std::string description;
    std::string model_id;
    long prompt_tokens = 0;
    long completion_tokens = 0;
    SynthesisStatus status = SynthesisStatus::refused;
    std::string reason;  // populated for refused/invalid

    nlohmann::json to_json() const;
    static SynthesisRecord from_json(const nlohmann::json& j);
};

struct JournalState {
    std::vector<SynthesisRecord> records;
    bool trailing_partial_dropped = false;
};

// Loads an append-only JSONL journal. A truncated final line (killed writer)
// is tolerated and flagged; a malformed interior line aborts with recovery
// instructions.
JournalState load_journal(const std::string& path);

// -- validation & runner ------------------------------------------------------------

// Returns the failure reason ("paragraph" | "length" | "leak"), or nullopt
// when the completion is acceptable for the band (+/-15% words).
std::optional<std::string> validate_response(const std::string& text, const ControlTags& tags,
                                             const std::vector<std::string>& leak_terms);

struct SynthesisOptions {
    int concurrency = 4;
    double rate_per_sec = 0.0;  // requests/second; 0 = unlimited
    int max_retries = 5;
    double backoff_initial_ms = 200.0;
    double backoff_max_ms = 10000.0;
    std::uint64_t jitter_seed = 1;
    // Injectable so tests never really sleep.
    std::function<void(double)> sleep_ms;
    // The judge harness reuses this runner for raw completions; it turns the
    // paragraph/band/leak validation off (an empty completion still counts as
    // invalid so `ok` implies a non-empty description).
    bool validate_responses = true;
};

// Drives the client over all bundles with bounded concurrency, token-bucket
// rate limiting, and exponential backoff with jitter on 429/5xx. Exactly one
// terminal record per bundle, appended to the journal as it completes; bundles
// already terminal in the journal are not re-sent. Returns all records
// (resumed + fresh) in bundle order.
std::vector<SynthesisRecord> synthesize(const std::vector<PromptBundle>& bundles,
                                        LlmClient& client, const std::string& model_id,
                                        const std::string& journal_path,
                                        const SynthesisOptions& options);

std::string dump_records_jsonl(const std::vector<SynthesisRecord>& records);

}  // namespace ppikit::synthesis
