#define CPPHTTPLIB_OPENSSL_SUPPORT
#include "ppikit/synthesis.hpp"

#include <chrono>
#include <cmath>
#include <condition_variable>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <stdexcept>
#include <thread>

#include <httplib.h>

namespace ppikit::synthesis {

const char* length_name(LengthTag t) {
    switch (t) {
        case LengthTag::short_band: return "short";
        case LengthTag::medium_band: return "medium";
        default: return "long";
    }
}

const char* verb_name(VerbTag t) {
    switch (t) {
        case VerbTag::firm: return "firm";
        case VerbTag::mixed: return "mixed";
        default: return "hedged";
    }
}

const char* mechanism_name(MechanismTag t) {
    return t == MechanismTag::present ? "present" : "absent";
}

const char* silence_name(SilenceTag t) {
    switch (t) {
        case SilenceTag::none: return "none";
        case SilenceTag::a: return "A";
        case SilenceTag::b: return "B";
        default: return "A+B";
    }
}

std::string WordBand::to_string() const {
    return std::to_string(lo_words) + "-" + std::to_string(hi_words) + " words, approximately " +
           std::to_string(lo_sentences) + "-" + std::to_string(hi_sentences) + " sentences";
}

WordBand band_for(LengthTag t) {
    switch (t) {
        case LengthTag::short_band: return {80, 140, 4, 6};
        case LengthTag::medium_band: return {140, 220, 6, 9};
        default: return {240, 350, 9, 13};
    }
}

namespace {

template <typename T>
T name_to_enum(const std::string& name, std::initializer_list<std::pair<const char*, T>> table,
               const char* what) {
    for (const auto& [n, v] : table)
        if (name == n) return v;
    throw std::runtime_error(std::string("unknown ") + what + ": " + name);
}

}  // namespace

nlohmann::json ControlTags::to_json() const {
    return nlohmann::json{{"length", length_name(length)},
                          {"band", band},
                          {"verb", verb_name(verb)},
                          {"mechanism", mechanism_name(mechanism)},
                          {"silence", silence_name(silence)}};
}

ControlTags ControlTags::from_json(const nlohmann::json& j) {
    ControlTags t;
    t.length = name_to_enum<LengthTag>(j.at("length").get<std::string>(),
                                       {{"short", LengthTag::short_band},
                                        {"medium", LengthTag::medium_band},
                                        {"long", LengthTag::long_band}},
                                       "length tag");
    t.band = j.at("band").get<std::string>();
    t.verb = name_to_enum<VerbTag>(
        j.at("verb").get<std::string>(),
        {{"firm", VerbTag::firm}, {"mixed", VerbTag::mixed}, {"hedged", VerbTag::hedged}}, "verb tag");
    t.mechanism = name_to_enum<MechanismTag>(
        j.at("mechanism").get<std::string>(),
        {{"present", MechanismTag::present}, {"absent", MechanismTag::absent}}, "mechanism tag");
    t.silence = name_to_enum<SilenceTag>(j.at("silence").get<std::string>(),
                                         {{"none", SilenceTag::none},
                                          {"A", SilenceTag::a},
                                          {"B", SilenceTag::b},
                                          {"A+B", SilenceTag::a_plus_b}},
                                         "silence tag");
    return t;
}

ControlTags compute_tags(const EvidenceCard& card, const scoring::EvidenceScore& score,
                         const tiering::TierAssignment& tier, const TagThresholds& thresholds,
                         const scoring::ScoringConfig& cfg) {
    if (tier.tier == 1)
        throw std::runtime_error("compute_tags: T1 card for " + card.pair.to_string() +
                                 " (T1 is discarded upstream)");
    if (tier.tier != 2 && tier.tier != 3)
        throw std::runtime_error("compute_tags: unexpected tier T" + std::to_string(tier.tier));

    ControlTags tags;
    if (tier.tier == 3)
        tags.length = LengthTag::long_band;
    else
        tags.length = score.e_int >= thresholds.t2_e_int_median ? LengthTag::medium_band
                                                                : LengthTag::short_band;
    tags.band = band_for(tags.length).to_string();

    const IntactPayload* ia = card.intact();
    bool direct_type = ia && contains_ci(ia->interaction_type, "direct");
    if (direct_type || score.e_map >= thresholds.firm_e_map)
        tags.verb = VerbTag::firm;
    else if (score.gated)
        tags.verb = VerbTag::hedged;
    else
        tags.verb = VerbTag::mixed;

    const ThreeDidPayload* td = card.threedid();
    bool mech = (td && (td->side_a || td->side_b || !td->domain_pairs.empty())) ||
                (td && !td->interface_summary.empty()) ||
                (ia && (ia->binding_region_a || ia->binding_region_b)) ||
                (card.signor() && !card.signor()->entries.empty()) ||
                scoring::enzymatic_signal(card, cfg);
    tags.mechanism = mech ? MechanismTag::present : MechanismTag::absent;

    auto silenced = [&](const ProteinRecord& p) {
        auto it = p.annotations.find("function");
        if (it != p.annotations.end() && !trim(it->second).empty()) return false;
        int non_empty = 0;
        for (const auto& [key, value] : p.annotations)
            if (!trim(value).empty()) ++non_empty;
        return non_empty < thresholds.silence_min_fields;
    };
    bool sa = silenced(card.proteins.first);
    bool sb = silenced(card.proteins.second);
    tags.silence = sa && sb ? SilenceTag::a_plus_b
                  : sa     ? SilenceTag::a
                  : sb     ? SilenceTag::b
                           : SilenceTag::none;
    return tags;
}

// -- rendering -------------------------------------------------------------------

namespace {

// Case-insensitive, longest-needle-first replacement of both proteins'
// identifiers. Needles shorter than 2 characters are too ambiguous to touch.
class AliasReplacer {
  public:
    explicit AliasReplacer(const EvidenceCard& card) {
        auto add = [&](const ProteinRecord& p, const char* label) {
            if (p.accession.size() >= 2) needles_.emplace_back(to_lower(p.accession), label);
            for (const std::string& alias : p.aliases)
                if (alias.size() >= 2) needles_.emplace_back(to_lower(alias), label);
        };
        add(card.proteins.first, "Protein A");
        add(card.proteins.second, "Protein B");
        std::sort(needles_.begin(), needles_.end(), [](const auto& l, const auto& r) {
            if (l.first.size() != r.first.size()) return l.first.size() > r.first.size();
            return l.first < r.first;
        });
        // An alias shared by both sides keeps its first (side A) mapping.
        needles_.erase(std::unique(needles_.begin(), needles_.end(),
                                   [](const auto& l, const auto& r) { return l.first == r.first; }),
                       needles_.end());
    }

    std::string apply(std::string_view text) const {
        std::string lower = to_lower(text);
        std::string out;
        out.reserve(text.size());
        std::size_t i = 0;
        while (i < text.size()) {
            bool hit = false;
            for (const auto& [needle, label] : needles_) {
                if (needle.size() <= text.size() - i &&
                    lower.compare(i, needle.size(), needle) == 0) {
                    out += label;
                    i += needle.size();
                    hit = true;
                    break;
                }
            }
            if (!hit) {
                out += text[i];
                ++i;
            }
        }
        return out;
    }

  private:
    std::vector<std::pair<std::string, const char*>> needles_;
};

std::string join(const std::vector<std::string>& parts, const char* sep) {
    std::string out;
    for (std::size_t i = 0; i < parts.size(); ++i) {
        if (i) out += sep;
        out += parts[i];
    }
    return out;
}

}  // namespace

std::string render_evidence_blocks(const EvidenceCard& card) {
    AliasReplacer rep(card);
    std::vector<std::string> lines;

    // IntAct: counts-first layout, then the qualitative fields that exist.
    if (const IntactPayload* ia = card.intact()) {
        std::vector<std::string> parts;
        std::string head = std::to_string(ia->evidence_lines) + " evidence lines";
        if (ia->has_miscore) head += ", MIscore " + format_double(ia->miscore);
        parts.push_back(head);
        if (!ia->interaction_type.empty()) parts.push_back(ia->interaction_type);
        if (!ia->detection_methods.empty()) {
            std::vector<std::string> names;
            for (const DetectionMethod& dm : ia->detection_methods) names.push_back(dm.name);
            parts.push_back("Detection methods: " + join(names, ", "));
        }
        if (!ia->publications.empty())
            parts.push_back(std::to_string(ia->publications.size()) + " publications");
        if (ia->binding_region_a || ia->binding_region_b) {
            std::string sides = ia->binding_region_a && ia->binding_region_b
                                    ? "Protein A, Protein B"
                                    : (ia->binding_region_a ? "Protein A" : "Protein B");
            parts.push_back("Binding regions: " + sides);
        }
        if (!trim(ia->interaction_annotations).empty())
            parts.push_back("Annotations: " + rep.apply(ia->interaction_annotations));
        if (ia->stoichiometry) parts.push_back("Stoichiometry available");
        if (!ia->biophysical.empty()) parts.push_back("Biophysical: " + join(ia->biophysical, ", "));
        if (!ia->biological_roles.empty())
            parts.push_back("Roles: " + join(ia->biological_roles, ", "));
        if (ia->self_interaction) parts.push_back("Self-interaction");
        lines.push_back("[IntAct] " + join(parts, "; "));
    } else {
        lines.push_back("[IntAct] null");
    }

    if (const PubmedPayload* pm = card.pubmed()) {
        std::string line = std::to_string(pm->publications.size()) + " publications";
        for (const std::string& abstract : pm->abstracts)
            line += "; Abstract: " + rep.apply(abstract);
        lines.push_back("[PubMed] " + line);
    } else {
        lines.push_back("[PubMed] null");
    }

    // UniProt renders from the protein-side records (its pair payload is an
    // empty marker by construction).
    auto side_text = [&](const ProteinRecord& p) {
        std::vector<std::string> parts;
        auto fit = p.annotations.find("function");
        if (fit != p.annotations.end() && !trim(fit->second).empty())
            parts.push_back(rep.apply(fit->second));
        for (const auto& [key, value] : p.annotations) {
            if (key == "function" || trim(value).empty()) continue;
            parts.push_back(key + ": " + rep.apply(value));
        }
        if (!p.keywords.empty()) parts.push_back("Keywords: " + rep.apply(join(p.keywords, ", ")));
        return parts.empty() ? std::string("null") : join(parts, "; ");
    };
    std::string side_a = side_text(card.proteins.first);
    std::string side_b = side_text(card.proteins.second);
    if (side_a == "null" && side_b == "null") {
        lines.push_back("[UniProt] null");
    } else {
        lines.push_back("[UniProt] Protein A: " + side_a);
        lines.push_back("[UniProt] Protein B: " + side_b);
    }

    if (const ThreeDidPayload* td = card.threedid()) {
        std::vector<std::string> parts;
        if (td->side_a || td->side_b) {
            std::string sides = td->side_a && td->side_b
                                    ? "Protein A, Protein B"
                                    : (td->side_a ? "Protein A" : "Protein B");
            parts.push_back("Domain interface: " + sides);
        }
        if (!td->domain_pairs.empty())
            parts.push_back("Domain pairs: " + join(td->domain_pairs, ", "));
        if (!trim(td->interface_summary).empty())
            parts.push_back("Interface summary: " + rep.apply(td->interface_summary));
        lines.push_back("[3did] " + (parts.empty() ? std::string("null") : join(parts, "; ")));
    } else {
        lines.push_back("[3did] null");
    }

    if (const PfamPayload* pf = card.pfam()) {
        lines.push_back("[Pfam] " + (pf->domain_pairs.empty()
                                         ? std::string("null")
                                         : "Domain pairs: " + join(pf->domain_pairs, ", ")));
    } else {
        lines.push_back("[Pfam] null");
    }

    if (const StringPayload* st = card.string_db()) {
        std::string line =
            format_double(static_cast<double>(st->combined_score) / 1000.0) + " hybrid confidence";
        if (!st->actions.empty()) {
            std::vector<std::string> acts;
            for (const StringActionEntry& a : st->actions)
                acts.push_back(a.mode + " (" + std::to_string(a.score) + ")");
            line += "; Actions: " + join(acts, ", ");
        }
        lines.push_back("[STRING] " + line);
    } else {
        lines.push_back("[STRING] null");
    }

    if (const SignorPayload* sg = card.signor()) {
        std::vector<std::string> entries;
        for (const SignorEntry& e : sg->entries) {
            std::string t = rep.apply(e.mechanism);
            if (!e.causal_effect.empty()) t += ", " + rep.apply(e.causal_effect);
            if (e.direct) t += " (direct)";
            entries.push_back(t);
        }
        lines.push_back("[SIGNOR] " +
                        (entries.empty() ? std::string("null") : join(entries, "; ")));
    } else {
        lines.push_back("[SIGNOR] null");
    }

    if (const ReactomePayload* re = card.reactome()) {
        std::string line = std::to_string(re->shared_pathways) + " shared pathways";
        if (!re->pathway_names.empty()) line += "; " + rep.apply(join(re->pathway_names, ", "));
        lines.push_back("[Reactome] " + line);
    } else {
        lines.push_back("[Reactome] null");
    }

    // Complex names are rendered verbatim: named complexes are shared
    // vocabulary, not a per-protein identifier (and the synthesis instructions
    // depend on them staying intact).
    auto complex_line = [&](const char* label, const ComplexPayload* cp) {
        if (!cp) {
            lines.push_back(std::string("[") + label + "] null");
            return;
        }
        std::string line = std::to_string(cp->complex_names.size()) + " complexes";
        if (!cp->complex_names.empty()) line += "; " + join(cp->complex_names, ", ");
        lines.push_back(std::string("[") + label + "] " + line);
    };
    complex_line("CORUM", card.corum());
    complex_line("ComplexPortal", card.complexportal());

    return join(lines, "\n");
}

PromptBundle render_prompt(const EvidenceCard& card, const ControlTags& tags,
                           const std::string& system_text) {
    PromptBundle bundle;
    bundle.system = system_text;
    bundle.pair = card.pair;
    bundle.tags = tags;
    bundle.user = std::string("[Length] ") + tags.band + "\n[Verb] " + verb_name(tags.verb) +
                  "\n[Mechanism] " + mechanism_name(tags.mechanism) + "\n[Silence] " +
                  silence_name(tags.silence) + "\n\n" + render_evidence_blocks(card);

    for (const std::string& acc : {card.pair.a, card.pair.b}) {
        if (acc.size() >= 2 && contains_ci(bundle.user, acc))
            throw std::runtime_error("alias leakage: accession " + acc +
                                     " survived prompt rendering for " + card.pair.to_string());
    }

    std::set<std::string> terms;
    for (const ProteinRecord* p : {&card.proteins.first, &card.proteins.second}) {
        if (p->accession.size() >= 2) terms.insert(p->accession);
        for (const std::string& alias : p->aliases)
            if (alias.size() >= 2) terms.insert(alias);
    }
    bundle.leak_terms.assign(terms.begin(), terms.end());
    return bundle;
}

// -- client ------------------------------------------------------------------------

LlmResponse MockClient::ok(std::string text) {
    LlmResponse r;
    r.http_status = 200;
    r.text = std::move(text);
    return r;
}

nlohmann::json ClientConfig::to_json() const {
    return nlohmann::json{{"endpoint", endpoint},         {"model_id", model_id},
                          {"api_key_env", api_key_env},   {"concurrency", concurrency},
                          {"rate_per_sec", rate_per_sec}, {"max_retries", max_retries}};
}

ClientConfig ClientConfig::from_json(const nlohmann::json& j) {
    ClientConfig c;
    c.endpoint = j.at("endpoint").get<std::string>();
    c.model_id = j.at("model_id").get<std::string>();
    c.api_key_env = j.value("api_key_env", c.api_key_env);
    c.concurrency = j.value("concurrency", c.concurrency);
    c.rate_per_sec = j.value("rate_per_sec", c.rate_per_sec);
    c.max_retries = j.value("max_retries", c.max_retries);
    return c;
}

namespace {

class HttpClient : public LlmClient {
  public:
    explicit HttpClient(const ClientConfig& config) : config_(config) {
        std::size_t scheme = config.endpoint.find("://");
        if (scheme == std::string::npos)
            throw std::runtime_error("client endpoint must include a scheme: " + config.endpoint);
        std::size_t slash = config.endpoint.find('/', scheme + 3);
        base_ = slash == std::string::npos ? config.endpoint : config.endpoint.substr(0, slash);
        path_ = slash == std::string::npos ? "/" : config.endpoint.substr(slash);
        if (const char* key = std::getenv(config.api_key_env.c_str())) api_key_ = key;
    }

    LlmResponse complete(const LlmRequest& request) override {
        httplib::Client cli(base_);
        cli.set_connection_timeout(10, 0);
        cli.set_read_timeout(300, 0);
        httplib::Headers headers;
        if (!api_key_.empty()) headers.emplace("Authorization", "Bearer " + api_key_);
        nlohmann::json body{
            {"model", request.model_id},
            {"messages",
             nlohmann::json::array({nlohmann::json{{"role", "system"}, {"content", request.system}},
                                    nlohmann::json{{"role", "user"}, {"content", request.user}}})}};
        httplib::Result res = cli.Post(path_, headers, body.dump(), "application/json");

        LlmResponse out;
        if (!res) {
            out.error = "transport: " + httplib::to_string(res.error());
            return out;
        }
        out.http_status = res->status;
        if (res->status != 200) {
            out.error = res->body.substr(0, 500);
            return out;
        }
        nlohmann::json j = nlohmann::json::parse(res->body, nullptr, false);
        if (j.is_discarded() || !j.contains("choices") || j["choices"].empty() ||
            !j["choices"][0].contains("message")) {
            out.error = "malformed completion body";
            return out;
        }
        out.text = j["choices"][0]["message"].value("content", "");
        if (j.contains("usage")) {
            out.prompt_tokens = j["usage"].value("prompt_tokens", 0L);
            out.completion_tokens = j["usage"].value("completion_tokens", 0L);
        }
        return out;
    }

  private:
    ClientConfig config_;
    std::string base_;
    std::string path_;
    std::string api_key_;
};

}  // namespace

std::unique_ptr<LlmClient> make_http_client(const ClientConfig& config) {
    return std::make_unique<HttpClient>(config);
}

// -- records & journal ----------------------------------------------------------------

const char* status_name(SynthesisStatus s) {
    switch (s) {
        case SynthesisStatus::ok: return "ok";
        case SynthesisStatus::refused: return "refused";
        default: return "invalid";
    }
}

nlohmann::json SynthesisRecord::to_json() const {
    return nlohmann::json{{"pair", pair.to_string()},
                          {"tags", tags.to_json()},
                          {"description", description},
                          {"model_id", model_id},
                          {"usage", nlohmann::json{{"prompt_tokens", prompt_tokens},
                                                   {"completion_tokens", completion_tokens}}},
                          {"status", status_name(status)},
                          {"reason", reason}};
}

SynthesisRecord SynthesisRecord::from_json(const nlohmann::json& j) {
    SynthesisRecord r;
    r.pair = PairKey::parse(j.at("pair").get<std::string>());
    r.tags = ControlTags::from_json(j.at("tags"));
    r.description = j.at("description").get<std::string>();
    r.model_id = j.at("model_id").get<std::string>();
    r.prompt_tokens = j.at("usage").at("prompt_tokens").get<long>();
    r.completion_tokens = j.at("usage").at("completion_tokens").get<long>();
    r.status = name_to_enum<SynthesisStatus>(j.at("status").get<std::string>(),
                                             {{"ok", SynthesisStatus::ok},
                                              {"refused", SynthesisStatus::refused},
                                              {"invalid", SynthesisStatus::invalid}},
                                             "synthesis status");
    r.reason = j.at("reason").get<std::string>();
    return r;
}

JournalState load_journal(const std::string& path) {
    JournalState state;
    if (!std::filesystem::exists(path)) return state;
    std::string text = read_file(path);
    if (text.empty()) return state;

    bool terminated = text.back() == '\n';
    std::vector<std::string> lines = split(text, '\n');
    if (terminated) lines.pop_back();  // split leaves one empty tail element

    for (std::size_t i = 0; i < lines.size(); ++i) {
        bool last = i + 1 == lines.size();
        try {
            nlohmann::json j = nlohmann::json::parse(lines[i]);
            state.records.push_back(SynthesisRecord::from_json(j));
        } catch (const std::exception& e) {
            if (last && !terminated) {
                // A writer killed mid-line leaves a partial tail; drop it and
                // let the pair be re-sent.
                state.trailing_partial_dropped = true;
                return state;
            }
            throw std::runtime_error(
                "journal " + path + " corrupted at line " + std::to_string(i + 1) + ": " +
                e.what() +
                ". Recovery: remove the malformed line(s) from the journal to resume from the "
                "last valid record, or delete the file to restart synthesis from scratch.");
        }
    }
    return state;
}

// -- validation & runner ----------------------------------------------------------------

std::optional<std::string> validate_response(const std::string& text, const ControlTags& tags,
                                             const std::vector<std::string>& leak_terms) {
    std::string body = trim(text);
    if (body.empty() || body.find('\n') != std::string::npos) return "paragraph";
    WordBand band = band_for(tags.length);
    std::size_t words = split_ws(body).size();
    auto lo = static_cast<std::size_t>(std::floor(band.lo_words * 0.85));
    auto hi = static_cast<std::size_t>(std::ceil(band.hi_words * 1.15));
    if (words < lo || words > hi) return "length";
    for (const std::string& term : leak_terms)
        if (contains_ci(body, term)) return "leak";
    return std::nullopt;
}

namespace {

// Strict-spacing token bucket (capacity one token) — requests are spaced at
// least 1/rate apart once the initial token is spent.
class TokenBucket {
  public:
    explicit TokenBucket(double rate_per_sec) : rate_(rate_per_sec), tokens_(1.0) {}

    void acquire() {
        if (rate_ <= 0.0) return;
        std::unique_lock<std::mutex> lock(mu_);
        for (;;) {
            refill();
            if (tokens_ >= 1.0) {
                tokens_ -= 1.0;
                return;
            }
            double wait_s = (1.0 - tokens_) / rate_;
            lock.unlock();
            std::this_thread::sleep_for(std::chrono::duration<double>(wait_s));
            lock.lock();
        }
    }

  private:
    void refill() {
        auto now = std::chrono::steady_clock::now();
        tokens_ = std::min(1.0, tokens_ + rate_ * std::chrono::duration<double>(now - last_).count());
        last_ = now;
    }

    double rate_;
    double tokens_;
    std::chrono::steady_clock::time_point last_ =
        std::chrono::steady_clock::now();
    std::mutex mu_;
};

std::uint64_t fnv1a(std::string_view text) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (char c : text) {
        h ^= static_cast<unsigned char>(c);
        h *= 0x100000001b3ULL;
    }
    return h;
}

SynthesisRecord run_one(const PromptBundle& bundle, LlmClient& client, const std::string& model_id,
                        TokenBucket& bucket, const SynthesisOptions& opts,
                        const std::function<void(double)>& sleep_ms) {
    SynthesisRecord rec;
    rec.pair = bundle.pair;
    rec.tags = bundle.tags;
    rec.model_id = model_id;

    Rng jitter(opts.jitter_seed ^ fnv1a(bundle.pair.to_string()));
    LlmResponse last;
    int attempts = 0;
    // max_retries counts re-sends after the first attempt.
    for (int attempt = 0; attempt <= opts.max_retries; ++attempt) {
        if (attempt > 0) {
            double delay = std::min(opts.backoff_max_ms,
                                    opts.backoff_initial_ms * std::pow(2.0, attempt - 1));
            sleep_ms(delay * (0.5 + 0.5 * jitter.next_double()));
        }
        bucket.acquire();
        last = client.complete({bundle.system, bundle.user, model_id});
        ++attempts;
        if (last.http_status == 200 && last.error.empty()) {
            rec.prompt_tokens = last.prompt_tokens;
            rec.completion_tokens = last.completion_tokens;
            if (opts.validate_responses) {
                if (auto why = validate_response(last.text, bundle.tags, bundle.leak_terms)) {
                    rec.status = SynthesisStatus::invalid;
                    rec.reason = *why;
                } else {
                    rec.status = SynthesisStatus::ok;
                    rec.description = trim(last.text);
                }
            } else if (trim(last.text).empty()) {
                rec.status = SynthesisStatus::invalid;
                rec.reason = "empty";
            } else {
                rec.status = SynthesisStatus::ok;
                rec.description = last.text;
            }
            return rec;
        }
        bool retryable =
            last.http_status == 0 || last.http_status == 429 || last.http_status >= 500;
        if (!retryable) break;
    }
    rec.status = SynthesisStatus::refused;
    std::string what = "http " + std::to_string(last.http_status) +
                       (last.error.empty() ? "" : ": " + last.error);
    rec.reason = attempts > opts.max_retries
                     ? "retries exhausted after " + std::to_string(attempts) + " attempts (last " +
                           what + ")"
                     : what;
    return rec;
}

}  // namespace

std::vector<SynthesisRecord> synthesize(const std::vector<PromptBundle>& bundles,
                                        LlmClient& client, const std::string& model_id,
                                        const std::string& journal_path,
                                        const SynthesisOptions& options) {
    {
        std::set<PairKey> seen;
        for (const PromptBundle& b : bundles)
            if (!seen.insert(b.pair).second)
                throw std::runtime_error("synthesize: duplicate bundle for " + b.pair.to_string());
    }

    JournalState prior = load_journal(journal_path);
    std::map<PairKey, SynthesisRecord> done;
    for (SynthesisRecord& r : prior.records) done[r.pair] = std::move(r);
    if (prior.trailing_partial_dropped) {
        std::string clean;
        for (const auto& [pair, rec] : done) clean += rec.to_json().dump() + "\n";
        write_file(journal_path, clean);
    }

    std::vector<std::optional<SynthesisRecord>> out(bundles.size());
    std::vector<std::size_t> todo;
    for (std::size_t i = 0; i < bundles.size(); ++i) {
        auto it = done.find(bundles[i].pair);
        if (it != done.end())
            out[i] = it->second;
        else
            todo.push_back(i);
    }

    std::ofstream journal(journal_path, std::ios::app | std::ios::binary);
    if (!journal) throw std::runtime_error("cannot open journal for append: " + journal_path);
    std::mutex journal_mu;

    TokenBucket bucket(options.rate_per_sec);
    std::function<void(double)> sleep_ms = options.sleep_ms;
    if (!sleep_ms)
        sleep_ms = [](double ms) {
            std::this_thread::sleep_for(std::chrono::duration<double, std::milli>(ms));
        };

    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mu;
    auto worker = [&]() {
        try {
            for (;;) {
                std::size_t t = next.fetch_add(1);
                if (t >= todo.size()) return;
                std::size_t bi = todo[t];
                SynthesisRecord rec =
                    run_one(bundles[bi], client, model_id, bucket, options, sleep_ms);
                {
                    std::lock_guard<std::mutex> lock(journal_mu);
                    journal << rec.to_json().dump() << "\n";
                    journal.flush();
                }
                out[bi] = std::move(rec);
            }
        } catch (...) {
            std::lock_guard<std::mutex> lock(failure_mu);
            if (!failure) failure = std::current_exception();
        }
    };

    std::size_t n_threads =
        std::min<std::size_t>(std::max(1, options.concurrency), std::max<std::size_t>(1, todo.size()));
    std::vector<std::thread> threads;
    threads.reserve(n_threads);
    for (std::size_t i = 0; i < n_threads; ++i) threads.emplace_back(worker);
    for (std::thread& th : threads) th.join();
    if (failure) std::rethrow_exception(failure);

    std::vector<SynthesisRecord> records;
    records.reserve(bundles.size());
    for (std::size_t i = 0; i < bundles.size(); ++i) {
        if (!out[i]) throw std::runtime_error("synthesize: missing record for " +
                                              bundles[i].pair.to_string());
        records.push_back(std::move(*out[i]));
    }
    return records;
}

std::string dump_records_jsonl(const std::vector<SynthesisRecord>& records) {
    std::string out;
    for (const SynthesisRecord& r : records) out += r.to_json().dump() + "\n";
    return out;
}

}  // namespace ppikit::synthesis
