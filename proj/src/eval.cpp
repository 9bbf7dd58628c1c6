#include "ppikit/eval.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <map>
#include <stdexcept>

namespace ppikit::eval {

std::vector<std::string> tokenize(std::string_view text) {
    std::vector<std::string> out;
    std::string cur;
    for (char ch : text) {
        unsigned char c = static_cast<unsigned char>(ch);
        if (std::isalnum(c)) {
            cur += static_cast<char>(std::tolower(c));
        } else if (!cur.empty()) {
            out.push_back(std::move(cur));
            cur.clear();
        }
    }
    if (!cur.empty()) out.push_back(std::move(cur));
    return out;
}

namespace {

// o-gram multiset; tokens are alphanumeric so '\x1f' is a safe joiner.
std::map<std::string, long> ngram_counts(const std::vector<std::string>& tokens, int order) {
    std::map<std::string, long> counts;
    if (order < 1 || tokens.size() < static_cast<std::size_t>(order)) return counts;
    for (std::size_t i = 0; i + order <= tokens.size(); ++i) {
        std::string key = tokens[i];
        for (int t = 1; t < order; ++t) {
            key += '\x1f';
            key += tokens[i + t];
        }
        ++counts[key];
    }
    return counts;
}

long clipped_matches(const std::map<std::string, long>& cand,
                     const std::map<std::string, long>& ref) {
    long matches = 0;
    for (const auto& [gram, count] : cand) {
        auto it = ref.find(gram);
        if (it != ref.end()) matches += std::min(count, it->second);
    }
    return matches;
}

long total(const std::map<std::string, long>& counts) {
    long t = 0;
    for (const auto& [gram, count] : counts) t += count;
    return t;
}

// F1 in [0,1]; both sides empty of o-grams is vacuously perfect.
double order_f1(const std::vector<std::string>& candidate,
                const std::vector<std::string>& reference, int order) {
    std::map<std::string, long> cand = ngram_counts(candidate, order);
    std::map<std::string, long> ref = ngram_counts(reference, order);
    long ct = total(cand);
    long rt = total(ref);
    if (ct == 0 && rt == 0) return 1.0;
    if (ct == 0 || rt == 0) return 0.0;
    long m = clipped_matches(cand, ref);
    if (m == 0) return 0.0;
    double p = static_cast<double>(m) / static_cast<double>(ct);
    double r = static_cast<double>(m) / static_cast<double>(rt);
    return 2.0 * p * r / (p + r);
}

}  // namespace

double bleu_n(const std::vector<std::string>& candidate, const std::vector<std::string>& reference,
              int n, bool classic) {
    if (n < 1) throw std::runtime_error("bleu_n: order must be >= 1");
    if (!classic) {
        double log_sum = 0.0;
        for (int o = 1; o <= n; ++o) {
            double f1 = order_f1(candidate, reference, o);
            if (f1 == 0.0) return 0.0;
            log_sum += std::log(f1);
        }
        return 100.0 * std::exp(log_sum / n);
    }

    if (candidate.empty()) return 0.0;
    double log_sum = 0.0;
    for (int o = 1; o <= n; ++o) {
        std::map<std::string, long> cand = ngram_counts(candidate, o);
        std::map<std::string, long> ref = ngram_counts(reference, o);
        long m = clipped_matches(cand, ref);
        long ct = total(cand);
        double p;
        if (o == 1) {
            p = ct == 0 ? 0.0 : static_cast<double>(m) / static_cast<double>(ct);
        } else {
            p = static_cast<double>(m + 1) / static_cast<double>(ct + 1);
        }
        if (p == 0.0) return 0.0;
        log_sum += std::log(p);
    }
    double bp = candidate.size() >= reference.size()
                    ? 1.0
                    : std::exp(1.0 - static_cast<double>(reference.size()) /
                                         static_cast<double>(candidate.size()));
    return 100.0 * bp * std::exp(log_sum / n);
}

double rouge_n(const std::vector<std::string>& candidate,
               const std::vector<std::string>& reference, int n) {
    if (n < 1) throw std::runtime_error("rouge_n: order must be >= 1");
    return 100.0 * order_f1(candidate, reference, n);
}

double rouge_l(const std::vector<std::string>& candidate,
               const std::vector<std::string>& reference) {
    const std::size_t m = candidate.size();
    const std::size_t n = reference.size();
    if (m == 0 && n == 0) return 100.0;
    if (m == 0 || n == 0) return 0.0;
    std::vector<std::size_t> prev(n + 1, 0), cur(n + 1, 0);
    for (std::size_t i = 1; i <= m; ++i) {
        for (std::size_t j = 1; j <= n; ++j) {
            cur[j] = candidate[i - 1] == reference[j - 1] ? prev[j - 1] + 1
                                                          : std::max(prev[j], cur[j - 1]);
        }
        std::swap(prev, cur);
    }
    std::size_t lcs = prev[n];
    if (lcs == 0) return 0.0;
    double p = static_cast<double>(lcs) / static_cast<double>(m);
    double r = static_cast<double>(lcs) / static_cast<double>(n);
    return 100.0 * 2.0 * p * r / (p + r);
}

LexicalReport lexical_report(const std::vector<std::string>& ids,
                             const std::vector<std::string>& candidates,
                             const std::vector<std::string>& references) {
    if (ids.size() != candidates.size() || candidates.size() != references.size())
        throw std::runtime_error("lexical_report: ids/candidates/references sizes differ");
    LexicalReport report;
    report.mean.id = "mean";
    for (std::size_t i = 0; i < candidates.size(); ++i) {
        std::vector<std::string> c = tokenize(candidates[i]);
        std::vector<std::string> r = tokenize(references[i]);
        LexicalRow row;
        row.id = ids[i];
        row.bleu2 = bleu_n(c, r, 2);
        row.bleu4 = bleu_n(c, r, 4);
        row.rouge1_f = rouge_n(c, r, 1);
        row.rouge2_f = rouge_n(c, r, 2);
        row.rougeL_f = rouge_l(c, r);
        report.mean.bleu2 += row.bleu2;
        report.mean.bleu4 += row.bleu4;
        report.mean.rouge1_f += row.rouge1_f;
        report.mean.rouge2_f += row.rouge2_f;
        report.mean.rougeL_f += row.rougeL_f;
        report.rows.push_back(std::move(row));
    }
    if (!report.rows.empty()) {
        double n = static_cast<double>(report.rows.size());
        report.mean.bleu2 /= n;
        report.mean.bleu4 /= n;
        report.mean.rouge1_f /= n;
        report.mean.rouge2_f /= n;
        report.mean.rougeL_f /= n;
    }
    return report;
}

namespace {

nlohmann::json row_json(const LexicalRow& row) {
    return nlohmann::json{{"id", row.id},           {"bleu2", row.bleu2},
                          {"bleu4", row.bleu4},     {"rouge1_f", row.rouge1_f},
                          {"rouge2_f", row.rouge2_f}, {"rougeL_f", row.rougeL_f}};
}

std::string row_csv(const LexicalRow& row) {
    return row.id + "," + format_double(row.bleu2) + "," + format_double(row.bleu4) + "," +
           format_double(row.rouge1_f) + "," + format_double(row.rouge2_f) + "," +
           format_double(row.rougeL_f) + "\n";
}

}  // namespace

nlohmann::json LexicalReport::to_json() const {
    nlohmann::json rows_j = nlohmann::json::array();
    for (const LexicalRow& row : rows) rows_j.push_back(row_json(row));
    return nlohmann::json{{"rows", std::move(rows_j)}, {"mean", row_json(mean)}};
}

std::string LexicalReport::to_csv() const {
    std::string out = "id,bleu2,bleu4,rouge1_f,rouge2_f,rougeL_f\n";
    for (const LexicalRow& row : rows) out += row_csv(row);
    out += row_csv(mean);
    return out;
}

// -- judge harness ------------------------------------------------------------------

synthesis::PromptBundle judge_prompt(const EvidenceCard& card, const std::string& prediction,
                                     const std::string& system_text) {
    std::string body = trim(prediction);
    if (body.empty()) throw std::runtime_error("empty prediction for " + card.pair.to_string());

    std::string evidence = synthesis::render_evidence_blocks(card);
    for (const std::string& acc : {card.pair.a, card.pair.b}) {
        if (acc.size() >= 2 && contains_ci(evidence, acc))
            throw std::runtime_error("alias leakage: accession " + acc +
                                     " survived card rendering for " + card.pair.to_string());
    }

    synthesis::PromptBundle bundle;
    bundle.system = system_text;
    bundle.pair = card.pair;
    bundle.user = "RAW EVIDENCE CARD\n" + evidence + "\n\nPREDICTION\n" + body;
    return bundle;
}

namespace {

std::optional<nlohmann::json> first_json_object(const std::string& text) {
    for (std::size_t start = text.find('{'); start != std::string::npos;
         start = text.find('{', start + 1)) {
        int depth = 0;
        bool in_string = false;
        bool escaped = false;
        for (std::size_t i = start; i < text.size(); ++i) {
            char c = text[i];
            if (in_string) {
                if (escaped)
                    escaped = false;
                else if (c == '\\')
                    escaped = true;
                else if (c == '"')
                    in_string = false;
            } else if (c == '"') {
                in_string = true;
            } else if (c == '{') {
                ++depth;
            } else if (c == '}') {
                if (--depth == 0) {
                    nlohmann::json j =
                        nlohmann::json::parse(text.substr(start, i - start + 1), nullptr, false);
                    if (!j.is_discarded() && j.is_object()) return j;
                    break;  // malformed candidate; try the next '{'
                }
            }
        }
    }
    return std::nullopt;
}

struct AxisParse {
    bool missing = false;
    bool na = false;
    bool bad = false;
    int value = 0;
    bool clamped = false;
};

AxisParse parse_axis(const nlohmann::json& j, const char* key) {
    AxisParse out;
    if (!j.contains(key)) {
        out.missing = true;
        return out;
    }
    const nlohmann::json& v = j.at(key);
    if (v.is_string()) {
        if (to_lower(v.get<std::string>()) == "na")
            out.na = true;
        else
            out.bad = true;
        return out;
    }
    if (!v.is_number()) {
        out.bad = true;
        return out;
    }
    long raw = std::llround(v.get<double>());
    out.clamped = raw < 0 || raw > 10;
    out.value = static_cast<int>(std::clamp<long>(raw, 0, 10));
    return out;
}

}  // namespace

VerdictParse parse_verdict(const std::string& response) {
    VerdictParse out;
    std::optional<nlohmann::json> j = first_json_object(response);
    if (!j) {
        out.reject_reason = "no JSON object found";
        return out;
    }

    AxisParse interaction = parse_axis(*j, "interaction");
    if (interaction.missing) {
        out.reject_reason = "interaction axis missing";
        return out;
    }
    if (interaction.na || interaction.bad) {
        out.reject_reason = "interaction axis not an integer";
        return out;
    }
    AxisParse entity = parse_axis(*j, "entity");
    if (entity.missing || entity.bad) {
        out.reject_reason = entity.missing ? "entity axis missing" : "entity axis malformed";
        return out;
    }
    AxisParse mechanism = parse_axis(*j, "mechanism");
    if (mechanism.missing || mechanism.bad) {
        out.reject_reason =
            mechanism.missing ? "mechanism axis missing" : "mechanism axis malformed";
        return out;
    }

    JudgeVerdict v;
    v.interaction = interaction.value;
    if (!entity.na) v.entity = entity.value;
    if (!mechanism.na) v.mechanism = mechanism.value;
    v.note = j->contains("note") && (*j)["note"].is_string() ? (*j)["note"].get<std::string>() : "";
    v.clamp_warning = interaction.clamped || entity.clamped || mechanism.clamped;

    double sum = v.interaction;
    int axes = 1;
    if (v.entity) {
        sum += *v.entity;
        ++axes;
    }
    if (v.mechanism) {
        sum += *v.mechanism;
        ++axes;
    }
    v.avg = sum / axes;
    out.verdict = v;
    return out;
}

nlohmann::json VerdictParse::to_json() const {
    if (!verdict) return nlohmann::json{{"rejected", true}, {"reason", reject_reason}};
    nlohmann::json j{{"rejected", false},
                     {"interaction", verdict->interaction},
                     {"note", verdict->note},
                     {"avg", verdict->avg},
                     {"clamp_warning", verdict->clamp_warning}};
    j["entity"] = verdict->entity ? nlohmann::json(*verdict->entity) : nlohmann::json("NA");
    j["mechanism"] = verdict->mechanism ? nlohmann::json(*verdict->mechanism) : nlohmann::json("NA");
    return j;
}

JudgeAggregate aggregate(const std::vector<VerdictParse>& verdicts) {
    JudgeAggregate agg;
    agg.n_input = verdicts.size();
    double entity_sum = 0, interaction_sum = 0, mechanism_sum = 0, avg_sum = 0;
    std::size_t entity_n = 0, mechanism_n = 0;
    for (const VerdictParse& p : verdicts) {
        if (!p.verdict) {
            ++agg.n_rejected;
            continue;
        }
        const JudgeVerdict& v = *p.verdict;
        ++agg.n_accepted;
        if (v.clamp_warning) ++agg.clamp_warnings;
        interaction_sum += v.interaction;
        avg_sum += v.avg;
        if (v.entity) {
            entity_sum += *v.entity;
            ++entity_n;
        } else {
            ++agg.entity_na;
        }
        if (v.mechanism) {
            mechanism_sum += *v.mechanism;
            ++mechanism_n;
        } else {
            ++agg.mechanism_na;
        }
    }
    if (agg.n_accepted > 0) {
        agg.interaction_mean = interaction_sum / static_cast<double>(agg.n_accepted);
        agg.avg_mean = avg_sum / static_cast<double>(agg.n_accepted);
    }
    if (entity_n > 0) agg.entity_mean = entity_sum / static_cast<double>(entity_n);
    if (mechanism_n > 0) agg.mechanism_mean = mechanism_sum / static_cast<double>(mechanism_n);
    double axis_sum = 0;
    int axis_n = 0;
    for (const std::optional<double>& m :
         {agg.entity_mean, agg.interaction_mean, agg.mechanism_mean}) {
        if (m) {
            axis_sum += *m;
            ++axis_n;
        }
    }
    if (axis_n > 0) agg.axis_mean_avg = axis_sum / axis_n;
    return agg;
}

nlohmann::json JudgeAggregate::to_json() const {
    auto opt = [](const std::optional<double>& v) {
        return v ? nlohmann::json(*v) : nlohmann::json(nullptr);
    };
    return nlohmann::json{{"n_input", n_input},
                          {"n_accepted", n_accepted},
                          {"n_rejected", n_rejected},
                          {"entity_na", entity_na},
                          {"mechanism_na", mechanism_na},
                          {"clamp_warnings", clamp_warnings},
                          {"entity_mean", opt(entity_mean)},
                          {"interaction_mean", opt(interaction_mean)},
                          {"mechanism_mean", opt(mechanism_mean)},
                          {"avg_mean", opt(avg_mean)},
                          {"axis_mean_avg", opt(axis_mean_avg)}};
}

std::vector<synthesis::SynthesisRecord> run_judge(
    const std::vector<EvidenceCard>& cards, const std::vector<std::string>& predictions,
    const std::string& system_text, synthesis::LlmClient& client, const std::string& model_id,
    const std::string& journal_path, synthesis::SynthesisOptions options) {
    if (cards.size() != predictions.size())
        throw std::runtime_error("run_judge: cards/predictions sizes differ");
    std::vector<synthesis::PromptBundle> bundles;
    bundles.reserve(cards.size());
    for (std::size_t i = 0; i < cards.size(); ++i)
        bundles.push_back(judge_prompt(cards[i], predictions[i], system_text));
    options.validate_responses = false;
    return synthesis::synthesize(bundles, client, model_id, journal_path, options);
}

std::vector<VerdictParse> parse_judge_records(
    const std::vector<synthesis::SynthesisRecord>& records) {
    std::vector<VerdictParse> out;
    out.reserve(records.size());
    for (const synthesis::SynthesisRecord& r : records) {
        if (r.status == synthesis::SynthesisStatus::ok) {
            out.push_back(parse_verdict(r.description));
        } else {
            VerdictParse p;
            p.reject_reason = std::string("client ") + synthesis::status_name(r.status) +
                              (r.reason.empty() ? "" : ": " + r.reason);
            out.push_back(std::move(p));
        }
    }
    return out;
}

}  // namespace ppikit::eval
