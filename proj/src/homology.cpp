#include "ppikit/homology.hpp"

#include <algorithm>
#include <atomic>
#include <limits>
#include <stdexcept>

namespace ppikit::homology {

namespace {

// Scoring constants (integer; a gap of length g costs kGapOpen + g*kGapExtend).
constexpr long long kMatch = 1;
constexpr long long kMismatch = 0;
constexpr long long kGapOpen = 2;
constexpr long long kGapExtend = 1;

constexpr long long kNegInf = std::numeric_limits<long long>::min() / 4;

// Alignment states: residue-residue column, gap in B (consumes A), gap in A.
enum State : int { kStM = 0, kStX = 1, kStY = 2 };

// Canonical tie order M > X > Y keeps the traceback deterministic.
int argmax3(long long m, long long x, long long y, long long* best) {
    int s = kStM;
    long long b = m;
    if (x > b) {
        b = x;
        s = kStX;
    }
    if (y > b) {
        b = y;
        s = kStY;
    }
    *best = b;
    return s;
}

}  // namespace

nlohmann::json SimilarityParams::to_json() const {
    return nlohmann::json{{"min_identity", min_identity},
                          {"min_coverage", min_coverage},
                          {"kmer_size", kmer_size},
                          {"kmer_jaccard_min", kmer_jaccard_min}};
}

SimilarityParams SimilarityParams::from_json(const nlohmann::json& j) {
    SimilarityParams p;
    p.min_identity = j.at("min_identity").get<double>();
    p.min_coverage = j.at("min_coverage").get<double>();
    p.kmer_size = j.at("kmer_size").get<int>();
    if (j.contains("kmer_jaccard_min")) p.kmer_jaccard_min = j.at("kmer_jaccard_min").get<double>();
    return p;
}

AlignmentStats align_global(const std::string& a, const std::string& b) {
    const std::size_t m = a.size();
    const std::size_t n = b.size();
    if (m == 0 || n == 0) throw std::runtime_error("align_global: empty sequence");

    // Rolling score rows; full backpointer matrix (2 bits per state per cell).
    std::vector<long long> mprev(n + 1), xprev(n + 1), yprev(n + 1);
    std::vector<long long> mcur(n + 1), xcur(n + 1), ycur(n + 1);
    std::vector<std::uint8_t> bp((m + 1) * (n + 1), 0);
    auto set_bp = [&](std::size_t i, std::size_t j, int state, int pred) {
        bp[i * (n + 1) + j] |= static_cast<std::uint8_t>(pred << (2 * state));
    };
    auto get_bp = [&](std::size_t i, std::size_t j, int state) -> int {
        return (bp[i * (n + 1) + j] >> (2 * state)) & 3;
    };

    mprev[0] = 0;
    xprev[0] = kNegInf;
    yprev[0] = kNegInf;
    for (std::size_t j = 1; j <= n; ++j) {
        mprev[j] = kNegInf;
        xprev[j] = kNegInf;
        yprev[j] = -(kGapOpen + static_cast<long long>(j) * kGapExtend);
        set_bp(0, j, kStY, j == 1 ? kStM : kStY);
    }
    for (std::size_t i = 1; i <= m; ++i) {
        mcur[0] = kNegInf;
        ycur[0] = kNegInf;
        xcur[0] = -(kGapOpen + static_cast<long long>(i) * kGapExtend);
        set_bp(i, 0, kStX, i == 1 ? kStM : kStX);
        for (std::size_t j = 1; j <= n; ++j) {
            long long best;
            int pred = argmax3(mprev[j - 1], xprev[j - 1], yprev[j - 1], &best);
            mcur[j] = best + (a[i - 1] == b[j - 1] ? kMatch : kMismatch);
            set_bp(i, j, kStM, pred);

            pred = argmax3(mprev[j] - (kGapOpen + kGapExtend), xprev[j] - kGapExtend,
                           yprev[j] - (kGapOpen + kGapExtend), &best);
            xcur[j] = best;
            set_bp(i, j, kStX, pred);

            pred = argmax3(mcur[j - 1] - (kGapOpen + kGapExtend),
                           xcur[j - 1] - (kGapOpen + kGapExtend), ycur[j - 1] - kGapExtend, &best);
            ycur[j] = best;
            set_bp(i, j, kStY, pred);
        }
        std::swap(mprev, mcur);
        std::swap(xprev, xcur);
        std::swap(yprev, ycur);
    }

    AlignmentStats st;
    int state = argmax3(mprev[n], xprev[n], yprev[n], &st.score);

    std::size_t i = m;
    std::size_t j = n;
    bool any_m = false;
    std::size_t lo_a = 0, hi_a = 0, lo_b = 0, hi_b = 0;
    while (i > 0 || j > 0) {
        ++st.columns;
        int pred = get_bp(i, j, state);
        if (state == kStM) {
            if (a[i - 1] == b[j - 1]) ++st.matches;
            // Traceback runs end-to-start, so the last M column seen has the
            // smallest indices.
            if (!any_m) {
                hi_a = i;
                hi_b = j;
                any_m = true;
            }
            lo_a = i;
            lo_b = j;
            --i;
            --j;
        } else if (state == kStX) {
            --i;
        } else {
            --j;
        }
        state = pred;
    }
    if (any_m) {
        st.span_a = hi_a - lo_a + 1;
        st.span_b = hi_b - lo_b + 1;
    }
    return st;
}

bool length_ratio_passes(std::size_t len_a, std::size_t len_b, const SimilarityParams& params) {
    double lo = static_cast<double>(std::min(len_a, len_b));
    double hi = static_cast<double>(std::max(len_a, len_b));
    if (hi == 0.0) return false;
    // identity <= matches/columns <= min(len)/max(len); strict > required.
    return lo / hi > params.min_identity;
}

bool similar(const std::string& seq_a, const std::string& seq_b, const SimilarityParams& params) {
    if (seq_a.empty() || seq_b.empty()) throw std::runtime_error("similar: empty sequence");
    if (!valid_sequence(seq_a) || !valid_sequence(seq_b))
        throw std::runtime_error("similar: sequence contains non-amino-acid characters");
    if (!length_ratio_passes(seq_a.size(), seq_b.size(), params)) return false;
    AlignmentStats st = align_global(seq_a, seq_b);
    if (!(st.identity() > params.min_identity)) return false;
    double cov_a = static_cast<double>(st.span_a) / static_cast<double>(seq_a.size());
    double cov_b = static_cast<double>(st.span_b) / static_cast<double>(seq_b.size());
    return cov_a >= params.min_coverage && cov_b >= params.min_coverage;
}

namespace {

// 5 bits per residue packed into 64 bits; caps k at 12.
std::vector<std::uint64_t> kmer_set(const std::string& seq, int k) {
    std::vector<std::uint64_t> out;
    if (k > 12) throw std::runtime_error("kmer_jaccard: kmer_size above 12 unsupported");
    if (k < 1 || static_cast<std::size_t>(k) > seq.size()) return out;
    out.reserve(seq.size() - k + 1);
    for (std::size_t i = 0; i + k <= seq.size(); ++i) {
        std::uint64_t code = 0;
        for (int t = 0; t < k; ++t)
            code = (code << 5) | static_cast<std::uint64_t>((seq[i + t] - 'A') & 31);
        out.push_back(code);
    }
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

}  // namespace

double kmer_jaccard(const std::string& a, const std::string& b, int kmer_size) {
    std::vector<std::uint64_t> sa = kmer_set(a, kmer_size);
    std::vector<std::uint64_t> sb = kmer_set(b, kmer_size);
    // Sequences shorter than k carry no signal; never prefilter them out.
    if (sa.empty() || sb.empty()) return 1.0;
    std::size_t inter = 0;
    std::size_t ia = 0, ib = 0;
    while (ia < sa.size() && ib < sb.size()) {
        if (sa[ia] == sb[ib]) {
            ++inter;
            ++ia;
            ++ib;
        } else if (sa[ia] < sb[ib]) {
            ++ia;
        } else {
            ++ib;
        }
    }
    std::size_t uni = sa.size() + sb.size() - inter;
    return static_cast<double>(inter) / static_cast<double>(uni);
}

std::vector<SequenceCluster> cluster(const std::vector<ProteinRecord>& proteins,
                                     const SimilarityParams& params, int jobs) {
    std::vector<const ProteinRecord*> order;
    order.reserve(proteins.size());
    {
        std::set<std::string> seen;
        for (const ProteinRecord& p : proteins) {
            if (!seen.insert(p.accession).second)
                throw std::runtime_error("cluster: duplicate accession " + p.accession);
            order.push_back(&p);
        }
    }
    std::sort(order.begin(), order.end(), [](const ProteinRecord* l, const ProteinRecord* r) {
        if (l->sequence.size() != r->sequence.size()) return l->sequence.size() > r->sequence.size();
        return l->accession < r->accession;
    });

    std::vector<SequenceCluster> clusters;
    std::vector<const std::string*> rep_seqs;  // parallel to clusters

    auto would_join = [&](const ProteinRecord& cand, std::size_t rep_idx) {
        const std::string& rep = *rep_seqs[rep_idx];
        if (rep.empty()) return false;
        if (!length_ratio_passes(cand.sequence.size(), rep.size(), params)) return false;
        if (params.kmer_jaccard_min > 0.0 &&
            kmer_jaccard(cand.sequence, rep, params.kmer_size) < params.kmer_jaccard_min)
            return false;
        return similar(cand.sequence, rep, params);
    };

    for (const ProteinRecord* p : order) {
        std::size_t joined = clusters.size();
        if (!p->sequence.empty()) {
            if (jobs != 1 && clusters.size() > 16) {
                // Scan every representative in parallel, keep the first hit:
                // similar() is pure, so the extra evaluations cannot change
                // the greedy outcome.
                std::atomic<std::size_t> first{clusters.size()};
                parallel_chunks(clusters.size(), jobs < 0 ? 0 : static_cast<unsigned>(jobs),
                                [&](std::size_t lo, std::size_t hi) {
                                    for (std::size_t c = lo; c < hi; ++c) {
                                        if (c >= first.load(std::memory_order_relaxed)) break;
                                        if (would_join(*p, c)) {
                                            std::size_t cur = first.load();
                                            while (c < cur && !first.compare_exchange_weak(cur, c)) {
                                            }
                                            break;
                                        }
                                    }
                                });
                joined = first.load();
            } else {
                for (std::size_t c = 0; c < clusters.size(); ++c) {
                    if (would_join(*p, c)) {
                        joined = c;
                        break;
                    }
                }
            }
        }
        if (joined < clusters.size()) {
            clusters[joined].members.push_back(p->accession);
        } else {
            clusters.push_back({p->accession, {p->accession}});
            rep_seqs.push_back(&p->sequence);
        }
    }
    return clusters;
}

std::string dump_clusters_tsv(const std::vector<SequenceCluster>& clusters) {
    std::string out;
    for (const SequenceCluster& c : clusters)
        for (const std::string& member : c.members)
            out += c.representative + "\t" + member + "\n";
    return out;
}

std::set<PairKey> subsample_t2(const std::vector<SubsampleInput>& items,
                               const std::vector<SequenceCluster>& clusters) {
    std::map<std::string, std::size_t> cluster_of;
    for (std::size_t c = 0; c < clusters.size(); ++c)
        for (const std::string& member : clusters[c].members) cluster_of[member] = c;

    auto lookup = [&](const std::string& acc) {
        auto it = cluster_of.find(acc);
        if (it == cluster_of.end())
            throw std::runtime_error("subsample_t2: protein " + acc + " not present in any cluster");
        return it->second;
    };

    std::set<PairKey> retained;
    struct Best {
        double total;
        PairKey pair;
    };
    std::map<std::pair<std::size_t, std::size_t>, Best> groups;
    for (const SubsampleInput& item : items) {
        if (item.tier == 1) throw std::runtime_error("subsample_t2: tier T1 pair passed in");
        if (item.tier == 3) {
            retained.insert(item.pair);
            continue;
        }
        if (item.tier != 2)
            throw std::runtime_error("subsample_t2: unexpected tier T" + std::to_string(item.tier));
        std::size_t ca = lookup(item.pair.a);
        std::size_t cb = lookup(item.pair.b);
        auto sig = std::minmax(ca, cb);
        auto [it, fresh] = groups.try_emplace(sig, Best{item.total, item.pair});
        if (!fresh && (item.total > it->second.total ||
                       (item.total == it->second.total && item.pair < it->second.pair)))
            it->second = Best{item.total, item.pair};
    }
    for (const auto& [sig, best] : groups) retained.insert(best.pair);
    return retained;
}

std::vector<ProteinRecord> parse_fasta(const std::string& text) {
    std::vector<ProteinRecord> records;
    std::set<std::string> seen;
    ProteinRecord cur;
    bool in_record = false;
    std::size_t line_no = 0;
    std::size_t header_line = 0;

    auto flush = [&]() {
        if (!in_record) return;
        if (cur.sequence.empty())
            throw std::runtime_error("fasta: empty sequence for " + cur.accession + " (line " +
                                     std::to_string(header_line) + ")");
        if (!valid_sequence(cur.sequence))
            throw std::runtime_error("fasta: non-amino-acid characters in " + cur.accession);
        if (!seen.insert(cur.accession).second)
            throw std::runtime_error("fasta: duplicate accession " + cur.accession);
        records.push_back(cur);
        cur = ProteinRecord{};
    };

    for (const std::string& raw : split(text, '\n')) {
        ++line_no;
        std::string line = trim(raw);
        if (line.empty()) continue;
        if (line[0] == '>') {
            flush();
            std::vector<std::string> fields = split_ws(line.substr(1));
            if (fields.empty())
                throw std::runtime_error("fasta: header with no accession at line " +
                                         std::to_string(line_no));
            cur.accession = fields[0];
            in_record = true;
            header_line = line_no;
        } else {
            if (!in_record)
                throw std::runtime_error("fasta: sequence data before first header at line " +
                                         std::to_string(line_no));
            for (char ch : line)
                cur.sequence.push_back(static_cast<char>(std::toupper(static_cast<unsigned char>(ch))));
        }
    }
    flush();
    return records;
}

SimilarityCache::SimilarityCache(std::map<std::string, std::string> sequences,
                                 SimilarityParams params)
    : sequences_(std::move(sequences)), params_(params) {}

bool SimilarityCache::similar(const std::string& acc_a, const std::string& acc_b) {
    auto ia = sequences_.find(acc_a);
    auto ib = sequences_.find(acc_b);
    if (ia == sequences_.end()) throw std::runtime_error("similarity cache: unknown accession " + acc_a);
    if (ib == sequences_.end()) throw std::runtime_error("similarity cache: unknown accession " + acc_b);

    std::pair<std::string, std::string> key = std::minmax(acc_a, acc_b);
    {
        std::lock_guard<std::mutex> lock(mu_);
        ++calls_;
        auto it = memo_.find(key);
        if (it != memo_.end()) {
            ++hits_;
            return it->second;
        }
    }
    bool value = false;
    if (!ia->second.empty() && !ib->second.empty())
        value = homology::similar(ia->second, ib->second, params_);
    std::lock_guard<std::mutex> lock(mu_);
    memo_.emplace(key, value);
    return value;
}

}  // namespace ppikit::homology
