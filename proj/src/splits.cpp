#include "ppikit/splits.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <stdexcept>

namespace ppikit::splits {

bool pair_conflicts(const PairKey& train_pair, const PairKey& test_pair,
                    homology::SimilarityCache& sim, Decontamination kind) {
    if (kind == Decontamination::pair_level) {
        return (sim.similar(train_pair.a, test_pair.a) && sim.similar(train_pair.b, test_pair.b)) ||
               (sim.similar(train_pair.a, test_pair.b) && sim.similar(train_pair.b, test_pair.a));
    }
    return sim.similar(train_pair.a, test_pair.a) || sim.similar(train_pair.a, test_pair.b) ||
           sim.similar(train_pair.b, test_pair.a) || sim.similar(train_pair.b, test_pair.b);
}

namespace {

unsigned job_count(int jobs) { return jobs < 0 ? 0 : static_cast<unsigned>(jobs); }

// Scans candidates against the sorted test set; first conflicting test pair
// wins so the recorded offender is deterministic.
void decontaminate(const std::vector<PairKey>& candidates, const std::set<PairKey>& test,
                   homology::SimilarityCache& sim, Decontamination kind, int jobs,
                   std::set<PairKey>* train, std::vector<RemovedPair>* removed) {
    std::vector<PairKey> test_sorted(test.begin(), test.end());
    std::vector<std::optional<PairKey>> offender(candidates.size());
    parallel_chunks(candidates.size(), job_count(jobs), [&](std::size_t lo, std::size_t hi) {
        for (std::size_t i = lo; i < hi; ++i) {
            for (const PairKey& te : test_sorted) {
                if (pair_conflicts(candidates[i], te, sim, kind)) {
                    offender[i] = te;
                    break;
                }
            }
        }
    });
    for (std::size_t i = 0; i < candidates.size(); ++i) {
        if (offender[i])
            removed->push_back({candidates[i], "homology", offender[i]});
        else
            train->insert(candidates[i]);
    }
}

void require_unique(const std::vector<PairKey>& pairs) {
    std::set<PairKey> seen;
    for (const PairKey& p : pairs)
        if (!seen.insert(p).second)
            throw std::runtime_error("split: duplicate pair " + p.to_string());
}

void finalize(SplitManifest* m, homology::SimilarityCache& sim, Decontamination kind, int jobs) {
    std::sort(m->removed.begin(), m->removed.end(),
              [](const RemovedPair& l, const RemovedPair& r) { return l.pair < r.pair; });
    m->audit = audit_split(m->train, m->test, sim, kind, jobs);
    m->audit.checksum = sha256_hex(m->content_json().dump());
    if (!m->audit.passed)
        throw std::runtime_error(m->name + ": decontamination audit found " +
                                 std::to_string(m->audit.violations) + " violations");
}

}  // namespace

AuditReport audit_split(const std::set<PairKey>& train, const std::set<PairKey>& test,
                        homology::SimilarityCache& sim, Decontamination kind, int jobs) {
    std::vector<PairKey> tr(train.begin(), train.end());
    std::vector<PairKey> te(test.begin(), test.end());
    std::atomic<std::size_t> violations{0};
    parallel_chunks(tr.size(), job_count(jobs), [&](std::size_t lo, std::size_t hi) {
        for (std::size_t i = lo; i < hi; ++i)
            for (const PairKey& t : te)
                if (pair_conflicts(tr[i], t, sim, kind)) violations.fetch_add(1);
    });
    AuditReport report;
    report.comparisons = tr.size() * te.size();
    report.violations = violations.load();
    report.passed = report.violations == 0;
    return report;
}

SplitManifest split_temporal(const std::vector<DatedPair>& pairs, homology::SimilarityCache& sim,
                             const Date& cutoff, int jobs) {
    {
        std::vector<PairKey> keys;
        keys.reserve(pairs.size());
        for (const DatedPair& p : pairs) keys.push_back(p.pair);
        require_unique(keys);
    }
    SplitManifest m;
    m.name = "temporal_holdout";
    m.cutoff_date = cutoff;
    m.params = sim.params();

    std::vector<PairKey> candidates;
    for (const DatedPair& p : pairs) {
        if (!p.first_annotated) {
            m.removed.push_back({p.pair, "undated", std::nullopt});
        } else if (*p.first_annotated > cutoff) {
            m.test.insert(p.pair);
        } else {
            candidates.push_back(p.pair);
        }
    }
    decontaminate(candidates, m.test, sim, Decontamination::pair_level, jobs, &m.train, &m.removed);
    finalize(&m, sim, Decontamination::pair_level, jobs);
    return m;
}

SplitManifest split_c3(const std::vector<PairKey>& pairs, homology::SimilarityCache& sim,
                       const std::set<PairKey>& test, int jobs) {
    require_unique(pairs);
    std::set<PairKey> universe(pairs.begin(), pairs.end());
    for (const PairKey& t : test)
        if (!universe.count(t))
            throw std::runtime_error("c3 split: test pair " + t.to_string() + " not in corpus");

    SplitManifest m;
    m.name = "c3_hard";
    m.params = sim.params();
    m.test = test;

    std::vector<PairKey> candidates;
    for (const PairKey& p : pairs)
        if (!test.count(p)) candidates.push_back(p);
    decontaminate(candidates, m.test, sim, Decontamination::protein_level, jobs, &m.train,
                  &m.removed);
    finalize(&m, sim, Decontamination::protein_level, jobs);
    return m;
}

SplitManifest split_c3(const std::vector<PairKey>& pairs, homology::SimilarityCache& sim,
                       const std::vector<homology::SequenceCluster>& clusters,
                       double test_fraction, std::uint64_t seed, int jobs) {
    if (test_fraction < 0.0 || test_fraction > 1.0)
        throw std::runtime_error("c3 split: test fraction must be in [0, 1]");
    require_unique(pairs);

    std::map<std::string, std::size_t> cluster_of;
    for (std::size_t c = 0; c < clusters.size(); ++c)
        for (const std::string& member : clusters[c].members) cluster_of[member] = c;
    auto lookup = [&](const std::string& acc) {
        auto it = cluster_of.find(acc);
        if (it == cluster_of.end())
            throw std::runtime_error("c3 split: protein " + acc + " not present in any cluster");
        return it->second;
    };
    std::vector<std::pair<std::size_t, std::size_t>> pair_clusters;
    pair_clusters.reserve(pairs.size());
    for (const PairKey& p : pairs) pair_clusters.emplace_back(lookup(p.a), lookup(p.b));

    const std::size_t target =
        static_cast<std::size_t>(std::ceil(test_fraction * static_cast<double>(pairs.size())));
    std::vector<std::size_t> order(clusters.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    Rng rng(seed);
    rng.shuffle(order);

    std::set<PairKey> test;
    std::vector<bool> pooled(clusters.size(), false);
    for (std::size_t idx : order) {
        if (test.size() >= target) break;
        pooled[idx] = true;
        test.clear();
        for (std::size_t i = 0; i < pairs.size(); ++i)
            if (pooled[pair_clusters[i].first] && pooled[pair_clusters[i].second])
                test.insert(pairs[i]);
    }

    SplitManifest m = split_c3(pairs, sim, test, jobs);
    m.test_fraction = test_fraction;
    m.seed = seed;
    // fraction/seed are part of the content block, so re-stamp the checksum
    m.audit.checksum = sha256_hex(m.content_json().dump());
    return m;
}

nlohmann::json SplitManifest::content_json() const {
    nlohmann::json j;
    j["name"] = name;
    if (cutoff_date) j["cutoff_date"] = cutoff_date->to_string();
    if (test_fraction) j["test_fraction"] = *test_fraction;
    if (seed) j["seed"] = *seed;
    j["params"] = params.to_json();
    j["counts"] = nlohmann::json{
        {"train", train.size()}, {"test", test.size()}, {"removed", removed.size()}};
    nlohmann::json train_j = nlohmann::json::array();
    for (const PairKey& p : train) train_j.push_back(p.to_string());
    j["train"] = std::move(train_j);
    nlohmann::json test_j = nlohmann::json::array();
    for (const PairKey& p : test) test_j.push_back(p.to_string());
    j["test"] = std::move(test_j);
    nlohmann::json removed_j = nlohmann::json::array();
    for (const RemovedPair& r : removed) {
        nlohmann::json row{{"pair", r.pair.to_string()}, {"reason", r.reason}};
        if (r.test_pair) row["test_pair"] = r.test_pair->to_string();
        removed_j.push_back(std::move(row));
    }
    j["removed"] = std::move(removed_j);
    return j;
}

nlohmann::json SplitManifest::to_json() const {
    nlohmann::json j = content_json();
    j["audit"] = nlohmann::json{{"comparisons", audit.comparisons},
                                {"violations", audit.violations},
                                {"passed", audit.passed},
                                {"checksum", audit.checksum}};
    return j;
}

SplitManifest SplitManifest::from_json(const nlohmann::json& j) {
    SplitManifest m;
    m.name = j.at("name").get<std::string>();
    if (j.contains("cutoff_date")) m.cutoff_date = Date::parse(j.at("cutoff_date").get<std::string>());
    if (j.contains("test_fraction")) m.test_fraction = j.at("test_fraction").get<double>();
    if (j.contains("seed")) m.seed = j.at("seed").get<std::uint64_t>();
    m.params = homology::SimilarityParams::from_json(j.at("params"));
    for (const auto& s : j.at("train")) m.train.insert(PairKey::parse(s.get<std::string>()));
    for (const auto& s : j.at("test")) m.test.insert(PairKey::parse(s.get<std::string>()));
    for (const auto& row : j.at("removed")) {
        RemovedPair r;
        r.pair = PairKey::parse(row.at("pair").get<std::string>());
        r.reason = row.at("reason").get<std::string>();
        if (row.contains("test_pair"))
            r.test_pair = PairKey::parse(row.at("test_pair").get<std::string>());
        m.removed.push_back(std::move(r));
    }
    const auto& a = j.at("audit");
    m.audit.comparisons = a.at("comparisons").get<std::size_t>();
    m.audit.violations = a.at("violations").get<std::size_t>();
    m.audit.passed = a.at("passed").get<bool>();
    m.audit.checksum = a.at("checksum").get<std::string>();
    return m;
}

}  // namespace ppikit::splits
