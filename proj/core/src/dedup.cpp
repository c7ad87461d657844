#include "curator/dedup.hpp"

#include <algorithm>
#include <map>
#include <numeric>
#include <stdexcept>
#include <unordered_map>

#include "json.hpp"

#include "curator/hashing.hpp"
#include "curator/parallel.hpp"

namespace curator {

void DedupConfig::validate() const {
    if (shingle_k < 1) throw std::invalid_argument("dedup config: shingle_k must be >= 1");
    if (num_hashes == 0 || bands == 0 || rows == 0 ||
        static_cast<std::uint64_t>(bands) * rows != num_hashes) {
        throw std::invalid_argument("dedup config: bands * rows must equal num_hashes");
    }
    if (jaccard_threshold <= 0.0 || jaccard_threshold >= 1.0) {
        throw std::invalid_argument("dedup config: jaccard_threshold must lie in (0,1)");
    }
}

namespace {

bool is_space(char c) {
    return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
}

}  // namespace

std::vector<std::uint64_t> shingle(std::string_view content, std::uint32_t k) {
    if (k < 1) throw std::invalid_argument("shingle: k must be >= 1");

    // Token boundaries as (offset, length) views into the content.
    std::vector<std::pair<std::size_t, std::size_t>> tokens;
    std::size_t i = 0;
    while (i < content.size()) {
        while (i < content.size() && is_space(content[i])) ++i;
        const std::size_t start = i;
        while (i < content.size() && !is_space(content[i])) ++i;
        if (i > start) tokens.emplace_back(start, i - start);
    }
    if (tokens.empty()) return {};

    auto hash_window = [&](std::size_t first, std::size_t count) {
        std::uint64_t h = 0xcbf29ce484222325ULL;
        for (std::size_t t = first; t < first + count; ++t) {
            h = fnv1a64(content.substr(tokens[t].first, tokens[t].second), h);
            h = fnv1a64("\x1f", h);  // token separator keeps windows injective
        }
        return mix64(h);
    };

    std::vector<std::uint64_t> out;
    if (tokens.size() < k) {
        out.push_back(hash_window(0, tokens.size()));
    } else {
        out.reserve(tokens.size() - k + 1);
        for (std::size_t t = 0; t + k <= tokens.size(); ++t) {
            out.push_back(hash_window(t, k));
        }
    }
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

MinHashSignature minhash(const std::vector<std::uint64_t>& shingles, const DedupConfig& cfg,
                         std::string doc_id) {
    if (shingles.empty()) throw std::runtime_error("empty-document");
    MinHashSignature sig;
    sig.doc_id = std::move(doc_id);
    sig.seed = cfg.seed;
    sig.values.assign(cfg.num_hashes, ~std::uint64_t{0});
    // h_i(x) = mix64(x ^ s_i) is a cheap seeded family: per-i the xor
    // permutes inputs, and the finalizer scrambles order.
    for (std::uint32_t i = 0; i < cfg.num_hashes; ++i) {
        const std::uint64_t salt = mix64(cfg.seed + 0x9e3779b97f4a7c15ULL * (i + 1));
        std::uint64_t best = ~std::uint64_t{0};
        for (const std::uint64_t s : shingles) {
            const std::uint64_t h = mix64(s ^ salt);
            if (h < best) best = h;
        }
        sig.values[i] = best;
    }
    return sig;
}

double estimate_jaccard(const MinHashSignature& a, const MinHashSignature& b) {
    if (a.values.size() != b.values.size() || a.seed != b.seed) {
        throw std::invalid_argument("estimate_jaccard: signatures built with different configs");
    }
    if (a.values.empty()) throw std::invalid_argument("estimate_jaccard: empty signatures");
    std::size_t agree = 0;
    for (std::size_t i = 0; i < a.values.size(); ++i) {
        if (a.values[i] == b.values[i]) ++agree;
    }
    return static_cast<double>(agree) / static_cast<double>(a.values.size());
}

double exact_jaccard(const std::vector<std::uint64_t>& a, const std::vector<std::uint64_t>& b) {
    if (a.empty() && b.empty()) return 0.0;
    std::size_t inter = 0;
    std::size_t ia = 0;
    std::size_t ib = 0;
    while (ia < a.size() && ib < b.size()) {
        if (a[ia] == b[ib]) {
            ++inter;
            ++ia;
            ++ib;
        } else if (a[ia] < b[ib]) {
            ++ia;
        } else {
            ++ib;
        }
    }
    const std::size_t uni = a.size() + b.size() - inter;
    return static_cast<double>(inter) / static_cast<double>(uni);
}

namespace {

class UnionFind {
public:
    explicit UnionFind(std::size_t n) : parent_(n) {
        std::iota(parent_.begin(), parent_.end(), std::size_t{0});
    }

    std::size_t find(std::size_t x) {
        while (parent_[x] != x) {
            parent_[x] = parent_[parent_[x]];
            x = parent_[x];
        }
        return x;
    }

    void unite(std::size_t a, std::size_t b) {
        a = find(a);
        b = find(b);
        if (a != b) parent_[b] = a;
    }

private:
    std::vector<std::size_t> parent_;
};

}  // namespace

DedupResult dedup_corpus(const std::vector<SourceDocument>& docs, const DedupConfig& cfg) {
    cfg.validate();
    const std::size_t n = docs.size();

    std::vector<std::vector<std::uint64_t>> shingle_sets(n);
    std::vector<MinHashSignature> sigs(n);
    parallel_for(n, cfg.jobs, [&](std::size_t begin, std::size_t end) {
        for (std::size_t i = begin; i < end; ++i) {
            shingle_sets[i] = shingle(docs[i].content, cfg.shingle_k);
            if (!shingle_sets[i].empty()) {
                sigs[i] = minhash(shingle_sets[i], cfg, docs[i].id);
            }
        }
    });

    UnionFind uf(n);
    std::unordered_map<std::uint64_t, double> pair_estimates;  // packed index pair -> estimate
    auto consider_pair = [&](std::size_t a, std::size_t b, double estimate) {
        uf.unite(a, b);
        const std::uint64_t key = (static_cast<std::uint64_t>(std::min(a, b)) << 32) |
                                  static_cast<std::uint64_t>(std::max(a, b));
        pair_estimates.emplace(key, estimate);
    };

    // Band buckets: documents sharing any band become candidates.
    std::unordered_map<std::uint64_t, std::vector<std::uint32_t>> buckets;
    buckets.reserve(n * cfg.bands / 2 + 1);
    for (std::size_t i = 0; i < n; ++i) {
        if (shingle_sets[i].empty()) continue;
        for (std::uint32_t band = 0; band < cfg.bands; ++band) {
            std::uint64_t h = mix64(0xb4b147bc522828b1ULL + band);
            for (std::uint32_t r = 0; r < cfg.rows; ++r) {
                h = mix64(h ^ sigs[i].values[band * cfg.rows + r]);
            }
            buckets[h].push_back(static_cast<std::uint32_t>(i));
        }
    }
    for (const auto& [key, members] : buckets) {
        if (members.size() < 2) continue;
        for (std::size_t x = 0; x < members.size(); ++x) {
            for (std::size_t y = x + 1; y < members.size(); ++y) {
                const std::size_t a = members[x];
                const std::size_t b = members[y];
                if (uf.find(a) == uf.find(b)) continue;  // already joined
                const double est = estimate_jaccard(sigs[a], sigs[b]);
                const double score =
                    cfg.verify_exact ? exact_jaccard(shingle_sets[a], shingle_sets[b]) : est;
                if (score >= cfg.jaccard_threshold) consider_pair(a, b, est);
            }
        }
    }

    // Shingle-less documents (empty or whitespace-only) cluster by exact
    // content equality; MinHash has nothing to compare.
    std::unordered_map<std::uint64_t, std::vector<std::size_t>> empties;
    for (std::size_t i = 0; i < n; ++i) {
        if (shingle_sets[i].empty()) empties[fnv1a64(docs[i].content)].push_back(i);
    }
    for (const auto& [key, members] : empties) {
        for (std::size_t x = 1; x < members.size(); ++x) {
            if (docs[members[x]].content == docs[members[0]].content) {
                consider_pair(members[0], members[x], 1.0);
            }
        }
    }

    // Component -> members, keyed by root.
    std::map<std::string, DuplicateCluster> clusters_by_rep;
    std::unordered_map<std::size_t, std::vector<std::size_t>> components;
    for (std::size_t i = 0; i < n; ++i) components[uf.find(i)].push_back(i);

    std::vector<bool> kept_flag(n, true);
    for (const auto& [root, members] : components) {
        if (members.size() < 2) continue;
        DuplicateCluster cluster;
        for (const std::size_t m : members) cluster.members.push_back(docs[m].id);
        std::sort(cluster.members.begin(), cluster.members.end());
        cluster.representative = cluster.members.front();
        for (const std::size_t m : members) {
            if (docs[m].id != cluster.representative) kept_flag[m] = false;
        }
        for (std::size_t x = 0; x < members.size(); ++x) {
            for (std::size_t y = x + 1; y < members.size(); ++y) {
                const std::uint64_t key =
                    (static_cast<std::uint64_t>(std::min(members[x], members[y])) << 32) |
                    static_cast<std::uint64_t>(std::max(members[x], members[y]));
                const auto it = pair_estimates.find(key);
                if (it != pair_estimates.end()) {
                    cluster.estimated_jaccard_min = std::min(cluster.estimated_jaccard_min, it->second);
                }
            }
        }
        clusters_by_rep.emplace(cluster.representative, std::move(cluster));
    }

    DedupResult result;
    for (std::size_t i = 0; i < n; ++i) {
        if (kept_flag[i]) result.kept.push_back(docs[i].id);
    }
    for (auto& [rep, cluster] : clusters_by_rep) result.clusters.push_back(std::move(cluster));
    return result;
}

std::string cluster_to_jsonl(const DuplicateCluster& cluster) {
    nlohmann::json j;
    j["representative"] = cluster.representative;
    j["members"] = cluster.members;
    j["estimated_jaccard_min"] = cluster.estimated_jaccard_min;
    return j.dump();
}

}  // namespace curator
