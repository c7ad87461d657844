#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "curator/document.hpp"

namespace curator {

// MinHash/LSH parameters. The (16, 8) banding puts the S-curve's steep
// section near the 0.85 threshold.
struct DedupConfig {
    std::uint32_t shingle_k = 5;
    std::uint32_t num_hashes = 128;
    std::uint32_t bands = 16;
    std::uint32_t rows = 8;
    double jaccard_threshold = 0.85;
    std::uint64_t seed = 0;
    bool verify_exact = false;  // verify candidate pairs with exact shingle Jaccard
    int jobs = 1;

    void validate() const;  // throws std::invalid_argument
};

struct MinHashSignature {
    std::string doc_id;
    std::uint64_t seed = 0;
    std::vector<std::uint64_t> values;  // length == num_hashes
};

struct DuplicateCluster {
    std::string representative;        // smallest member id
    std::vector<std::string> members;  // sorted, includes representative
    double estimated_jaccard_min = 1.0;
};

struct DedupResult {
    std::vector<std::string> kept;  // input order restricted to kept ids
    std::vector<DuplicateCluster> clusters;
};

// Whitespace-tokenized k-shingles, each hashed to 64 bits. Documents with
// fewer than k tokens yield one shingle over all tokens; empty content
// yields the empty set. Result is sorted and unique.
std::vector<std::uint64_t> shingle(std::string_view content, std::uint32_t k);

// Per-function minima over the shingle set. Throws std::runtime_error
// ("empty-document") on an empty shingle set.
MinHashSignature minhash(const std::vector<std::uint64_t>& shingles, const DedupConfig& cfg,
                         std::string doc_id = {});

// Fraction of agreeing positions; estimates Jaccard similarity. Throws
// std::invalid_argument on mismatched signature configurations.
double estimate_jaccard(const MinHashSignature& a, const MinHashSignature& b);

// Exact Jaccard of two sorted unique shingle sets (test oracle and the
// verify_exact path).
double exact_jaccard(const std::vector<std::uint64_t>& a, const std::vector<std::uint64_t>& b);

// LSH banding proposes candidate pairs; pairs at or above the threshold
// are unioned into clusters; the kept set preserves input order and
// keeps the smallest id per cluster. Documents with no shingles are
// clustered by exact content equality instead.
DedupResult dedup_corpus(const std::vector<SourceDocument>& docs, const DedupConfig& cfg);

std::string cluster_to_jsonl(const DuplicateCluster& cluster);

}  // namespace curator
