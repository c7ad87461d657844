#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "curator/bpe.hpp"
#include "curator/document.hpp"
#include "curator/rng.hpp"

namespace curator {

// Document-level infilling transform and fixed-length packing.
struct FimConfig {
    double fim_rate = 0.5;
    std::uint32_t context_length = 4096;
    std::uint64_t rng_seed = 0;

    void validate() const;  // throws std::invalid_argument
};

// A document cut at two character boundaries a <= b. prefix + middle +
// suffix reassembles the document byte-exactly.
struct FimSplit {
    std::string prefix;
    std::string middle;
    std::string suffix;
    std::size_t cut_a = 0;  // character offsets
    std::size_t cut_b = 0;
};

struct DocSegment {
    std::uint32_t start = 0;  // token offsets within the sequence
    std::uint32_t end = 0;
    std::string doc_id;
    bool was_fim = false;
};

// One fixed-length training sequence. Document segments are contiguous
// from offset 0; the remainder (if any) is eos padding.
struct PackedSequence {
    std::vector<TokenId> ids;  // length == context_length
    std::vector<DocSegment> doc_boundaries;
};

struct TransformedDoc {
    std::string doc_id;
    bool was_fim = false;
    std::vector<TokenId> ids;  // ends with eos
};

// Two cut offsets drawn uniformly without replacement from the character
// boundaries [0, len], sorted. The generator is consumed in documented
// order: first cut draw, then second. Throws "empty-document" on empty
// input.
FimSplit sample_fim_split(std::string_view doc, Rng& rng);

// PSM layout: fim_begin, prefix, fim_hole, suffix, fim_end, middle, eos.
// The suffix precedes the middle.
std::vector<TokenId> encode_psm(const FimSplit& split, const BpeVocab& vocab);

// Draws once against fim_rate (before any cut draws), then either the
// PSM transform or the plain next-token form enc(doc) + eos.
TransformedDoc apply_fim(const SourceDocument& doc, const BpeVocab& vocab,
                         const FimConfig& cfg, Rng& rng);

// Convenience: per-document generator derived from (cfg.rng_seed, doc id),
// so documents can be transformed in parallel deterministically.
TransformedDoc apply_fim(const SourceDocument& doc, const BpeVocab& vocab,
                         const FimConfig& cfg);

// Greedy concatenation in input order. A document overflowing the open
// sequence is split at the token boundary and continues in the next one;
// the final partial sequence is padded with eos. No token is lost or
// fabricated.
std::vector<PackedSequence> pack_sequences(const std::vector<TransformedDoc>& docs,
                                           const FimConfig& cfg);

struct MixItem {
    SourceDocument doc;
    std::uint64_t token_count = 0;
};

struct MixedDoc {
    CorpusCategory category = CorpusCategory::code;
    std::size_t stream_index = 0;  // position within the category stream
};

// Interleaves per-category streams so cumulative token shares track the
// ratios (largest-deficit-first; ties break by category enum order).
// Ratios must sum to 1 and every stream must be non-empty. Throws
// "category-underrun" when a stream is exhausted before target_tokens.
std::vector<MixedDoc> mix_corpus(const std::map<CorpusCategory, std::vector<MixItem>>& streams,
                                 const std::map<CorpusCategory, double>& ratios,
                                 std::uint64_t target_tokens);

}  // namespace curator
