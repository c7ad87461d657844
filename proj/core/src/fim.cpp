#include "curator/fim.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "curator/utf8.hpp"

namespace curator {

void FimConfig::validate() const {
    if (fim_rate < 0.0 || fim_rate > 1.0) {
        throw std::invalid_argument("fim config: fim_rate must lie in [0,1]");
    }
    if (context_length <= 4) {
        throw std::invalid_argument("fim config: context_length must exceed 4");
    }
}

FimSplit sample_fim_split(std::string_view doc, Rng& rng) {
    if (doc.empty()) throw std::runtime_error("empty-document");
    const std::size_t len = utf8_length(doc);
    // Distinct boundaries via shifted second draw, then sort.
    std::size_t a = static_cast<std::size_t>(rng.next_below(len + 1));
    std::size_t b = static_cast<std::size_t>(rng.next_below(len));
    if (b >= a) ++b;
    if (a > b) std::swap(a, b);

    FimSplit split;
    split.cut_a = a;
    split.cut_b = b;
    const std::size_t byte_a = utf8_byte_offset(doc, a);
    const std::size_t byte_b = utf8_byte_offset(doc, b);
    split.prefix = std::string(doc.substr(0, byte_a));
    split.middle = std::string(doc.substr(byte_a, byte_b - byte_a));
    split.suffix = std::string(doc.substr(byte_b));
    return split;
}

std::vector<TokenId> encode_psm(const FimSplit& split, const BpeVocab& vocab) {
    std::vector<TokenId> out;
    out.push_back(BpeVocab::kFimBeginId);
    const auto prefix = encode(split.prefix, vocab);
    out.insert(out.end(), prefix.ids.begin(), prefix.ids.end());
    out.push_back(BpeVocab::kFimHoleId);
    const auto suffix = encode(split.suffix, vocab);
    out.insert(out.end(), suffix.ids.begin(), suffix.ids.end());
    out.push_back(BpeVocab::kFimEndId);
    const auto middle = encode(split.middle, vocab);
    out.insert(out.end(), middle.ids.begin(), middle.ids.end());
    out.push_back(BpeVocab::kEosId);
    return out;
}

TransformedDoc apply_fim(const SourceDocument& doc, const BpeVocab& vocab,
                         const FimConfig& cfg, Rng& rng) {
    if (doc.content.empty()) throw std::runtime_error("empty-document");
    TransformedDoc out;
    out.doc_id = doc.id;
    const double draw = rng.next_real();  // consumed before any cut draw
    if (draw < cfg.fim_rate) {
        out.was_fim = true;
        const FimSplit split = sample_fim_split(doc.content, rng);
        out.ids = encode_psm(split, vocab);
    } else {
        const auto seq = encode(doc.content, vocab);
        out.ids = seq.ids;
        out.ids.push_back(BpeVocab::kEosId);
    }
    return out;
}

TransformedDoc apply_fim(const SourceDocument& doc, const BpeVocab& vocab,
                         const FimConfig& cfg) {
    Rng rng = doc_rng(cfg.rng_seed, doc.id);
    return apply_fim(doc, vocab, cfg, rng);
}

std::vector<PackedSequence> pack_sequences(const std::vector<TransformedDoc>& docs,
                                           const FimConfig& cfg) {
    cfg.validate();
    const std::uint32_t ctx = cfg.context_length;
    std::vector<PackedSequence> sequences;
    PackedSequence current;
    current.ids.reserve(ctx);

    auto flush = [&] {
        if (current.ids.empty()) return;
        current.ids.resize(ctx, BpeVocab::kEosId);  // eos padding
        sequences.push_back(std::move(current));
        current = PackedSequence{};
        current.ids.reserve(ctx);
    };

    for (const auto& doc : docs) {
        if (doc.ids.empty()) continue;
        if (doc.ids.back() != BpeVocab::kEosId) {
            throw std::invalid_argument("pack_sequences: every document must end with eos");
        }
        std::size_t offset = 0;
        while (offset < doc.ids.size()) {
            const std::uint32_t room = ctx - static_cast<std::uint32_t>(current.ids.size());
            const std::size_t take = std::min<std::size_t>(room, doc.ids.size() - offset);
            DocSegment segment;
            segment.start = static_cast<std::uint32_t>(current.ids.size());
            segment.end = segment.start + static_cast<std::uint32_t>(take);
            segment.doc_id = doc.doc_id;
            segment.was_fim = doc.was_fim;
            current.ids.insert(current.ids.end(), doc.ids.begin() + static_cast<std::ptrdiff_t>(offset),
                               doc.ids.begin() + static_cast<std::ptrdiff_t>(offset + take));
            current.doc_boundaries.push_back(std::move(segment));
            offset += take;
            if (current.ids.size() == ctx) flush();
        }
    }
    flush();
    return sequences;
}

std::vector<MixedDoc> mix_corpus(const std::map<CorpusCategory, std::vector<MixItem>>& streams,
                                 const std::map<CorpusCategory, double>& ratios,
                                 std::uint64_t target_tokens) {
    double ratio_sum = 0.0;
    for (const auto& [category, ratio] : ratios) {
        if (ratio <= 0.0) throw std::invalid_argument("mix: ratios must be positive");
        ratio_sum += ratio;
        const auto it = streams.find(category);
        if (it == streams.end() || it->second.empty()) {
            throw std::runtime_error("category-underrun: empty stream for " +
                                     std::string(to_string(category)));
        }
    }
    if (std::abs(ratio_sum - 1.0) > 1e-9) {
        throw std::invalid_argument("mix: ratios must sum to 1");
    }

    std::map<CorpusCategory, std::size_t> next_index;
    std::map<CorpusCategory, std::uint64_t> drawn_tokens;
    std::uint64_t total = 0;
    std::vector<MixedDoc> out;

    while (total < target_tokens) {
        // Largest absolute token deficit first; map order (the enum
        // order) breaks ties deterministically.
        CorpusCategory pick = ratios.begin()->first;
        double best_deficit = -1e300;
        for (const auto& [category, ratio] : ratios) {
            const double deficit = ratio * static_cast<double>(total) -
                                   static_cast<double>(drawn_tokens[category]);
            if (deficit > best_deficit) {
                best_deficit = deficit;
                pick = category;
            }
        }
        const auto& stream = streams.at(pick);
        std::size_t& idx = next_index[pick];
        if (idx >= stream.size()) {
            throw std::runtime_error("category-underrun: " + std::string(to_string(pick)) +
                                     " exhausted at " + std::to_string(total) + " tokens");
        }
        const MixItem& item = stream[idx];
        if (item.token_count == 0) {
            throw std::runtime_error("mix: zero-token document in " +
                                     std::string(to_string(pick)));
        }
        out.push_back({pick, idx});
        ++idx;
        drawn_tokens[pick] += item.token_count;
        total += item.token_count;
    }
    return out;
}

}  // namespace curator
