#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "curator/document.hpp"

namespace curator {

using TokenId = std::uint32_t;

// Sentinel layout of the packed training format. The hole/begin/end
// sentinels use the fullwidth bar U+FF5C; eos uses the ASCII bar.
inline constexpr std::string_view kFimBeginText = "<｜fim_begin｜>";
inline constexpr std::string_view kFimHoleText = "<｜fim_hole｜>";
inline constexpr std::string_view kFimEndText = "<｜fim_end｜>";
inline constexpr std::string_view kEosText = "<|eos_token|>";

// Byte-level BPE vocabulary. Ids 0..255 are raw bytes, 256..259 the four
// special tokens, and 260+ the merge products in rank order. Raw text can
// never encode to a special id, so sentinel lookalikes in corpus content
// stay ordinary bytes.
class BpeVocab {
public:
    static constexpr TokenId kFimBeginId = 256;
    static constexpr TokenId kFimHoleId = 257;
    static constexpr TokenId kFimEndId = 258;
    static constexpr TokenId kEosId = 259;
    static constexpr TokenId kFirstMergeId = 260;
    static constexpr std::size_t kSpecialCount = 4;

    BpeVocab();  // byte-level fallback, zero merges

    // merges: byte-string pairs in rank order.
    explicit BpeVocab(std::vector<std::pair<std::string, std::string>> merges);

    std::size_t size() const { return 256 + kSpecialCount + merges_.size(); }
    std::size_t merge_count() const { return merges_.size(); }
    const std::vector<std::pair<std::string, std::string>>& merges() const { return merges_; }

    // Byte string of a non-special token id; canonical sentinel text for
    // special ids. Throws std::out_of_range on unknown ids.
    const std::string& token_bytes(TokenId id) const;

    bool is_special(TokenId id) const { return id >= 256 && id < 256 + kSpecialCount; }

    // (rank, merged id) for an adjacent id pair, or nullptr.
    const std::pair<std::uint32_t, TokenId>* find_merge(TokenId left, TokenId right) const;

    std::map<std::string, TokenId> special_tokens() const;

    // Versioned JSON vocab file: {version, merges, special_tokens} with
    // byte strings printed through the printable byte<->glyph bijection.
    std::string to_json() const;
    static BpeVocab from_json(const std::string& json_text);
    void save(const std::string& path) const;
    static BpeVocab load(const std::string& path);

private:
    std::vector<std::pair<std::string, std::string>> merges_;
    std::vector<std::string> token_bytes_;                          // id -> bytes
    std::unordered_map<std::uint64_t, std::pair<std::uint32_t, TokenId>> merge_lookup_;
};

struct TokenSequence {
    std::vector<TokenId> ids;
    // Source span per token in byte offsets: contiguous, non-overlapping,
    // covering [0, text.size()) exactly. Byte-level merges may split a
    // multi-byte character, so spans are bytes rather than characters.
    std::vector<std::pair<std::uint32_t, std::uint32_t>> byte_offsets;
};

// Greedy highest-frequency pair training over byte sequences. Stops at
// vocab_size or when no pair occurs at least twice. Ties break toward the
// lexicographically smaller (left, right) byte-string pair, which makes
// training deterministic and merge lists prefix-stable across sizes.
BpeVocab train_bpe(const std::vector<std::string>& corpus, std::size_t vocab_size);

// Byte-level segmentation then merges by ascending rank.
TokenSequence encode(std::string_view text, const BpeVocab& vocab);

// Inverse of encode on non-special ids; special ids render their
// canonical sentinel strings. Throws on unknown ids.
std::string decode(const std::vector<TokenId>& ids, const BpeVocab& vocab);

// Surface token strings of the ASCII-lowercased text, for n-gram feature
// extraction. Concatenating them reproduces the lowercased input.
std::vector<std::string> pretokenize_for_classifier(std::string_view text,
                                                    const BpeVocab& vocab);

}  // namespace curator
