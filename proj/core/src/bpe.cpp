#include "curator/bpe.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <unordered_set>

#include "json.hpp"

#include "curator/utf8.hpp"

namespace curator {

using nlohmann::json;

namespace {

constexpr std::uint64_t pack_pair(TokenId a, TokenId b) {
    return (static_cast<std::uint64_t>(a) << 32) | b;
}

bool is_space(char c) {
    return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
}

// Printable byte<->glyph bijection for the JSON vocab file: printable
// Latin-1 bytes map to themselves, the rest to code points from U+0100 up.
struct ByteGlyphTable {
    std::array<char32_t, 256> to_glyph{};
    std::unordered_map<char32_t, unsigned char> to_byte;

    ByteGlyphTable() {
        auto printable = [](int b) {
            return (b >= '!' && b <= '~') || (b >= 0xA1 && b <= 0xAC) || (b >= 0xAE && b <= 0xFF);
        };
        char32_t next = 256;
        for (int b = 0; b < 256; ++b) {
            const char32_t g = printable(b) ? static_cast<char32_t>(b) : next++;
            to_glyph[static_cast<std::size_t>(b)] = g;
            to_byte.emplace(g, static_cast<unsigned char>(b));
        }
    }
};

const ByteGlyphTable& glyph_table() {
    static const ByteGlyphTable table;
    return table;
}

std::string bytes_to_glyphs(std::string_view bytes) {
    std::string out;
    out.reserve(bytes.size() * 2);
    for (const char c : bytes) {
        utf8_append(out, glyph_table().to_glyph[static_cast<unsigned char>(c)]);
    }
    return out;
}

std::string glyphs_to_bytes(std::string_view glyphs) {
    std::string out;
    out.reserve(glyphs.size());
    std::size_t pos = 0;
    while (pos < glyphs.size()) {
        const char32_t cp = utf8_next(glyphs, pos);
        const auto it = glyph_table().to_byte.find(cp);
        if (it == glyph_table().to_byte.end()) {
            throw std::runtime_error("vocab: glyph outside the byte alphabet");
        }
        out.push_back(static_cast<char>(it->second));
    }
    return out;
}

// Pre-tokens: alternating whitespace/word runs, with the single space
// directly before a word attached to it ("a  b" -> "a", " ", " b").
// Concatenation reproduces the input; merges never cross boundaries.
std::vector<std::pair<std::size_t, std::size_t>> pretoken_spans(std::string_view text) {
    std::vector<std::pair<std::size_t, std::size_t>> spans;  // (offset, length)
    std::size_t i = 0;
    const std::size_t n = text.size();
    while (i < n) {
        if (is_space(text[i])) {
            std::size_t j = i;
            while (j < n && is_space(text[j])) ++j;
            if (j < n && text[j - 1] == ' ') {
                // Last space of the run joins the following word.
                if (j - 1 > i) spans.emplace_back(i, j - 1 - i);
                i = j - 1;
            } else {
                spans.emplace_back(i, j - i);
                i = j;
                continue;
            }
        }
        std::size_t k = i + (text[i] == ' ' ? 1 : 0);
        while (k < n && !is_space(text[k])) ++k;
        spans.emplace_back(i, k - i);
        i = k;
    }
    return spans;
}

}  // namespace

BpeVocab::BpeVocab() : BpeVocab(std::vector<std::pair<std::string, std::string>>{}) {}

BpeVocab::BpeVocab(std::vector<std::pair<std::string, std::string>> merges)
    : merges_(std::move(merges)) {
    token_bytes_.reserve(256 + kSpecialCount + merges_.size());
    for (int b = 0; b < 256; ++b) token_bytes_.emplace_back(1, static_cast<char>(b));
    token_bytes_.emplace_back(kFimBeginText);
    token_bytes_.emplace_back(kFimHoleText);
    token_bytes_.emplace_back(kFimEndText);
    token_bytes_.emplace_back(kEosText);

    std::unordered_map<std::string, TokenId> bytes_to_id;
    bytes_to_id.reserve(256 + merges_.size());
    for (int b = 0; b < 256; ++b) bytes_to_id.emplace(token_bytes_[static_cast<std::size_t>(b)], b);

    for (std::size_t rank = 0; rank < merges_.size(); ++rank) {
        const auto& [left, right] = merges_[rank];
        const auto li = bytes_to_id.find(left);
        const auto ri = bytes_to_id.find(right);
        if (li == bytes_to_id.end() || ri == bytes_to_id.end()) {
            throw std::runtime_error("vocab: merge references an unknown token");
        }
        const TokenId merged = static_cast<TokenId>(kFirstMergeId + rank);
        const std::string product = left + right;
        if (product == kFimBeginText || product == kFimHoleText || product == kFimEndText ||
            product == kEosText) {
            throw std::runtime_error("vocab: merge product collides with a sentinel string");
        }
        if (!bytes_to_id.emplace(product, merged).second) {
            throw std::runtime_error("vocab: duplicate merge product breaks the id bijection");
        }
        token_bytes_.push_back(product);
        merge_lookup_.emplace(pack_pair(li->second, ri->second),
                              std::make_pair(static_cast<std::uint32_t>(rank), merged));
    }
}

const std::string& BpeVocab::token_bytes(TokenId id) const {
    if (id >= token_bytes_.size()) throw std::out_of_range("vocab: unknown token id");
    return token_bytes_[id];
}

const std::pair<std::uint32_t, TokenId>* BpeVocab::find_merge(TokenId left, TokenId right) const {
    const auto it = merge_lookup_.find(pack_pair(left, right));
    return it == merge_lookup_.end() ? nullptr : &it->second;
}

std::map<std::string, TokenId> BpeVocab::special_tokens() const {
    return {{"fim_begin", kFimBeginId},
            {"fim_hole", kFimHoleId},
            {"fim_end", kFimEndId},
            {"eos", kEosId}};
}

std::string BpeVocab::to_json() const {
    json j;
    j["version"] = 1;
    json merges = json::array();
    for (const auto& [left, right] : merges_) {
        merges.push_back(json::array({bytes_to_glyphs(left), bytes_to_glyphs(right)}));
    }
    j["merges"] = merges;
    json specials = json::object();
    for (const auto& [name, id] : special_tokens()) specials[name] = id;
    j["special_tokens"] = specials;
    return j.dump() + "\n";
}

BpeVocab BpeVocab::from_json(const std::string& json_text) {
    const json j = json::parse(json_text);
    if (j.value("version", 0) != 1) throw std::runtime_error("vocab: unsupported version");
    std::vector<std::pair<std::string, std::string>> merges;
    for (const auto& entry : j.at("merges")) {
        if (!entry.is_array() || entry.size() != 2) {
            throw std::runtime_error("vocab: merge entries must be [left, right]");
        }
        merges.emplace_back(glyphs_to_bytes(entry[0].get<std::string>()),
                            glyphs_to_bytes(entry[1].get<std::string>()));
    }
    BpeVocab vocab(std::move(merges));
    if (j.contains("special_tokens")) {
        const auto expected = vocab.special_tokens();
        for (const auto& [name, id] : j.at("special_tokens").items()) {
            const auto it = expected.find(name);
            if (it == expected.end() || it->second != id.get<TokenId>()) {
                throw std::runtime_error("vocab: unsupported special token layout");
            }
        }
    }
    return vocab;
}

void BpeVocab::save(const std::string& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write vocab file: " + path);
    out << to_json();
}

BpeVocab BpeVocab::load(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open vocab file: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return from_json(buf.str());
}

namespace {

struct TrainWord {
    std::vector<TokenId> symbols;
    std::uint64_t count = 0;
};

}  // namespace

BpeVocab train_bpe(const std::vector<std::string>& corpus, std::size_t vocab_size) {
    constexpr std::size_t kBase = 256 + BpeVocab::kSpecialCount;
    if (vocab_size < kBase) {
        throw std::invalid_argument("train_bpe: vocab_size must be at least 260");
    }
    std::size_t total_bytes = 0;
    for (const auto& doc : corpus) total_bytes += doc.size();
    if (corpus.empty() || total_bytes == 0) {
        throw std::runtime_error("train_bpe: empty corpus");
    }

    // Unique pre-tokens with counts; merges apply within pre-tokens only.
    std::unordered_map<std::string, std::uint64_t> word_counts;
    for (const auto& doc : corpus) {
        for (const auto& [off, len] : pretoken_spans(doc)) {
            word_counts[doc.substr(off, len)] += 1;
        }
    }
    std::vector<TrainWord> words;
    words.reserve(word_counts.size());
    for (const auto& [text, count] : word_counts) {
        TrainWord w;
        w.count = count;
        w.symbols.reserve(text.size());
        for (const char c : text) w.symbols.push_back(static_cast<unsigned char>(c));
        words.push_back(std::move(w));
    }

    std::vector<std::string> token_bytes;
    token_bytes.reserve(kBase + vocab_size);
    for (int b = 0; b < 256; ++b) token_bytes.emplace_back(1, static_cast<char>(b));
    for (std::size_t s = 0; s < BpeVocab::kSpecialCount; ++s) token_bytes.emplace_back();
    std::unordered_set<std::string> existing(token_bytes.begin(), token_bytes.end());
    // Sentinel surfaces are reserved so no merge product can shadow them.
    existing.insert(std::string(kFimBeginText));
    existing.insert(std::string(kFimHoleText));
    existing.insert(std::string(kFimEndText));
    existing.insert(std::string(kEosText));

    std::unordered_map<std::uint64_t, std::uint64_t> pair_counts;
    std::unordered_map<std::uint64_t, std::unordered_set<std::uint32_t>> pair_words;
    for (std::uint32_t idx = 0; idx < words.size(); ++idx) {
        const auto& syms = words[idx].symbols;
        for (std::size_t i = 0; i + 1 < syms.size(); ++i) {
            const auto key = pack_pair(syms[i], syms[i + 1]);
            pair_counts[key] += words[idx].count;
            pair_words[key].insert(idx);
        }
    }

    std::vector<std::pair<std::string, std::string>> merges;
    std::unordered_set<std::uint64_t> ineligible;  // products already in the vocab
    const std::size_t target_merges = vocab_size - kBase;

    while (merges.size() < target_merges) {
        std::uint64_t best_key = 0;
        std::uint64_t best_count = 1;  // require count >= 2
        bool found = false;
        for (const auto& [key, count] : pair_counts) {
            if (count < 2 || count < best_count || ineligible.count(key) > 0) continue;
            if (found && count == best_count) {
                const auto lb = token_bytes[static_cast<TokenId>(best_key >> 32)];
                const auto rb = token_bytes[static_cast<TokenId>(best_key & 0xffffffff)];
                const auto& lc = token_bytes[static_cast<TokenId>(key >> 32)];
                const auto& rc = token_bytes[static_cast<TokenId>(key & 0xffffffff)];
                if (std::tie(lc, rc) >= std::tie(lb, rb)) continue;
            }
            best_key = key;
            best_count = count;
            found = true;
        }
        if (!found) break;

        const TokenId left = static_cast<TokenId>(best_key >> 32);
        const TokenId right = static_cast<TokenId>(best_key & 0xffffffff);
        const std::string product = token_bytes[left] + token_bytes[right];
        if (existing.count(product) > 0) {
            // Would duplicate an existing token's bytes; skip permanently.
            ineligible.insert(best_key);
            continue;
        }

        const TokenId new_id = static_cast<TokenId>(kBase + merges.size());
        merges.emplace_back(token_bytes[left], token_bytes[right]);
        token_bytes.push_back(product);
        existing.insert(product);

        const auto affected = pair_words[best_key];  // copy: sets mutate below
        for (const std::uint32_t idx : affected) {
            auto& word = words[idx];
            const auto& syms = word.symbols;
            bool contains = false;
            for (std::size_t i = 0; i + 1 < syms.size(); ++i) {
                if (syms[i] == left && syms[i + 1] == right) {
                    contains = true;
                    break;
                }
            }
            if (!contains) continue;  // stale membership

            for (std::size_t i = 0; i + 1 < syms.size(); ++i) {
                const auto key = pack_pair(syms[i], syms[i + 1]);
                auto it = pair_counts.find(key);
                it->second -= word.count;
                if (it->second == 0) pair_counts.erase(it);
                pair_words[key].erase(idx);
            }
            std::vector<TokenId> rewritten;
            rewritten.reserve(syms.size());
            for (std::size_t i = 0; i < syms.size();) {
                if (i + 1 < syms.size() && syms[i] == left && syms[i + 1] == right) {
                    rewritten.push_back(new_id);
                    i += 2;
                } else {
                    rewritten.push_back(syms[i]);
                    ++i;
                }
            }
            word.symbols = std::move(rewritten);
            for (std::size_t i = 0; i + 1 < word.symbols.size(); ++i) {
                const auto key = pack_pair(word.symbols[i], word.symbols[i + 1]);
                pair_counts[key] += word.count;
                pair_words[key].insert(idx);
            }
        }
    }
    return BpeVocab(std::move(merges));
}

TokenSequence encode(std::string_view text, const BpeVocab& vocab) {
    TokenSequence seq;
    if (text.empty()) return seq;
    seq.ids.reserve(text.size() / 2 + 1);
    seq.byte_offsets.reserve(text.size() / 2 + 1);

    std::vector<TokenId> symbols;
    std::vector<std::pair<std::uint32_t, std::uint32_t>> spans;
    for (const auto& [off, len] : pretoken_spans(text)) {
        symbols.clear();
        spans.clear();
        for (std::size_t i = 0; i < len; ++i) {
            symbols.push_back(static_cast<unsigned char>(text[off + i]));
            spans.emplace_back(static_cast<std::uint32_t>(off + i),
                               static_cast<std::uint32_t>(off + i + 1));
        }
        // Lowest-rank merge first, leftmost occurrence on rank ties.
        while (symbols.size() >= 2) {
            std::uint32_t best_rank = std::numeric_limits<std::uint32_t>::max();
            std::size_t best_pos = 0;
            TokenId best_id = 0;
            for (std::size_t i = 0; i + 1 < symbols.size(); ++i) {
                if (const auto* m = vocab.find_merge(symbols[i], symbols[i + 1])) {
                    if (m->first < best_rank) {
                        best_rank = m->first;
                        best_pos = i;
                        best_id = m->second;
                    }
                }
            }
            if (best_rank == std::numeric_limits<std::uint32_t>::max()) break;
            symbols[best_pos] = best_id;
            symbols.erase(symbols.begin() + static_cast<std::ptrdiff_t>(best_pos) + 1);
            spans[best_pos].second = spans[best_pos + 1].second;
            spans.erase(spans.begin() + static_cast<std::ptrdiff_t>(best_pos) + 1);
        }
        seq.ids.insert(seq.ids.end(), symbols.begin(), symbols.end());
        seq.byte_offsets.insert(seq.byte_offsets.end(), spans.begin(), spans.end());
    }
    return seq;
}

std::string decode(const std::vector<TokenId>& ids, const BpeVocab& vocab) {
    std::string out;
    for (const TokenId id : ids) out += vocab.token_bytes(id);
    return out;
}

std::vector<std::string> pretokenize_for_classifier(std::string_view text,
                                                    const BpeVocab& vocab) {
    std::string lowered(text);
    std::transform(lowered.begin(), lowered.end(), lowered.begin(), [](unsigned char c) {
        return static_cast<char>(std::tolower(c));
    });
    const TokenSequence seq = encode(lowered, vocab);
    std::vector<std::string> tokens;
    tokens.reserve(seq.ids.size());
    for (const TokenId id : seq.ids) tokens.push_back(vocab.token_bytes(id));
    return tokens;
}

}  // namespace curator
