#pragma once

#include <unistd.h>

#include <atomic>
#include <filesystem>
#include <fstream>
#include <random>
#include <string>
#include <vector>

#include "curator/rng.hpp"
#include "curator/utf8.hpp"

namespace testutil {

// Random valid-UTF-8 string mixing ASCII, Latin, CJK, and sentinel
// lookalike fragments.
inline std::string random_utf8(curator::Rng& rng, std::size_t max_chars,
                               bool with_sentinel_lookalikes = true) {
    static const std::vector<std::string> lookalikes = {
        "<｜fim_hole｜>", "<｜fim_begin｜>", "<|eos_token|>", "<|fim",
        "｜｜",
    };
    std::string out;
    const std::size_t chars = 1 + rng.next_below(max_chars);
    for (std::size_t i = 0; i < chars; ++i) {
        const std::uint64_t kind = rng.next_below(100);
        if (with_sentinel_lookalikes && kind < 3) {
            out += lookalikes[rng.next_below(lookalikes.size())];
        } else if (kind < 55) {
            out.push_back(static_cast<char>(0x20 + rng.next_below(0x5f)));  // printable ASCII
        } else if (kind < 65) {
            out.push_back('\n');
        } else if (kind < 80) {  // CJK
            curator::utf8_append(out, static_cast<char32_t>(0x4E00 + rng.next_below(0x51A5)));
        } else if (kind < 90) {  // Latin-1 letters / Greek
            curator::utf8_append(out, static_cast<char32_t>(0x3B1 + rng.next_below(24)));
        } else {  // emoji plane
            curator::utf8_append(out, static_cast<char32_t>(0x1F300 + rng.next_below(0xFF)));
        }
    }
    return out;
}

// Word salad from a fixed vocabulary; deterministic per rng stream.
inline std::string word_salad(curator::Rng& rng, const std::vector<std::string>& vocab,
                              std::size_t min_words, std::size_t max_words) {
    std::string out;
    const std::size_t n = min_words + rng.next_below(max_words - min_words + 1);
    for (std::size_t i = 0; i < n; ++i) {
        if (!out.empty()) out.push_back(i % 11 == 10 ? '\n' : ' ');
        out += vocab[rng.next_below(vocab.size())];
    }
    return out;
}

class TempDir {
public:
    explicit TempDir(const std::string& tag) {
        static std::atomic<unsigned> counter{0};
        path_ = std::filesystem::temp_directory_path() /
                ("curator-test-" + tag + "-" + std::to_string(::getpid()) + "-" +
                 std::to_string(counter++));
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    const std::filesystem::path& path() const { return path_; }

private:
    std::filesystem::path path_;
};

inline void write_text(const std::filesystem::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    out << content;
}

inline std::string read_text(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    std::string content((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return content;
}

}  // namespace testutil
