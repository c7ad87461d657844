#include "curator/html_text.hpp"

#include <cctype>

#include "curator/utf8.hpp"

namespace curator {

namespace {

bool is_space(char c) {
    return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
}

bool starts_with_ci(std::string_view s, std::size_t pos, std::string_view prefix) {
    if (pos + prefix.size() > s.size()) return false;
    for (std::size_t k = 0; k < prefix.size(); ++k) {
        if (std::tolower(static_cast<unsigned char>(s[pos + k])) != prefix[k]) return false;
    }
    return true;
}

// Case-insensitive search for "</name", starting at pos. Returns npos
// when the closing tag never appears.
std::size_t find_close_tag(std::string_view s, std::size_t pos, std::string_view name) {
    while (pos < s.size()) {
        if (s[pos] == '<' && pos + 1 < s.size() && s[pos + 1] == '/' &&
            starts_with_ci(s, pos + 2, name)) {
            return pos;
        }
        ++pos;
    }
    return std::string_view::npos;
}

// Skips past the '>' of the tag that starts at pos (pos is at '<').
// Quoted attribute values may contain '>'.
std::size_t skip_tag(std::string_view s, std::size_t pos) {
    ++pos;
    char quote = 0;
    while (pos < s.size()) {
        const char c = s[pos];
        if (quote != 0) {
            if (c == quote) quote = 0;
        } else if (c == '"' || c == '\'') {
            quote = c;
        } else if (c == '>') {
            return pos + 1;
        }
        ++pos;
    }
    return pos;
}

bool tag_name_boundary(std::string_view s, std::size_t pos) {
    if (pos >= s.size()) return true;
    const char c = s[pos];
    return is_space(c) || c == '>' || c == '/';
}

}  // namespace

std::string html_visible_text(std::string_view html) {
    std::string text;
    text.reserve(html.size() / 4);
    std::size_t pos = 0;
    bool pending_space = false;

    auto emit = [&](char c) {
        if (is_space(c)) {
            pending_space = !text.empty();
            return;
        }
        if (pending_space) {
            text.push_back(' ');
            pending_space = false;
        }
        text.push_back(c);
    };

    while (pos < html.size()) {
        if (html[pos] != '<') {
            emit(html[pos]);
            ++pos;
            continue;
        }
        if (starts_with_ci(html, pos, "<!--")) {
            const auto end = html.find("-->", pos + 4);
            pos = end == std::string_view::npos ? html.size() : end + 3;
            continue;
        }
        if (starts_with_ci(html, pos, "<script") && tag_name_boundary(html, pos + 7)) {
            pos = skip_tag(html, pos);
            const auto close = find_close_tag(html, pos, "script");
            pos = close == std::string_view::npos ? html.size() : skip_tag(html, close);
            continue;
        }
        if (starts_with_ci(html, pos, "<style") && tag_name_boundary(html, pos + 6)) {
            pos = skip_tag(html, pos);
            const auto close = find_close_tag(html, pos, "style");
            pos = close == std::string_view::npos ? html.size() : skip_tag(html, close);
            continue;
        }
        if (pos + 1 < html.size()) {
            const char next = html[pos + 1];
            const bool tag_like = next == '/' || next == '!' || next == '?' ||
                                  std::isalpha(static_cast<unsigned char>(next));
            if (tag_like) {
                pos = skip_tag(html, pos);
                continue;
            }
        }
        // A lone '<' that opens no tag counts as text.
        emit(html[pos]);
        ++pos;
    }
    return text;
}

HtmlVisibleStats html_visible_stats(std::string_view html) {
    HtmlVisibleStats stats;
    const std::string text = html_visible_text(html);
    stats.visible_chars = utf8_length(text);
    const std::size_t total = utf8_length(html);
    stats.visible_ratio =
        total == 0 ? 0.0
                   : static_cast<double>(stats.visible_chars) / static_cast<double>(total);
    return stats;
}

}  // namespace curator
