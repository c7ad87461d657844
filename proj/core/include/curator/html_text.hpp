#pragma once

#include <cstddef>
#include <string>
#include <string_view>

namespace curator {

struct HtmlVisibleStats {
    std::size_t visible_chars = 0;  // Unicode scalar values
    double visible_ratio = 0.0;     // visible_chars / total document chars
};

// Visible text of an HTML document: character data outside tags, with
// script/style element content and comments excluded and whitespace runs
// collapsed to single spaces (leading/trailing trimmed). A forgiving
// scanner, never a validator: unbalanced markup is tolerated.
std::string html_visible_text(std::string_view html);

HtmlVisibleStats html_visible_stats(std::string_view html);

}  // namespace curator
