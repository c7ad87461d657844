#include "curator/filter.hpp"

#include <stdexcept>

#include "json.hpp"

#include "curator/html_text.hpp"
#include "curator/utf8.hpp"

namespace curator {

void FilterConfig::validate() const {
    if (avg_line_limit <= 0 || max_line_limit == 0 || xml_probe_window == 0 ||
        html_min_visible_chars == 0 || structured_min_chars == 0 ||
        structured_max_chars == 0) {
        throw std::invalid_argument("filter config: limits must be strictly positive");
    }
    if (min_alpha_fraction <= 0 || min_alpha_fraction >= 1 ||
        html_min_visible_fraction <= 0 || html_min_visible_fraction >= 1) {
        throw std::invalid_argument("filter config: fractions must lie in (0,1)");
    }
    if (structured_min_chars > structured_max_chars) {
        throw std::invalid_argument("filter config: structured_min_chars > structured_max_chars");
    }
}

std::string_view to_string(FilterRule rule) {
    switch (rule) {
        case FilterRule::none: return "none";
        case FilterRule::avg_line: return "avg_line";
        case FilterRule::max_line: return "max_line";
        case FilterRule::alpha_fraction: return "alpha_fraction";
        case FilterRule::xml_header: return "xml_header";
        case FilterRule::html_visibility: return "html_visibility";
        case FilterRule::structured_size: return "structured_size";
    }
    return "none";
}

LineStats compute_line_stats(std::string_view content) {
    LineStats stats;
    if (content.empty()) return stats;

    std::uint64_t total_chars = 0;
    std::uint64_t line_chars = 0;
    std::size_t pos = 0;
    while (pos < content.size()) {
        if (content[pos] == '\n') {
            ++stats.line_count;
            total_chars += line_chars;
            if (line_chars > stats.max_line_len) stats.max_line_len = line_chars;
            line_chars = 0;
            ++pos;
            continue;
        }
        utf8_next(content, pos);
        ++line_chars;
    }
    if (line_chars > 0 || content.back() != '\n') {
        // Last segment; a trailing newline adds no empty line.
        ++stats.line_count;
        total_chars += line_chars;
        if (line_chars > stats.max_line_len) stats.max_line_len = line_chars;
    }
    stats.avg_line_len =
        static_cast<double>(total_chars) / static_cast<double>(stats.line_count);
    return stats;
}

double alphabetic_fraction(std::string_view content) {
    std::uint64_t total = 0;
    std::uint64_t alpha = 0;
    std::size_t pos = 0;
    while (pos < content.size()) {
        const char32_t cp = utf8_next(content, pos);
        ++total;
        if (is_alphabetic(cp)) ++alpha;
    }
    if (total == 0) return 0.0;
    return static_cast<double>(alpha) / static_cast<double>(total);
}

bool xml_header_hit(std::string_view content, std::string_view language,
                    const FilterConfig& cfg) {
    if (cfg.xml_exempt_languages.count(std::string(language)) > 0) return false;
    static constexpr std::string_view kProbe = "<?xml version=";
    const auto byte_pos = content.find(kProbe);
    if (byte_pos == std::string_view::npos) return false;
    // The probe is pure ASCII, so the byte match is also a character
    // boundary; convert its byte offset to a character offset.
    const std::size_t char_offset = utf8_length(content.substr(0, byte_pos));
    return char_offset < cfg.xml_probe_window;
}

FilterVerdict filter_document(const SourceDocument& doc, const FilterConfig& cfg) {
    FilterVerdict v;
    v.line_stats = compute_line_stats(doc.content);
    v.alpha_fraction = alphabetic_fraction(doc.content);
    v.char_count = utf8_length(doc.content);

    auto reject = [&](FilterRule rule) {
        v.keep = false;
        v.rule_fired = rule;
    };

    if (v.line_stats.avg_line_len > cfg.avg_line_limit) {
        reject(FilterRule::avg_line);
    } else if (v.line_stats.max_line_len > cfg.max_line_limit) {
        reject(FilterRule::max_line);
    } else if (v.alpha_fraction < cfg.min_alpha_fraction) {
        reject(FilterRule::alpha_fraction);
    } else if (xml_header_hit(doc.content, doc.language, cfg)) {
        reject(FilterRule::xml_header);
    } else if (doc.language == "HTML") {
        const auto stats = html_visible_stats(doc.content);
        v.visible_ratio = stats.visible_ratio;
        v.visible_chars = stats.visible_chars;
        if (stats.visible_ratio < cfg.html_min_visible_fraction ||
            stats.visible_chars < cfg.html_min_visible_chars) {
            reject(FilterRule::html_visibility);
        }
    } else if (doc.language == "JSON" || doc.language == "YAML") {
        if (v.char_count < cfg.structured_min_chars ||
            v.char_count > cfg.structured_max_chars) {
            reject(FilterRule::structured_size);
        }
    }
    return v;
}

std::string verdict_to_jsonl(const SourceDocument& doc, const FilterVerdict& verdict) {
    nlohmann::json j;
    j["id"] = doc.id;
    j["keep"] = verdict.keep;
    j["rule_fired"] = std::string(to_string(verdict.rule_fired));
    nlohmann::json stats;
    stats["line_count"] = verdict.line_stats.line_count;
    stats["avg_line_len"] = verdict.line_stats.avg_line_len;
    stats["max_line_len"] = verdict.line_stats.max_line_len;
    stats["alpha_fraction"] = verdict.alpha_fraction;
    stats["char_count"] = verdict.char_count;
    if (verdict.visible_ratio) stats["visible_ratio"] = *verdict.visible_ratio;
    if (verdict.visible_chars) stats["visible_chars"] = *verdict.visible_chars;
    j["stats"] = stats;
    return j.dump();
}

}  // namespace curator
