#pragma once

#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <string_view>

#include "curator/document.hpp"

namespace curator {

// File-level quality rules. Limits count Unicode scalar values, never
// bytes. Boundary semantics follow the rule wording exactly: avg/max
// line limits reject only strictly above, the alphabetic floor rejects
// only strictly below, and the HTML/structured bounds are inclusive.
struct FilterConfig {
    double avg_line_limit = 100.0;
    std::uint64_t max_line_limit = 1000;
    double min_alpha_fraction = 0.25;
    std::uint64_t xml_probe_window = 100;
    double html_min_visible_fraction = 0.20;
    std::uint64_t html_min_visible_chars = 100;
    std::uint64_t structured_min_chars = 50;
    std::uint64_t structured_max_chars = 5000;
    std::set<std::string> xml_exempt_languages = {"XSLT"};

    void validate() const;  // throws std::invalid_argument
};

struct LineStats {
    std::uint64_t line_count = 0;
    double avg_line_len = 0.0;
    std::uint64_t max_line_len = 0;
};

enum class FilterRule {
    none,
    avg_line,
    max_line,
    alpha_fraction,
    xml_header,
    html_visibility,
    structured_size,
};

std::string_view to_string(FilterRule rule);

struct FilterVerdict {
    bool keep = true;
    FilterRule rule_fired = FilterRule::none;
    LineStats line_stats;
    double alpha_fraction = 0.0;
    std::uint64_t char_count = 0;
    std::optional<double> visible_ratio;        // HTML only
    std::optional<std::uint64_t> visible_chars;  // HTML only
};

// Lines are "\n"-separated segments; a trailing newline creates no extra
// empty line; the separator itself is not counted.
LineStats compute_line_stats(std::string_view content);

// Unicode-alphabetic scalars / total scalars; empty content -> 0.
double alphabetic_fraction(std::string_view content);

// True iff the literal "<?xml version=" starts within the first
// cfg.xml_probe_window characters and the language is not exempt.
bool xml_header_hit(std::string_view content, std::string_view language,
                    const FilterConfig& cfg);

// Rules evaluated in fixed order: avg_line, max_line, alpha_fraction,
// xml_header, then html_visibility (HTML) or structured_size (JSON/YAML).
// The first failing rule is recorded. Pure function of (doc, cfg).
FilterVerdict filter_document(const SourceDocument& doc, const FilterConfig& cfg);

// Audit-log line: {id, keep, rule_fired, stats}.
std::string verdict_to_jsonl(const SourceDocument& doc, const FilterVerdict& verdict);

}  // namespace curator
