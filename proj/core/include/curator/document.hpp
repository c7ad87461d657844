#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

namespace curator {

enum class Origin { github, web };

enum class CorpusCategory { code, math, natural_language };

enum class Stage { ingested, filtered, deduped, recalled, mixed, packed };

inline constexpr std::string_view kUnknownLanguage = "unknown";

// One ingested file or page. Content is valid UTF-8 with "\n" line
// endings; both are enforced at ingestion.
struct SourceDocument {
    std::string id;
    std::string content;
    std::string language = std::string(kUnknownLanguage);
    Origin origin = Origin::github;
    std::optional<std::string> url;
    std::optional<std::string> domain;  // required when origin == web
    std::optional<std::string> created_at;
};

std::string_view to_string(Origin origin);
std::string_view to_string(CorpusCategory category);
std::string_view to_string(Stage stage);

std::optional<Origin> parse_origin(std::string_view s);
std::optional<CorpusCategory> parse_category(std::string_view s);
std::optional<Stage> parse_stage(std::string_view s);

// Language-tag vocabulary. Tags outside the vocabulary normalize to
// "unknown"; lookup falls back to a case-insensitive match so common
// lowercase tags keep their canonical spelling.
bool is_known_language(std::string_view tag);
std::string normalize_language(std::string_view tag);
std::size_t language_count();

}  // namespace curator
