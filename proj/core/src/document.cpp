#include "curator/document.hpp"

namespace curator {

std::string_view to_string(Origin origin) {
    return origin == Origin::github ? "github" : "web";
}

std::string_view to_string(CorpusCategory category) {
    switch (category) {
        case CorpusCategory::code: return "code";
        case CorpusCategory::math: return "math";
        case CorpusCategory::natural_language: return "natural_language";
    }
    return "code";
}

std::string_view to_string(Stage stage) {
    switch (stage) {
        case Stage::ingested: return "ingested";
        case Stage::filtered: return "filtered";
        case Stage::deduped: return "deduped";
        case Stage::recalled: return "recalled";
        case Stage::mixed: return "mixed";
        case Stage::packed: return "packed";
    }
    return "ingested";
}

std::optional<Origin> parse_origin(std::string_view s) {
    if (s == "github") return Origin::github;
    if (s == "web") return Origin::web;
    return std::nullopt;
}

std::optional<CorpusCategory> parse_category(std::string_view s) {
    if (s == "code") return CorpusCategory::code;
    if (s == "math") return CorpusCategory::math;
    if (s == "natural_language" || s == "nl") return CorpusCategory::natural_language;
    return std::nullopt;
}

std::optional<Stage> parse_stage(std::string_view s) {
    if (s == "ingested") return Stage::ingested;
    if (s == "filtered") return Stage::filtered;
    if (s == "deduped") return Stage::deduped;
    if (s == "recalled") return Stage::recalled;
    if (s == "mixed") return Stage::mixed;
    if (s == "packed") return Stage::packed;
    return std::nullopt;
}

}  // namespace curator
