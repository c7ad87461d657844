#pragma once

#include <cstdint>
#include <map>
#include <string>

#include "curator/document.hpp"

namespace curator {

// Per-stage corpus accounting. token_count stays 0 for stages that run
// before tokenization (ingested/filtered/deduped/recalled).
struct CorpusManifest {
    Stage stage = Stage::ingested;
    std::uint64_t doc_count = 0;
    std::uint64_t token_count = 0;
    std::map<std::string, std::uint64_t> category_counts;  // category -> tokens
    std::string config_digest;
    std::uint64_t rng_seed = 0;
};

// Canonical JSON: sorted keys, compact separators, trailing newline.
// A pure function of the manifest, so identical runs emit identical bytes.
std::string serialize_manifest(const CorpusManifest& manifest);

CorpusManifest parse_manifest(const std::string& json_text);

// Builds a manifest from accumulated statistics. config_json must be the
// canonical JSON of the stage configuration; its hash becomes
// config_digest.
CorpusManifest emit_manifest(Stage stage, std::uint64_t doc_count,
                             std::uint64_t token_count,
                             const std::map<std::string, std::uint64_t>& category_counts,
                             const std::string& config_json, std::uint64_t seed);

}  // namespace curator
