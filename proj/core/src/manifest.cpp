#include "curator/manifest.hpp"

#include <stdexcept>

#include "json.hpp"

#include "curator/hashing.hpp"

namespace curator {

using nlohmann::json;

std::string serialize_manifest(const CorpusManifest& manifest) {
    json j;
    j["stage"] = std::string(to_string(manifest.stage));
    j["doc_count"] = manifest.doc_count;
    j["token_count"] = manifest.token_count;
    json cats = json::object();
    for (const auto& [name, tokens] : manifest.category_counts) cats[name] = tokens;
    j["category_counts"] = cats;
    j["config_digest"] = manifest.config_digest;
    j["rng_seed"] = manifest.rng_seed;
    return j.dump() + "\n";  // nlohmann objects keep sorted key order
}

CorpusManifest parse_manifest(const std::string& json_text) {
    const json j = json::parse(json_text);
    CorpusManifest m;
    const auto stage = parse_stage(j.at("stage").get<std::string>());
    if (!stage) throw std::runtime_error("manifest: unknown stage");
    m.stage = *stage;
    m.doc_count = j.at("doc_count").get<std::uint64_t>();
    m.token_count = j.at("token_count").get<std::uint64_t>();
    for (const auto& [k, v] : j.at("category_counts").items()) {
        m.category_counts[k] = v.get<std::uint64_t>();
    }
    m.config_digest = j.at("config_digest").get<std::string>();
    m.rng_seed = j.at("rng_seed").get<std::uint64_t>();
    return m;
}

CorpusManifest emit_manifest(Stage stage, std::uint64_t doc_count,
                             std::uint64_t token_count,
                             const std::map<std::string, std::uint64_t>& category_counts,
                             const std::string& config_json, std::uint64_t seed) {
    CorpusManifest m;
    m.stage = stage;
    m.doc_count = doc_count;
    m.token_count = token_count;
    m.category_counts = category_counts;
    if (m.category_counts.empty()) {
        for (const auto cat :
             {CorpusCategory::code, CorpusCategory::math, CorpusCategory::natural_language}) {
            m.category_counts[std::string(to_string(cat))] = 0;
        }
    }
    std::uint64_t sum = 0;
    for (const auto& [name, tokens] : m.category_counts) sum += tokens;
    if (token_count > 0 && sum != token_count) {
        throw std::runtime_error("manifest: category counts do not sum to token_count");
    }
    m.config_digest = hex64(fnv1a64(config_json));
    m.rng_seed = seed;
    return m;
}

}  // namespace curator
