#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "curator/dedup.hpp"
#include "curator/document.hpp"
#include "curator/filter.hpp"
#include "curator/fim.hpp"
#include "curator/manifest.hpp"
#include "curator/recall.hpp"

namespace curator {

class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class StageError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct IngestInput {
    std::string path;
    Origin origin = Origin::github;
    // One of "code" | "math" | "natural_language", or "candidates" for
    // web pages that the recall stage must classify.
    std::string category = "code";
};

struct RecallTarget {
    CorpusCategory category = CorpusCategory::code;
    std::string seed_ids_path;      // one document id per line
    std::string url_patterns_path;  // one URL prefix per line
};

struct TokenizerSettings {
    std::string vocab_path;        // empty: train from the deduped corpus
    std::uint32_t vocab_size = 512;
};

struct MixSettings {
    std::map<CorpusCategory, double> ratios = {
        {CorpusCategory::code, 0.6},
        {CorpusCategory::math, 0.1},
        {CorpusCategory::natural_language, 0.3},
    };
    std::uint64_t target_tokens = 1'000'000;
};

struct PackSettings {
    double fim_rate = 0.5;
    std::uint32_t context_length = 4096;
    std::uint32_t sequences_per_shard = 1024;
};

// The whole-run configuration. One global seed; stages derive their own
// streams from it, so a stage can be rerun in isolation.
struct PipelineConfig {
    std::uint64_t seed = 0;
    std::string out_root;  // empty: <scratch>/curator-runs
    std::vector<IngestInput> inputs;
    FilterConfig filter;
    DedupConfig dedup;
    TokenizerSettings tokenizer;
    RecallConfig recall;
    std::vector<RecallTarget> recall_targets;
    MixSettings mix;
    PackSettings pack;
    int jobs = 1;
    bool strict = false;

    static PipelineConfig from_json_text(const std::string& text);
    static PipelineConfig from_json_file(const std::string& path);

    // Full effective configuration as canonical JSON (defaults filled,
    // sorted keys). The run directory is named by its hash.
    std::string canonical_json() const;
    std::string run_digest() const;
    std::filesystem::path run_dir() const;

    // Canonical JSON of one stage's slice of the configuration; hashed
    // into that stage's manifest.
    std::string stage_config_json(Stage stage) const;

    std::uint64_t stage_seed(std::string_view stage_name) const;
};

// CURATOR_SCRATCH, or the system temp directory.
std::filesystem::path scratch_dir();

struct StageOutcome {
    CorpusManifest manifest;
    std::uint64_t error_records = 0;  // --strict turns any of these into failure
};

// Executes one stage against the run directory: reads the upstream
// stage's outputs (the upstream manifest must exist), writes this
// stage's outputs, audit log, and manifest.
StageOutcome run_stage(Stage stage, const PipelineConfig& cfg);

// Trains (or copies) the BPE vocabulary into the run directory. Requires
// the deduped stage. Returns the vocab path.
std::filesystem::path ensure_vocab(const PipelineConfig& cfg);

struct RunAllResult {
    std::vector<CorpusManifest> manifests;
    std::uint64_t error_records = 0;
};

// ingest -> filter -> dedup -> vocab -> recall -> mix -> pack.
RunAllResult run_all(const PipelineConfig& cfg);

struct StatsReport {
    struct StageRow {
        std::string stage;
        std::uint64_t doc_count = 0;
        std::uint64_t token_count = 0;
        std::map<std::string, std::uint64_t> category_counts;
        std::string config_digest;
    };
    struct RecallRow {
        std::string category;
        std::uint32_t iteration = 0;
        std::uint64_t pages_recalled = 0;
        std::uint64_t seed_size_before = 0;
        std::uint64_t seed_size_after = 0;
    };
    std::vector<StageRow> stages;  // manifest order: pipeline stage order
    std::optional<double> dedup_removal_rate;
    std::vector<RecallRow> recall_growth;
};

// Builds the report from manifests (+ optional recall iteration
// reports). The JSON and human renderings are two views of this one
// structure.
StatsReport build_stats(const std::vector<CorpusManifest>& manifests,
                        const std::vector<std::pair<std::string, RecallIterationReport>>&
                            recall_reports);
StatsReport load_stats(const PipelineConfig& cfg);
std::string stats_to_json(const StatsReport& report);
std::string stats_to_text(const StatsReport& report);

}  // namespace curator
