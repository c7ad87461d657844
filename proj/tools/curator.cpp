#include <cstdint>
#include <exception>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"

#include "curator/pipeline.hpp"

namespace {

struct CommonOptions {
    std::string config_path;
    std::optional<std::uint64_t> seed;
    bool strict = false;
    int jobs = 1;
    std::string category;
};

void add_common(CLI::App* cmd, CommonOptions& opts, bool with_category = false) {
    cmd->add_option("--config", opts.config_path, "pipeline config file (JSON)")
        ->required()
        ->check(CLI::ExistingFile);
    cmd->add_option("--seed", opts.seed, "override the config seed");
    cmd->add_flag("--strict", opts.strict, "fail on any per-line error record");
    cmd->add_option("--jobs", opts.jobs, "within-stage parallelism")->check(CLI::PositiveNumber);
    if (with_category) {
        cmd->add_option("--category", opts.category, "restrict recall to one category")
            ->check(CLI::IsMember({"code", "math", "nl"}));
    }
}

curator::PipelineConfig load_config(const CommonOptions& opts) {
    auto cfg = curator::PipelineConfig::from_json_file(opts.config_path);
    if (opts.seed) cfg.seed = *opts.seed;
    if (opts.strict) cfg.strict = true;
    if (opts.jobs > 1) cfg.jobs = opts.jobs;
    if (!opts.category.empty()) {
        const auto category = curator::parse_category(opts.category);
        std::vector<curator::RecallTarget> filtered;
        for (const auto& target : cfg.recall_targets) {
            if (category && target.category == *category) filtered.push_back(target);
        }
        cfg.recall_targets = std::move(filtered);
    }
    return cfg;
}

int finish_stage(const curator::PipelineConfig& cfg, const curator::StageOutcome& outcome) {
    std::cout << "stage " << curator::to_string(outcome.manifest.stage) << ": "
              << outcome.manifest.doc_count << " docs";
    if (outcome.manifest.token_count > 0) {
        std::cout << ", " << outcome.manifest.token_count << " tokens";
    }
    if (outcome.error_records > 0) {
        std::cout << ", " << outcome.error_records << " error records";
    }
    std::cout << "\nrun dir: " << cfg.run_dir().string() << "\n";
    return (cfg.strict && outcome.error_records > 0) ? 1 : 0;
}

int run_one_stage(curator::Stage stage, const CommonOptions& opts) {
    const auto cfg = load_config(opts);
    return finish_stage(cfg, curator::run_stage(stage, cfg));
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"corpus curation pipeline: filter, dedup, recall, mix, pack"};
    app.require_subcommand(1);

    CommonOptions opts;
    auto* ingest = app.add_subcommand("ingest", "read raw JSONL inputs into the run directory");
    add_common(ingest, opts);
    auto* filter = app.add_subcommand("filter", "apply the file-level quality rules");
    add_common(filter, opts);
    auto* dedup = app.add_subcommand("dedup", "near-deduplicate the filtered corpus");
    add_common(dedup, opts);
    auto* train = app.add_subcommand("train-bpe", "train or import the BPE vocabulary");
    add_common(train, opts);
    auto* recall = app.add_subcommand("recall", "iterative classifier-driven page recall");
    add_common(recall, opts, /*with_category=*/true);
    auto* mix = app.add_subcommand("mix", "interleave categories at the configured ratios");
    add_common(mix, opts);
    auto* pack = app.add_subcommand("pack", "infilling transform and fixed-length packing");
    add_common(pack, opts);
    auto* stats = app.add_subcommand("stats", "report per-stage corpus statistics");
    add_common(stats, opts);
    auto* run_all_cmd = app.add_subcommand("run-all", "run every stage in order");
    add_common(run_all_cmd, opts);

    CLI11_PARSE(app, argc, argv);

    try {
        if (ingest->parsed()) return run_one_stage(curator::Stage::ingested, opts);
        if (filter->parsed()) return run_one_stage(curator::Stage::filtered, opts);
        if (dedup->parsed()) return run_one_stage(curator::Stage::deduped, opts);
        if (recall->parsed()) return run_one_stage(curator::Stage::recalled, opts);
        if (mix->parsed()) return run_one_stage(curator::Stage::mixed, opts);
        if (pack->parsed()) return run_one_stage(curator::Stage::packed, opts);
        if (train->parsed()) {
            const auto cfg = load_config(opts);
            const auto path = curator::ensure_vocab(cfg);
            std::cout << "vocab written: " << path.string() << "\n";
            return 0;
        }
        if (stats->parsed()) {
            const auto cfg = load_config(opts);
            const auto report = curator::load_stats(cfg);
            const std::string json_text = curator::stats_to_json(report);
            std::ofstream out(cfg.run_dir() / "stats.json", std::ios::binary);
            out << json_text;
            std::cout << curator::stats_to_text(report);
            return 0;
        }
        if (run_all_cmd->parsed()) {
            const auto cfg = load_config(opts);
            const auto result = curator::run_all(cfg);
            for (const auto& manifest : result.manifests) {
                std::cout << "stage " << curator::to_string(manifest.stage) << ": "
                          << manifest.doc_count << " docs, " << manifest.token_count
                          << " tokens\n";
            }
            if (result.error_records > 0) {
                std::cout << result.error_records << " error records\n";
            }
            std::cout << "run dir: " << cfg.run_dir().string() << "\n";
            return (cfg.strict && result.error_records > 0) ? 1 : 0;
        }
    } catch (const curator::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
