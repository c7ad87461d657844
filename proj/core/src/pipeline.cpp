#include "curator/pipeline.hpp"

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include "json.hpp"

#include "curator/hashing.hpp"
#include "curator/jsonl.hpp"
#include "curator/parallel.hpp"

namespace curator {

using nlohmann::json;

namespace {

void check_keys(const json& j, std::initializer_list<std::string_view> allowed,
                const std::string& section) {
    for (const auto& [key, value] : j.items()) {
        if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) {
            throw ConfigError("config: unknown key \"" + key + "\" in " + section);
        }
    }
}

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw StageError("cannot open file: " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

void write_file(const std::filesystem::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw StageError("cannot write file: " + path.string());
    out << content;
}

void write_lines(const std::filesystem::path& path, const std::vector<std::string>& lines) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw StageError("cannot write file: " + path.string());
    for (const auto& line : lines) out << line << '\n';
}

struct CategorizedDoc {
    SourceDocument doc;
    std::string category;
};

std::vector<CategorizedDoc> read_doc_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw StageError("cannot open stage file: " + path.string());
    std::vector<CategorizedDoc> docs;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        CategorizedDoc entry;
        entry.doc = document_from_jsonl(line, &entry.category);
        docs.push_back(std::move(entry));
    }
    return docs;
}

std::filesystem::path manifest_path(const PipelineConfig& cfg, Stage stage) {
    return cfg.run_dir() / ("manifest_" + std::string(to_string(stage)) + ".json");
}

void require_manifest(const PipelineConfig& cfg, Stage stage) {
    if (!std::filesystem::exists(manifest_path(cfg, stage))) {
        throw StageError("missing upstream manifest: " + std::string(to_string(stage)) +
                         " (run that stage first)");
    }
}

void write_manifest(const PipelineConfig& cfg, const CorpusManifest& manifest) {
    write_file(manifest_path(cfg, manifest.stage), serialize_manifest(manifest));
}

std::filesystem::path vocab_path_in_run(const PipelineConfig& cfg) {
    return cfg.run_dir() / "vocab.json";
}

BpeVocab load_run_vocab(const PipelineConfig& cfg) {
    const auto path = vocab_path_in_run(cfg);
    if (!std::filesystem::exists(path)) {
        throw StageError("vocab.json missing from run directory; run train-bpe first");
    }
    return BpeVocab::load(path.string());
}

std::set<std::string> load_id_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw StageError("cannot open seed id file: " + path);
    std::set<std::string> ids;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (!line.empty()) ids.insert(line);
    }
    return ids;
}

void append_u32_le(std::string& out, std::uint32_t v) {
    out.push_back(static_cast<char>(v & 0xff));
    out.push_back(static_cast<char>((v >> 8) & 0xff));
    out.push_back(static_cast<char>((v >> 16) & 0xff));
    out.push_back(static_cast<char>((v >> 24) & 0xff));
}

json filter_to_json(const FilterConfig& f) {
    json j;
    j["avg_line_limit"] = f.avg_line_limit;
    j["max_line_limit"] = f.max_line_limit;
    j["min_alpha_fraction"] = f.min_alpha_fraction;
    j["xml_probe_window"] = f.xml_probe_window;
    j["html_min_visible_fraction"] = f.html_min_visible_fraction;
    j["html_min_visible_chars"] = f.html_min_visible_chars;
    j["structured_min_chars"] = f.structured_min_chars;
    j["structured_max_chars"] = f.structured_max_chars;
    j["xml_exempt_languages"] = f.xml_exempt_languages;
    return j;
}

json dedup_to_json(const DedupConfig& d) {
    json j;
    j["shingle_k"] = d.shingle_k;
    j["num_hashes"] = d.num_hashes;
    j["bands"] = d.bands;
    j["rows"] = d.rows;
    j["jaccard_threshold"] = d.jaccard_threshold;
    j["verify_exact"] = d.verify_exact;
    return j;
}

json recall_to_json(const PipelineConfig& cfg) {
    json j;
    j["iterations"] = cfg.recall.iterations;
    j["domain_threshold"] = cfg.recall.domain_threshold;
    j["score_threshold"] = cfg.recall.score_threshold;
    j["ngram_orders"] = cfg.recall.ngram_orders;
    j["feature_buckets"] = cfg.recall.feature_buckets;
    j["embed_dim"] = cfg.recall.embed_dim;
    j["epochs"] = cfg.recall.epochs;
    j["learning_rate"] = cfg.recall.learning_rate;
    json targets = json::array();
    for (const auto& t : cfg.recall_targets) {
        json jt;
        jt["category"] = std::string(to_string(t.category));
        jt["seed_ids"] = t.seed_ids_path;
        jt["url_patterns"] = t.url_patterns_path;
        targets.push_back(jt);
    }
    j["targets"] = targets;
    return j;
}

json mix_to_json(const MixSettings& m) {
    json ratios = json::object();
    for (const auto& [category, ratio] : m.ratios) {
        ratios[std::string(to_string(category))] = ratio;
    }
    json j;
    j["ratios"] = ratios;
    j["target_tokens"] = m.target_tokens;
    return j;
}

json pack_to_json(const PackSettings& p) {
    json j;
    j["fim_rate"] = p.fim_rate;
    j["context_length"] = p.context_length;
    j["sequences_per_shard"] = p.sequences_per_shard;
    return j;
}

json tokenizer_to_json(const TokenizerSettings& t) {
    json j;
    j["vocab_path"] = t.vocab_path;
    j["vocab_size"] = t.vocab_size;
    return j;
}

json inputs_to_json(const std::vector<IngestInput>& inputs) {
    json arr = json::array();
    for (const auto& input : inputs) {
        json j;
        j["path"] = input.path;
        j["origin"] = std::string(to_string(input.origin));
        j["category"] = input.category;
        arr.push_back(j);
    }
    return arr;
}

}  // namespace

std::filesystem::path scratch_dir() {
    if (const char* env = std::getenv("CURATOR_SCRATCH"); env != nullptr && *env != '\0') {
        return std::filesystem::path(env);
    }
    return std::filesystem::temp_directory_path();
}

PipelineConfig PipelineConfig::from_json_text(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("config: invalid JSON: ") + e.what());
    }
    check_keys(j,
               {"seed", "out_root", "inputs", "filter", "dedup", "tokenizer", "recall", "mix",
                "pack", "jobs"},
               "top level");

    PipelineConfig cfg;
    try {
        cfg.seed = j.value("seed", std::uint64_t{0});
        cfg.out_root = j.value("out_root", std::string{});
        cfg.jobs = j.value("jobs", 1);

        for (const auto& entry : j.value("inputs", json::array())) {
            check_keys(entry, {"path", "origin", "category"}, "inputs[]");
            IngestInput input;
            input.path = entry.at("path").get<std::string>();
            const auto origin = parse_origin(entry.value("origin", "github"));
            if (!origin) throw ConfigError("config: unknown origin in inputs[]");
            input.origin = *origin;
            input.category = entry.value("category", std::string("code"));
            if (input.category != "candidates" && !parse_category(input.category)) {
                throw ConfigError("config: unknown category \"" + input.category + "\"");
            }
            cfg.inputs.push_back(std::move(input));
        }

        if (j.contains("filter")) {
            const auto& f = j["filter"];
            check_keys(f,
                       {"avg_line_limit", "max_line_limit", "min_alpha_fraction",
                        "xml_probe_window", "html_min_visible_fraction",
                        "html_min_visible_chars", "structured_min_chars",
                        "structured_max_chars", "xml_exempt_languages"},
                       "filter");
            cfg.filter.avg_line_limit = f.value("avg_line_limit", cfg.filter.avg_line_limit);
            cfg.filter.max_line_limit = f.value("max_line_limit", cfg.filter.max_line_limit);
            cfg.filter.min_alpha_fraction =
                f.value("min_alpha_fraction", cfg.filter.min_alpha_fraction);
            cfg.filter.xml_probe_window = f.value("xml_probe_window", cfg.filter.xml_probe_window);
            cfg.filter.html_min_visible_fraction =
                f.value("html_min_visible_fraction", cfg.filter.html_min_visible_fraction);
            cfg.filter.html_min_visible_chars =
                f.value("html_min_visible_chars", cfg.filter.html_min_visible_chars);
            cfg.filter.structured_min_chars =
                f.value("structured_min_chars", cfg.filter.structured_min_chars);
            cfg.filter.structured_max_chars =
                f.value("structured_max_chars", cfg.filter.structured_max_chars);
            if (f.contains("xml_exempt_languages")) {
                cfg.filter.xml_exempt_languages.clear();
                for (const auto& lang : f["xml_exempt_languages"]) {
                    cfg.filter.xml_exempt_languages.insert(lang.get<std::string>());
                }
            }
        }

        if (j.contains("dedup")) {
            const auto& d = j["dedup"];
            check_keys(d,
                       {"shingle_k", "num_hashes", "bands", "rows", "jaccard_threshold",
                        "verify_exact"},
                       "dedup");
            cfg.dedup.shingle_k = d.value("shingle_k", cfg.dedup.shingle_k);
            cfg.dedup.num_hashes = d.value("num_hashes", cfg.dedup.num_hashes);
            cfg.dedup.bands = d.value("bands", cfg.dedup.bands);
            cfg.dedup.rows = d.value("rows", cfg.dedup.rows);
            cfg.dedup.jaccard_threshold =
                d.value("jaccard_threshold", cfg.dedup.jaccard_threshold);
            cfg.dedup.verify_exact = d.value("verify_exact", cfg.dedup.verify_exact);
        }

        if (j.contains("tokenizer")) {
            const auto& t = j["tokenizer"];
            check_keys(t, {"vocab_path", "vocab_size"}, "tokenizer");
            cfg.tokenizer.vocab_path = t.value("vocab_path", cfg.tokenizer.vocab_path);
            cfg.tokenizer.vocab_size = t.value("vocab_size", cfg.tokenizer.vocab_size);
        }

        if (j.contains("recall")) {
            const auto& r = j["recall"];
            check_keys(r,
                       {"iterations", "domain_threshold", "score_threshold", "ngram_orders",
                        "feature_buckets", "embed_dim", "epochs", "learning_rate", "targets"},
                       "recall");
            cfg.recall.iterations = r.value("iterations", cfg.recall.iterations);
            cfg.recall.domain_threshold = r.value("domain_threshold", cfg.recall.domain_threshold);
            cfg.recall.score_threshold = r.value("score_threshold", cfg.recall.score_threshold);
            if (r.contains("ngram_orders")) {
                cfg.recall.ngram_orders = r["ngram_orders"].get<std::vector<std::uint32_t>>();
            }
            cfg.recall.feature_buckets = r.value("feature_buckets", cfg.recall.feature_buckets);
            cfg.recall.embed_dim = r.value("embed_dim", cfg.recall.embed_dim);
            cfg.recall.epochs = r.value("epochs", cfg.recall.epochs);
            cfg.recall.learning_rate = r.value("learning_rate", cfg.recall.learning_rate);
            for (const auto& entry : r.value("targets", json::array())) {
                check_keys(entry, {"category", "seed_ids", "url_patterns"}, "recall.targets[]");
                RecallTarget target;
                const auto category = parse_category(entry.at("category").get<std::string>());
                if (!category) throw ConfigError("config: unknown recall target category");
                target.category = *category;
                target.seed_ids_path = entry.at("seed_ids").get<std::string>();
                target.url_patterns_path = entry.value("url_patterns", std::string{});
                cfg.recall_targets.push_back(std::move(target));
            }
        }

        if (j.contains("mix")) {
            const auto& m = j["mix"];
            check_keys(m, {"ratios", "target_tokens"}, "mix");
            if (m.contains("ratios")) {
                cfg.mix.ratios.clear();
                for (const auto& [name, ratio] : m["ratios"].items()) {
                    const auto category = parse_category(name);
                    if (!category) throw ConfigError("config: unknown mix category " + name);
                    cfg.mix.ratios[*category] = ratio.get<double>();
                }
            }
            cfg.mix.target_tokens = m.value("target_tokens", cfg.mix.target_tokens);
        }

        if (j.contains("pack")) {
            const auto& p = j["pack"];
            check_keys(p, {"fim_rate", "context_length", "sequences_per_shard"}, "pack");
            cfg.pack.fim_rate = p.value("fim_rate", cfg.pack.fim_rate);
            cfg.pack.context_length = p.value("context_length", cfg.pack.context_length);
            cfg.pack.sequences_per_shard =
                p.value("sequences_per_shard", cfg.pack.sequences_per_shard);
        }
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config: ") + e.what());
    }
    return cfg;
}

PipelineConfig PipelineConfig::from_json_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open config file: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return from_json_text(buf.str());
}

std::string PipelineConfig::canonical_json() const {
    json j;
    j["seed"] = seed;
    j["out_root"] = out_root;
    j["inputs"] = inputs_to_json(inputs);
    j["filter"] = filter_to_json(filter);
    j["dedup"] = dedup_to_json(dedup);
    j["tokenizer"] = tokenizer_to_json(tokenizer);
    j["recall"] = recall_to_json(*this);
    j["mix"] = mix_to_json(mix);
    j["pack"] = pack_to_json(pack);
    return j.dump();
}

std::string PipelineConfig::run_digest() const { return hex64(fnv1a64(canonical_json())); }

std::filesystem::path PipelineConfig::run_dir() const {
    const std::filesystem::path root =
        out_root.empty() ? scratch_dir() / "curator-runs" : std::filesystem::path(out_root);
    return root / run_digest();
}

std::string PipelineConfig::stage_config_json(Stage stage) const {
    json j;
    switch (stage) {
        case Stage::ingested: j["inputs"] = inputs_to_json(inputs); break;
        case Stage::filtered: j = filter_to_json(filter); break;
        case Stage::deduped: j = dedup_to_json(dedup); break;
        case Stage::recalled: j = recall_to_json(*this); break;
        case Stage::mixed: j = mix_to_json(mix); break;
        case Stage::packed: j = pack_to_json(pack); break;
    }
    return j.dump();
}

std::uint64_t PipelineConfig::stage_seed(std::string_view stage_name) const {
    return derive_seed(seed, stage_name);
}

namespace {

StageOutcome stage_ingest(const PipelineConfig& cfg) {
    std::vector<std::string> doc_lines;
    std::vector<std::string> error_lines;
    std::uint64_t doc_count = 0;
    for (const auto& input : cfg.inputs) {
        if (!std::filesystem::exists(input.path)) {
            throw StageError("input path does not exist: " + input.path);
        }
        const IngestResult result = ingest_jsonl(input.path, input.origin);
        for (const auto& doc : result.documents) {
            doc_lines.push_back(document_to_jsonl(doc, input.category));
            ++doc_count;
        }
        for (const auto& error : result.errors) {
            json j;
            j["file"] = input.path;
            j["line"] = error.line;
            j["reason"] = error.reason;
            j["detail"] = error.detail;
            error_lines.push_back(j.dump());
        }
    }
    const auto dir = cfg.run_dir();
    write_lines(dir / "ingested.jsonl", doc_lines);
    write_lines(dir / "ingest_errors.jsonl", error_lines);

    StageOutcome outcome;
    outcome.manifest = emit_manifest(Stage::ingested, doc_count, 0, {},
                                     cfg.stage_config_json(Stage::ingested), cfg.seed);
    outcome.error_records = error_lines.size();
    write_manifest(cfg, outcome.manifest);
    return outcome;
}

StageOutcome stage_filter(const PipelineConfig& cfg) {
    require_manifest(cfg, Stage::ingested);
    cfg.filter.validate();
    const auto dir = cfg.run_dir();
    const auto docs = read_doc_file(dir / "ingested.jsonl");

    std::vector<FilterVerdict> verdicts(docs.size());
    parallel_for(docs.size(), cfg.jobs, [&](std::size_t begin, std::size_t end) {
        for (std::size_t i = begin; i < end; ++i) {
            verdicts[i] = filter_document(docs[i].doc, cfg.filter);
        }
    });

    std::vector<std::string> kept_lines;
    std::vector<std::string> audit_lines;
    audit_lines.reserve(docs.size());
    std::uint64_t kept = 0;
    for (std::size_t i = 0; i < docs.size(); ++i) {
        audit_lines.push_back(verdict_to_jsonl(docs[i].doc, verdicts[i]));
        if (verdicts[i].keep) {
            kept_lines.push_back(document_to_jsonl(docs[i].doc, docs[i].category));
            ++kept;
        }
    }
    write_lines(dir / "filtered.jsonl", kept_lines);
    write_lines(dir / "filter_audit.jsonl", audit_lines);

    StageOutcome outcome;
    outcome.manifest = emit_manifest(Stage::filtered, kept, 0, {},
                                     cfg.stage_config_json(Stage::filtered), cfg.seed);
    write_manifest(cfg, outcome.manifest);
    return outcome;
}

StageOutcome stage_dedup(const PipelineConfig& cfg) {
    require_manifest(cfg, Stage::filtered);
    const auto dir = cfg.run_dir();
    const auto docs = read_doc_file(dir / "filtered.jsonl");

    DedupConfig dedup_cfg = cfg.dedup;
    dedup_cfg.seed = cfg.stage_seed("dedup");
    dedup_cfg.jobs = cfg.jobs;
    std::vector<SourceDocument> plain;
    plain.reserve(docs.size());
    for (const auto& entry : docs) plain.push_back(entry.doc);
    const DedupResult result = dedup_corpus(plain, dedup_cfg);

    std::unordered_set<std::string> kept_ids(result.kept.begin(), result.kept.end());
    std::vector<std::string> kept_lines;
    for (const auto& entry : docs) {
        if (kept_ids.count(entry.doc.id) > 0) {
            kept_lines.push_back(document_to_jsonl(entry.doc, entry.category));
        }
    }
    std::vector<std::string> cluster_lines;
    for (const auto& cluster : result.clusters) cluster_lines.push_back(cluster_to_jsonl(cluster));
    write_lines(dir / "deduped.jsonl", kept_lines);
    write_lines(dir / "dedup_clusters.jsonl", cluster_lines);

    StageOutcome outcome;
    outcome.manifest = emit_manifest(Stage::deduped, result.kept.size(), 0, {},
                                     cfg.stage_config_json(Stage::deduped), dedup_cfg.seed);
    write_manifest(cfg, outcome.manifest);
    return outcome;
}

StageOutcome stage_recall(const PipelineConfig& cfg) {
    require_manifest(cfg, Stage::deduped);
    const auto dir = cfg.run_dir();
    const auto docs = read_doc_file(dir / "deduped.jsonl");
    const BpeVocab vocab = load_run_vocab(cfg);

    std::vector<std::string> out_lines;
    std::vector<SourceDocument> candidates;
    for (const auto& entry : docs) {
        if (entry.category == "candidates") {
            candidates.push_back(entry.doc);
        } else {
            out_lines.push_back(document_to_jsonl(entry.doc, entry.category));
        }
    }

    std::uint64_t doc_count = out_lines.size();
    std::vector<std::string> report_lines;
    std::unordered_set<std::string> claimed;
    std::unordered_map<std::string, const SourceDocument*> by_id;
    for (const auto& doc : candidates) by_id.emplace(doc.id, &doc);

    for (const auto& target : cfg.recall_targets) {
        const auto category_name = std::string(to_string(target.category));
        const auto seed_ids = load_id_file(target.seed_ids_path);
        const std::vector<std::string> patterns =
            target.url_patterns_path.empty() ? std::vector<std::string>{}
                                             : load_url_patterns(target.url_patterns_path);
        RecallConfig recall_cfg = cfg.recall;
        recall_cfg.seed = cfg.stage_seed("recall-" + category_name);
        const RecallResult result =
            run_recall_loop(candidates, seed_ids, patterns, recall_cfg, vocab);

        for (const auto& report : result.reports) {
            json j = json::parse(report_to_jsonl(report));
            j["category"] = category_name;
            report_lines.push_back(j.dump());
        }
        for (const auto& id : result.collected_ids) {
            if (!claimed.insert(id).second) continue;  // first target wins
            out_lines.push_back(document_to_jsonl(*by_id.at(id), category_name));
            ++doc_count;
        }
    }
    write_lines(dir / "recalled.jsonl", out_lines);
    write_lines(dir / "recall_reports.jsonl", report_lines);

    StageOutcome outcome;
    outcome.manifest = emit_manifest(Stage::recalled, doc_count, 0, {},
                                     cfg.stage_config_json(Stage::recalled),
                                     cfg.stage_seed("recall"));
    write_manifest(cfg, outcome.manifest);
    return outcome;
}

StageOutcome stage_mix(const PipelineConfig& cfg) {
    require_manifest(cfg, Stage::recalled);
    const auto dir = cfg.run_dir();
    const auto docs = read_doc_file(dir / "recalled.jsonl");
    const BpeVocab vocab = load_run_vocab(cfg);

    // Token counts exclude sentinel overhead; the packer adds those.
    std::vector<std::uint64_t> token_counts(docs.size());
    parallel_for(docs.size(), cfg.jobs, [&](std::size_t begin, std::size_t end) {
        for (std::size_t i = begin; i < end; ++i) {
            token_counts[i] = encode(docs[i].doc.content, vocab).ids.size();
        }
    });

    std::map<CorpusCategory, std::vector<MixItem>> streams;
    std::map<CorpusCategory, std::vector<std::size_t>> stream_doc_index;
    for (std::size_t i = 0; i < docs.size(); ++i) {
        const auto category = parse_category(docs[i].category);
        if (!category) {
            throw StageError("mix: document " + docs[i].doc.id + " has no category");
        }
        streams[*category].push_back({docs[i].doc, token_counts[i]});
        stream_doc_index[*category].push_back(i);
    }

    const auto order = mix_corpus(streams, cfg.mix.ratios, cfg.mix.target_tokens);

    std::vector<std::string> out_lines;
    std::uint64_t total_tokens = 0;
    std::map<std::string, std::uint64_t> category_tokens;
    for (const auto cat :
         {CorpusCategory::code, CorpusCategory::math, CorpusCategory::natural_language}) {
        category_tokens[std::string(to_string(cat))] = 0;
    }
    for (const auto& pick : order) {
        const std::size_t doc_index = stream_doc_index[pick.category][pick.stream_index];
        out_lines.push_back(
            document_to_jsonl(docs[doc_index].doc, std::string(to_string(pick.category))));
        total_tokens += token_counts[doc_index];
        category_tokens[std::string(to_string(pick.category))] += token_counts[doc_index];
    }
    write_lines(dir / "mixed.jsonl", out_lines);

    StageOutcome outcome;
    outcome.manifest = emit_manifest(Stage::mixed, order.size(), total_tokens, category_tokens,
                                     cfg.stage_config_json(Stage::mixed), cfg.seed);
    write_manifest(cfg, outcome.manifest);
    return outcome;
}

StageOutcome stage_pack(const PipelineConfig& cfg) {
    require_manifest(cfg, Stage::mixed);
    const auto dir = cfg.run_dir();
    const auto docs = read_doc_file(dir / "mixed.jsonl");
    const BpeVocab vocab = load_run_vocab(cfg);

    FimConfig fim_cfg;
    fim_cfg.fim_rate = cfg.pack.fim_rate;
    fim_cfg.context_length = cfg.pack.context_length;
    fim_cfg.rng_seed = cfg.stage_seed("pack");
    fim_cfg.validate();

    std::vector<TransformedDoc> transformed(docs.size());
    parallel_for(docs.size(), cfg.jobs, [&](std::size_t begin, std::size_t end) {
        for (std::size_t i = begin; i < end; ++i) {
            transformed[i] = apply_fim(docs[i].doc, vocab, fim_cfg);
        }
    });
    const auto sequences = pack_sequences(transformed, fim_cfg);

    std::unordered_map<std::string, std::string> category_of;
    for (const auto& entry : docs) category_of.emplace(entry.doc.id, entry.category);

    const std::uint32_t per_shard = std::max<std::uint32_t>(1, cfg.pack.sequences_per_shard);
    const std::size_t shard_count = (sequences.size() + per_shard - 1) / per_shard;
    std::vector<std::string> boundary_lines;
    for (std::size_t shard = 0; shard < shard_count; ++shard) {
        std::string blob;
        const std::size_t begin = shard * per_shard;
        const std::size_t end = std::min(sequences.size(), begin + per_shard);
        blob.reserve((end - begin) * fim_cfg.context_length * 4);
        for (std::size_t s = begin; s < end; ++s) {
            for (const TokenId id : sequences[s].ids) append_u32_le(blob, id);
            for (const auto& segment : sequences[s].doc_boundaries) {
                json j;
                j["shard"] = shard;
                j["seq"] = s - begin;
                j["start"] = segment.start;
                j["end"] = segment.end;
                j["doc_id"] = segment.doc_id;
                j["was_fim"] = segment.was_fim;
                j["category"] = category_of.at(segment.doc_id);
                boundary_lines.push_back(j.dump());
            }
        }
        char name[32];
        std::snprintf(name, sizeof(name), "shard_%04zu.bin", shard);
        write_file(dir / name, blob);
    }
    write_lines(dir / "boundaries.jsonl", boundary_lines);

    json sidecar;
    sidecar["context_length"] = fim_cfg.context_length;
    sidecar["shard_count"] = shard_count;
    sidecar["sequences_per_shard"] = per_shard;
    sidecar["total_sequences"] = sequences.size();
    sidecar["boundaries_file"] = "boundaries.jsonl";
    write_file(dir / "packed.json", sidecar.dump() + "\n");

    std::uint64_t total_tokens = 0;
    std::map<std::string, std::uint64_t> category_tokens;
    for (const auto cat :
         {CorpusCategory::code, CorpusCategory::math, CorpusCategory::natural_language}) {
        category_tokens[std::string(to_string(cat))] = 0;
    }
    for (const auto& seq : sequences) {
        for (const auto& segment : seq.doc_boundaries) {
            const std::uint64_t tokens = segment.end - segment.start;
            total_tokens += tokens;
            category_tokens[category_of.at(segment.doc_id)] += tokens;
        }
    }

    StageOutcome outcome;
    outcome.manifest = emit_manifest(Stage::packed, docs.size(), total_tokens, category_tokens,
                                     cfg.stage_config_json(Stage::packed), fim_cfg.rng_seed);
    write_manifest(cfg, outcome.manifest);
    return outcome;
}

}  // namespace

StageOutcome run_stage(Stage stage, const PipelineConfig& cfg) {
    std::filesystem::create_directories(cfg.run_dir());
    switch (stage) {
        case Stage::ingested: return stage_ingest(cfg);
        case Stage::filtered: return stage_filter(cfg);
        case Stage::deduped: return stage_dedup(cfg);
        case Stage::recalled: return stage_recall(cfg);
        case Stage::mixed: return stage_mix(cfg);
        case Stage::packed: return stage_pack(cfg);
    }
    throw StageError("unknown stage");
}

std::filesystem::path ensure_vocab(const PipelineConfig& cfg) {
    std::filesystem::create_directories(cfg.run_dir());
    const auto path = vocab_path_in_run(cfg);
    if (!cfg.tokenizer.vocab_path.empty()) {
        const BpeVocab vocab = BpeVocab::load(cfg.tokenizer.vocab_path);
        vocab.save(path.string());  // canonical re-serialization
        return path;
    }
    require_manifest(cfg, Stage::deduped);
    const auto docs = read_doc_file(cfg.run_dir() / "deduped.jsonl");
    std::vector<std::string> corpus;
    corpus.reserve(docs.size());
    for (const auto& entry : docs) corpus.push_back(entry.doc.content);
    const BpeVocab vocab = train_bpe(corpus, cfg.tokenizer.vocab_size);
    vocab.save(path.string());
    return path;
}

RunAllResult run_all(const PipelineConfig& cfg) {
    RunAllResult result;
    for (const Stage stage : {Stage::ingested, Stage::filtered, Stage::deduped}) {
        auto outcome = run_stage(stage, cfg);
        result.error_records += outcome.error_records;
        result.manifests.push_back(std::move(outcome.manifest));
    }
    ensure_vocab(cfg);
    for (const Stage stage : {Stage::recalled, Stage::mixed, Stage::packed}) {
        auto outcome = run_stage(stage, cfg);
        result.error_records += outcome.error_records;
        result.manifests.push_back(std::move(outcome.manifest));
    }
    return result;
}

StatsReport build_stats(
    const std::vector<CorpusManifest>& manifests,
    const std::vector<std::pair<std::string, RecallIterationReport>>& recall_reports) {
    if (manifests.empty()) throw std::invalid_argument("stats: at least one manifest required");
    StatsReport report;
    std::optional<std::uint64_t> filtered_docs;
    std::optional<std::uint64_t> deduped_docs;
    for (const auto& manifest : manifests) {
        StatsReport::StageRow row;
        row.stage = std::string(to_string(manifest.stage));
        row.doc_count = manifest.doc_count;
        row.token_count = manifest.token_count;
        row.category_counts = manifest.category_counts;
        row.config_digest = manifest.config_digest;
        report.stages.push_back(std::move(row));
        if (manifest.stage == Stage::filtered) filtered_docs = manifest.doc_count;
        if (manifest.stage == Stage::deduped) deduped_docs = manifest.doc_count;
    }
    if (filtered_docs && deduped_docs && *filtered_docs > 0) {
        report.dedup_removal_rate =
            1.0 - static_cast<double>(*deduped_docs) / static_cast<double>(*filtered_docs);
    }
    for (const auto& [category, iteration] : recall_reports) {
        StatsReport::RecallRow row;
        row.category = category;
        row.iteration = iteration.iteration;
        row.pages_recalled = iteration.pages_recalled;
        row.seed_size_before = iteration.seed_size_before;
        row.seed_size_after = iteration.seed_size_after;
        report.recall_growth.push_back(std::move(row));
    }
    return report;
}

StatsReport load_stats(const PipelineConfig& cfg) {
    std::vector<CorpusManifest> manifests;
    for (const Stage stage : {Stage::ingested, Stage::filtered, Stage::deduped, Stage::recalled,
                              Stage::mixed, Stage::packed}) {
        const auto path = manifest_path(cfg, stage);
        if (std::filesystem::exists(path)) manifests.push_back(parse_manifest(read_file(path)));
    }
    std::vector<std::pair<std::string, RecallIterationReport>> reports;
    const auto reports_path = cfg.run_dir() / "recall_reports.jsonl";
    if (std::filesystem::exists(reports_path)) {
        std::ifstream in(reports_path, std::ios::binary);
        std::string line;
        while (std::getline(in, line)) {
            if (line.empty()) continue;
            const json j = json::parse(line);
            RecallIterationReport r;
            r.iteration = j.at("iteration").get<std::uint32_t>();
            r.classifier_loss = j.at("classifier_loss").get<double>();
            r.pages_recalled = j.at("pages_recalled").get<std::uint64_t>();
            r.seed_size_before = j.at("seed_size_before").get<std::uint64_t>();
            r.seed_size_after = j.at("seed_size_after").get<std::uint64_t>();
            reports.emplace_back(j.value("category", ""), r);
        }
    }
    return build_stats(manifests, reports);
}

std::string stats_to_json(const StatsReport& report) {
    json j;
    json stages = json::array();
    for (const auto& row : report.stages) {
        json r;
        r["stage"] = row.stage;
        r["doc_count"] = row.doc_count;
        r["token_count"] = row.token_count;
        r["category_counts"] = row.category_counts;
        r["config_digest"] = row.config_digest;
        stages.push_back(r);
    }
    j["stages"] = stages;
    if (report.dedup_removal_rate) j["dedup_removal_rate"] = *report.dedup_removal_rate;
    json growth = json::array();
    for (const auto& row : report.recall_growth) {
        json r;
        r["category"] = row.category;
        r["iteration"] = row.iteration;
        r["pages_recalled"] = row.pages_recalled;
        r["seed_size_before"] = row.seed_size_before;
        r["seed_size_after"] = row.seed_size_after;
        growth.push_back(r);
    }
    j["recall_growth"] = growth;
    return j.dump(2) + "\n";
}

std::string stats_to_text(const StatsReport& report) {
    std::ostringstream out;
    out << "stage      docs        tokens        code        math        natural_language\n";
    for (const auto& row : report.stages) {
        out << row.stage;
        for (std::size_t pad = row.stage.size(); pad < 11; ++pad) out << ' ';
        std::ostringstream cells;
        auto cell = [&](std::uint64_t v) {
            std::string s = std::to_string(v);
            cells << s;
            for (std::size_t pad = s.size(); pad < 12; ++pad) cells << ' ';
        };
        cell(row.doc_count);
        cell(row.token_count);
        auto count_of = [&](const char* name) {
            const auto it = row.category_counts.find(name);
            return it == row.category_counts.end() ? std::uint64_t{0} : it->second;
        };
        cell(count_of("code"));
        cell(count_of("math"));
        cells << count_of("natural_language");
        out << cells.str() << '\n';
    }
    if (report.dedup_removal_rate) {
        out << "dedup removal rate: " << *report.dedup_removal_rate << '\n';
    }
    for (const auto& row : report.recall_growth) {
        out << "recall " << row.category << " iteration " << row.iteration << ": recalled "
            << row.pages_recalled << ", seed " << row.seed_size_before << " -> "
            << row.seed_size_after << '\n';
    }
    return out.str();
}

}  // namespace curator
