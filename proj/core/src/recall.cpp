#include "curator/recall.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <stdexcept>
#include <unordered_map>
#include <unordered_set>

#include "json.hpp"

#include "curator/hashing.hpp"
#include "curator/rng.hpp"

namespace curator {

void RecallConfig::validate() const {
    if (iterations < 1) throw std::invalid_argument("recall config: iterations must be >= 1");
    if (domain_threshold <= 0.0 || domain_threshold >= 1.0) {
        throw std::invalid_argument("recall config: domain_threshold must lie in (0,1)");
    }
    if (score_threshold <= 0.0 || score_threshold >= 1.0) {
        throw std::invalid_argument("recall config: score_threshold must lie in (0,1)");
    }
    if (ngram_orders.empty()) throw std::invalid_argument("recall config: ngram_orders empty");
    if (feature_buckets == 0 || (feature_buckets & (feature_buckets - 1)) != 0) {
        throw std::invalid_argument("recall config: feature_buckets must be a power of two");
    }
    if (embed_dim == 0 || epochs == 0 || learning_rate <= 0.0) {
        throw std::invalid_argument("recall config: embed_dim, epochs, learning_rate positive");
    }
}

std::vector<std::uint32_t> extract_features(const std::vector<std::string>& tokens,
                                            const RecallConfig& cfg) {
    std::vector<std::uint32_t> features;
    if (tokens.empty()) return features;
    const std::uint32_t mask = cfg.feature_buckets - 1;
    for (const std::uint32_t order : cfg.ngram_orders) {
        if (order == 0 || tokens.size() < order) continue;
        for (std::size_t i = 0; i + order <= tokens.size(); ++i) {
            std::uint64_t h = 0xcbf29ce484222325ULL;
            for (std::size_t k = 0; k < order; ++k) {
                h = fnv1a64(tokens[i + k], h);
                h = fnv1a64("\x1f", h);
            }
            features.push_back(static_cast<std::uint32_t>(mix64(h)) & mask);
        }
    }
    return features;
}

namespace {

// Forward pass: mean embedding, logits, softmax. Returns P per class.
std::array<double, 2> forward(const RecallClassifier& model,
                              const std::vector<std::uint32_t>& features,
                              std::vector<double>* hidden_out) {
    const std::size_t dim = model.embed_dim;
    std::vector<double> hidden(dim, 0.0);
    if (!features.empty()) {
        for (const std::uint32_t f : features) {
            const double* row = model.embedding.data() + static_cast<std::size_t>(f) * dim;
            for (std::size_t d = 0; d < dim; ++d) hidden[d] += row[d];
        }
        const double inv = 1.0 / static_cast<double>(features.size());
        for (std::size_t d = 0; d < dim; ++d) hidden[d] *= inv;
    }
    std::array<double, 2> logits{model.bias[0], model.bias[1]};
    for (std::size_t d = 0; d < dim; ++d) {
        logits[0] += hidden[d] * model.output_weights[d * 2];
        logits[1] += hidden[d] * model.output_weights[d * 2 + 1];
    }
    const double m = std::max(logits[0], logits[1]);
    const double e0 = std::exp(logits[0] - m);
    const double e1 = std::exp(logits[1] - m);
    const double z = e0 + e1;
    if (hidden_out) *hidden_out = std::move(hidden);
    return {e0 / z, e1 / z};
}

}  // namespace

double score_features(const RecallClassifier& model, const std::vector<std::uint32_t>& features) {
    return forward(model, features, nullptr)[0];
}

double batch_loss(const RecallClassifier& model, const std::vector<LabeledFeatures>& batch) {
    double loss = 0.0;
    for (const auto& example : batch) {
        const auto p = forward(model, example.features, nullptr);
        const double target = p[example.relevant ? 0 : 1];
        loss += -std::log(std::max(target, 1e-300));
    }
    return loss;
}

void accumulate_gradients(const RecallClassifier& model, const LabeledFeatures& example,
                          std::vector<double>& grad_embedding,
                          std::vector<double>& grad_output, std::array<double, 2>& grad_bias) {
    const std::size_t dim = model.embed_dim;
    std::vector<double> hidden;
    const auto p = forward(model, example.features, &hidden);
    // dL/dlogit = p - onehot(label)
    std::array<double, 2> g{p[0], p[1]};
    g[example.relevant ? 0 : 1] -= 1.0;

    for (std::size_t d = 0; d < dim; ++d) {
        grad_output[d * 2] += hidden[d] * g[0];
        grad_output[d * 2 + 1] += hidden[d] * g[1];
    }
    grad_bias[0] += g[0];
    grad_bias[1] += g[1];

    if (example.features.empty()) return;
    const double inv = 1.0 / static_cast<double>(example.features.size());
    std::vector<double> grad_hidden(dim);
    for (std::size_t d = 0; d < dim; ++d) {
        grad_hidden[d] =
            (model.output_weights[d * 2] * g[0] + model.output_weights[d * 2 + 1] * g[1]) * inv;
    }
    for (const std::uint32_t f : example.features) {
        double* row = grad_embedding.data() + static_cast<std::size_t>(f) * dim;
        for (std::size_t d = 0; d < dim; ++d) row[d] += grad_hidden[d];
    }
}

RecallClassifier train_classifier(const std::vector<LabeledFeatures>& stream,
                                  const RecallConfig& cfg) {
    cfg.validate();
    bool has_pos = false;
    bool has_neg = false;
    for (const auto& example : stream) (example.relevant ? has_pos : has_neg) = true;
    if (!has_pos || !has_neg) throw std::runtime_error("degenerate-labels");

    RecallClassifier model;
    model.feature_buckets = cfg.feature_buckets;
    model.embed_dim = cfg.embed_dim;
    const std::size_t dim = cfg.embed_dim;
    model.embedding.resize(static_cast<std::size_t>(cfg.feature_buckets) * dim);
    model.output_weights.assign(dim * 2, 0.0);
    model.bias = {0.0, 0.0};

    Rng rng(mix64(cfg.seed ^ 0x726563616c6cULL));
    const double scale = 1.0 / static_cast<double>(dim);
    for (auto& w : model.embedding) w = (rng.next_real() * 2.0 - 1.0) * scale;

    const std::size_t dim2 = dim * 2;
    std::vector<double> grad_hidden(dim);
    std::vector<double> hidden(dim);
    const std::uint64_t total_steps =
        static_cast<std::uint64_t>(cfg.epochs) * stream.size();
    std::uint64_t step = 0;
    double last_epoch_loss = 0.0;

    for (std::uint32_t epoch = 0; epoch < cfg.epochs; ++epoch) {
        double epoch_loss = 0.0;
        for (const auto& example : stream) {
            const double lr = cfg.learning_rate *
                              (1.0 - static_cast<double>(step) / static_cast<double>(total_steps));
            ++step;

            const auto p = forward(model, example.features, &hidden);
            epoch_loss += -std::log(std::max(p[example.relevant ? 0 : 1], 1e-300));
            std::array<double, 2> g{p[0], p[1]};
            g[example.relevant ? 0 : 1] -= 1.0;

            if (!example.features.empty()) {
                const double inv = 1.0 / static_cast<double>(example.features.size());
                for (std::size_t d = 0; d < dim; ++d) {
                    grad_hidden[d] = (model.output_weights[d * 2] * g[0] +
                                      model.output_weights[d * 2 + 1] * g[1]) *
                                     inv;
                }
                for (const std::uint32_t f : example.features) {
                    double* row = model.embedding.data() + static_cast<std::size_t>(f) * dim;
                    for (std::size_t d = 0; d < dim; ++d) row[d] -= lr * grad_hidden[d];
                }
            }
            for (std::size_t d = 0; d < dim; ++d) {
                model.output_weights[d * 2] -= lr * hidden[d] * g[0];
                model.output_weights[d * 2 + 1] -= lr * hidden[d] * g[1];
            }
            model.bias[0] -= lr * g[0];
            model.bias[1] -= lr * g[1];
            (void)dim2;
        }
        last_epoch_loss = stream.empty() ? 0.0 : epoch_loss / static_cast<double>(stream.size());
    }
    model.final_loss = last_epoch_loss;
    return model;
}

double score_page(const RecallClassifier& model, const SourceDocument& doc,
                  const BpeVocab& vocab, const RecallConfig& cfg) {
    const auto tokens = pretokenize_for_classifier(doc.content, vocab);
    return score_features(model, extract_features(tokens, cfg));
}

std::vector<DomainStats> promote_domains(const std::vector<ScoredPage>& pages,
                                         const RecallConfig& cfg) {
    std::map<std::string, DomainStats> by_domain;
    for (const auto& page : pages) {
        auto& stats = by_domain[page.domain];
        stats.domain = page.domain;
        ++stats.total_pages;
        if (page.collected) ++stats.collected_pages;
    }
    std::vector<DomainStats> promoted;
    for (auto& [domain, stats] : by_domain) {
        stats.collected_fraction = static_cast<double>(stats.collected_pages) /
                                   static_cast<double>(stats.total_pages);
        if (stats.collected_fraction > cfg.domain_threshold) promoted.push_back(stats);
    }
    return promoted;  // map iteration keeps domains sorted
}

std::set<std::string> annotate_and_grow_seed(const std::vector<DomainStats>& promoted,
                                             const std::vector<ScoredPage>& pages,
                                             const std::vector<std::string>& url_patterns,
                                             const std::set<std::string>& seed) {
    std::set<std::string> grown = seed;
    std::unordered_set<std::string> promoted_domains;
    for (const auto& stats : promoted) promoted_domains.insert(stats.domain);
    for (const auto& page : pages) {
        if (page.collected || promoted_domains.count(page.domain) == 0) continue;
        const bool matches = std::any_of(
            url_patterns.begin(), url_patterns.end(), [&](const std::string& pattern) {
                return page.url.size() >= pattern.size() &&
                       page.url.compare(0, pattern.size(), pattern) == 0;
            });
        if (matches) grown.insert(page.id);
    }
    return grown;
}

RecallResult run_recall_loop(const std::vector<SourceDocument>& candidates,
                             const std::set<std::string>& seed_ids,
                             const std::vector<std::string>& url_patterns,
                             const RecallConfig& cfg, const BpeVocab& vocab) {
    cfg.validate();
    if (seed_ids.empty()) throw std::runtime_error("recall: seed corpus is empty");
    std::unordered_map<std::string, std::size_t> index_by_id;
    for (std::size_t i = 0; i < candidates.size(); ++i) index_by_id.emplace(candidates[i].id, i);
    for (const auto& id : seed_ids) {
        if (index_by_id.count(id) == 0) {
            throw std::runtime_error("recall: seed id not in candidate stream: " + id);
        }
    }

    // Features are iteration-invariant; compute once.
    std::vector<std::vector<std::uint32_t>> features(candidates.size());
    for (std::size_t i = 0; i < candidates.size(); ++i) {
        features[i] = extract_features(pretokenize_for_classifier(candidates[i].content, vocab),
                                       cfg);
    }

    RecallResult result;
    std::set<std::string> seed = seed_ids;

    for (std::uint32_t iter = 1; iter <= cfg.iterations; ++iter) {
        // Positives: current seed, in candidate order. Negatives: a
        // uniform sample of the non-seed candidates, one per positive.
        std::vector<std::size_t> positives;
        std::vector<std::size_t> negatives_pool;
        for (std::size_t i = 0; i < candidates.size(); ++i) {
            if (seed.count(candidates[i].id) > 0) {
                positives.push_back(i);
            } else {
                negatives_pool.push_back(i);
            }
        }
        Rng rng(derive_seed(cfg.seed, "recall-negatives-" + std::to_string(iter)));
        const std::size_t neg_count = std::min(positives.size(), negatives_pool.size());
        for (std::size_t k = 0; k < neg_count; ++k) {
            const std::size_t j = k + static_cast<std::size_t>(
                                          rng.next_below(negatives_pool.size() - k));
            std::swap(negatives_pool[k], negatives_pool[j]);
        }

        std::vector<LabeledFeatures> stream;
        stream.reserve(positives.size() + neg_count);
        const std::size_t rounds = std::max(positives.size(), neg_count);
        for (std::size_t k = 0; k < rounds; ++k) {  // interleave pos/neg
            if (k < positives.size()) stream.push_back({features[positives[k]], true});
            if (k < neg_count) stream.push_back({features[negatives_pool[k]], false});
        }

        RecallConfig train_cfg = cfg;
        train_cfg.seed = derive_seed(cfg.seed, "recall-train-" + std::to_string(iter));
        const RecallClassifier model = train_classifier(stream, train_cfg);

        std::vector<ScoredPage> scored(candidates.size());
        for (std::size_t i = 0; i < candidates.size(); ++i) {
            ScoredPage page;
            page.id = candidates[i].id;
            page.domain = candidates[i].domain.value_or("");
            page.url = candidates[i].url.value_or("");
            page.score = score_features(model, features[i]);
            page.collected = page.score > cfg.score_threshold;
            scored[i] = std::move(page);
        }

        const auto promoted = promote_domains(scored, cfg);
        const auto grown = annotate_and_grow_seed(promoted, scored, url_patterns, seed);

        RecallIterationReport report;
        report.iteration = iter;
        report.classifier_loss = model.final_loss;
        report.pages_recalled =
            static_cast<std::uint64_t>(std::count_if(scored.begin(), scored.end(),
                                                     [](const ScoredPage& p) { return p.collected; }));
        for (const auto& stats : promoted) report.domains_promoted.push_back(stats.domain);
        report.seed_size_before = seed.size();
        report.seed_size_after = grown.size();
        result.reports.push_back(std::move(report));

        seed = grown;
        if (iter == cfg.iterations) {
            for (const auto& page : scored) {
                if (page.collected) result.collected_ids.push_back(page.id);
            }
        }
    }
    return result;
}

std::string report_to_jsonl(const RecallIterationReport& report) {
    nlohmann::json j;
    j["iteration"] = report.iteration;
    j["classifier_loss"] = report.classifier_loss;
    j["pages_recalled"] = report.pages_recalled;
    j["domains_promoted"] = report.domains_promoted;
    j["seed_size_before"] = report.seed_size_before;
    j["seed_size_after"] = report.seed_size_after;
    return j.dump();
}

std::vector<std::string> load_url_patterns(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open url-pattern file: " + path);
    std::vector<std::string> patterns;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line[0] == '#') continue;
        patterns.push_back(line);
    }
    return patterns;
}

}  // namespace curator
