#pragma once

#include <array>
#include <cstdint>
#include <set>
#include <string>
#include <vector>

#include "curator/bpe.hpp"
#include "curator/document.hpp"

namespace curator {

// Iterative classifier-driven recall: train on the seed, score every
// candidate, promote domains past the threshold, grow the seed from
// annotated URLs, repeat.
struct RecallConfig {
    std::uint32_t iterations = 3;     // 3 for web, 2 for github
    double domain_threshold = 0.10;   // strict ">"
    double score_threshold = 0.5;     // page collected when P(relevant) > this
    std::vector<std::uint32_t> ngram_orders = {1, 2};
    std::uint32_t feature_buckets = 1u << 20;  // power of two
    std::uint32_t embed_dim = 64;
    std::uint32_t epochs = 5;
    double learning_rate = 0.1;  // linearly decayed to 0
    std::uint64_t seed = 0;

    void validate() const;  // throws std::invalid_argument
};

// Supervised fastText shape: averaged hashed n-gram embeddings feeding a
// two-class linear softmax. Class 0 is "relevant".
struct RecallClassifier {
    std::uint32_t feature_buckets = 0;
    std::uint32_t embed_dim = 0;
    std::vector<double> embedding;       // feature_buckets x embed_dim, row-major
    std::vector<double> output_weights;  // embed_dim x 2, row-major
    std::array<double, 2> bias{0.0, 0.0};
    double final_loss = 0.0;  // mean cross-entropy over the last epoch
};

struct LabeledFeatures {
    std::vector<std::uint32_t> features;
    bool relevant = false;
};

struct DomainStats {
    std::string domain;
    std::uint64_t total_pages = 0;
    std::uint64_t collected_pages = 0;
    double collected_fraction = 0.0;
};

struct ScoredPage {
    std::string id;
    std::string domain;
    std::string url;
    double score = 0.0;
    bool collected = false;
};

struct RecallIterationReport {
    std::uint32_t iteration = 0;
    double classifier_loss = 0.0;
    std::uint64_t pages_recalled = 0;
    std::vector<std::string> domains_promoted;
    std::uint64_t seed_size_before = 0;
    std::uint64_t seed_size_after = 0;
};

struct RecallResult {
    std::vector<std::string> collected_ids;  // final-iteration collected set, input order
    std::vector<RecallIterationReport> reports;
};

// Hashed n-gram feature indices (a multiset; collisions allowed). For
// each order n, every contiguous n-gram maps into [0, feature_buckets).
std::vector<std::uint32_t> extract_features(const std::vector<std::string>& tokens,
                                            const RecallConfig& cfg);

// Mean of the embeddings of `features` (empty -> zero vector), softmax of
// the linear readout; returns P(relevant).
double score_features(const RecallClassifier& model, const std::vector<std::uint32_t>& features);

// Total cross-entropy over a batch: the finite-difference oracle target.
double batch_loss(const RecallClassifier& model, const std::vector<LabeledFeatures>& batch);

// Analytic gradient accumulation for one example; used by training and
// by the gradient-check tests. grad_* must match the model's shapes.
void accumulate_gradients(const RecallClassifier& model, const LabeledFeatures& example,
                          std::vector<double>& grad_embedding,
                          std::vector<double>& grad_output, std::array<double, 2>& grad_bias);

// Deterministic SGD on cross-entropy: examples in stream order, epochs
// passes, learning rate decayed linearly per step. Embeddings start
// uniform in [-1/dim, 1/dim] from the seeded generator; the output layer
// starts at zero. Throws "degenerate-labels" unless both labels occur.
RecallClassifier train_classifier(const std::vector<LabeledFeatures>& stream,
                                  const RecallConfig& cfg);

double score_page(const RecallClassifier& model, const SourceDocument& doc,
                  const BpeVocab& vocab, const RecallConfig& cfg);

// Domains whose collected fraction strictly exceeds cfg.domain_threshold,
// sorted by domain name.
std::vector<DomainStats> promote_domains(const std::vector<ScoredPage>& pages,
                                         const RecallConfig& cfg);

// Adds uncollected pages of promoted domains whose URL starts with any
// annotated prefix pattern. Returns a superset of the input seed.
std::set<std::string> annotate_and_grow_seed(const std::vector<DomainStats>& promoted,
                                             const std::vector<ScoredPage>& pages,
                                             const std::vector<std::string>& url_patterns,
                                             const std::set<std::string>& seed);

// Runs exactly cfg.iterations rounds of train -> score -> promote ->
// grow. Seed ids must be non-empty and reference candidate documents.
// Negatives are drawn uniformly from non-seed candidates each iteration
// (as many as there are positives), from a generator derived from
// (cfg.seed, iteration).
RecallResult run_recall_loop(const std::vector<SourceDocument>& candidates,
                             const std::set<std::string>& seed_ids,
                             const std::vector<std::string>& url_patterns,
                             const RecallConfig& cfg, const BpeVocab& vocab);

std::string report_to_jsonl(const RecallIterationReport& report);

// One prefix pattern per line; blank lines and '#' comments skipped.
std::vector<std::string> load_url_patterns(const std::string& path);

}  // namespace curator
