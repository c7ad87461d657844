#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <map>
#include <set>
#include <vector>

#include "curator/bpe.hpp"
#include "curator/recall.hpp"
#include "curator/rng.hpp"
#include "testutil.hpp"

using namespace curator;

namespace {

RecallConfig small_config() {
    RecallConfig cfg;
    cfg.feature_buckets = 1u << 12;
    cfg.embed_dim = 16;
    cfg.epochs = 5;
    cfg.seed = 7;
    return cfg;
}

std::vector<std::string> class_a_words() {
    return {"lambda", "tensor", "compile", "struct", "kernel",
            "pointer", "mutex",  "opcode",  "syntax", "parser"};
}

std::vector<std::string> class_b_words() {
    return {"meadow", "violin", "harvest", "lantern", "whisper",
            "voyage", "marble", "orchard", "feather", "twilight"};
}

std::vector<LabeledFeatures> separable_toy(const RecallConfig& cfg) {
    Rng rng(99);
    std::vector<LabeledFeatures> stream;
    for (int i = 0; i < 20; ++i) {
        const bool relevant = i % 2 == 0;
        const auto& vocab = relevant ? class_a_words() : class_b_words();
        std::vector<std::string> tokens;
        for (int w = 0; w < 12; ++w) tokens.push_back(vocab[rng.next_below(vocab.size())]);
        stream.push_back({extract_features(tokens, cfg), relevant});
    }
    return stream;
}

// Independent oracle: dense logistic regression by full-batch gradient
// descent over the same hashed feature multisets.
double logistic_regression_accuracy(const std::vector<LabeledFeatures>& stream) {
    std::map<std::uint32_t, std::size_t> dense_index;
    for (const auto& example : stream) {
        for (const auto f : example.features) dense_index.emplace(f, dense_index.size());
    }
    const std::size_t dim = dense_index.size();
    std::vector<std::vector<double>> xs;
    std::vector<double> ys;
    for (const auto& example : stream) {
        std::vector<double> x(dim, 0.0);
        for (const auto f : example.features) x[dense_index[f]] += 1.0;
        for (auto& v : x) v /= static_cast<double>(example.features.size());
        xs.push_back(std::move(x));
        ys.push_back(example.relevant ? 1.0 : 0.0);
    }
    std::vector<double> w(dim, 0.0);
    double b = 0.0;
    for (int iter = 0; iter < 2000; ++iter) {
        std::vector<double> gw(dim, 0.0);
        double gb = 0.0;
        for (std::size_t i = 0; i < xs.size(); ++i) {
            double z = b;
            for (std::size_t d = 0; d < dim; ++d) z += w[d] * xs[i][d];
            const double p = 1.0 / (1.0 + std::exp(-z));
            const double g = p - ys[i];
            for (std::size_t d = 0; d < dim; ++d) gw[d] += g * xs[i][d];
            gb += g;
        }
        for (std::size_t d = 0; d < dim; ++d) w[d] -= 1.0 * gw[d];
        b -= 1.0 * gb;
    }
    std::size_t correct = 0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        double z = b;
        for (std::size_t d = 0; d < dim; ++d) z += w[d] * xs[i][d];
        if ((z > 0.0) == (ys[i] > 0.5)) ++correct;
    }
    return static_cast<double>(correct) / static_cast<double>(xs.size());
}

}  // namespace

TEST_CASE("feature extraction count law") {
    RecallConfig cfg = small_config();
    const std::vector<std::string> tokens = {"a", "b", "c"};
    CHECK(extract_features(tokens, cfg).size() == 5);  // 3 unigrams + 2 bigrams
    CHECK(extract_features({}, cfg).empty());
    CHECK(extract_features(tokens, cfg) == extract_features(tokens, cfg));

    RecallConfig tri = cfg;
    tri.ngram_orders = {1, 2, 3};
    CHECK(extract_features(tokens, tri).size() == 6);
    // Multiset size equals the n-gram count even with repeated tokens.
    CHECK(extract_features({"x", "x", "x", "x"}, cfg).size() == 7);
}

TEST_CASE("zero output layer predicts exactly one half") {
    RecallConfig cfg = small_config();
    RecallClassifier model;
    model.feature_buckets = cfg.feature_buckets;
    model.embed_dim = cfg.embed_dim;
    model.embedding.assign(static_cast<std::size_t>(cfg.feature_buckets) * cfg.embed_dim, 0.3);
    model.output_weights.assign(cfg.embed_dim * 2, 0.0);
    CHECK(score_features(model, {1, 2, 3}) == 0.5);
    CHECK(score_features(model, {}) == 0.5);
}

TEST_CASE("gradient check: analytic matches central finite differences") {
    RecallConfig cfg;
    cfg.feature_buckets = 64;
    cfg.embed_dim = 4;
    cfg.seed = 3;

    Rng rng(1234);
    for (int trial = 0; trial < 5; ++trial) {
        RecallClassifier model;
        model.feature_buckets = cfg.feature_buckets;
        model.embed_dim = cfg.embed_dim;
        model.embedding.resize(static_cast<std::size_t>(cfg.feature_buckets) * cfg.embed_dim);
        model.output_weights.resize(cfg.embed_dim * 2);
        for (auto& v : model.embedding) v = rng.next_real() - 0.5;
        for (auto& v : model.output_weights) v = rng.next_real() - 0.5;
        model.bias = {rng.next_real() - 0.5, rng.next_real() - 0.5};

        std::vector<LabeledFeatures> batch;
        std::set<std::uint32_t> touched;
        for (int e = 0; e < 3; ++e) {
            LabeledFeatures example;
            example.relevant = rng.next_below(2) == 0;
            const std::size_t count = 1 + rng.next_below(6);
            for (std::size_t k = 0; k < count; ++k) {
                const auto f = static_cast<std::uint32_t>(rng.next_below(cfg.feature_buckets));
                example.features.push_back(f);
                touched.insert(f);
            }
            batch.push_back(std::move(example));
        }

        std::vector<double> grad_embedding(model.embedding.size(), 0.0);
        std::vector<double> grad_output(model.output_weights.size(), 0.0);
        std::array<double, 2> grad_bias{0.0, 0.0};
        for (const auto& example : batch) {
            accumulate_gradients(model, example, grad_embedding, grad_output, grad_bias);
        }

        const double h = 1e-5;
        double diff_sq = 0.0;
        double norm_sq = 0.0;
        auto check_param = [&](double& param, double analytic) {
            const double saved = param;
            param = saved + h;
            const double up = batch_loss(model, batch);
            param = saved - h;
            const double down = batch_loss(model, batch);
            param = saved;
            const double fd = (up - down) / (2.0 * h);
            diff_sq += (analytic - fd) * (analytic - fd);
            norm_sq += std::max(analytic * analytic, fd * fd);
        };
        for (const auto f : touched) {
            for (std::uint32_t d = 0; d < cfg.embed_dim; ++d) {
                const std::size_t i = static_cast<std::size_t>(f) * cfg.embed_dim + d;
                check_param(model.embedding[i], grad_embedding[i]);
            }
        }
        for (std::size_t i = 0; i < model.output_weights.size(); ++i) {
            check_param(model.output_weights[i], grad_output[i]);
        }
        check_param(model.bias[0], grad_bias[0]);
        check_param(model.bias[1], grad_bias[1]);

        REQUIRE(norm_sq > 0.0);
        CHECK(std::sqrt(diff_sq) / std::sqrt(norm_sq) < 1e-4);
    }
}

TEST_CASE("separable toy set trains to full accuracy; oracle agrees") {
    const RecallConfig cfg = small_config();
    const auto stream = separable_toy(cfg);
    const auto model = train_classifier(stream, cfg);

    std::size_t correct = 0;
    for (const auto& example : stream) {
        const double score = score_features(model, example.features);
        if ((score > 0.5) == example.relevant) ++correct;
    }
    CHECK(correct == stream.size());
    CHECK(logistic_regression_accuracy(stream) == doctest::Approx(1.0));
    CHECK(model.final_loss < 0.5);

    // Class-A vocabulary scores high under the trained model.
    std::vector<std::string> tokens = class_a_words();
    CHECK(score_features(model, extract_features(tokens, cfg)) > 0.9);
}

TEST_CASE("training is deterministic; degenerate labels rejected") {
    const RecallConfig cfg = small_config();
    const auto stream = separable_toy(cfg);
    const auto a = train_classifier(stream, cfg);
    const auto b = train_classifier(stream, cfg);
    CHECK(a.output_weights == b.output_weights);
    CHECK(a.bias == b.bias);

    std::vector<LabeledFeatures> single = {{{1, 2}, true}, {{3}, true}};
    CHECK_THROWS_WITH(train_classifier(single, cfg), "degenerate-labels");
}

TEST_CASE("score_page: empty document returns the bias prior") {
    const RecallConfig cfg = small_config();
    const auto stream = separable_toy(cfg);
    const auto model = train_classifier(stream, cfg);

    SourceDocument empty;
    empty.id = "e";
    empty.content = "";
    const BpeVocab byte_vocab;
    const double prior =
        1.0 / (1.0 + std::exp(model.bias[1] - model.bias[0]));
    CHECK(score_page(model, empty, byte_vocab, cfg) == doctest::Approx(prior).epsilon(1e-12));
}

TEST_CASE("score is invariant under content duplication with unigram features") {
    RecallConfig cfg = small_config();
    cfg.ngram_orders = {1};
    const auto stream = separable_toy(cfg);
    const auto model = train_classifier(stream, cfg);

    const BpeVocab byte_vocab;
    SourceDocument once;
    once.id = "1";
    once.content = "lambda tensor kernel";
    SourceDocument twice;
    twice.id = "2";
    twice.content = once.content + once.content;  // exact doubling
    CHECK(score_page(model, once, byte_vocab, cfg) ==
          doctest::Approx(score_page(model, twice, byte_vocab, cfg)).epsilon(1e-12));
}

TEST_CASE("domain promotion is strict") {
    RecallConfig cfg;
    std::vector<ScoredPage> pages;
    auto add_pages = [&](const std::string& domain, int total, int collected) {
        for (int i = 0; i < total; ++i) {
            ScoredPage page;
            page.id = domain + "/" + std::to_string(i);
            page.domain = domain;
            page.collected = i < collected;
            pages.push_back(page);
        }
    };
    add_pages("fifteen.example", 20, 3);  // 15% -> promoted
    add_pages("exact.example", 20, 2);    // exactly 10% -> not promoted
    add_pages("zero.example", 50, 0);     // not promoted

    const auto promoted = promote_domains(pages, cfg);
    REQUIRE(promoted.size() == 1);
    CHECK(promoted[0].domain == "fifteen.example");
    CHECK(promoted[0].total_pages == 20);
    CHECK(promoted[0].collected_pages == 3);
    CHECK(promoted[0].collected_fraction == doctest::Approx(0.15));
}

TEST_CASE("seed growth from annotated urls") {
    std::vector<ScoredPage> pages;
    for (int i = 0; i < 6; ++i) {
        ScoredPage page;
        page.id = "p" + std::to_string(i);
        page.domain = "docs.example";
        page.url = "https://docs.example/guide/" + std::to_string(i);
        page.collected = i < 2;  // p0, p1 already collected
        pages.push_back(page);
    }
    DomainStats promoted_domain;
    promoted_domain.domain = "docs.example";
    const std::vector<std::string> patterns = {"https://docs.example/guide/"};
    std::set<std::string> seed = {"p5"};

    // No promoted domains: unchanged.
    CHECK(annotate_and_grow_seed({}, pages, patterns, seed) == seed);

    // Four uncollected matching pages (p2, p3, p4 new; p5 already in seed).
    const auto grown = annotate_and_grow_seed({promoted_domain}, pages, patterns, seed);
    CHECK(grown.size() == 4);
    CHECK(grown.count("p2") == 1);
    CHECK(grown.count("p5") == 1);
    CHECK(grown.count("p0") == 0);  // collected pages are not re-seeded

    // Pattern mismatch adds nothing.
    const auto none =
        annotate_and_grow_seed({promoted_domain}, pages, {"https://other.example/"}, seed);
    CHECK(none == seed);
}

TEST_CASE("recall loop on a small planted corpus") {
    RecallConfig cfg = small_config();
    cfg.iterations = 2;

    Rng rng(55);
    std::vector<SourceDocument> candidates;
    std::set<std::string> planted;
    for (int i = 0; i < 60; ++i) {
        SourceDocument doc;
        const bool relevant = i < 12;
        doc.id = (relevant ? "r" : "i") + std::to_string(i);
        doc.origin = Origin::web;
        doc.domain = relevant ? "code.example" : ("filler" + std::to_string(i % 4) + ".example");
        doc.url = "https://" + *doc.domain + "/page/" + std::to_string(i);
        doc.content = testutil::word_salad(
            rng, relevant ? class_a_words() : class_b_words(), 15, 30);
        if (relevant) planted.insert(doc.id);
        candidates.push_back(std::move(doc));
    }
    std::set<std::string> seed;
    for (int i = 0; i < 5; ++i) seed.insert("r" + std::to_string(i));
    const std::vector<std::string> patterns = {"https://code.example/page/"};

    const auto vocab = train_bpe({"lambda tensor compile struct kernel pointer mutex "
                                  "meadow violin harvest lantern whisper voyage marble"},
                                 330);
    const auto result = run_recall_loop(candidates, seed, patterns, cfg, vocab);

    REQUIRE(result.reports.size() == 2);
    for (std::size_t i = 0; i < result.reports.size(); ++i) {
        CHECK(result.reports[i].iteration == i + 1);
        CHECK(result.reports[i].seed_size_after >= result.reports[i].seed_size_before);
        CHECK(result.reports[i].pages_recalled > 0);
    }
    CHECK(result.reports[0].seed_size_before == 5);

    // Most planted pages recovered on this easy fixture.
    std::size_t hits = 0;
    for (const auto& id : result.collected_ids) {
        if (planted.count(id) > 0) ++hits;
    }
    CHECK(hits >= planted.size() - 2);

    CHECK_THROWS(run_recall_loop(candidates, {}, patterns, cfg, vocab));
    CHECK_THROWS(run_recall_loop(candidates, {"nope"}, patterns, cfg, vocab));
}

TEST_CASE("recall config validation") {
    RecallConfig cfg;
    cfg.feature_buckets = 1000;  // not a power of two
    CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
    cfg = RecallConfig{};
    cfg.domain_threshold = 0.0;
    CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
    CHECK_NOTHROW(RecallConfig{}.validate());
}
