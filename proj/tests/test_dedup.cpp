#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <set>

#include "curator/dedup.hpp"
#include "curator/rng.hpp"
#include "testutil.hpp"

using namespace curator;

namespace {

SourceDocument doc_of(std::string id, std::string content) {
    SourceDocument doc;
    doc.id = std::move(id);
    doc.content = std::move(content);
    return doc;
}

// Shingle sets straight from integer sets, bypassing tokenization; the
// minhash layer only sees 64-bit shingle hashes.
std::vector<std::uint64_t> as_set(std::initializer_list<std::uint64_t> values) {
    std::vector<std::uint64_t> v(values);
    std::sort(v.begin(), v.end());
    return v;
}

}  // namespace

TEST_CASE("shingle windows and short-document rule") {
    CHECK(shingle("a b c", 2).size() == 2);
    CHECK(shingle("a", 5).size() == 1);
    CHECK(shingle("", 3).empty());
    CHECK(shingle("   \n\t ", 3).empty());
    CHECK(shingle("one two three four", 2) == shingle("one two three four", 2));
    // n - k + 1 windows.
    CHECK(shingle("a b c d e f", 3).size() == 4);
}

TEST_CASE("minhash determinism and empty-set error") {
    DedupConfig cfg;
    const auto set = shingle("the quick brown fox jumps over the lazy dog", 2);
    const auto a = minhash(set, cfg, "x");
    const auto b = minhash(set, cfg, "y");
    CHECK(a.values == b.values);
    CHECK(a.values.size() == cfg.num_hashes);

    CHECK_THROWS_WITH(minhash({}, cfg), "empty-document");

    DedupConfig other = cfg;
    other.seed = 99;
    const auto c = minhash(set, other, "x");
    CHECK(a.values != c.values);
}

TEST_CASE("estimate: identity, symmetry, config mismatch") {
    DedupConfig cfg;
    const auto a = minhash(as_set({1, 2, 3, 4}), cfg);
    const auto b = minhash(as_set({3, 4, 5, 6}), cfg);
    CHECK(estimate_jaccard(a, a) == doctest::Approx(1.0));
    CHECK(estimate_jaccard(a, b) == estimate_jaccard(b, a));

    DedupConfig small = cfg;
    small.num_hashes = 64;
    small.bands = 8;
    const auto c = minhash(as_set({1, 2}), small);
    CHECK_THROWS_AS(estimate_jaccard(a, c), std::invalid_argument);
}

TEST_CASE("disjoint singleton sets: estimate equals direct evaluation, near zero") {
    DedupConfig cfg;
    const auto a = minhash(as_set({17}), cfg);
    const auto b = minhash(as_set({400000001}), cfg);
    // Direct evaluation of the hash family is the oracle here.
    std::size_t agree = 0;
    for (std::size_t i = 0; i < a.values.size(); ++i) {
        if (a.values[i] == b.values[i]) ++agree;
    }
    const double direct = static_cast<double>(agree) / static_cast<double>(a.values.size());
    CHECK(estimate_jaccard(a, b) == doctest::Approx(direct));
    CHECK(estimate_jaccard(a, b) <= 0.1);
}

TEST_CASE("estimate tracks the exact-jaccard oracle on fixed sets") {
    DedupConfig cfg;
    // exact_jaccard is the brute-force oracle; assert the estimate stays
    // within 0.15 of it at 128 hashes.
    const auto s1 = as_set({1, 2, 3, 4});
    const auto s2 = as_set({3, 4, 5, 6});
    CHECK(exact_jaccard(s1, s2) == doctest::Approx(2.0 / 6.0));
    CHECK(std::abs(estimate_jaccard(minhash(s1, cfg), minhash(s2, cfg)) -
                   exact_jaccard(s1, s2)) <= 0.15);

    const auto s3 = as_set({1, 2, 3});
    const auto s4 = as_set({1, 2, 3, 4, 5, 6});
    CHECK(exact_jaccard(s3, s4) == doctest::Approx(0.5));
    CHECK(std::abs(estimate_jaccard(minhash(s3, cfg), minhash(s4, cfg)) - 0.5) <= 0.15);

    // Disjoint large random sets estimate near the exact value 0.
    Rng rng(5);
    std::vector<std::uint64_t> d1;
    std::vector<std::uint64_t> d2;
    for (int i = 0; i < 500; ++i) {
        d1.push_back(rng.next_u64() | 1ULL);
        d2.push_back(rng.next_u64() & ~1ULL);
    }
    std::sort(d1.begin(), d1.end());
    d1.erase(std::unique(d1.begin(), d1.end()), d1.end());
    std::sort(d2.begin(), d2.end());
    d2.erase(std::unique(d2.begin(), d2.end()), d2.end());
    CHECK(exact_jaccard(d1, d2) == 0.0);
    CHECK(estimate_jaccard(minhash(d1, cfg), minhash(d2, cfg)) <= 0.1);
}

TEST_CASE("estimator accuracy over random pairs with known overlap") {
    DedupConfig cfg;
    Rng rng(7);
    double abs_error_sum = 0.0;
    const int pairs = 50;
    for (int p = 0; p < pairs; ++p) {
        const std::size_t shared = 20 + rng.next_below(200);
        const std::size_t own = 10 + rng.next_below(200);
        std::set<std::uint64_t> sa;
        std::set<std::uint64_t> sb;
        for (std::size_t i = 0; i < shared; ++i) {
            const auto v = rng.next_u64();
            sa.insert(v);
            sb.insert(v);
        }
        for (std::size_t i = 0; i < own; ++i) {
            sa.insert(rng.next_u64());
            sb.insert(rng.next_u64());
        }
        std::vector<std::uint64_t> va(sa.begin(), sa.end());
        std::vector<std::uint64_t> vb(sb.begin(), sb.end());
        const double exact = exact_jaccard(va, vb);
        const double est = estimate_jaccard(minhash(va, cfg), minhash(vb, cfg));
        abs_error_sum += std::abs(est - exact);
    }
    CHECK(abs_error_sum / pairs <= 2.0 / std::sqrt(128.0));
}

TEST_CASE("dedup: byte-identical documents collapse to one") {
    DedupConfig cfg;
    const std::string text = "one two three four five six seven eight nine ten";
    const auto result = dedup_corpus({doc_of("b", text), doc_of("a", text)}, cfg);
    REQUIRE(result.clusters.size() == 1);
    CHECK(result.clusters[0].representative == "a");
    CHECK(result.clusters[0].members == std::vector<std::string>{"a", "b"});
    REQUIRE(result.kept.size() == 1);
    CHECK(result.kept[0] == "a");
}

TEST_CASE("dedup: all-distinct documents produce no clusters") {
    DedupConfig cfg;
    Rng rng(13);
    std::vector<std::string> vocab;
    for (int i = 0; i < 4000; ++i) vocab.push_back("w" + std::to_string(i));
    std::vector<SourceDocument> docs;
    std::vector<std::vector<std::uint64_t>> sets;
    for (int i = 0; i < 40; ++i) {
        docs.push_back(doc_of("d" + std::to_string(i),
                              testutil::word_salad(rng, vocab, 40, 80)));
        sets.push_back(shingle(docs.back().content, cfg.shingle_k));
    }
    // Brute-force oracle: fixture really is pairwise dissimilar.
    for (std::size_t i = 0; i < sets.size(); ++i) {
        for (std::size_t j = i + 1; j < sets.size(); ++j) {
            REQUIRE(exact_jaccard(sets[i], sets[j]) < 0.1);
        }
    }
    const auto result = dedup_corpus(docs, cfg);
    CHECK(result.clusters.empty());
    CHECK(result.kept.size() == docs.size());
}

TEST_CASE("dedup: transitive near-duplicates cluster together") {
    DedupConfig cfg;
    std::string base;
    for (int i = 0; i < 60; ++i) base += "tok" + std::to_string(i) + " ";
    const auto result = dedup_corpus(
        {doc_of("x", base + "alpha"), doc_of("y", base + "beta"), doc_of("z", base + "gamma")},
        cfg);
    REQUIRE(result.clusters.size() == 1);
    CHECK(result.clusters[0].members.size() == 3);
    CHECK(result.clusters[0].representative == "x");
    CHECK(result.kept == std::vector<std::string>{"x"});
}

TEST_CASE("dedup: kept preserves input order; partition covers all ids") {
    DedupConfig cfg;
    const std::string dup = "same same same same same same same same";
    std::vector<SourceDocument> docs = {
        doc_of("m3", "unique words here in this doc first second third"),
        doc_of("m1", dup),
        doc_of("m4", "another totally different set of words entirely now then"),
        doc_of("m2", dup),
    };
    const auto result = dedup_corpus(docs, cfg);
    CHECK(result.kept == std::vector<std::string>{"m3", "m1", "m4"});

    std::set<std::string> seen(result.kept.begin(), result.kept.end());
    for (const auto& cluster : result.clusters) {
        CHECK(std::find(cluster.members.begin(), cluster.members.end(),
                        cluster.representative) != cluster.members.end());
        for (const auto& member : cluster.members) {
            if (member != cluster.representative) {
                CHECK(seen.insert(member).second);  // disjoint clusters
            }
        }
    }
    CHECK(seen.size() == docs.size());
}

TEST_CASE("dedup: empty and whitespace-only documents cluster by equality") {
    DedupConfig cfg;
    const auto result = dedup_corpus(
        {doc_of("e1", ""), doc_of("e2", ""), doc_of("w1", "   "), doc_of("t", "some text here")},
        cfg);
    REQUIRE(result.clusters.size() == 1);
    CHECK(result.clusters[0].members == std::vector<std::string>{"e1", "e2"});
    CHECK(result.kept == std::vector<std::string>{"e1", "w1", "t"});
}

TEST_CASE("dedup is idempotent") {
    DedupConfig cfg;
    Rng rng(17);
    std::vector<std::string> vocab;
    for (int i = 0; i < 500; ++i) vocab.push_back("v" + std::to_string(i));
    std::vector<SourceDocument> docs;
    for (int i = 0; i < 120; ++i) {
        auto text = testutil::word_salad(rng, vocab, 30, 60);
        docs.push_back(doc_of("n" + std::to_string(i), text));
        if (i % 5 == 0) docs.push_back(doc_of("n" + std::to_string(i) + "-copy", text));
    }
    const auto once = dedup_corpus(docs, cfg);
    std::vector<SourceDocument> kept_docs;
    std::set<std::string> kept_ids(once.kept.begin(), once.kept.end());
    for (const auto& doc : docs) {
        if (kept_ids.count(doc.id) > 0) kept_docs.push_back(doc);
    }
    const auto twice = dedup_corpus(kept_docs, cfg);
    CHECK(twice.clusters.empty());
    CHECK(twice.kept == once.kept);
}

TEST_CASE("dedup config validation") {
    DedupConfig cfg;
    cfg.bands = 10;  // 10 * 8 != 128
    CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
    cfg = DedupConfig{};
    cfg.jaccard_threshold = 1.5;
    CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
    CHECK_NOTHROW(DedupConfig{}.validate());
}

TEST_CASE("dedup: result independent of worker count") {
    DedupConfig cfg;
    Rng rng(19);
    std::vector<std::string> vocab;
    for (int i = 0; i < 300; ++i) vocab.push_back("j" + std::to_string(i));
    std::vector<SourceDocument> docs;
    for (int i = 0; i < 60; ++i) {
        docs.push_back(doc_of("p" + std::to_string(i), testutil::word_salad(rng, vocab, 20, 50)));
    }
    DedupConfig par = cfg;
    par.jobs = 4;
    const auto a = dedup_corpus(docs, cfg);
    const auto b = dedup_corpus(docs, par);
    CHECK(a.kept == b.kept);
    CHECK(a.clusters.size() == b.clusters.size());
}
