#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "curator/document.hpp"
#include "curator/jsonl.hpp"
#include "curator/manifest.hpp"

using namespace curator;

TEST_CASE("line ending normalization") {
    CHECK(normalize_line_endings("x\r\ny") == "x\ny");
    CHECK(normalize_line_endings("a\rb") == "a\nb");
    CHECK(normalize_line_endings("a\r\r\nb") == "a\n\nb");
    CHECK(normalize_line_endings("plain\n") == "plain\n");
}

TEST_CASE("ingest: crlf content is normalized") {
    const auto result = ingest_jsonl_text(R"({"id":"a","content":"x\r\ny"})" "\n", Origin::github);
    REQUIRE(result.documents.size() == 1);
    CHECK(result.documents[0].content == "x\ny");
    CHECK(result.documents[0].origin == Origin::github);
    CHECK(result.errors.empty());
}

TEST_CASE("ingest: empty file yields empty stream and no errors") {
    const auto result = ingest_jsonl_text("", Origin::web);
    CHECK(result.documents.empty());
    CHECK(result.errors.empty());
}

TEST_CASE("ingest: truncated JSON line reports error, stream continues") {
    const std::string text = R"({"id":"a","content":"one"})" "\n"
                             R"({"id":"b","content")" "\n"
                             R"({"id":"c","content":"three"})" "\n";
    const auto result = ingest_jsonl_text(text, Origin::github);
    REQUIRE(result.documents.size() == 2);
    CHECK(result.documents[0].id == "a");
    CHECK(result.documents[1].id == "c");
    REQUIRE(result.errors.size() == 1);
    CHECK(result.errors[0].line == 2);
    CHECK(result.errors[0].reason == "parse");
}

TEST_CASE("ingest: invalid utf-8 rejected with reason") {
    std::string line = R"({"id":"bad","content":")";
    line += '\xFF';
    line += "\"}\n";
    line += R"({"id":"ok","content":"fine"})" "\n";
    const auto result = ingest_jsonl_text(line, Origin::github);
    REQUIRE(result.documents.size() == 1);
    CHECK(result.documents[0].id == "ok");
    REQUIRE(result.errors.size() == 1);
    CHECK(result.errors[0].reason == "invalid-utf8");
}

TEST_CASE("ingest: web origin requires a domain") {
    const std::string text =
        R"({"id":"w1","content":"x","url":"https://a.example/p","domain":"a.example"})" "\n"
        R"({"id":"w2","content":"x","url":"https://b.example/q/r"})" "\n"
        R"({"id":"w3","content":"x"})" "\n";
    const auto result = ingest_jsonl_text(text, Origin::web);
    REQUIRE(result.documents.size() == 2);
    CHECK(result.documents[0].domain == "a.example");
    CHECK(result.documents[1].domain == "b.example");  // host fallback
    REQUIRE(result.errors.size() == 1);
    CHECK(result.errors[0].reason == "missing-domain");
}

TEST_CASE("ingest: order preserved, language normalized") {
    const std::string text = R"({"id":"1","content":"x","language":"python"})" "\n"
                             R"({"id":"2","content":"y","language":"NotALanguage"})" "\n"
                             R"({"id":"3","content":"z","language":"XSLT"})" "\n";
    const auto result = ingest_jsonl_text(text, Origin::github);
    REQUIRE(result.documents.size() == 3);
    CHECK(result.documents[0].language == "Python");
    CHECK(result.documents[1].language == "unknown");
    CHECK(result.documents[2].language == "XSLT");
}

TEST_CASE("language vocabulary covers the appendix tags plus YAML") {
    CHECK(language_count() == 339);
    CHECK(is_known_language("Zig"));
    CHECK(is_known_language("C#"));
    CHECK(is_known_language("HTML"));
    CHECK(is_known_language("JSON"));
    CHECK(is_known_language("YAML"));
    CHECK_FALSE(is_known_language("NotALanguage"));
}

TEST_CASE("manifest: zero docs") {
    const auto m = emit_manifest(Stage::ingested, 0, 0, {}, "{}", 7);
    CHECK(m.doc_count == 0);
    CHECK(m.token_count == 0);
    CHECK(m.rng_seed == 7);
}

TEST_CASE("manifest: serialization is deterministic and round-trips") {
    std::map<std::string, std::uint64_t> cats = {
        {"code", 60}, {"math", 10}, {"natural_language", 30}};
    const auto a = emit_manifest(Stage::mixed, 5, 100, cats, R"({"k":1})", 42);
    const auto b = emit_manifest(Stage::mixed, 5, 100, cats, R"({"k":1})", 42);
    CHECK(serialize_manifest(a) == serialize_manifest(b));

    const auto parsed = parse_manifest(serialize_manifest(a));
    CHECK(parsed.stage == Stage::mixed);
    CHECK(parsed.doc_count == 5);
    CHECK(parsed.token_count == 100);
    CHECK(parsed.category_counts == cats);
    CHECK(parsed.config_digest == a.config_digest);
}

TEST_CASE("manifest: category counts must sum to token_count") {
    std::map<std::string, std::uint64_t> cats = {{"code", 60}, {"math", 10}};
    CHECK_THROWS(emit_manifest(Stage::mixed, 5, 100, cats, "{}", 0));
    cats["natural_language"] = 30;
    const auto m = emit_manifest(Stage::mixed, 5, 100, cats, "{}", 0);
    CHECK(m.token_count == 100);
}

TEST_CASE("manifest: different configs produce different digests") {
    const auto a = emit_manifest(Stage::filtered, 1, 0, {}, R"({"limit":100})", 0);
    const auto b = emit_manifest(Stage::filtered, 1, 0, {}, R"({"limit":101})", 0);
    CHECK(a.config_digest != b.config_digest);
}
