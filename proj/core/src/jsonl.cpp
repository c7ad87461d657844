#include "curator/jsonl.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

#include "curator/utf8.hpp"

namespace curator {

using nlohmann::json;

std::string normalize_line_endings(std::string_view content) {
    std::string out;
    out.reserve(content.size());
    for (std::size_t i = 0; i < content.size(); ++i) {
        const char c = content[i];
        if (c == '\r') {
            if (i + 1 < content.size() && content[i + 1] == '\n') ++i;
            out.push_back('\n');
        } else {
            out.push_back(c);
        }
    }
    return out;
}

namespace {

bool whitespace_only(const std::string& line) {
    for (const char c : line) {
        if (c != ' ' && c != '\t' && c != '\r') return false;
    }
    return true;
}

// Host part of a URL, used as a fallback domain for web documents.
std::string url_host(const std::string& url) {
    std::size_t start = 0;
    const auto scheme = url.find("://");
    if (scheme != std::string::npos) start = scheme + 3;
    const auto end = url.find_first_of("/?#", start);
    return url.substr(start, end == std::string::npos ? std::string::npos : end - start);
}

}  // namespace

void ingest_jsonl_stream(std::istream& in, Origin origin, const DocumentSink& on_doc,
                         const ErrorSink& on_error) {
    std::string line;
    std::uint64_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (whitespace_only(line)) continue;

        json j;
        try {
            j = json::parse(line);
        } catch (const json::parse_error& e) {
            // nlohmann rejects invalid UTF-8 during parsing, so distinguish
            // the two cases by validating the raw bytes.
            const char* reason = utf8_valid(line) ? "parse" : "invalid-utf8";
            on_error({line_no, reason, e.what()});
            continue;
        }
        if (!j.is_object() || !j.contains("id") || !j.contains("content") ||
            !j["id"].is_string() || !j["content"].is_string()) {
            on_error({line_no, "schema", "line must be an object with string id and content"});
            continue;
        }

        SourceDocument doc;
        doc.id = j["id"].get<std::string>();
        doc.content = normalize_line_endings(j["content"].get<std::string>());
        if (!utf8_valid(doc.content)) {
            on_error({line_no, "invalid-utf8", doc.id});
            continue;
        }
        doc.origin = origin;
        if (j.contains("language") && j["language"].is_string()) {
            doc.language = normalize_language(j["language"].get<std::string>());
        }
        if (j.contains("url") && j["url"].is_string()) doc.url = j["url"].get<std::string>();
        if (j.contains("domain") && j["domain"].is_string()) {
            doc.domain = j["domain"].get<std::string>();
        }
        if (j.contains("created_at") && j["created_at"].is_string()) {
            doc.created_at = j["created_at"].get<std::string>();
        }
        if (origin == Origin::web && !doc.domain) {
            if (doc.url) {
                doc.domain = url_host(*doc.url);
            } else {
                on_error({line_no, "missing-domain", doc.id});
                continue;
            }
        }
        on_doc(std::move(doc));
    }
}

IngestResult ingest_jsonl(const std::string& path, Origin origin) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open input file: " + path);
    IngestResult result;
    ingest_jsonl_stream(
        in, origin, [&](SourceDocument&& d) { result.documents.push_back(std::move(d)); },
        [&](IngestError&& e) { result.errors.push_back(std::move(e)); });
    return result;
}

IngestResult ingest_jsonl_text(const std::string& text, Origin origin) {
    std::istringstream in(text);
    IngestResult result;
    ingest_jsonl_stream(
        in, origin, [&](SourceDocument&& d) { result.documents.push_back(std::move(d)); },
        [&](IngestError&& e) { result.errors.push_back(std::move(e)); });
    return result;
}

std::string document_to_jsonl(const SourceDocument& doc, const std::string& category) {
    json j;
    j["id"] = doc.id;
    j["content"] = doc.content;
    j["language"] = doc.language;
    j["origin"] = std::string(to_string(doc.origin));
    if (doc.url) j["url"] = *doc.url;
    if (doc.domain) j["domain"] = *doc.domain;
    if (doc.created_at) j["created_at"] = *doc.created_at;
    if (!category.empty()) j["category"] = category;
    return j.dump();
}

SourceDocument document_from_jsonl(const std::string& line, std::string* category_out) {
    const json j = json::parse(line);
    SourceDocument doc;
    doc.id = j.at("id").get<std::string>();
    doc.content = j.at("content").get<std::string>();
    doc.language = j.value("language", std::string(kUnknownLanguage));
    const auto origin = parse_origin(j.value("origin", "github"));
    doc.origin = origin.value_or(Origin::github);
    if (j.contains("url")) doc.url = j["url"].get<std::string>();
    if (j.contains("domain")) doc.domain = j["domain"].get<std::string>();
    if (j.contains("created_at")) doc.created_at = j["created_at"].get<std::string>();
    if (category_out) *category_out = j.value("category", "");
    return doc;
}

}  // namespace curator
