#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include "curator/document.hpp"

namespace curator {

// One failed input line. The stream continues past errors; --strict
// decides later whether any of these fail the run.
struct IngestError {
    std::uint64_t line = 0;
    std::string reason;  // "parse", "invalid-utf8", "schema", "missing-domain"
    std::string detail;
};

struct IngestResult {
    std::vector<SourceDocument> documents;  // file order
    std::vector<IngestError> errors;
};

using DocumentSink = std::function<void(SourceDocument&&)>;
using ErrorSink = std::function<void(IngestError&&)>;

// Streams JSONL from `in`: one JSON object per line with at least
// {id, content}. Line endings in content are normalized to "\n", the
// language tag is normalized against the vocabulary, and origin is
// assigned. Whitespace-only lines are skipped. Invalid UTF-8 rejects the
// document ("invalid-utf8"); malformed JSON yields a "parse" error and
// the stream continues.
void ingest_jsonl_stream(std::istream& in, Origin origin, const DocumentSink& on_doc,
                         const ErrorSink& on_error);

// File variant; throws std::runtime_error when the file cannot be opened.
IngestResult ingest_jsonl(const std::string& path, Origin origin);

IngestResult ingest_jsonl_text(const std::string& text, Origin origin);

// Replaces "\r\n" and bare "\r" with "\n".
std::string normalize_line_endings(std::string_view content);

// Document (de)serialization for stage outputs. `category` may be empty.
std::string document_to_jsonl(const SourceDocument& doc, const std::string& category);
SourceDocument document_from_jsonl(const std::string& line, std::string* category_out);

}  // namespace curator
