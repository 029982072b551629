#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "d2v/error.hpp"

namespace d2v {

struct Document {
    std::optional<std::string> id;
    std::string text;
    std::optional<int> label;
    std::optional<std::string> meta; // pass-through partition key value, if any
};

enum class ParseMode { lenient, strict };

enum class TokenScheme { whitespace, unicode_word };

TokenScheme token_scheme_from_string(const std::string& s);

// Line-delimited JSON corpus on disk; ".gz" suffixed files are transparently
// inflated. Counts are computed lazily by full scans.
class CorpusHandle {
public:
    explicit CorpusHandle(std::string path, ParseMode mode = ParseMode::lenient)
        : path_(std::move(path)), mode_(mode) {}

    const std::string& path() const { return path_; }
    ParseMode mode() const { return mode_; }

    // Calls `fn` for each document in file order. Returns the number of
    // malformed lines skipped (always 0 in strict mode, which throws).
    std::size_t for_each(const std::function<void(Document&&)>& fn) const;

    std::uint64_t doc_count() const;
    std::uint64_t token_count(TokenScheme scheme) const;

private:
    std::string path_;
    ParseMode mode_;
};

std::vector<Document> stream_documents(const CorpusHandle& handle);

struct SampleResult {
    std::vector<Document> docs;
    bool undersized = false; // corpus had fewer than `count` documents
};

// Uniform sample without replacement via reservoir sampling (algorithm R).
// Deterministic given seed; returns the whole corpus when it is smaller than
// `count`, with the undersized flag set.
SampleResult sample_documents(const CorpusHandle& handle, std::size_t count, std::uint64_t seed);

std::uint64_t count_tokens_in_text(const std::string& text, TokenScheme scheme);

} // namespace d2v
