#include "d2v/corpus.hpp"

#include <zlib.h>

#include <cctype>
#include <fstream>
#include <memory>

#include <nlohmann/json.hpp>

#include "d2v/rng.hpp"

namespace d2v {

namespace {

using json = nlohmann::json;

// Line reader over a plain or gzip-compressed file.
class LineReader {
public:
    explicit LineReader(const std::string& path) {
        if (path.size() > 3 && path.compare(path.size() - 3, 3, ".gz") == 0) {
            gz_ = gzopen(path.c_str(), "rb");
            if (!gz_) throw Error(errc::io_failure, "cannot open " + path);
        } else {
            file_.open(path, std::ios::binary);
            if (!file_) throw Error(errc::io_failure, "cannot open " + path);
        }
    }

    ~LineReader() {
        if (gz_) gzclose(gz_);
    }

    bool next(std::string& line) {
        if (gz_) {
            line.clear();
            char buf[4096];
            for (;;) {
                if (gzgets(gz_, buf, sizeof(buf)) == nullptr) return !line.empty();
                line += buf;
                if (!line.empty() && line.back() == '\n') {
                    line.pop_back();
                    return true;
                }
            }
        }
        return static_cast<bool>(std::getline(file_, line));
    }

private:
    std::ifstream file_;
    gzFile gz_ = nullptr;
};

bool is_blank(const std::string& s) {
    for (char c : s)
        if (!std::isspace(static_cast<unsigned char>(c))) return false;
    return true;
}

Document parse_record(const std::string& line, std::size_t line_no) {
    json rec;
    try {
        rec = json::parse(line);
    } catch (const json::exception& e) {
        throw Error(errc::malformed_record, "line " + std::to_string(line_no) + ": " + e.what());
    }
    if (!rec.is_object() || !rec.contains("text") || !rec["text"].is_string())
        throw Error(errc::malformed_record,
                    "line " + std::to_string(line_no) + ": missing string field \"text\"");
    Document doc;
    doc.text = rec["text"].get<std::string>();
    if (is_blank(doc.text))
        throw Error(errc::malformed_record, "line " + std::to_string(line_no) + ": empty text");
    if (rec.contains("id") && rec["id"].is_string()) doc.id = rec["id"].get<std::string>();
    if (rec.contains("label") && rec["label"].is_number_integer())
        doc.label = rec["label"].get<int>();
    if (rec.contains("meta") && rec["meta"].is_string()) doc.meta = rec["meta"].get<std::string>();
    return doc;
}

} // namespace

TokenScheme token_scheme_from_string(const std::string& s) {
    if (s == "whitespace") return TokenScheme::whitespace;
    if (s == "unicode-word") return TokenScheme::unicode_word;
    throw Error(errc::bad_argument, "unknown token scheme: " + s);
}

std::size_t CorpusHandle::for_each(const std::function<void(Document&&)>& fn) const {
    LineReader reader(path_);
    std::string line;
    std::size_t line_no = 0, skipped = 0;
    while (reader.next(line)) {
        ++line_no;
        if (is_blank(line)) continue;
        try {
            fn(parse_record(line, line_no));
        } catch (const Error& e) {
            if (e.code() != errc::malformed_record || mode_ == ParseMode::strict) throw;
            ++skipped;
        }
    }
    return skipped;
}

std::uint64_t CorpusHandle::doc_count() const {
    std::uint64_t n = 0;
    for_each([&](Document&&) { ++n; });
    return n;
}

std::uint64_t CorpusHandle::token_count(TokenScheme scheme) const {
    std::uint64_t n = 0;
    for_each([&](Document&& doc) { n += count_tokens_in_text(doc.text, scheme); });
    return n;
}

std::vector<Document> stream_documents(const CorpusHandle& handle) {
    std::vector<Document> docs;
    handle.for_each([&](Document&& doc) { docs.push_back(std::move(doc)); });
    return docs;
}

SampleResult sample_documents(const CorpusHandle& handle, std::size_t count, std::uint64_t seed) {
    if (count == 0) throw Error(errc::bad_argument, "sample count must be >= 1");
    Rng rng(seed);
    SampleResult result;
    result.docs.reserve(count);
    std::size_t seen = 0;
    handle.for_each([&](Document&& doc) {
        if (result.docs.size() < count) {
            result.docs.push_back(std::move(doc));
        } else {
            const std::uint64_t j = rng.uniform_int(seen + 1);
            if (j < count) result.docs[j] = std::move(doc);
        }
        ++seen;
    });
    if (seen == 0) throw Error(errc::empty_corpus, handle.path());
    result.undersized = seen < count;
    return result;
}

std::uint64_t count_tokens_in_text(const std::string& text, TokenScheme scheme) {
    std::uint64_t n = 0;
    bool in_token = false;
    for (unsigned char c : text) {
        bool token_char;
        if (scheme == TokenScheme::whitespace) {
            token_char = !std::isspace(c);
        } else {
            // unicode-word: maximal runs of alphanumerics; non-ASCII bytes
            // count as word characters so multibyte codepoints stay joined.
            token_char = std::isalnum(c) || c >= 0x80;
        }
        if (token_char && !in_token) ++n;
        in_token = token_char;
    }
    return n;
}

} // namespace d2v
