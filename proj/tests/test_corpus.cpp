#include "doctest.h"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>

#include <zlib.h>

#include "d2v/corpus.hpp"
#include "d2v/rng.hpp"

using namespace d2v;

namespace {

std::string temp_path(const std::string& name) {
    return (std::filesystem::temp_directory_path() / ("d2v_corpus_" + name)).string();
}

void write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path);
    out << content;
}

struct TempFile {
    std::string path;
    explicit TempFile(const std::string& name, const std::string& content) : path(temp_path(name)) {
        write_file(path, content);
    }
    ~TempFile() { std::remove(path.c_str()); }
};

} // namespace

TEST_CASE("streaming a small corpus preserves order and fields") {
    TempFile f("basic.jsonl",
               "{\"id\":\"a\",\"text\":\"hello world\",\"label\":1}\n"
               "{\"text\":\"second line\",\"meta\":\"web\"}\n");
    const auto docs = stream_documents(CorpusHandle(f.path));
    REQUIRE(docs.size() == 2);
    CHECK(docs[0].id == "a");
    CHECK(docs[0].text == "hello world");
    CHECK(docs[0].label == 1);
    CHECK_FALSE(docs[1].id.has_value());
    CHECK(docs[1].meta == "web");
}

TEST_CASE("lenient mode skips malformed lines, strict mode throws") {
    TempFile f("malformed.jsonl",
               "{\"text\":\"ok\"}\n"
               "not json at all\n"
               "{\"no_text_key\":1}\n"
               "{\"text\":\"also ok\"}\n");
    CorpusHandle lenient(f.path, ParseMode::lenient);
    std::size_t seen = 0;
    const std::size_t skipped = lenient.for_each([&](Document&&) { ++seen; });
    CHECK(seen == 2);
    CHECK(skipped == 2);

    CorpusHandle strict(f.path, ParseMode::strict);
    CHECK_THROWS_AS(stream_documents(strict), Error);
    try {
        stream_documents(strict);
    } catch (const Error& e) {
        CHECK(e.code() == errc::malformed_record);
    }
}

TEST_CASE("missing file reports an IO failure") {
    CorpusHandle handle(temp_path("does_not_exist.jsonl"));
    CHECK_THROWS_AS(stream_documents(handle), Error);
}

TEST_CASE("gzip corpora read identically to plain text") {
    const std::string content = "{\"text\":\"alpha beta\"}\n{\"text\":\"gamma\"}\n";
    TempFile plain("pair.jsonl", content);
    const std::string gz_path = temp_path("pair.jsonl.gz");
    gzFile gz = gzopen(gz_path.c_str(), "wb");
    REQUIRE(gz != nullptr);
    gzwrite(gz, content.data(), static_cast<unsigned>(content.size()));
    gzclose(gz);

    const auto a = stream_documents(CorpusHandle(plain.path));
    const auto b = stream_documents(CorpusHandle(gz_path));
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i].text == b[i].text);
    std::remove(gz_path.c_str());
}

TEST_CASE("whitespace token counts") {
    CHECK(count_tokens_in_text("one two three", TokenScheme::whitespace) == 3);
    CHECK(count_tokens_in_text("  padded \t tabs\nnewline ", TokenScheme::whitespace) == 3);
    CHECK(count_tokens_in_text("", TokenScheme::whitespace) == 0);
    CHECK(count_tokens_in_text("   ", TokenScheme::whitespace) == 0);
}

TEST_CASE("unicode-word token counts split on punctuation, keep multibyte runs") {
    CHECK(count_tokens_in_text("don't stop", TokenScheme::unicode_word) == 3);
    CHECK(count_tokens_in_text("a,b;c", TokenScheme::unicode_word) == 3);
    CHECK(count_tokens_in_text("caf\xc3\xa9 au lait", TokenScheme::unicode_word) == 3);
}

TEST_CASE("property: token counts add over concatenation with a separator") {
    Rng rng(606);
    const std::vector<std::string> words{"alpha", "beta", "gamma", "x1", "zz"};
    for (int trial = 0; trial < 50; ++trial) {
        auto make = [&] {
            std::string s;
            const std::size_t len = 1 + rng.uniform_int(6);
            for (std::size_t i = 0; i < len; ++i) {
                if (!s.empty()) s += ' ';
                s += words[rng.uniform_int(words.size())];
            }
            return s;
        };
        const std::string a = make(), b = make();
        for (auto scheme : {TokenScheme::whitespace, TokenScheme::unicode_word})
            CHECK(count_tokens_in_text(a + " " + b, scheme) ==
                  count_tokens_in_text(a, scheme) + count_tokens_in_text(b, scheme));
    }
}

TEST_CASE("corpus-level counts are the sum over documents") {
    TempFile f("counts.jsonl",
               "{\"text\":\"one two\"}\n"
               "{\"text\":\"three four five\"}\n");
    CorpusHandle handle(f.path);
    CHECK(handle.doc_count() == 2);
    CHECK(handle.token_count(TokenScheme::whitespace) == 5);
}

TEST_CASE("reservoir sampling is deterministic, uniform, without replacement") {
    std::string content;
    for (int i = 0; i < 200; ++i)
        content += "{\"id\":\"d" + std::to_string(i) + "\",\"text\":\"t" + std::to_string(i) +
                   "\"}\n";
    TempFile f("reservoir.jsonl", content);
    CorpusHandle handle(f.path);

    const auto s1 = sample_documents(handle, 20, 7);
    const auto s2 = sample_documents(handle, 20, 7);
    const auto s3 = sample_documents(handle, 20, 8);
    REQUIRE(s1.docs.size() == 20);
    CHECK_FALSE(s1.undersized);
    std::set<std::string> ids1, ids2, ids3;
    for (const auto& d : s1.docs) ids1.insert(*d.id);
    for (const auto& d : s2.docs) ids2.insert(*d.id);
    for (const auto& d : s3.docs) ids3.insert(*d.id);
    CHECK(ids1.size() == 20); // no duplicates
    CHECK(ids1 == ids2);      // same seed, same sample
    CHECK(ids1 != ids3);

    // Uniformity: inclusion frequency of document 0 over many seeds should be
    // near 20/200 = 0.1. Binomial sd at 400 trials is ~0.015.
    int hits = 0;
    const int trials = 400;
    for (int s = 0; s < trials; ++s) {
        const auto sample = sample_documents(handle, 20, 1000 + s);
        for (const auto& d : sample.docs)
            if (*d.id == "d0") ++hits;
    }
    const double freq = static_cast<double>(hits) / trials;
    CHECK(std::abs(freq - 0.1) < 0.05);
}

TEST_CASE("undersized corpora return everything and say so") {
    TempFile f("small.jsonl", "{\"text\":\"a\"}\n{\"text\":\"b\"}\n");
    const auto s = sample_documents(CorpusHandle(f.path), 10, 1);
    CHECK(s.docs.size() == 2);
    CHECK(s.undersized);
}

TEST_CASE("sampling an empty corpus is an error") {
    TempFile f("empty.jsonl", "");
    CHECK_THROWS_AS(sample_documents(CorpusHandle(f.path), 5, 1), Error);
    try {
        sample_documents(CorpusHandle(f.path), 5, 1);
    } catch (const Error& e) {
        CHECK(e.code() == errc::empty_corpus);
    }
}
