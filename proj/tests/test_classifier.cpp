#include "doctest.h"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "d2v/classifier.hpp"
#include "d2v/rng.hpp"

using namespace d2v;

namespace {

std::string temp_path(const std::string& name) {
    return (std::filesystem::temp_directory_path() / ("d2v_clf_" + name)).string();
}

// Two classes over disjoint alphabets: trivially separable.
std::vector<Document> disjoint_docs(std::size_t per_class, std::uint64_t seed) {
    Rng rng(seed);
    std::vector<Document> docs;
    const std::string alpha[2] = {"abcdef", "uvwxyz"};
    for (int cls = 0; cls < 2; ++cls) {
        for (std::size_t i = 0; i < per_class; ++i) {
            std::string text;
            for (int w = 0; w < 8; ++w) {
                if (!text.empty()) text += ' ';
                for (int c = 0; c < 5; ++c) text += alpha[cls][rng.uniform_int(6)];
            }
            Document d;
            d.text = text;
            d.label = cls;
            docs.push_back(std::move(d));
        }
    }
    return docs;
}

} // namespace

TEST_CASE("featurize counts hashed character n-grams") {
    FeatureConfig cfg;
    cfg.ngram_orders = {2};
    cfg.buckets = 1u << 16;
    // "aaa" has bigrams "aa","aa": a single bucket with count 2.
    const auto fv = featurize("aaa", cfg);
    REQUIRE(fv.counts.size() == 1);
    CHECK(fv.counts[0].second == 2);
    // "ab" has the single bigram "ab".
    const auto fv2 = featurize("ab", cfg);
    REQUIRE(fv2.counts.size() == 1);
    CHECK(fv2.counts[0].second == 1);
}

TEST_CASE("featurize lowercases by default and honors the flag") {
    FeatureConfig cfg;
    cfg.ngram_orders = {3};
    const auto lower = featurize("ABC", cfg);
    const auto same = featurize("abc", cfg);
    CHECK(lower.counts == same.counts);
    cfg.lowercase = false;
    const auto cased = featurize("ABC", cfg);
    CHECK(cased.counts != same.counts);
}

TEST_CASE("featurize output is deterministic, sorted, and in range") {
    FeatureConfig cfg;
    const std::string text = "the quick brown fox jumps";
    const auto a = featurize(text, cfg);
    const auto b = featurize(text, cfg);
    CHECK(a.counts == b.counts);
    for (std::size_t i = 0; i < a.counts.size(); ++i) {
        CHECK(a.counts[i].first < cfg.buckets);
        if (i > 0) CHECK(a.counts[i].first > a.counts[i - 1].first);
    }
    FeatureConfig other = cfg;
    other.hash_seed = 12345;
    CHECK(featurize(text, other).counts != a.counts);
}

TEST_CASE("blank text is an empty-document error") {
    FeatureConfig cfg;
    CHECK_THROWS_AS(featurize("", cfg), Error);
    try {
        featurize("   ", cfg);
    } catch (const Error& e) {
        CHECK(e.code() == errc::empty_document);
    }
}

TEST_CASE("fnv1a64 matches the published test vector") {
    // FNV-1a("a") with the standard offset basis.
    CHECK(fnv1a64("a", 1, 0xcbf29ce484222325ULL) == 0xaf63dc4c8601ec8cULL);
}

TEST_CASE("zero-weight model predicts the uniform distribution") {
    LinearClassifierModel model;
    model.features.buckets = 256;
    model.n = 4;
    model.weights.assign(4, std::vector<double>(256, 0.0));
    model.bias.assign(4, 0.0);
    const auto p = predict_proba(model, "anything at all");
    for (std::size_t i = 0; i < 4; ++i) CHECK(p[i] == doctest::Approx(0.25).epsilon(1e-12));
}

TEST_CASE("bias-only model reproduces a hand-computed softmax") {
    LinearClassifierModel model;
    model.features.buckets = 256;
    model.n = 2;
    model.weights.assign(2, std::vector<double>(256, 0.0));
    model.bias = {std::log(3.0), 0.0}; // softmax = (0.75, 0.25)
    const auto p = predict_proba(model, "text");
    CHECK(p[0] == doctest::Approx(0.75).epsilon(1e-12));
    CHECK(p[1] == doctest::Approx(0.25).epsilon(1e-12));
}

TEST_CASE("property: softmax is invariant to a constant bias shift") {
    LinearClassifierModel model;
    model.features.buckets = 1u << 10;
    model.n = 3;
    Rng rng(44);
    model.weights.assign(3, std::vector<double>(model.features.buckets));
    for (auto& row : model.weights)
        for (double& w : row) w = rng.normal();
    model.bias = {0.3, -0.2, 1.1};
    auto shifted = model;
    for (double& b : shifted.bias) b += 17.5;
    const auto p = predict_proba(model, "shift invariance probe");
    const auto q = predict_proba(shifted, "shift invariance probe");
    for (std::size_t i = 0; i < 3; ++i) CHECK(p[i] == doctest::Approx(q[i]).epsilon(1e-9));
}

TEST_CASE("training separates disjoint alphabets") {
    const auto docs = disjoint_docs(200, 5);
    TrainConfig cfg;
    cfg.features.buckets = 1u << 14;
    cfg.seed = 9;
    const auto model = train(docs, cfg);
    CHECK(model.n == 2);
    CHECK(model.holdout_accuracy >= 0.99);
    const auto p0 = predict_proba(model, "abc def fed cab");
    const auto p1 = predict_proba(model, "uvw xyz zyx wuv");
    CHECK(p0[0] > 0.8);
    CHECK(p1[1] > 0.8);
    // regularized loss should improve over epochs
    REQUIRE(model.epoch_losses.size() == cfg.epochs);
    CHECK(model.epoch_losses.back() < model.epoch_losses.front());
}

TEST_CASE("training is bit-reproducible for a fixed seed") {
    const auto docs = disjoint_docs(50, 2);
    TrainConfig cfg;
    cfg.features.buckets = 1u << 12;
    cfg.seed = 31;
    const auto a = train(docs, cfg);
    const auto b = train(docs, cfg);
    CHECK(a.weights == b.weights);
    CHECK(a.bias == b.bias);
    CHECK(model_hash(a) == model_hash(b));
    TrainConfig other = cfg;
    other.seed = 32;
    CHECK(model_hash(train(docs, other)) != model_hash(a));
}

TEST_CASE("single-class corpora are rejected") {
    std::vector<Document> docs(10);
    for (auto& d : docs) {
        d.text = "some text";
        d.label = 0;
    }
    CHECK_THROWS_AS(train(docs, TrainConfig{}), Error);
    try {
        train(docs, TrainConfig{});
    } catch (const Error& e) {
        CHECK(e.code() == errc::single_class_corpus);
    }
}

TEST_CASE("labels outside [0, n) are rejected when n is fixed") {
    auto docs = disjoint_docs(10, 1);
    docs[0].label = 7;
    TrainConfig cfg;
    cfg.n_classes = 2;
    CHECK_THROWS_AS(train(docs, cfg), Error);
}

TEST_CASE("model save/load round trip preserves predictions exactly") {
    const auto docs = disjoint_docs(40, 3);
    TrainConfig cfg;
    cfg.features.buckets = 1u << 12;
    cfg.seed = 77;
    const auto model = train(docs, cfg);
    const auto path = temp_path("model.json");
    save_model(model, path);
    const auto loaded = load_model(path);
    CHECK(loaded.weights == model.weights);
    CHECK(loaded.bias == model.bias);
    CHECK(loaded.features.buckets == model.features.buckets);
    const auto p = predict_proba(model, "abc abd");
    const auto q = predict_proba(loaded, "abc abd");
    CHECK(p.entries() == q.entries());
    std::remove(path.c_str());
}

TEST_CASE("probability import/export round trip with simplex validation") {
    const auto path = temp_path("proba.jsonl");
    std::vector<std::pair<std::string, DomainVector>> rows;
    rows.emplace_back("doc1", DomainVector({0.25, 0.75}));
    rows.emplace_back("doc2", DomainVector({1.0, 0.0}));
    export_proba(rows, path);
    const auto back = import_proba(path);
    REQUIRE(back.size() == 2);
    CHECK(back[0].first == "doc1");
    CHECK(back[0].second[1] == doctest::Approx(0.75).epsilon(1e-9));
    std::remove(path.c_str());

    std::ofstream bad(path);
    bad << "{\"id\":\"x\",\"proba\":[0.7,0.7]}\n";
    bad.close();
    CHECK_THROWS_AS(import_proba(path), Error);
    std::remove(path.c_str());
}

TEST_CASE("predictions always sum to one") {
    const auto docs = disjoint_docs(30, 8);
    TrainConfig cfg;
    cfg.features.buckets = 1u << 12;
    const auto model = train(docs, cfg);
    for (const std::string& text : {"abc", "xyz", "mixed abc xyz", "qqq pp 123"}) {
        const auto p = predict_proba(model, text);
        double sum = 0.0;
        for (std::size_t i = 0; i < p.size(); ++i) {
            CHECK(p[i] >= 0.0);
            sum += p[i];
        }
        CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
    }
}
