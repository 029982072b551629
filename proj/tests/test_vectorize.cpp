#include "doctest.h"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "d2v/classifier.hpp"
#include "d2v/rng.hpp"
#include "d2v/simplex.hpp"
#include "d2v/synth.hpp"
#include "d2v/vectorize.hpp"

using namespace d2v;

namespace {

std::string temp_path(const std::string& name) {
    return (std::filesystem::temp_directory_path() / ("d2v_vec_" + name)).string();
}

struct TempFile {
    std::string path;
    explicit TempFile(std::string p) : path(std::move(p)) {}
    ~TempFile() { std::remove(path.c_str()); }
};

void write_corpus(const std::string& path, const std::vector<std::string>& texts) {
    std::ofstream out(path);
    for (std::size_t i = 0; i < texts.size(); ++i)
        out << "{\"id\":\"d" << i << "\",\"text\":\"" << texts[i] << "\"}\n";
}

void write_proba(const std::string& path, const std::vector<std::vector<double>>& rows) {
    std::ofstream out(path);
    for (std::size_t i = 0; i < rows.size(); ++i) {
        out << "{\"id\":\"d" << i << "\",\"proba\":[";
        for (std::size_t j = 0; j < rows[i].size(); ++j)
            out << (j ? "," : "") << rows[i][j];
        out << "]}\n";
    }
}

// Train a small classifier on a synthetic world; shared by several cases.
LinearClassifierModel world_model(const SyntheticWorld& world, std::size_t docs_per_domain,
                                  std::uint64_t seed) {
    std::vector<Document> docs;
    for (std::size_t d = 0; d < world.n; ++d) {
        const auto path = temp_path("train_" + std::to_string(d) + ".jsonl");
        const auto ds = generate_dataset(world, DomainVector::one_hot(d, world.n),
                                         docs_per_domain, mix_seed(seed, d), path);
        for (auto& doc : stream_documents(CorpusHandle(path))) {
            doc.label = static_cast<int>(d);
            docs.push_back(std::move(doc));
        }
        std::remove(path.c_str());
        std::remove(ds.truth_path.c_str());
    }
    TrainConfig cfg;
    cfg.features.buckets = 1u << 14;
    cfg.seed = seed;
    return train(docs, cfg);
}

} // namespace

TEST_CASE("domain vector is the mean of per-document probabilities") {
    TempFile corpus(temp_path("mean.jsonl"));
    write_corpus(corpus.path, {"a a a", "b b b"});
    TempFile proba(temp_path("mean_proba.jsonl"));
    write_proba(proba.path, {{1.0, 0.0}, {0.0, 1.0}});

    const auto rec = domain_vector(CorpusHandle(corpus.path),
                                   ClassifierSource::from_proba(proba.path), 2, 123);
    CHECK(rec.vector[0] == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(rec.vector[1] == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(rec.num_sampled == 2);
}

TEST_CASE("identical per-document probabilities pass through unchanged") {
    TempFile corpus(temp_path("const.jsonl"));
    write_corpus(corpus.path, {"x", "y", "z"});
    TempFile proba(temp_path("const_proba.jsonl"));
    write_proba(proba.path, {{0.2, 0.3, 0.5}, {0.2, 0.3, 0.5}, {0.2, 0.3, 0.5}});
    const auto rec = domain_vector(CorpusHandle(corpus.path),
                                   ClassifierSource::from_proba(proba.path), 3, 1);
    CHECK(rec.vector[0] == doctest::Approx(0.2).epsilon(1e-12));
    CHECK(rec.vector[2] == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("sampling fewer documents than the corpus holds sets no flag; more does") {
    TempFile corpus(temp_path("flag.jsonl"));
    write_corpus(corpus.path, {"a", "b", "c"});
    TempFile proba(temp_path("flag_proba.jsonl"));
    write_proba(proba.path, {{1, 0}, {1, 0}, {1, 0}});
    const auto exact = domain_vector(CorpusHandle(corpus.path),
                                     ClassifierSource::from_proba(proba.path), 3, 1);
    CHECK_FALSE(exact.undersized);
    const auto over = domain_vector(CorpusHandle(corpus.path),
                                    ClassifierSource::from_proba(proba.path), 10, 1);
    CHECK(over.undersized);
    CHECK(over.num_sampled == 3);
}

TEST_CASE("missing probability rows are a metadata error") {
    TempFile corpus(temp_path("miss.jsonl"));
    write_corpus(corpus.path, {"a", "b"});
    TempFile proba(temp_path("miss_proba.jsonl"));
    write_proba(proba.path, {{1.0, 0.0}}); // only d0
    CHECK_THROWS_AS(domain_vector(CorpusHandle(corpus.path),
                                  ClassifierSource::from_proba(proba.path), 2, 1),
                    Error);
}

TEST_CASE("known synthetic mixtures are recovered within 0.1 L1") {
    const auto world = generate_world(3, 90, 64, 2001);
    const auto model = world_model(world, 2000, 11);
    REQUIRE(model.holdout_accuracy >= 0.95);

    const std::vector<std::vector<double>> mixtures{
        {0.7, 0.2, 0.1}, {1.0 / 3, 1.0 / 3, 1.0 / 3}, {0.05, 0.05, 0.9}};
    for (std::size_t m = 0; m < mixtures.size(); ++m) {
        TempFile corpus(temp_path("mix" + std::to_string(m) + ".jsonl"));
        const auto ds =
            generate_dataset(world, DomainVector(mixtures[m]), 1500, 500 + m, corpus.path);
        TempFile truth(ds.truth_path);
        const auto rec = domain_vector(CorpusHandle(corpus.path),
                                       ClassifierSource::from_model(model), 1000, 42);
        CHECK(l1_distance(rec.vector.entries(), mixtures[m]) < 0.1);
    }
}

TEST_CASE("property: thread count never changes the vector") {
    const auto world = generate_world(2, 40, 16, 3001);
    const auto model = world_model(world, 150, 21);
    TempFile corpus(temp_path("threads.jsonl"));
    const auto ds = generate_dataset(world, DomainVector({0.6, 0.4}), 400, 9, corpus.path);
    TempFile truth(ds.truth_path);
    const auto base =
        domain_vector(CorpusHandle(corpus.path), ClassifierSource::from_model(model), 300, 5, 1);
    for (std::size_t threads : {2, 4, 7}) {
        const auto rec = domain_vector(CorpusHandle(corpus.path),
                                       ClassifierSource::from_model(model), 300, 5, threads);
        CHECK(rec.vector.entries() == base.vector.entries());
    }
}

TEST_CASE("property: larger samples track the truth at least as well (median over seeds)") {
    const auto world = generate_world(2, 40, 16, 4001);
    const auto model = world_model(world, 150, 31);
    const std::vector<double> truth{0.65, 0.35};
    TempFile corpus(temp_path("stability.jsonl"));
    const auto ds = generate_dataset(world, DomainVector(truth), 3000, 77, corpus.path);
    TempFile sidecar(ds.truth_path);

    std::vector<double> err_small, err_large;
    for (std::uint64_t s = 0; s < 9; ++s) {
        const auto small = domain_vector(CorpusHandle(corpus.path),
                                         ClassifierSource::from_model(model), 50, 100 + s);
        const auto large = domain_vector(CorpusHandle(corpus.path),
                                         ClassifierSource::from_model(model), 1000, 100 + s);
        err_small.push_back(l1_distance(small.vector.entries(), truth));
        err_large.push_back(l1_distance(large.vector.entries(), truth));
    }
    std::sort(err_small.begin(), err_small.end());
    std::sort(err_large.begin(), err_large.end());
    CHECK(err_large[4] <= err_small[4] + 1e-9);
}

TEST_CASE("dataset matrix keeps column order and derives per-column seeds") {
    TempFile c0(temp_path("m0.jsonl")), c1(temp_path("m1.jsonl"));
    write_corpus(c0.path, {"a", "b"});
    write_corpus(c1.path, {"c", "d"});
    TempFile p0(temp_path("m_proba.jsonl"));
    write_proba(p0.path, {{1.0, 0.0}, {0.0, 1.0}});

    std::vector<CorpusHandle> handles{CorpusHandle(c0.path), CorpusHandle(c1.path)};
    const auto rec =
        dataset_matrix(handles, ClassifierSource::from_proba(p0.path), 2, 90);
    REQUIRE(rec.matrix.cols() == 2);
    CHECK(rec.records[0].dataset == c0.path);
    CHECK(rec.records[1].dataset == c1.path);
    CHECK(rec.records[0].seed == 90);
    CHECK(rec.records[1].seed == 91);
}

TEST_CASE("vector and matrix records round trip through disk") {
    TempFile corpus(temp_path("rt.jsonl"));
    write_corpus(corpus.path, {"a", "b"});
    TempFile proba(temp_path("rt_proba.jsonl"));
    write_proba(proba.path, {{0.9, 0.1}, {0.5, 0.5}});
    const auto rec = domain_vector(CorpusHandle(corpus.path),
                                   ClassifierSource::from_proba(proba.path), 2, 17);

    const auto vpath = temp_path("rt_vec.json");
    save_vector_record(rec, vpath);
    const auto loaded = load_vector_record(vpath);
    CHECK(loaded.vector.entries() == rec.vector.entries());
    CHECK(loaded.seed == 17);
    CHECK(loaded.num_sampled == 2);
    std::remove(vpath.c_str());

    std::vector<CorpusHandle> handles{CorpusHandle(corpus.path)};
    const auto mat = dataset_matrix(handles, ClassifierSource::from_proba(proba.path), 2, 3);
    const auto mpath = temp_path("rt_mat.json");
    save_matrix_record(mat, mpath);
    const auto mback = load_matrix_record(mpath);
    CHECK(mback.matrix.cols() == 1);
    CHECK(mback.matrix.column(0).entries() == mat.matrix.column(0).entries());
    std::remove(mpath.c_str());
}
