#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "d2v/classifier.hpp"
#include "d2v/corpus.hpp"
#include "d2v/simplex.hpp"

namespace d2v {

// Source of per-document probabilities: the built-in model, or a JSONL file
// of externally computed probabilities keyed by document id.
struct ClassifierSource {
    const LinearClassifierModel* model = nullptr;
    std::string proba_path; // used when model == nullptr

    static ClassifierSource from_model(const LinearClassifierModel& m) {
        ClassifierSource s;
        s.model = &m;
        return s;
    }
    static ClassifierSource from_proba(std::string path) {
        ClassifierSource s;
        s.proba_path = std::move(path);
        return s;
    }
};

struct DomainVectorRecord {
    std::string dataset;
    DomainVector vector;
    std::size_t num_sampled = 0;
    bool undersized = false;
    std::uint64_t seed = 0;
    std::string model_hash;
};

// v = (1/N') * sum of classifier probabilities over N' = min(N, corpus size)
// sampled documents.
DomainVectorRecord domain_vector(const CorpusHandle& dataset, const ClassifierSource& source,
                                 std::size_t n_samples, std::uint64_t seed,
                                 std::size_t threads = 1);

struct DatasetMatrixRecord {
    DatasetMatrix matrix;
    std::vector<DomainVectorRecord> records;
};

// Column j uses derived seed (seed + j); column order matches input order.
DatasetMatrixRecord dataset_matrix(const std::vector<CorpusHandle>& datasets,
                                   const ClassifierSource& source, std::size_t n_samples,
                                   std::uint64_t seed, std::size_t threads = 1);

void save_vector_record(const DomainVectorRecord& rec, const std::string& path);
DomainVectorRecord load_vector_record(const std::string& path);
void save_matrix_record(const DatasetMatrixRecord& rec, const std::string& path);
DatasetMatrixRecord load_matrix_record(const std::string& path);

} // namespace d2v
