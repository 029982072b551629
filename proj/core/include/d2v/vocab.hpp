#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "d2v/corpus.hpp"
#include "d2v/error.hpp"

namespace d2v {

struct EmbeddingSet {
    std::vector<std::vector<double>> vectors;
    std::vector<std::string> ids;

    std::size_t dim() const { return vectors.empty() ? 0 : vectors[0].size(); }
    void validate() const;
};

EmbeddingSet load_embeddings(const std::string& path);

struct VocabularySource {
    std::uint64_t seed = 0;
    std::size_t k = 0;
    std::size_t iterations = 0;
    std::size_t restarts = 0;
    double inertia = 0.0;
};

// The meta-domain set: k-means centroids plus any pass-through partitions
// appended after them. n = centroids + passthrough labels.
struct MetaDomainVocabulary {
    std::vector<std::vector<double>> centroids;
    std::vector<std::string> labels;           // one per meta-domain
    std::size_t passthrough_count = 0;
    VocabularySource source;

    std::size_t n() const { return centroids.size() + passthrough_count; }
    std::size_t dim() const { return centroids.empty() ? 0 : centroids[0].size(); }
};

struct KmeansResult {
    MetaDomainVocabulary vocabulary;
    std::vector<std::size_t> assignments;
    double inertia = 0.0;
};

// Lloyd's algorithm with k-means++ seeding; best of `restarts` independent
// runs by inertia. Ties and empty clusters are resolved deterministically.
KmeansResult kmeans_fit(const EmbeddingSet& embeddings, std::size_t k, std::uint64_t seed,
                        std::size_t max_iter = 300, std::size_t restarts = 10);

std::vector<std::pair<std::size_t, double>> inertia_curve(const EmbeddingSet& embeddings,
                                                          const std::vector<std::size_t>& ks,
                                                          std::uint64_t seed,
                                                          std::size_t restarts = 10);

// Index of the nearest centroid by L2; ties broken by lowest index.
std::size_t assign(const MetaDomainVocabulary& vocabulary, const std::vector<double>& vector);

// Distinct metadata values become extra meta-domains in lexicographic order.
// Returns (sorted distinct values, per-document partition index).
std::pair<std::vector<std::string>, std::vector<std::size_t>>
partition_passthrough(const std::vector<Document>& documents);

void save_vocabulary(const MetaDomainVocabulary& vocab, const std::string& path);
MetaDomainVocabulary load_vocabulary(const std::string& path);

} // namespace d2v
