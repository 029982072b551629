#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "d2v/simplex.hpp"
#include "d2v/vocab.hpp"

namespace d2v {

double pearson(const std::vector<double>& xs, const std::vector<double>& ys);

// Pearson correlation of ranks; ties receive average ranks.
double spearman(const std::vector<double>& xs, const std::vector<double>& ys);

std::vector<double> average_ranks(const std::vector<double>& values);

struct RankReport {
    double spearman = 0.0;
    double pearson = 0.0;
    std::size_t n = 0;
    std::vector<double> predicted_ranks;
    std::vector<double> actual_ranks;

    std::string to_csv() const; // index,predicted,actual,predicted_rank,actual_rank
    std::vector<double> predicted, actual;
};

RankReport rank_mixtures(const std::vector<double>& predicted, const std::vector<double>& actual);

// Uniform random scores, the "Random" ranking baseline.
std::vector<double> random_baseline(std::size_t count, std::uint64_t seed);

enum class KnnPooling { per_document, mean };

// Domain-vector baseline: each document votes 1/k mass onto its k nearest
// centroids (per-document mode), or one mean-pooled embedding gets a softmax
// over negative centroid distances (mean mode).
DomainVector knn_domain_vector(const EmbeddingSet& embeddings,
                               const std::vector<std::vector<double>>& centroids, std::size_t k,
                               KnnPooling pooling = KnnPooling::per_document);

} // namespace d2v
