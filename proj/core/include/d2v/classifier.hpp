#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "d2v/corpus.hpp"
#include "d2v/simplex.hpp"

namespace d2v {

struct FeatureConfig {
    std::vector<std::size_t> ngram_orders = {2, 3, 4};
    bool lowercase = true;
    std::size_t buckets = 1u << 18;
    std::uint64_t hash_seed = 0xcbf29ce484222325ULL; // FNV-1a offset basis
};

// Sparse hashed character n-gram counts, indices in [0, buckets).
struct FeatureVector {
    std::vector<std::pair<std::uint32_t, std::uint32_t>> counts; // (bucket, count), bucket ascending
};

struct TrainConfig {
    FeatureConfig features;
    std::size_t n_classes = 0; // 0 = infer from labels
    double learning_rate = 20.0; // decays as lr / sqrt(t)
    std::size_t batch_size = 64;
    std::size_t epochs = 5;
    double l2 = 1e-5;
    double holdout_fraction = 0.1;
    std::uint64_t seed = 0;
};

struct LinearClassifierModel {
    FeatureConfig features;
    std::size_t n = 0;
    std::vector<std::vector<double>> weights; // n rows of length buckets
    std::vector<double> bias;                 // length n
    double holdout_accuracy = 0.0;
    std::vector<double> epoch_losses; // mean regularized cross-entropy per epoch
};

FeatureVector featurize(const std::string& text, const FeatureConfig& config);

// Multinomial logistic regression by seeded mini-batch SGD.
LinearClassifierModel train(const std::vector<Document>& docs, const TrainConfig& config);

DomainVector predict_proba(const LinearClassifierModel& model, const std::string& text);

void save_model(const LinearClassifierModel& model, const std::string& path);
LinearClassifierModel load_model(const std::string& path);

// 64-bit hash of the serialized model, for provenance records.
std::string model_hash(const LinearClassifierModel& model);

// JSON Lines {"id", "proba": [...]} with simplex validation per row.
std::vector<std::pair<std::string, DomainVector>> import_proba(const std::string& path);
void export_proba(const std::vector<std::pair<std::string, DomainVector>>& rows,
                  const std::string& path);

std::uint64_t fnv1a64(const void* data, std::size_t len, std::uint64_t seed);

} // namespace d2v
