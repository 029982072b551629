#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "d2v/corpus.hpp"
#include "d2v/simplex.hpp"

namespace d2v {

// Synthetic universe: n meta-domains, each a categorical distribution over a
// shared token alphabet, separable by construction.
struct SyntheticWorld {
    std::size_t n = 0;
    std::size_t alphabet_size = 0;
    std::size_t doc_length = 0;
    std::uint64_t seed = 0;
    std::vector<std::vector<double>> token_dists; // n rows over the alphabet
};

// Each meta-domain owns a disjoint symbol block carrying 80% of its mass; the
// remaining 20% is spread over the whole alphabet.
SyntheticWorld generate_world(std::size_t n, std::size_t alphabet_size, std::size_t doc_length,
                              std::uint64_t seed);

double total_variation(const std::vector<double>& p, const std::vector<double>& q);

struct GeneratedDataset {
    std::string corpus_path;
    std::string truth_path; // sidecar JSONL {"id", "label", "weights": [...]}
    std::vector<int> labels;
};

// Each document draws its meta-domain from `mixing_weights`, then doc_length
// i.i.d. tokens from that meta-domain's distribution. Tokens are rendered as
// "t<i>" words so the corpus round-trips through the text classifier.
GeneratedDataset generate_dataset(const SyntheticWorld& world, const DomainVector& mixing_weights,
                                  std::size_t doc_count, std::uint64_t seed,
                                  const std::string& corpus_path);

// Per-meta-domain cross-entropy H(token_dist_i, blend) in nats, where blend is
// the token distribution of the mixture V_true * r, eps-smoothed to stay
// finite. Minimized exactly when the blend matches meta-domain i.
std::vector<double> oracle_loss(const SyntheticWorld& world, const MixtureRatio& r,
                                const DatasetMatrix& V_true, double eps = 1e-9);

double entropy_nats(const std::vector<double>& p);

void save_world(const SyntheticWorld& world, const std::string& path);
SyntheticWorld load_world(const std::string& path);

} // namespace d2v
