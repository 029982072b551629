#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "d2v/simplex.hpp"

namespace d2v {

enum class DistanceKind { huber, l1, l2, js };
enum class Reduction { mean, sum };

DistanceKind distance_kind_from_string(const std::string& s);
std::string distance_kind_to_string(DistanceKind kind);

struct DistanceSpec {
    DistanceKind kind = DistanceKind::huber;
    double huber_delta = 0.005; // order of uniform mass for n in the low hundreds
    Reduction reduction = Reduction::mean;
};

double distance(const DomainVector& x, const DomainVector& y, const DistanceSpec& spec);

// Normalized dataset token counts, the Dirichlet base measure.
struct TokenDistribution {
    std::vector<double> shares;

    explicit TokenDistribution(std::vector<double> s);
    static TokenDistribution from_counts(const std::vector<std::uint64_t>& counts);
    std::size_t size() const { return shares.size(); }
};

struct CandidateSet {
    std::vector<MixtureRatio> candidates;
    std::vector<double> concentration; // alpha = gamma * a * m
    std::uint64_t seed = 0;
    std::size_t rejected_count = 0;
};

// Draws r ~ Dirichlet(gamma * a * m) via normalized Gamma variates, rejecting
// draws that violate the token budget, until K are accepted or the retry
// ceiling (100 * K draws) trips.
CandidateSet sample_candidates(const TokenDistribution& a, std::size_t K, double gamma,
                               std::uint64_t seed, const std::optional<TokenBudget>& budget = {});

struct ScoredCandidate {
    std::size_t index = 0;
    double score = 0.0;
};

struct SearchReport {
    double best_score = 0.0;                 // score of the single best candidate
    std::vector<ScoredCandidate> table;      // ascending (score, index), top 1000 rows
    std::size_t top_k = 1;
};

struct SearchResult {
    MixtureRatio ratio;
    SearchReport report;
};

// Scores every candidate by Dist(V*r, v_valid), sorts ascending with index
// tie-break, and returns the renormalized mean of the top_k candidates.
SearchResult optimize_da2(const DatasetMatrix& V, const DomainVector& v_valid,
                          const CandidateSet& candidates, const DistanceSpec& spec,
                          std::size_t top_k = 1, std::size_t threads = 1);

// Shared by optimize_da2 and the regression search: sort ascending by
// (score, index) and average the top_k candidates onto the simplex.
SearchResult select_top_k(const CandidateSet& candidates, const std::vector<double>& scores,
                          std::size_t top_k);

} // namespace d2v
