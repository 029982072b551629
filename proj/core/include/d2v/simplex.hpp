#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "d2v/error.hpp"

namespace d2v {

// Input tolerance accepts rounding from text serialization; internally
// produced vectors are held to the tight tolerance.
inline constexpr double kInputTolerance = 1e-6;
inline constexpr double kInternalTolerance = 1e-9;

// Validates a point on the probability simplex. Entries within `tolerance` of
// summing to 1 are renormalized by their exact sum so downstream math sees
// sum exactly 1. Tiny negative noise (>= -1e-12) is clamped to 0.
std::vector<double> validate_simplex(std::vector<double> entries, double tolerance);

// Probability distribution over n meta-domains.
class DomainVector {
public:
    explicit DomainVector(std::vector<double> entries, double tolerance = kInputTolerance)
        : entries_(validate_simplex(std::move(entries), tolerance)) {}

    static DomainVector one_hot(std::size_t j, std::size_t n);

    std::size_t size() const { return entries_.size(); }
    double operator[](std::size_t i) const { return entries_[i]; }
    const std::vector<double>& entries() const { return entries_; }

private:
    std::vector<double> entries_;
};

// Point on the m-simplex: sampling proportions over m training datasets.
class MixtureRatio {
public:
    explicit MixtureRatio(std::vector<double> weights, double tolerance = kInputTolerance)
        : weights_(validate_simplex(std::move(weights), tolerance)) {}

    std::size_t size() const { return weights_.size(); }
    double operator[](std::size_t i) const { return weights_[i]; }
    const std::vector<double>& weights() const { return weights_; }

private:
    std::vector<double> weights_;
};

// Column-stack of m training-dataset domain vectors, all of dimension n.
class DatasetMatrix {
public:
    explicit DatasetMatrix(std::vector<DomainVector> columns);

    std::size_t rows() const { return n_; }
    std::size_t cols() const { return columns_.size(); }
    const DomainVector& column(std::size_t j) const { return columns_[j]; }
    const std::vector<DomainVector>& columns() const { return columns_; }

private:
    std::vector<DomainVector> columns_;
    std::size_t n_ = 0;
};

// v = V * r, a convex combination of the columns.
DomainVector mix(const DatasetMatrix& matrix, const MixtureRatio& ratio);

struct TokenBudget {
    std::uint64_t total_tokens = 0;
    std::vector<std::uint64_t> dataset_sizes;

    // total_tokens * r_i <= |D_i| for every i.
    bool feasible(const MixtureRatio& r) const;
};

double l1_distance(const std::vector<double>& a, const std::vector<double>& b);

} // namespace d2v
