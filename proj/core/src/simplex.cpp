#include "d2v/simplex.hpp"

#include <cmath>
#include <string>

namespace d2v {

std::vector<double> validate_simplex(std::vector<double> entries, double tolerance) {
    if (entries.empty()) throw Error(errc::bad_argument, "simplex vector must be non-empty");
    double sum = 0.0;
    for (std::size_t i = 0; i < entries.size(); ++i) {
        double& e = entries[i];
        if (!std::isfinite(e)) throw Error(errc::bad_argument, "non-finite entry at index " + std::to_string(i));
        if (e < -1e-12)
            throw Error(errc::negative_entry,
                        "entry " + std::to_string(e) + " at index " + std::to_string(i));
        if (e < 0.0) e = 0.0;
        sum += e;
    }
    if (std::abs(sum - 1.0) > tolerance)
        throw Error(errc::sum_out_of_tolerance,
                    "entries sum to " + std::to_string(sum) + ", tolerance " + std::to_string(tolerance));
    if (sum != 1.0) {
        for (double& e : entries) e /= sum;
    }
    return entries;
}

DomainVector DomainVector::one_hot(std::size_t j, std::size_t n) {
    if (n == 0) throw Error(errc::bad_argument, "n must be positive");
    if (j >= n)
        throw Error(errc::index_out_of_range,
                    "index " + std::to_string(j) + " for n=" + std::to_string(n));
    std::vector<double> e(n, 0.0);
    e[j] = 1.0;
    return DomainVector(std::move(e));
}

DatasetMatrix::DatasetMatrix(std::vector<DomainVector> columns) : columns_(std::move(columns)) {
    if (columns_.empty()) throw Error(errc::bad_argument, "matrix must have at least one column");
    n_ = columns_[0].size();
    for (const auto& c : columns_)
        if (c.size() != n_)
            throw Error(errc::dimension_mismatch, "columns have inconsistent dimension");
}

DomainVector mix(const DatasetMatrix& matrix, const MixtureRatio& ratio) {
    if (matrix.cols() != ratio.size())
        throw Error(errc::dimension_mismatch,
                    "matrix has " + std::to_string(matrix.cols()) + " columns, ratio has " +
                        std::to_string(ratio.size()));
    std::vector<double> out(matrix.rows(), 0.0);
    for (std::size_t j = 0; j < matrix.cols(); ++j) {
        const auto& col = matrix.column(j);
        const double w = ratio[j];
        for (std::size_t i = 0; i < out.size(); ++i) out[i] += w * col[i];
    }
    return DomainVector(std::move(out), kInternalTolerance);
}

bool TokenBudget::feasible(const MixtureRatio& r) const {
    if (r.size() != dataset_sizes.size())
        throw Error(errc::dimension_mismatch, "ratio length does not match dataset_sizes");
    for (std::size_t i = 0; i < r.size(); ++i)
        if (static_cast<double>(total_tokens) * r[i] > static_cast<double>(dataset_sizes[i]))
            return false;
    return true;
}

double l1_distance(const std::vector<double>& a, const std::vector<double>& b) {
    if (a.size() != b.size()) throw Error(errc::dimension_mismatch, "l1_distance");
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += std::abs(a[i] - b[i]);
    return s;
}

} // namespace d2v
