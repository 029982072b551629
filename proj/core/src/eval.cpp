#include "d2v/eval.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "d2v/rng.hpp"

namespace d2v {

double pearson(const std::vector<double>& xs, const std::vector<double>& ys) {
    if (xs.size() != ys.size())
        throw Error(errc::length_mismatch, "pearson arguments differ in length");
    const std::size_t n = xs.size();
    if (n < 2) throw Error(errc::bad_argument, "pearson needs at least 2 points");
    const double mx = std::accumulate(xs.begin(), xs.end(), 0.0) / n;
    const double my = std::accumulate(ys.begin(), ys.end(), 0.0) / n;
    double sxy = 0.0, sxx = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double dx = xs[i] - mx, dy = ys[i] - my;
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if (sxx == 0.0 || syy == 0.0) throw Error(errc::zero_variance, "constant input to pearson");
    return sxy / std::sqrt(sxx * syy);
}

std::vector<double> average_ranks(const std::vector<double>& values) {
    const std::size_t n = values.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (values[a] != values[b]) return values[a] < values[b];
        return a < b;
    });
    std::vector<double> ranks(n);
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i;
        while (j + 1 < n && values[order[j + 1]] == values[order[i]]) ++j;
        const double avg = 0.5 * static_cast<double>(i + j) + 1.0; // 1-based
        for (std::size_t t = i; t <= j; ++t) ranks[order[t]] = avg;
        i = j + 1;
    }
    return ranks;
}

double spearman(const std::vector<double>& xs, const std::vector<double>& ys) {
    if (xs.size() != ys.size())
        throw Error(errc::length_mismatch, "spearman arguments differ in length");
    return pearson(average_ranks(xs), average_ranks(ys));
}

RankReport rank_mixtures(const std::vector<double>& predicted, const std::vector<double>& actual) {
    RankReport report;
    report.n = predicted.size();
    report.predicted = predicted;
    report.actual = actual;
    report.predicted_ranks = average_ranks(predicted);
    report.actual_ranks = average_ranks(actual);
    report.spearman = spearman(predicted, actual);
    report.pearson = pearson(predicted, actual);
    return report;
}

std::string RankReport::to_csv() const {
    std::ostringstream out;
    out << "index,predicted,actual,predicted_rank,actual_rank\n";
    for (std::size_t i = 0; i < n; ++i)
        out << i << "," << predicted[i] << "," << actual[i] << "," << predicted_ranks[i] << ","
            << actual_ranks[i] << "\n";
    return out.str();
}

std::vector<double> random_baseline(std::size_t count, std::uint64_t seed) {
    if (count < 2) throw Error(errc::bad_argument, "random baseline needs count >= 2");
    Rng rng(seed);
    std::vector<double> scores(count);
    for (double& s : scores) s = rng.uniform();
    return scores;
}

DomainVector knn_domain_vector(const EmbeddingSet& embeddings,
                               const std::vector<std::vector<double>>& centroids, std::size_t k,
                               KnnPooling pooling) {
    embeddings.validate();
    if (centroids.empty()) throw Error(errc::bad_argument, "no centroids");
    if (k < 1) throw Error(errc::bad_argument, "k must be >= 1");
    if (k > centroids.size())
        throw Error(errc::k_too_large,
                    "k=" + std::to_string(k) + " with " + std::to_string(centroids.size()) + " centroids");
    const std::size_t dim = embeddings.dim();
    for (const auto& c : centroids)
        if (c.size() != dim)
            throw Error(errc::dimension_mismatch, "centroid dimension does not match embeddings");

    const std::size_t n = centroids.size();
    auto sq_dist = [&](const std::vector<double>& a, const std::vector<double>& b) {
        double s = 0.0;
        for (std::size_t i = 0; i < dim; ++i) {
            const double d = a[i] - b[i];
            s += d * d;
        }
        return s;
    };

    if (pooling == KnnPooling::mean) {
        std::vector<double> pooled(dim, 0.0);
        for (const auto& v : embeddings.vectors)
            for (std::size_t i = 0; i < dim; ++i) pooled[i] += v[i];
        for (double& x : pooled) x /= static_cast<double>(embeddings.vectors.size());
        // softmax over negative L2 distances, temperature 1
        std::vector<double> logits(n);
        for (std::size_t c = 0; c < n; ++c) logits[c] = -std::sqrt(sq_dist(pooled, centroids[c]));
        const double m = *std::max_element(logits.begin(), logits.end());
        double sum = 0.0;
        for (double& v : logits) {
            v = std::exp(v - m);
            sum += v;
        }
        for (double& v : logits) v /= sum;
        return DomainVector(std::move(logits), kInternalTolerance);
    }

    std::vector<double> votes(n, 0.0);
    std::vector<std::size_t> idx(n);
    std::vector<double> dists(n);
    for (const auto& v : embeddings.vectors) {
        for (std::size_t c = 0; c < n; ++c) dists[c] = sq_dist(v, centroids[c]);
        std::iota(idx.begin(), idx.end(), 0);
        std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
            if (dists[a] != dists[b]) return dists[a] < dists[b];
            return a < b;
        });
        for (std::size_t t = 0; t < k; ++t) votes[idx[t]] += 1.0;
    }
    const double total = static_cast<double>(k) * static_cast<double>(embeddings.vectors.size());
    for (double& v : votes) v /= total;
    return DomainVector(std::move(votes), kInternalTolerance);
}

} // namespace d2v
