#include "d2v/da2.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <thread>

#include "d2v/rng.hpp"

namespace d2v {

DistanceKind distance_kind_from_string(const std::string& s) {
    if (s == "huber") return DistanceKind::huber;
    if (s == "l1") return DistanceKind::l1;
    if (s == "l2") return DistanceKind::l2;
    if (s == "js") return DistanceKind::js;
    throw Error(errc::bad_argument, "unknown distance kind: " + s);
}

std::string distance_kind_to_string(DistanceKind kind) {
    switch (kind) {
        case DistanceKind::huber: return "huber";
        case DistanceKind::l1: return "l1";
        case DistanceKind::l2: return "l2";
        case DistanceKind::js: return "js";
    }
    return "?";
}

double distance(const DomainVector& x, const DomainVector& y, const DistanceSpec& spec) {
    if (x.size() != y.size()) throw Error(errc::dimension_mismatch, "distance operands differ in size");
    const std::size_t n = x.size();
    switch (spec.kind) {
        case DistanceKind::huber: {
            const double delta = spec.huber_delta;
            if (delta <= 0.0) throw Error(errc::bad_argument, "huber_delta must be > 0");
            double s = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                const double a = std::abs(x[i] - y[i]);
                s += a <= delta ? 0.5 * a * a : delta * (a - 0.5 * delta);
            }
            return spec.reduction == Reduction::mean ? s / static_cast<double>(n) : s;
        }
        case DistanceKind::l1: {
            double s = 0.0;
            for (std::size_t i = 0; i < n; ++i) s += std::abs(x[i] - y[i]);
            return s;
        }
        case DistanceKind::l2: {
            double s = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                const double a = x[i] - y[i];
                s += a * a;
            }
            return std::sqrt(s);
        }
        case DistanceKind::js: {
            // base-2 logs, 0*log0 := 0; value in [0, 1]
            double s = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                const double m = 0.5 * (x[i] + y[i]);
                if (x[i] > 0.0) s += 0.5 * x[i] * std::log2(x[i] / m);
                if (y[i] > 0.0) s += 0.5 * y[i] * std::log2(y[i] / m);
            }
            return std::max(0.0, s);
        }
    }
    throw Error(errc::bad_argument, "unreachable distance kind");
}

TokenDistribution::TokenDistribution(std::vector<double> s) : shares(std::move(s)) {
    if (shares.empty()) throw Error(errc::bad_argument, "token distribution must be non-empty");
    double sum = 0.0;
    for (double v : shares) {
        if (!(v > 0.0)) throw Error(errc::bad_argument, "token shares must be strictly positive");
        sum += v;
    }
    if (std::abs(sum - 1.0) > kInputTolerance)
        throw Error(errc::sum_out_of_tolerance, "token shares sum to " + std::to_string(sum));
    for (double& v : shares) v /= sum;
}

TokenDistribution TokenDistribution::from_counts(const std::vector<std::uint64_t>& counts) {
    double total = 0.0;
    for (auto c : counts) total += static_cast<double>(c);
    if (total <= 0.0) throw Error(errc::bad_argument, "token counts sum to zero");
    std::vector<double> shares;
    shares.reserve(counts.size());
    for (auto c : counts) shares.push_back(static_cast<double>(c) / total);
    return TokenDistribution(std::move(shares));
}

CandidateSet sample_candidates(const TokenDistribution& a, std::size_t K, double gamma,
                               std::uint64_t seed, const std::optional<TokenBudget>& budget) {
    if (K < 1) throw Error(errc::bad_argument, "K must be >= 1");
    if (!(gamma > 0.0)) throw Error(errc::bad_argument, "gamma must be > 0");
    const std::size_t m = a.size();
    if (budget) {
        if (budget->dataset_sizes.size() != m)
            throw Error(errc::dimension_mismatch, "budget dataset count does not match token distribution");
        double capacity = 0.0;
        for (auto sz : budget->dataset_sizes)
            capacity += std::min(1.0, static_cast<double>(sz) / static_cast<double>(budget->total_tokens));
        if (capacity < 1.0)
            throw Error(errc::infeasible_budget,
                        "datasets cover only " + std::to_string(capacity) + " of the token budget");
    }

    CandidateSet set;
    set.seed = seed;
    set.concentration.reserve(m);
    for (double share : a.shares) set.concentration.push_back(gamma * share * static_cast<double>(m));

    Rng rng(seed);
    const std::size_t ceiling = 100 * K;
    std::size_t draws = 0;
    set.candidates.reserve(K);
    std::vector<double> r(m);
    while (set.candidates.size() < K) {
        if (draws >= ceiling) {
            const double rate =
                static_cast<double>(set.candidates.size()) / static_cast<double>(draws);
            throw Error(errc::retry_ceiling_exceeded,
                        "acceptance rate " + std::to_string(rate) + " after " +
                            std::to_string(draws) + " draws");
        }
        ++draws;
        double sum = 0.0;
        for (std::size_t i = 0; i < m; ++i) {
            r[i] = rng.gamma(set.concentration[i]);
            sum += r[i];
        }
        if (sum <= 0.0) {
            ++set.rejected_count;
            continue;
        }
        std::vector<double> cand(m);
        for (std::size_t i = 0; i < m; ++i) cand[i] = r[i] / sum;
        MixtureRatio ratio(std::move(cand), kInternalTolerance);
        if (budget && !budget->feasible(ratio)) {
            ++set.rejected_count;
            continue;
        }
        set.candidates.push_back(std::move(ratio));
    }
    return set;
}

SearchResult select_top_k(const CandidateSet& candidates, const std::vector<double>& scores,
                          std::size_t top_k) {
    const std::size_t K = candidates.candidates.size();
    if (top_k < 1 || top_k > K)
        throw Error(errc::bad_argument, "top_k must be in [1, K]");

    std::vector<std::size_t> order(K);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (scores[a] != scores[b]) return scores[a] < scores[b];
        return a < b;
    });

    const std::size_t m = candidates.candidates[0].size();
    std::vector<double> mean(m, 0.0);
    for (std::size_t i = 0; i < top_k; ++i) {
        const auto& c = candidates.candidates[order[i]];
        for (std::size_t j = 0; j < m; ++j) mean[j] += c[j];
    }
    for (double& v : mean) v /= static_cast<double>(top_k);

    SearchResult result{MixtureRatio(std::move(mean), kInternalTolerance), {}};
    result.report.best_score = scores[order[0]];
    result.report.top_k = top_k;
    const std::size_t rows = std::min<std::size_t>(K, 1000);
    result.report.table.reserve(rows);
    for (std::size_t i = 0; i < rows; ++i)
        result.report.table.push_back({order[i], scores[order[i]]});
    return result;
}

namespace {

// Deterministic parallel map: scores land at fixed indices.
void parallel_score(std::size_t count, std::size_t threads,
                    const std::function<void(std::size_t, std::size_t)>& run_range) {
    const std::size_t nthreads = std::max<std::size_t>(1, std::min(threads, count));
    if (nthreads == 1) {
        run_range(0, count);
        return;
    }
    std::vector<std::thread> pool;
    const std::size_t chunk = (count + nthreads - 1) / nthreads;
    for (std::size_t t = 0; t < nthreads; ++t) {
        const std::size_t b = t * chunk, e = std::min(b + chunk, count);
        if (b < e) pool.emplace_back([&, b, e] { run_range(b, e); });
    }
    for (auto& th : pool) th.join();
}

} // namespace

SearchResult optimize_da2(const DatasetMatrix& V, const DomainVector& v_valid,
                          const CandidateSet& candidates, const DistanceSpec& spec,
                          std::size_t top_k, std::size_t threads) {
    if (V.rows() != v_valid.size())
        throw Error(errc::dimension_mismatch, "matrix rows do not match validation vector");
    const std::size_t K = candidates.candidates.size();
    if (K == 0) throw Error(errc::bad_argument, "empty candidate set");

    std::vector<double> scores(K);
    parallel_score(K, threads, [&](std::size_t b, std::size_t e) {
        for (std::size_t i = b; i < e; ++i)
            scores[i] = distance(mix(V, candidates.candidates[i]), v_valid, spec);
    });
    return select_top_k(candidates, scores, top_k);
}

} // namespace d2v
