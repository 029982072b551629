#include "d2v/vocab.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <set>

#include <nlohmann/json.hpp>

#include "d2v/rng.hpp"

namespace d2v {

namespace {

using json = nlohmann::json;

double sq_dist(const std::vector<double>& a, const std::vector<double>& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = a[i] - b[i];
        s += d * d;
    }
    return s;
}

std::size_t nearest(const std::vector<std::vector<double>>& centroids,
                    const std::vector<double>& point) {
    std::size_t best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < centroids.size(); ++c) {
        const double d = sq_dist(centroids[c], point);
        if (d < best_d) {
            best_d = d;
            best = c;
        }
    }
    return best;
}

std::vector<std::vector<double>> kmeanspp_init(const std::vector<std::vector<double>>& points,
                                               std::size_t k, Rng& rng) {
    std::vector<std::vector<double>> centroids;
    centroids.reserve(k);
    centroids.push_back(points[rng.uniform_int(points.size())]);
    std::vector<double> d2(points.size());
    while (centroids.size() < k) {
        double total = 0.0;
        for (std::size_t i = 0; i < points.size(); ++i) {
            double best = sq_dist(points[i], centroids[0]);
            for (std::size_t c = 1; c < centroids.size(); ++c)
                best = std::min(best, sq_dist(points[i], centroids[c]));
            d2[i] = best;
            total += best;
        }
        std::size_t pick = 0;
        if (total > 0.0) {
            const double target = rng.uniform() * total;
            double acc = 0.0;
            pick = points.size() - 1;
            for (std::size_t i = 0; i < points.size(); ++i) {
                acc += d2[i];
                if (acc > target) {
                    pick = i;
                    break;
                }
            }
        } else {
            pick = rng.uniform_int(points.size());
        }
        centroids.push_back(points[pick]);
    }
    return centroids;
}

struct LloydRun {
    std::vector<std::vector<double>> centroids;
    std::vector<std::size_t> assignments;
    double inertia = 0.0;
    std::size_t iterations = 0;
};

LloydRun lloyd(const std::vector<std::vector<double>>& points, std::size_t k, std::uint64_t seed,
               std::size_t max_iter) {
    Rng rng(seed);
    LloydRun run;
    run.centroids = kmeanspp_init(points, k, rng);
    run.assignments.assign(points.size(), 0);
    const std::size_t d = points[0].size();
    double prev_inertia = std::numeric_limits<double>::infinity();

    for (std::size_t iter = 0; iter < max_iter; ++iter) {
        bool changed = false;
        double inertia = 0.0;
        for (std::size_t i = 0; i < points.size(); ++i) {
            const std::size_t a = nearest(run.centroids, points[i]);
            if (a != run.assignments[i]) changed = true;
            run.assignments[i] = a;
            inertia += sq_dist(points[i], run.centroids[a]);
        }
        if (inertia > prev_inertia + 1e-9 * (1.0 + prev_inertia))
            throw Error(errc::bad_argument, "inertia increased during Lloyd iteration");
        prev_inertia = inertia;
        run.inertia = inertia;
        run.iterations = iter + 1;
        if (!changed && iter > 0) break;

        std::vector<std::vector<double>> sums(k, std::vector<double>(d, 0.0));
        std::vector<std::size_t> counts(k, 0);
        for (std::size_t i = 0; i < points.size(); ++i) {
            const std::size_t a = run.assignments[i];
            ++counts[a];
            for (std::size_t j = 0; j < d; ++j) sums[a][j] += points[i][j];
        }
        for (std::size_t c = 0; c < k; ++c) {
            if (counts[c] == 0) {
                // Reseed an empty cluster to the point farthest from its
                // current centroid; lowest index wins ties.
                std::size_t far_i = 0;
                double far_d = -1.0;
                for (std::size_t i = 0; i < points.size(); ++i) {
                    const double dd = sq_dist(points[i], run.centroids[run.assignments[i]]);
                    if (dd > far_d) {
                        far_d = dd;
                        far_i = i;
                    }
                }
                run.centroids[c] = points[far_i];
                prev_inertia = std::numeric_limits<double>::infinity();
            } else {
                for (std::size_t j = 0; j < d; ++j) run.centroids[c][j] = sums[c][j] / counts[c];
            }
        }
    }
    return run;
}

} // namespace

void EmbeddingSet::validate() const {
    if (vectors.empty()) throw Error(errc::too_few_points, "embedding set is empty");
    const std::size_t d = vectors[0].size();
    if (d == 0) throw Error(errc::bad_argument, "embedding dimension must be >= 1");
    for (const auto& v : vectors) {
        if (v.size() != d) throw Error(errc::dimension_mismatch, "inconsistent embedding dimensions");
        for (double x : v)
            if (!std::isfinite(x)) throw Error(errc::bad_argument, "non-finite embedding value");
    }
}

EmbeddingSet load_embeddings(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error(errc::io_failure, "cannot open " + path);
    EmbeddingSet set;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        json rec;
        try {
            rec = json::parse(line);
        } catch (const json::exception& e) {
            throw Error(errc::malformed_record, "line " + std::to_string(line_no) + ": " + e.what());
        }
        if (!rec.contains("vector") || !rec["vector"].is_array())
            throw Error(errc::malformed_record,
                        "line " + std::to_string(line_no) + ": missing \"vector\"");
        set.vectors.push_back(rec["vector"].get<std::vector<double>>());
        set.ids.push_back(rec.value("id", std::string()));
    }
    set.validate();
    return set;
}

KmeansResult kmeans_fit(const EmbeddingSet& embeddings, std::size_t k, std::uint64_t seed,
                        std::size_t max_iter, std::size_t restarts) {
    embeddings.validate();
    if (k < 1) throw Error(errc::bad_argument, "k must be >= 1");
    if (max_iter < 1) throw Error(errc::bad_argument, "max_iter must be >= 1");
    if (restarts < 1) throw Error(errc::bad_argument, "restarts must be >= 1");
    const auto& points = embeddings.vectors;
    if (points.size() < k)
        throw Error(errc::too_few_points,
                    std::to_string(points.size()) + " points for k=" + std::to_string(k));
    if (k > 1) {
        bool all_equal = true;
        for (const auto& p : points)
            if (p != points[0]) {
                all_equal = false;
                break;
            }
        if (all_equal) throw Error(errc::degenerate_embeddings, "all points identical with k > 1");
    }

    LloydRun best;
    best.inertia = std::numeric_limits<double>::infinity();
    std::size_t best_restart = 0;
    for (std::size_t r = 0; r < restarts; ++r) {
        LloydRun run = lloyd(points, k, mix_seed(seed, r), max_iter);
        if (run.inertia < best.inertia) {
            best = std::move(run);
            best_restart = r;
        }
    }
    (void)best_restart;

    KmeansResult result;
    result.vocabulary.centroids = std::move(best.centroids);
    result.vocabulary.labels.reserve(k);
    for (std::size_t c = 0; c < k; ++c)
        result.vocabulary.labels.push_back("cluster-" + std::to_string(c));
    result.vocabulary.source = {seed, k, best.iterations, restarts, best.inertia};
    result.assignments = std::move(best.assignments);
    result.inertia = best.inertia;
    return result;
}

std::vector<std::pair<std::size_t, double>> inertia_curve(const EmbeddingSet& embeddings,
                                                          const std::vector<std::size_t>& ks,
                                                          std::uint64_t seed,
                                                          std::size_t restarts) {
    if (ks.empty()) throw Error(errc::bad_argument, "ks must be non-empty");
    std::vector<std::size_t> sorted_ks = ks;
    std::sort(sorted_ks.begin(), sorted_ks.end());
    std::vector<std::pair<std::size_t, double>> curve;
    curve.reserve(sorted_ks.size());
    for (std::size_t k : sorted_ks)
        curve.emplace_back(k, kmeans_fit(embeddings, k, seed, 300, restarts).inertia);
    return curve;
}

std::size_t assign(const MetaDomainVocabulary& vocabulary, const std::vector<double>& vector) {
    if (vocabulary.centroids.empty()) throw Error(errc::bad_argument, "vocabulary has no centroids");
    if (vector.size() != vocabulary.dim())
        throw Error(errc::dimension_mismatch, "probe dimension does not match vocabulary");
    return nearest(vocabulary.centroids, vector);
}

std::pair<std::vector<std::string>, std::vector<std::size_t>>
partition_passthrough(const std::vector<Document>& documents) {
    std::set<std::string> values;
    for (std::size_t i = 0; i < documents.size(); ++i) {
        if (!documents[i].meta)
            throw Error(errc::missing_metadata, "document " + std::to_string(i) + " has no metadata key");
        values.insert(*documents[i].meta);
    }
    std::vector<std::string> sorted(values.begin(), values.end());
    std::map<std::string, std::size_t> index;
    for (std::size_t i = 0; i < sorted.size(); ++i) index[sorted[i]] = i;
    std::vector<std::size_t> labels;
    labels.reserve(documents.size());
    for (const auto& doc : documents) labels.push_back(index[*doc.meta]);
    return {std::move(sorted), std::move(labels)};
}

void save_vocabulary(const MetaDomainVocabulary& vocab, const std::string& path) {
    json j;
    j["n"] = vocab.n();
    j["d"] = vocab.dim();
    j["centroids"] = vocab.centroids;
    j["labels"] = vocab.labels;
    j["source"] = {{"seed", vocab.source.seed},
                   {"k", vocab.source.k},
                   {"iterations", vocab.source.iterations},
                   {"restarts", vocab.source.restarts},
                   {"inertia", vocab.source.inertia}};
    std::ofstream out(path);
    if (!out) throw Error(errc::io_failure, "cannot write " + path);
    out << j.dump(2) << "\n";
}

MetaDomainVocabulary load_vocabulary(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error(errc::io_failure, "cannot open " + path);
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw Error(errc::malformed_record, std::string(e.what()));
    }
    MetaDomainVocabulary vocab;
    vocab.centroids = j.at("centroids").get<std::vector<std::vector<double>>>();
    vocab.labels = j.at("labels").get<std::vector<std::string>>();
    const std::size_t n = j.at("n").get<std::size_t>();
    if (n < vocab.centroids.size())
        throw Error(errc::malformed_record, "n smaller than centroid count");
    vocab.passthrough_count = n - vocab.centroids.size();
    if (j.contains("source")) {
        const auto& s = j["source"];
        vocab.source.seed = s.value("seed", 0ULL);
        vocab.source.k = s.value("k", std::size_t{0});
        vocab.source.iterations = s.value("iterations", std::size_t{0});
        vocab.source.restarts = s.value("restarts", std::size_t{0});
        vocab.source.inertia = s.value("inertia", 0.0);
    }
    return vocab;
}

} // namespace d2v
