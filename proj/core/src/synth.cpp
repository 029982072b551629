#include "d2v/synth.hpp"

#include <cmath>
#include <fstream>

#include <nlohmann/json.hpp>

#include "d2v/rng.hpp"

namespace d2v {

namespace {

using json = nlohmann::json;

// Inverse-CDF draw from a categorical distribution.
std::size_t draw_categorical(const std::vector<double>& dist, Rng& rng) {
    const double u = rng.uniform();
    double acc = 0.0;
    for (std::size_t i = 0; i < dist.size(); ++i) {
        acc += dist[i];
        if (u < acc) return i;
    }
    return dist.size() - 1;
}

} // namespace

double total_variation(const std::vector<double>& p, const std::vector<double>& q) {
    if (p.size() != q.size()) throw Error(errc::dimension_mismatch, "total_variation");
    double s = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) s += std::abs(p[i] - q[i]);
    return 0.5 * s;
}

double entropy_nats(const std::vector<double>& p) {
    double h = 0.0;
    for (double x : p)
        if (x > 0.0) h -= x * std::log(x);
    return h;
}

SyntheticWorld generate_world(std::size_t n, std::size_t alphabet_size, std::size_t doc_length,
                              std::uint64_t seed) {
    if (n < 2) throw Error(errc::bad_argument, "need at least 2 meta-domains");
    if (alphabet_size < 10 * n)
        throw Error(errc::alphabet_too_small,
                    "alphabet " + std::to_string(alphabet_size) + " < 10*n=" + std::to_string(10 * n));
    if (doc_length < 1) throw Error(errc::bad_argument, "doc_length must be >= 1");

    SyntheticWorld world{n, alphabet_size, doc_length, seed, {}};
    const std::size_t block = alphabet_size / n;
    const double background = 0.2 / static_cast<double>(alphabet_size);
    Rng rng(seed);
    world.token_dists.reserve(n);
    for (std::size_t d = 0; d < n; ++d) {
        std::vector<double> dist(alphabet_size, background);
        // random in-block profile normalized to the dominant 80% mass
        std::vector<double> w(block);
        double sum = 0.0;
        for (double& x : w) {
            x = 0.1 + rng.uniform();
            sum += x;
        }
        for (std::size_t i = 0; i < block; ++i) dist[d * block + i] += 0.8 * w[i] / sum;
        world.token_dists.push_back(std::move(dist));
    }
    for (std::size_t a = 0; a < n; ++a)
        for (std::size_t b = a + 1; b < n; ++b)
            if (total_variation(world.token_dists[a], world.token_dists[b]) < 0.3)
                throw Error(errc::bad_argument, "separability violated (TV < 0.3)");
    return world;
}

GeneratedDataset generate_dataset(const SyntheticWorld& world, const DomainVector& mixing_weights,
                                  std::size_t doc_count, std::uint64_t seed,
                                  const std::string& corpus_path) {
    if (mixing_weights.size() != world.n)
        throw Error(errc::dimension_mismatch, "mixing weights do not match world.n");

    GeneratedDataset out;
    out.corpus_path = corpus_path;
    out.truth_path = corpus_path + ".truth.jsonl";

    std::ofstream corpus(corpus_path);
    if (!corpus) throw Error(errc::io_failure, "cannot write " + corpus_path);
    std::ofstream truth(out.truth_path);
    if (!truth) throw Error(errc::io_failure, "cannot write " + out.truth_path);

    Rng rng(seed);
    std::string text;
    for (std::size_t i = 0; i < doc_count; ++i) {
        const std::size_t label = draw_categorical(mixing_weights.entries(), rng);
        text.clear();
        for (std::size_t t = 0; t < world.doc_length; ++t) {
            if (t) text += ' ';
            text += 't';
            text += std::to_string(draw_categorical(world.token_dists[label], rng));
        }
        const std::string id = "doc-" + std::to_string(i);
        corpus << json{{"id", id}, {"text", text}, {"label", label}}.dump() << "\n";
        truth << json{{"id", id}, {"label", label}, {"weights", mixing_weights.entries()}}.dump()
              << "\n";
        out.labels.push_back(static_cast<int>(label));
    }
    return out;
}

std::vector<double> oracle_loss(const SyntheticWorld& world, const MixtureRatio& r,
                                const DatasetMatrix& V_true, double eps) {
    if (V_true.rows() != world.n)
        throw Error(errc::dimension_mismatch, "matrix rows do not match world.n");
    const DomainVector v = mix(V_true, r);

    std::vector<double> blend(world.alphabet_size, 0.0);
    for (std::size_t d = 0; d < world.n; ++d)
        for (std::size_t a = 0; a < world.alphabet_size; ++a)
            blend[a] += v[d] * world.token_dists[d][a];
    double norm = 0.0;
    for (double& q : blend) {
        q += eps;
        norm += q;
    }
    for (double& q : blend) q /= norm;

    std::vector<double> losses(world.n, 0.0);
    for (std::size_t d = 0; d < world.n; ++d) {
        double h = 0.0;
        for (std::size_t a = 0; a < world.alphabet_size; ++a) {
            const double p = world.token_dists[d][a];
            if (p > 0.0) h -= p * std::log(blend[a]);
        }
        losses[d] = h;
    }
    return losses;
}

void save_world(const SyntheticWorld& world, const std::string& path) {
    json j{{"n", world.n},
           {"alphabet_size", world.alphabet_size},
           {"doc_length", world.doc_length},
           {"seed", world.seed},
           {"token_dists", world.token_dists}};
    std::ofstream out(path);
    if (!out) throw Error(errc::io_failure, "cannot write " + path);
    out << j.dump() << "\n";
}

SyntheticWorld load_world(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error(errc::io_failure, "cannot open " + path);
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw Error(errc::malformed_record, std::string(e.what()));
    }
    SyntheticWorld world;
    world.n = j.at("n").get<std::size_t>();
    world.alphabet_size = j.at("alphabet_size").get<std::size_t>();
    world.doc_length = j.at("doc_length").get<std::size_t>();
    world.seed = j.value("seed", 0ULL);
    world.token_dists = j.at("token_dists").get<std::vector<std::vector<double>>>();
    return world;
}

} // namespace d2v
