#include "d2v/classifier.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <set>

#include <nlohmann/json.hpp>

#include "d2v/rng.hpp"

namespace d2v {

namespace {

using json = nlohmann::json;

std::vector<double> softmax(std::vector<double> logits) {
    const double m = *std::max_element(logits.begin(), logits.end());
    double sum = 0.0;
    for (double& v : logits) {
        v = std::exp(v - m);
        sum += v;
    }
    for (double& v : logits) v /= sum;
    return logits;
}

// Counts enter L2-normalized so per-example gradient norms are O(1)
// regardless of document length.
double feature_norm(const FeatureVector& fv) {
    double s = 0.0;
    for (const auto& [idx, cnt] : fv.counts) s += static_cast<double>(cnt) * cnt;
    return std::sqrt(s);
}

std::vector<double> logits_for(const LinearClassifierModel& model, const FeatureVector& fv) {
    const double norm = feature_norm(fv);
    std::vector<double> logits(model.bias);
    if (norm > 0.0) {
        for (const auto& [idx, cnt] : fv.counts) {
            const double x = cnt / norm;
            for (std::size_t c = 0; c < model.n; ++c) logits[c] += model.weights[c][idx] * x;
        }
    }
    return logits;
}

} // namespace

std::uint64_t fnv1a64(const void* data, std::size_t len, std::uint64_t seed) {
    const auto* p = static_cast<const unsigned char*>(data);
    std::uint64_t h = seed;
    for (std::size_t i = 0; i < len; ++i) {
        h ^= p[i];
        h *= 0x100000001b3ULL;
    }
    return h;
}

FeatureVector featurize(const std::string& text, const FeatureConfig& config) {
    std::string t = text;
    if (config.lowercase)
        for (char& c : t) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    // trim check only; n-grams run over the raw (lowercased) bytes
    bool blank = true;
    for (char c : t)
        if (!std::isspace(static_cast<unsigned char>(c))) {
            blank = false;
            break;
        }
    if (blank) throw Error(errc::empty_document, "cannot featurize empty text");

    std::map<std::uint32_t, std::uint32_t> counts;
    for (std::size_t order : config.ngram_orders) {
        if (order == 0 || t.size() < order) continue;
        for (std::size_t i = 0; i + order <= t.size(); ++i) {
            const std::uint64_t h = fnv1a64(t.data() + i, order, config.hash_seed);
            ++counts[static_cast<std::uint32_t>(h % config.buckets)];
        }
    }
    FeatureVector fv;
    fv.counts.assign(counts.begin(), counts.end());
    return fv;
}

LinearClassifierModel train(const std::vector<Document>& docs, const TrainConfig& config) {
    if (docs.size() < 2) throw Error(errc::too_few_samples, "need at least 2 labeled documents");

    std::vector<FeatureVector> features;
    std::vector<int> labels;
    features.reserve(docs.size());
    std::set<int> distinct;
    for (const auto& doc : docs) {
        if (!doc.label) throw Error(errc::label_out_of_range, "document without label");
        labels.push_back(*doc.label);
        distinct.insert(*doc.label);
        features.push_back(featurize(doc.text, config.features));
    }
    if (distinct.size() < 2) throw Error(errc::single_class_corpus, "all labels identical");
    const std::size_t n =
        config.n_classes > 0 ? config.n_classes : static_cast<std::size_t>(*distinct.rbegin()) + 1;
    for (int l : labels)
        if (l < 0 || static_cast<std::size_t>(l) >= n)
            throw Error(errc::label_out_of_range, "label " + std::to_string(l) + " for n=" + std::to_string(n));

    LinearClassifierModel model;
    model.features = config.features;
    model.n = n;
    model.weights.assign(n, std::vector<double>(config.features.buckets, 0.0));
    model.bias.assign(n, 0.0);

    // Seeded shuffle defines both the holdout split and the batch order.
    Rng rng(config.seed);
    std::vector<std::size_t> order(docs.size());
    std::iota(order.begin(), order.end(), 0);
    for (std::size_t i = order.size(); i > 1; --i)
        std::swap(order[i - 1], order[rng.uniform_int(i)]);

    std::size_t holdout = static_cast<std::size_t>(std::floor(config.holdout_fraction * docs.size()));
    if (holdout >= docs.size()) holdout = docs.size() - 1;
    const std::size_t train_count = docs.size() - holdout;

    auto example_loss_grad = [&](std::size_t idx, std::vector<std::vector<double>>* grad_w,
                                 std::vector<double>* grad_b) {
        const FeatureVector& fv = features[idx];
        const double norm = feature_norm(fv);
        std::vector<double> p = softmax(logits_for(model, fv));
        const int y = labels[idx];
        const double loss = -std::log(std::max(p[y], 1e-300));
        if (grad_w) {
            for (std::size_t c = 0; c < n; ++c) {
                const double err = p[c] - (static_cast<int>(c) == y ? 1.0 : 0.0);
                (*grad_b)[c] += err;
                for (const auto& [bi, cnt] : fv.counts) (*grad_w)[c][bi] += err * (cnt / norm);
            }
        }
        return loss;
    };

    std::size_t step = 0;
    for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
        for (std::size_t start = 0; start < train_count; start += config.batch_size) {
            const std::size_t end = std::min(start + config.batch_size, train_count);
            const double batch = static_cast<double>(end - start);
            std::vector<std::vector<double>> grad_w(n, std::vector<double>(config.features.buckets, 0.0));
            std::vector<double> grad_b(n, 0.0);
            for (std::size_t i = start; i < end; ++i)
                example_loss_grad(order[i], &grad_w, &grad_b);
            ++step;
            const double lr = config.learning_rate / std::sqrt(static_cast<double>(step));
            const double decay = 1.0 - lr * config.l2;
            for (std::size_t c = 0; c < n; ++c) {
                auto& w = model.weights[c];
                for (std::size_t b = 0; b < config.features.buckets; ++b)
                    w[b] = w[b] * decay - lr * grad_w[c][b] / batch;
                model.bias[c] -= lr * grad_b[c] / batch;
            }
        }
        double epoch_loss = 0.0;
        for (std::size_t i = 0; i < train_count; ++i)
            epoch_loss += example_loss_grad(order[i], nullptr, nullptr);
        epoch_loss /= static_cast<double>(train_count);
        double w_norm2 = 0.0;
        for (const auto& row : model.weights)
            for (double w : row) w_norm2 += w * w;
        model.epoch_losses.push_back(epoch_loss + 0.5 * config.l2 * w_norm2);
    }

    std::size_t correct = 0;
    for (std::size_t i = train_count; i < docs.size(); ++i) {
        const auto p = softmax(logits_for(model, features[order[i]]));
        const std::size_t pred = static_cast<std::size_t>(
            std::max_element(p.begin(), p.end()) - p.begin());
        if (static_cast<int>(pred) == labels[order[i]]) ++correct;
    }
    model.holdout_accuracy = holdout > 0 ? static_cast<double>(correct) / holdout : 1.0;
    return model;
}

DomainVector predict_proba(const LinearClassifierModel& model, const std::string& text) {
    const FeatureVector fv = featurize(text, model.features);
    return DomainVector(softmax(logits_for(model, fv)), kInternalTolerance);
}

namespace {

json model_to_json(const LinearClassifierModel& model) {
    json j;
    j["config"] = {{"ngram_orders", model.features.ngram_orders},
                   {"lowercase", model.features.lowercase},
                   {"buckets", model.features.buckets},
                   {"hash_seed", model.features.hash_seed}};
    j["n"] = model.n;
    j["bias"] = model.bias;
    j["holdout_accuracy"] = model.holdout_accuracy;
    j["epoch_losses"] = model.epoch_losses;
    json rows = json::array();
    for (const auto& row : model.weights) {
        std::size_t zeros = 0;
        for (double w : row)
            if (w == 0.0) ++zeros;
        if (zeros * 2 > row.size()) {
            json sparse = json::object();
            for (std::size_t b = 0; b < row.size(); ++b)
                if (row[b] != 0.0) sparse[std::to_string(b)] = row[b];
            rows.push_back({{"sparse", sparse}});
        } else {
            rows.push_back({{"dense", row}});
        }
    }
    j["weights"] = rows;
    return j;
}

} // namespace

void save_model(const LinearClassifierModel& model, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw Error(errc::io_failure, "cannot write " + path);
    out << model_to_json(model).dump() << "\n";
}

LinearClassifierModel load_model(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error(errc::io_failure, "cannot open " + path);
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw Error(errc::malformed_record, std::string(e.what()));
    }
    LinearClassifierModel model;
    const auto& c = j.at("config");
    model.features.ngram_orders = c.at("ngram_orders").get<std::vector<std::size_t>>();
    model.features.lowercase = c.at("lowercase").get<bool>();
    model.features.buckets = c.at("buckets").get<std::size_t>();
    model.features.hash_seed = c.at("hash_seed").get<std::uint64_t>();
    model.n = j.at("n").get<std::size_t>();
    model.bias = j.at("bias").get<std::vector<double>>();
    model.holdout_accuracy = j.value("holdout_accuracy", 0.0);
    if (j.contains("epoch_losses")) model.epoch_losses = j["epoch_losses"].get<std::vector<double>>();
    for (const auto& row : j.at("weights")) {
        std::vector<double> dense(model.features.buckets, 0.0);
        if (row.contains("dense")) {
            dense = row["dense"].get<std::vector<double>>();
        } else {
            for (const auto& [key, val] : row.at("sparse").items())
                dense[std::stoull(key)] = val.get<double>();
        }
        model.weights.push_back(std::move(dense));
    }
    if (model.weights.size() != model.n || model.bias.size() != model.n)
        throw Error(errc::malformed_record, "model dimensions inconsistent");
    return model;
}

std::string model_hash(const LinearClassifierModel& model) {
    const std::string s = model_to_json(model).dump();
    const std::uint64_t h = fnv1a64(s.data(), s.size(), 0xcbf29ce484222325ULL);
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

std::vector<std::pair<std::string, DomainVector>> import_proba(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error(errc::io_failure, "cannot open " + path);
    std::vector<std::pair<std::string, DomainVector>> rows;
    std::string line;
    std::size_t line_no = 0, dim = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        json rec;
        try {
            rec = json::parse(line);
        } catch (const json::exception& e) {
            throw Error(errc::malformed_record, "line " + std::to_string(line_no) + ": " + e.what());
        }
        if (!rec.contains("proba") || !rec["proba"].is_array())
            throw Error(errc::malformed_record, "line " + std::to_string(line_no) + ": missing \"proba\"");
        auto proba = rec["proba"].get<std::vector<double>>();
        if (dim == 0) dim = proba.size();
        if (proba.size() != dim)
            throw Error(errc::dimension_mismatch,
                        "line " + std::to_string(line_no) + ": expected " + std::to_string(dim) +
                            " probabilities, got " + std::to_string(proba.size()));
        rows.emplace_back(rec.value("id", std::string()),
                          DomainVector(std::move(proba), kInputTolerance));
    }
    return rows;
}

void export_proba(const std::vector<std::pair<std::string, DomainVector>>& rows,
                  const std::string& path) {
    std::ofstream out(path);
    if (!out) throw Error(errc::io_failure, "cannot write " + path);
    for (const auto& [id, v] : rows) {
        json rec = {{"id", id}, {"proba", v.entries()}};
        out << rec.dump() << "\n";
    }
}

} // namespace d2v
