#include "d2v/regress.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <functional>
#include <numeric>
#include <thread>

#include <nlohmann/json.hpp>

#include "d2v/eval.hpp"
#include "d2v/rng.hpp"

namespace d2v {

namespace {

using json = nlohmann::json;

double tree_predict(const std::vector<TreeNode>& nodes, const std::vector<double>& x) {
    int i = 0;
    while (nodes[i].feature >= 0)
        i = x[nodes[i].feature] <= nodes[i].threshold ? nodes[i].left : nodes[i].right;
    return nodes[i].value;
}

struct SplitChoice {
    int feature = -1;
    double threshold = 0.0;
    double gain = 0.0;
};

// Exact greedy least-squares split over the given rows.
SplitChoice best_split(const std::vector<std::vector<double>>& xs, const std::vector<double>& r,
                       const std::vector<std::size_t>& rows, std::size_t min_leaf) {
    SplitChoice best;
    const std::size_t count = rows.size();
    if (count < 2 * min_leaf) return best;
    double total_sum = 0.0;
    for (std::size_t i : rows) total_sum += r[i];
    const std::size_t dim = xs[rows[0]].size();

    std::vector<std::size_t> sorted(rows);
    for (std::size_t f = 0; f < dim; ++f) {
        std::sort(sorted.begin(), sorted.end(), [&](std::size_t a, std::size_t b) {
            if (xs[a][f] != xs[b][f]) return xs[a][f] < xs[b][f];
            return a < b;
        });
        double left_sum = 0.0;
        for (std::size_t pos = 0; pos + 1 < count; ++pos) {
            left_sum += r[sorted[pos]];
            if (xs[sorted[pos]][f] == xs[sorted[pos + 1]][f]) continue;
            const std::size_t nl = pos + 1, nr = count - nl;
            if (nl < min_leaf || nr < min_leaf) continue;
            const double right_sum = total_sum - left_sum;
            // SSE reduction = sumL^2/nL + sumR^2/nR - total^2/n
            const double gain = left_sum * left_sum / nl + right_sum * right_sum / nr -
                                total_sum * total_sum / count;
            if (gain > best.gain + 1e-15) {
                best.gain = gain;
                best.feature = static_cast<int>(f);
                best.threshold = 0.5 * (xs[sorted[pos]][f] + xs[sorted[pos + 1]][f]);
            }
        }
    }
    return best;
}

// Builds the tree structure on `rows` (possibly a subsample); leaf values are
// filled later from the full training residuals.
int build_node(std::vector<TreeNode>& nodes, const std::vector<std::vector<double>>& xs,
               const std::vector<double>& r, std::vector<std::size_t> rows, std::size_t depth,
               const GbdtConfig& config) {
    const int idx = static_cast<int>(nodes.size());
    nodes.emplace_back();
    SplitChoice split;
    if (depth < config.max_depth) split = best_split(xs, r, rows, config.min_leaf);
    if (split.feature < 0) {
        double sum = 0.0;
        for (std::size_t i : rows) sum += r[i];
        nodes[idx].value = rows.empty() ? 0.0 : sum / static_cast<double>(rows.size());
        return idx;
    }
    std::vector<std::size_t> left, right;
    for (std::size_t i : rows)
        (xs[i][split.feature] <= split.threshold ? left : right).push_back(i);
    nodes[idx].feature = split.feature;
    nodes[idx].threshold = split.threshold;
    nodes[idx].left = build_node(nodes, xs, r, std::move(left), depth + 1, config);
    nodes[idx].right = build_node(nodes, xs, r, std::move(right), depth + 1, config);
    return idx;
}

// Replace leaf values with the mean residual of the FULL training rows that
// land there; the constant so chosen cannot increase training MSE.
void refit_leaves(std::vector<TreeNode>& nodes, const std::vector<std::vector<double>>& xs,
                  const std::vector<double>& r) {
    std::vector<double> sums(nodes.size(), 0.0);
    std::vector<std::size_t> counts(nodes.size(), 0);
    for (std::size_t i = 0; i < xs.size(); ++i) {
        int node = 0;
        while (nodes[node].feature >= 0)
            node = xs[i][nodes[node].feature] <= nodes[node].threshold ? nodes[node].left
                                                                       : nodes[node].right;
        sums[node] += r[i];
        ++counts[node];
    }
    for (std::size_t node = 0; node < nodes.size(); ++node)
        if (nodes[node].feature < 0)
            nodes[node].value = counts[node] > 0 ? sums[node] / counts[node] : 0.0;
}

} // namespace

double GbdtModel::predict(const std::vector<double>& x) const {
    double y = base;
    for (const auto& tree : trees) y += learning_rate * tree_predict(tree, x);
    return y;
}

double RidgeModel::predict(const std::vector<double>& x) const {
    double y = intercept;
    for (std::size_t i = 0; i < coef.size(); ++i) y += coef[i] * x[i];
    return y;
}

double predict_one(const Regressor& model, const std::vector<double>& x) {
    return std::visit([&](const auto& m) { return m.predict(x); }, model);
}

GbdtModel fit_gbdt(const std::vector<std::vector<double>>& xs, const std::vector<double>& ys,
                   const GbdtConfig& config, std::uint64_t seed) {
    if (xs.size() != ys.size() || xs.empty())
        throw Error(errc::too_few_samples, "gbdt needs aligned non-empty samples");
    const std::size_t count = xs.size();
    GbdtModel model;
    model.learning_rate = config.learning_rate;
    model.base = std::accumulate(ys.begin(), ys.end(), 0.0) / static_cast<double>(count);

    std::vector<double> pred(count, model.base);
    std::vector<double> residual(count);
    auto mse = [&] {
        double s = 0.0;
        for (std::size_t i = 0; i < count; ++i) {
            const double d = ys[i] - pred[i];
            s += d * d;
        }
        return s / static_cast<double>(count);
    };
    double prev_mse = mse();

    Rng rng(seed);
    for (std::size_t round = 0; round < config.num_trees; ++round) {
        for (std::size_t i = 0; i < count; ++i) residual[i] = ys[i] - pred[i];

        std::vector<std::size_t> rows;
        if (config.subsample < 1.0 && count > 2) {
            for (std::size_t i = 0; i < count; ++i)
                if (rng.uniform() < config.subsample) rows.push_back(i);
            if (rows.size() < 2) rows = {0, 1};
        } else {
            rows.resize(count);
            std::iota(rows.begin(), rows.end(), 0);
        }

        std::vector<TreeNode> tree;
        build_node(tree, xs, residual, std::move(rows), 0, config);
        refit_leaves(tree, xs, residual);
        for (std::size_t i = 0; i < count; ++i)
            pred[i] += config.learning_rate * tree_predict(tree, xs[i]);
        model.trees.push_back(std::move(tree));

        const double cur = mse();
        if (cur > prev_mse * (1.0 + 1e-12) + 1e-15)
            throw Error(errc::bad_argument, "boosting round increased training MSE");
        prev_mse = cur;
        model.round_mse.push_back(cur);
    }
    return model;
}

RidgeModel fit_ridge(const std::vector<std::vector<double>>& xs, const std::vector<double>& ys,
                     double lambda) {
    if (xs.size() != ys.size() || xs.size() < 2)
        throw Error(errc::too_few_samples, "ridge needs at least 2 samples");
    const std::size_t count = xs.size();
    const std::size_t dim = xs[0].size();

    std::vector<double> x_mean(dim, 0.0);
    double y_mean = 0.0;
    for (std::size_t i = 0; i < count; ++i) {
        y_mean += ys[i];
        for (std::size_t j = 0; j < dim; ++j) x_mean[j] += xs[i][j];
    }
    y_mean /= count;
    for (double& v : x_mean) v /= count;

    // A = Xc'Xc + lambda*I, b = Xc'yc, solved by Cholesky.
    std::vector<double> A(dim * dim, 0.0), b(dim, 0.0);
    for (std::size_t i = 0; i < count; ++i) {
        for (std::size_t j = 0; j < dim; ++j) {
            const double xj = xs[i][j] - x_mean[j];
            b[j] += xj * (ys[i] - y_mean);
            for (std::size_t k = j; k < dim; ++k) A[j * dim + k] += xj * (xs[i][k] - x_mean[k]);
        }
    }
    for (std::size_t j = 0; j < dim; ++j) {
        A[j * dim + j] += lambda;
        for (std::size_t k = 0; k < j; ++k) A[j * dim + k] = A[k * dim + j];
    }

    std::vector<double> L(dim * dim, 0.0);
    for (std::size_t j = 0; j < dim; ++j) {
        for (std::size_t k = 0; k <= j; ++k) {
            double s = A[j * dim + k];
            for (std::size_t t = 0; t < k; ++t) s -= L[j * dim + t] * L[k * dim + t];
            if (j == k) {
                if (s <= 0.0) s = 1e-30; // simplex inputs are rank-deficient
                L[j * dim + j] = std::sqrt(s);
            } else {
                L[j * dim + k] = s / L[k * dim + k];
            }
        }
    }
    std::vector<double> z(dim), w(dim);
    for (std::size_t j = 0; j < dim; ++j) {
        double s = b[j];
        for (std::size_t t = 0; t < j; ++t) s -= L[j * dim + t] * z[t];
        z[j] = s / L[j * dim + j];
    }
    for (std::size_t jj = dim; jj-- > 0;) {
        double s = z[jj];
        for (std::size_t t = jj + 1; t < dim; ++t) s -= L[t * dim + jj] * w[t];
        w[jj] = s / L[jj * dim + jj];
    }

    RidgeModel model;
    model.lambda = lambda;
    model.coef = std::move(w);
    model.intercept = y_mean;
    for (std::size_t j = 0; j < dim; ++j) model.intercept -= model.coef[j] * x_mean[j];
    return model;
}

RegressorKind regressor_kind_from_string(const std::string& s) {
    if (s == "gbdt") return RegressorKind::gbdt;
    if (s == "ridge") return RegressorKind::ridge;
    throw Error(errc::bad_argument, "unknown regressor kind: " + s);
}

LossModelSet fit_regressors(const std::vector<FitSample>& samples, const DatasetMatrix* V,
                            const RegressConfig& config) {
    if (samples.size() < 2) throw Error(errc::too_few_samples, "need at least 2 fit samples");

    std::vector<std::vector<double>> inputs;
    inputs.reserve(samples.size());
    std::size_t n = 0;
    for (const auto& s : samples) {
        if (!s.v.empty()) {
            inputs.push_back(s.v);
        } else {
            if (!V) throw Error(errc::bad_argument, "samples carry ratios but no matrix was given");
            inputs.push_back(mix(*V, MixtureRatio(s.ratio)).entries());
        }
        if (n == 0) n = s.losses.size();
        if (s.losses.size() != n || inputs.back().size() != n)
            throw Error(errc::dimension_mismatch, "fit sample dimensions inconsistent");
        for (double l : s.losses)
            if (!std::isfinite(l)) throw Error(errc::bad_argument, "non-finite loss");
    }

    // Seeded shuffle; the tail is the holdout split.
    Rng rng(config.seed);
    std::vector<std::size_t> order(samples.size());
    std::iota(order.begin(), order.end(), 0);
    for (std::size_t i = order.size(); i > 1; --i)
        std::swap(order[i - 1], order[rng.uniform_int(i)]);
    std::size_t holdout = static_cast<std::size_t>(std::floor(config.holdout_fraction * samples.size()));
    if (holdout + 2 > samples.size()) holdout = samples.size() >= 4 ? samples.size() - 2 : 0;
    const std::size_t train_count = samples.size() - holdout;

    std::vector<std::vector<double>> train_x;
    train_x.reserve(train_count);
    for (std::size_t i = 0; i < train_count; ++i) train_x.push_back(inputs[order[i]]);

    LossModelSet set;
    set.kind = config.kind;
    set.sample_count = samples.size();
    set.models.resize(n);
    set.holdout_spearman.assign(n, 1.0);

    for (std::size_t domain = 0; domain < n; ++domain) {
        std::vector<double> train_y;
        train_y.reserve(train_count);
        for (std::size_t i = 0; i < train_count; ++i)
            train_y.push_back(samples[order[i]].losses[domain]);

        if (config.kind == RegressorKind::gbdt)
            set.models[domain] = fit_gbdt(train_x, train_y, config.gbdt, mix_seed(config.seed, domain));
        else
            set.models[domain] = fit_ridge(train_x, train_y, config.ridge_lambda);

        if (holdout >= 2) {
            std::vector<double> pred, actual;
            pred.reserve(holdout);
            for (std::size_t i = train_count; i < samples.size(); ++i) {
                pred.push_back(predict_one(set.models[domain], inputs[order[i]]));
                actual.push_back(samples[order[i]].losses[domain]);
            }
            try {
                set.holdout_spearman[domain] = spearman(pred, actual);
            } catch (const Error& e) {
                if (e.code() != errc::zero_variance) throw;
                set.holdout_spearman[domain] = 1.0; // constant target, trivially ranked
            }
        }
    }
    return set;
}

double predict_valid_loss(const MixtureRatio& r, const DatasetMatrix& V,
                          const DomainVector& v_valid, const LossModelSet& models) {
    if (V.rows() != v_valid.size() || models.n() != v_valid.size())
        throw Error(errc::dimension_mismatch, "predict_valid_loss dimensions disagree");
    const std::vector<double> v = mix(V, r).entries();
    double loss = 0.0;
    for (std::size_t i = 0; i < models.n(); ++i)
        loss += v_valid[i] * predict_one(models.models[i], v);
    return loss;
}

SearchResult search_regress(const DatasetMatrix& V, const DomainVector& v_valid,
                            const LossModelSet& models, const CandidateSet& candidates,
                            std::size_t top_k, std::size_t threads) {
    const std::size_t K = candidates.candidates.size();
    if (K == 0) throw Error(errc::bad_argument, "empty candidate set");
    std::vector<double> scores(K);
    auto run_range = [&](std::size_t b, std::size_t e) {
        for (std::size_t i = b; i < e; ++i)
            scores[i] = predict_valid_loss(candidates.candidates[i], V, v_valid, models);
    };
    const std::size_t nthreads = std::max<std::size_t>(1, std::min(threads, K));
    if (nthreads == 1) {
        run_range(0, K);
    } else {
        std::vector<std::thread> pool;
        const std::size_t chunk = (K + nthreads - 1) / nthreads;
        for (std::size_t t = 0; t < nthreads; ++t) {
            const std::size_t b = t * chunk, e = std::min(b + chunk, K);
            if (b < e) pool.emplace_back([&, b, e] { run_range(b, e); });
        }
        for (auto& th : pool) th.join();
    }
    return select_top_k(candidates, scores, top_k);
}

namespace {

json tree_to_json(const std::vector<TreeNode>& nodes, int idx) {
    const TreeNode& node = nodes[idx];
    if (node.feature < 0) return json{{"value", node.value}};
    return json{{"feature", node.feature},
                {"threshold", node.threshold},
                {"left", tree_to_json(nodes, node.left)},
                {"right", tree_to_json(nodes, node.right)}};
}

int tree_from_json(const json& j, std::vector<TreeNode>& nodes) {
    const int idx = static_cast<int>(nodes.size());
    nodes.emplace_back();
    if (j.contains("feature")) {
        nodes[idx].feature = j.at("feature").get<int>();
        nodes[idx].threshold = j.at("threshold").get<double>();
        const int left = tree_from_json(j.at("left"), nodes);
        const int right = tree_from_json(j.at("right"), nodes);
        nodes[idx].left = left;
        nodes[idx].right = right;
    } else {
        nodes[idx].value = j.at("value").get<double>();
    }
    return idx;
}

} // namespace

void save_loss_models(const LossModelSet& set, const std::string& path) {
    json j;
    j["kind"] = set.kind == RegressorKind::gbdt ? "gbdt" : "ridge";
    j["sample_count"] = set.sample_count;
    j["holdout_spearman"] = set.holdout_spearman;
    j["models"] = json::array();
    for (const auto& model : set.models) {
        if (const auto* g = std::get_if<GbdtModel>(&model)) {
            json trees = json::array();
            for (const auto& tree : g->trees) trees.push_back(tree_to_json(tree, 0));
            j["models"].push_back(
                {{"base", g->base}, {"learning_rate", g->learning_rate}, {"trees", trees}});
        } else {
            const auto& r = std::get<RidgeModel>(model);
            j["models"].push_back(
                {{"coef", r.coef}, {"intercept", r.intercept}, {"lambda", r.lambda}});
        }
    }
    std::ofstream out(path);
    if (!out) throw Error(errc::io_failure, "cannot write " + path);
    out << j.dump() << "\n";
}

LossModelSet load_loss_models(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error(errc::io_failure, "cannot open " + path);
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw Error(errc::malformed_record, std::string(e.what()));
    }
    LossModelSet set;
    set.kind = regressor_kind_from_string(j.at("kind").get<std::string>());
    set.sample_count = j.value("sample_count", std::size_t{0});
    set.holdout_spearman = j.value("holdout_spearman", std::vector<double>{});
    for (const auto& mj : j.at("models")) {
        if (set.kind == RegressorKind::gbdt) {
            GbdtModel g;
            g.base = mj.at("base").get<double>();
            g.learning_rate = mj.at("learning_rate").get<double>();
            for (const auto& tj : mj.at("trees")) {
                std::vector<TreeNode> nodes;
                tree_from_json(tj, nodes);
                g.trees.push_back(std::move(nodes));
            }
            set.models.emplace_back(std::move(g));
        } else {
            RidgeModel r;
            r.coef = mj.at("coef").get<std::vector<double>>();
            r.intercept = mj.at("intercept").get<double>();
            r.lambda = mj.value("lambda", 1e-3);
            set.models.emplace_back(std::move(r));
        }
    }
    return set;
}

std::vector<FitSample> load_fit_samples(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error(errc::io_failure, "cannot open " + path);
    std::vector<FitSample> samples;
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
        FitSample s;
        if (rec.contains("v")) s.v = rec["v"].get<std::vector<double>>();
        if (rec.contains("ratio")) s.ratio = rec["ratio"].get<std::vector<double>>();
        if (s.v.empty() && s.ratio.empty())
            throw Error(errc::malformed_record,
                        "line " + std::to_string(line_no) + ": needs \"v\" or \"ratio\"");
        if (!rec.contains("losses"))
            throw Error(errc::malformed_record, "line " + std::to_string(line_no) + ": missing \"losses\"");
        s.losses = rec["losses"].get<std::vector<double>>();
        samples.push_back(std::move(s));
    }
    return samples;
}

void save_fit_samples(const std::vector<FitSample>& samples, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw Error(errc::io_failure, "cannot write " + path);
    for (const auto& s : samples) {
        json rec;
        if (!s.v.empty()) rec["v"] = s.v;
        if (!s.ratio.empty()) rec["ratio"] = s.ratio;
        rec["losses"] = s.losses;
        out << rec.dump() << "\n";
    }
}

} // namespace d2v
