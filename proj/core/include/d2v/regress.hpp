#pragma once

#include <cstdint>
#include <string>
#include <variant>
#include <vector>

#include "d2v/da2.hpp"
#include "d2v/simplex.hpp"

namespace d2v {

// One observation: a mixture (or its precomputed domain vector) and the
// per-meta-domain validation losses it produced, in nats.
struct FitSample {
    std::vector<double> v;      // domain vector input, length n (empty if ratio given)
    std::vector<double> ratio;  // mixture over m datasets (empty if v given)
    std::vector<double> losses; // length n
};

std::vector<FitSample> load_fit_samples(const std::string& path);
void save_fit_samples(const std::vector<FitSample>& samples, const std::string& path);

enum class RegressorKind { gbdt, ridge };
RegressorKind regressor_kind_from_string(const std::string& s);

struct GbdtConfig {
    std::size_t num_trees = 200;
    std::size_t max_depth = 4;
    double learning_rate = 0.1;
    double subsample = 0.8;
    std::size_t min_leaf = 2;
};

// Binary regression tree in array form.
struct TreeNode {
    int feature = -1; // -1 marks a leaf
    double threshold = 0.0;
    int left = -1;
    int right = -1;
    double value = 0.0;
};

struct GbdtModel {
    double base = 0.0; // initial prediction (target mean)
    double learning_rate = 0.1;
    std::vector<std::vector<TreeNode>> trees;
    std::vector<double> round_mse; // training MSE after each boosting round

    double predict(const std::vector<double>& x) const;
};

struct RidgeModel {
    std::vector<double> coef;
    double intercept = 0.0;
    double lambda = 1e-3;

    double predict(const std::vector<double>& x) const;
};

using Regressor = std::variant<GbdtModel, RidgeModel>;

double predict_one(const Regressor& model, const std::vector<double>& x);

// One regressor per meta-domain: f_i maps a domain vector to predicted loss.
struct LossModelSet {
    RegressorKind kind = RegressorKind::gbdt;
    std::vector<Regressor> models;           // length n
    std::vector<double> holdout_spearman;    // per meta-domain fit diagnostic
    std::size_t sample_count = 0;

    std::size_t n() const { return models.size(); }
};

struct RegressConfig {
    RegressorKind kind = RegressorKind::gbdt;
    GbdtConfig gbdt;
    double ridge_lambda = 1e-3;
    double holdout_fraction = 0.125;
    std::uint64_t seed = 0;
};

// Fits f_i on (v, losses[i]) pairs; v = V*r is computed when samples carry
// ratios. Reports per-meta-domain held-out Spearman.
LossModelSet fit_regressors(const std::vector<FitSample>& samples, const DatasetMatrix* V,
                            const RegressConfig& config);

// L(r) = sum_i q_i * f_i(V*r), the additive composition over meta-domains.
double predict_valid_loss(const MixtureRatio& r, const DatasetMatrix& V,
                          const DomainVector& v_valid, const LossModelSet& models);

SearchResult search_regress(const DatasetMatrix& V, const DomainVector& v_valid,
                            const LossModelSet& models, const CandidateSet& candidates,
                            std::size_t top_k = 1, std::size_t threads = 1);

void save_loss_models(const LossModelSet& set, const std::string& path);
LossModelSet load_loss_models(const std::string& path);

// Test-visible: pure GBDT / ridge fits on (x, y) rows.
GbdtModel fit_gbdt(const std::vector<std::vector<double>>& xs, const std::vector<double>& ys,
                   const GbdtConfig& config, std::uint64_t seed);
RidgeModel fit_ridge(const std::vector<std::vector<double>>& xs, const std::vector<double>& ys,
                     double lambda);

} // namespace d2v
