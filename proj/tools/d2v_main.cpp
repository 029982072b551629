// Single-binary pipeline: vocabulary construction, classifier training,
// dataset vectorization, mixture search, evaluation, synthetic worlds.
//
// Exit codes: 0 success, 1 usage error, 2 data error, 3 infeasible/convergence.
// Every failure prints one machine-parsable JSON line on stderr.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include "CLI11.hpp"
#include <nlohmann/json.hpp>

#include "d2v/classifier.hpp"
#include "d2v/corpus.hpp"
#include "d2v/da2.hpp"
#include "d2v/eval.hpp"
#include "d2v/regress.hpp"
#include "d2v/simplex.hpp"
#include "d2v/synth.hpp"
#include "d2v/vectorize.hpp"
#include "d2v/vocab.hpp"

namespace {

using json = nlohmann::json;
using namespace d2v;

constexpr const char* kToolVersion = "0.1.0";

std::string config_hash(const json& effective) {
    const std::string s = effective.dump();
    const std::uint64_t h = fnv1a64(s.data(), s.size(), 0xcbf29ce484222325ULL);
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

void stamp(json& out, std::uint64_t seed, const json& effective) {
    out["tool_version"] = kToolVersion;
    out["seed"] = seed;
    out["config_hash"] = config_hash(effective);
}

void write_json(const json& j, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw Error(errc::io_failure, "cannot write " + path);
    out << j.dump(2) << "\n";
}

void write_text(const std::string& text, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw Error(errc::io_failure, "cannot write " + path);
    out << text;
}

std::vector<double> parse_double_list(const std::string& csv) {
    std::vector<double> values;
    std::stringstream ss(csv);
    std::string item;
    while (std::getline(ss, item, ',')) values.push_back(std::stod(item));
    return values;
}

std::vector<std::size_t> parse_size_list(const std::string& csv) {
    std::vector<std::size_t> values;
    std::stringstream ss(csv);
    std::string item;
    while (std::getline(ss, item, ',')) values.push_back(std::stoull(item));
    return values;
}

// One numeric value per line; a trailing comma-separated field is accepted so
// rank tables round-trip. Lines that do not parse (headers) are skipped.
std::vector<double> read_value_column(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error(errc::io_failure, "cannot open " + path);
    std::vector<double> values;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        const std::size_t comma = line.rfind(',');
        const std::string field = comma == std::string::npos ? line : line.substr(comma + 1);
        try {
            values.push_back(std::stod(field));
        } catch (const std::exception&) {
            continue;
        }
    }
    if (values.empty()) throw Error(errc::malformed_record, "no numeric values in " + path);
    return values;
}

TokenBudget load_budget(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error(errc::io_failure, "cannot open " + path);
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw Error(errc::malformed_record, std::string(e.what()));
    }
    TokenBudget budget;
    budget.total_tokens = j.at("total_tokens").get<std::uint64_t>();
    budget.dataset_sizes = j.at("dataset_tokens").get<std::vector<std::uint64_t>>();
    return budget;
}

// JSON config files: scalar keys are option names, nested objects scope to
// subcommands ({"mix": {"da2": {"k": 1000}}}). Flags override config values.
class JsonConfig : public CLI::Config {
public:
    std::string to_config(const CLI::App*, bool, bool, std::string) const override { return "{}\n"; }

    std::vector<CLI::ConfigItem> from_config(std::istream& input) const override {
        json j;
        try {
            input >> j;
        } catch (const json::exception& e) {
            throw CLI::FileError(std::string("config: ") + e.what());
        }
        std::vector<CLI::ConfigItem> items;
        collect(j, {}, items);
        return items;
    }

private:
    static void collect(const json& j, std::vector<std::string> parents,
                        std::vector<CLI::ConfigItem>& items) {
        for (const auto& [key, value] : j.items()) {
            if (value.is_object()) {
                auto nested = parents;
                nested.push_back(key);
                collect(value, std::move(nested), items);
            } else {
                CLI::ConfigItem item;
                item.parents = parents;
                item.name = key;
                item.inputs = {value.is_string() ? value.get<std::string>() : value.dump()};
                items.push_back(std::move(item));
            }
        }
    }
};

json search_result_json(const SearchResult& result, const DistanceSpec* spec,
                        const CandidateSet& candidates, const std::string& table_path) {
    json j;
    j["ratio"] = result.ratio.weights();
    j["distance"] = result.report.best_score;
    if (spec) {
        j["spec"] = {{"kind", distance_kind_to_string(spec->kind)},
                     {"delta", spec->huber_delta},
                     {"reduction", spec->reduction == Reduction::mean ? "mean" : "sum"}};
    }
    j["candidates_meta"] = {{"count", candidates.candidates.size()},
                            {"concentration", candidates.concentration},
                            {"seed", candidates.seed},
                            {"rejected_count", candidates.rejected_count},
                            {"top_k", result.report.top_k}};
    j["top_table_csv"] = table_path;
    return j;
}

std::string score_table_csv(const SearchReport& report, std::uint64_t seed, const json& effective) {
    std::ostringstream out;
    out << "# tool_version=" << kToolVersion << " seed=" << seed
        << " config_hash=" << config_hash(effective) << "\n";
    out << "rank,candidate_index,score\n";
    for (std::size_t i = 0; i < report.table.size(); ++i)
        out << i + 1 << "," << report.table[i].index << "," << report.table[i].score << "\n";
    return out.str();
}

// Token distribution for candidate sampling: explicit shares win, then budget
// token counts, then uniform.
TokenDistribution resolve_token_dist(const std::string& shares_csv,
                                     const std::optional<TokenBudget>& budget, std::size_t m) {
    if (!shares_csv.empty()) return TokenDistribution(parse_double_list(shares_csv));
    if (budget) return TokenDistribution::from_counts(budget->dataset_sizes);
    return TokenDistribution(std::vector<double>(m, 1.0 / static_cast<double>(m)));
}

int run_app(int argc, char** argv) {
    CLI::App app{"Domain-vector data mixture toolkit"};
    app.require_subcommand(1);
    int exit_code = 0;

    app.config_formatter(std::make_shared<JsonConfig>());
    app.set_config("--config", "", "JSON config file; flags override its values");
    // Config keys for other subcommands are fine; unknown CLI flags are not.
    app.allow_config_extras(CLI::config_extras_mode::ignore);

    // ---- vocab ----
    auto* vocab_cmd = app.add_subcommand("vocab", "Meta-domain vocabulary construction");
    vocab_cmd->require_subcommand(1);
    {
        auto* build = vocab_cmd->add_subcommand("build", "Fit k-means vocabulary");
        struct VocabBuildOpts {
            std::string embeddings, out;
            std::size_t k = 8, restarts = 10, max_iter = 300;
            std::uint64_t seed = 0;
        };
        auto opts = std::make_shared<VocabBuildOpts>();
        build->add_option("--embeddings", opts->embeddings)->required();
        build->add_option("--k", opts->k);
        build->add_option("--restarts", opts->restarts);
        build->add_option("--max-iter", opts->max_iter);
        build->add_option("--seed", opts->seed);
        build->add_option("--out", opts->out)->required();
        build->callback([opts] {
            const json effective = {{"cmd", "vocab build"}, {"embeddings", opts->embeddings},
                                    {"k", opts->k},         {"restarts", opts->restarts},
                                    {"max_iter", opts->max_iter}, {"seed", opts->seed}};
            const auto embeddings = load_embeddings(opts->embeddings);
            const auto result = kmeans_fit(embeddings, opts->k, opts->seed, opts->max_iter,
                                           opts->restarts);
            save_vocabulary(result.vocabulary, opts->out);
            // re-open to stamp provenance
            std::ifstream in(opts->out);
            json j;
            in >> j;
            stamp(j, opts->seed, effective);
            write_json(j, opts->out);
            std::cout << "k=" << opts->k << " inertia=" << result.inertia << "\n";
        });

        auto* curve = vocab_cmd->add_subcommand("curve", "Inertia vs k curve (CSV)");
        struct VocabCurveOpts {
            std::string embeddings, ks, out;
            std::size_t restarts = 10;
            std::uint64_t seed = 0;
        };
        auto copts = std::make_shared<VocabCurveOpts>();
        curve->add_option("--embeddings", copts->embeddings)->required();
        curve->add_option("--ks", copts->ks)->required();
        curve->add_option("--restarts", copts->restarts);
        curve->add_option("--seed", copts->seed);
        curve->add_option("--out", copts->out)->required();
        curve->callback([copts] {
            const json effective = {{"cmd", "vocab curve"},
                                    {"embeddings", copts->embeddings},
                                    {"ks", copts->ks},
                                    {"restarts", copts->restarts},
                                    {"seed", copts->seed}};
            const auto embeddings = load_embeddings(copts->embeddings);
            const auto curve_points =
                inertia_curve(embeddings, parse_size_list(copts->ks), copts->seed, copts->restarts);
            std::ostringstream out;
            out << "# tool_version=" << kToolVersion << " seed=" << copts->seed
                << " config_hash=" << config_hash(effective) << "\n";
            out << "k,inertia\n";
            for (const auto& [k, inertia] : curve_points) out << k << "," << inertia << "\n";
            write_text(out.str(), copts->out);
        });
    }

    // ---- classifier ----
    auto* clf_cmd = app.add_subcommand("classifier", "Meta-domain classifier");
    clf_cmd->require_subcommand(1);
    {
        auto* train_cmd = clf_cmd->add_subcommand("train", "Train the built-in classifier");
        struct ClfTrainOpts {
            std::string corpus, out;
            std::size_t n = 0, buckets = 1u << 18, epochs = 5, batch = 64;
            double lr = 20.0, l2 = 1e-5;
            std::uint64_t seed = 0;
        };
        auto opts = std::make_shared<ClfTrainOpts>();
        train_cmd->add_option("--corpus", opts->corpus)->required();
        train_cmd->add_option("--n", opts->n);
        train_cmd->add_option("--buckets", opts->buckets);
        train_cmd->add_option("--epochs", opts->epochs);
        train_cmd->add_option("--batch", opts->batch);
        train_cmd->add_option("--lr", opts->lr);
        train_cmd->add_option("--l2", opts->l2);
        train_cmd->add_option("--seed", opts->seed);
        train_cmd->add_option("--out", opts->out)->required();
        train_cmd->callback([opts] {
            const json effective = {{"cmd", "classifier train"}, {"corpus", opts->corpus},
                                    {"n", opts->n},              {"buckets", opts->buckets},
                                    {"epochs", opts->epochs},    {"batch", opts->batch},
                                    {"lr", opts->lr},            {"l2", opts->l2},
                                    {"seed", opts->seed}};
            TrainConfig config;
            config.n_classes = opts->n;
            config.features.buckets = opts->buckets;
            config.epochs = opts->epochs;
            config.batch_size = opts->batch;
            config.learning_rate = opts->lr;
            config.l2 = opts->l2;
            config.seed = opts->seed;
            const auto docs = stream_documents(CorpusHandle(opts->corpus));
            const auto model = train(docs, config);
            save_model(model, opts->out);
            std::ifstream in(opts->out);
            json j;
            in >> j;
            stamp(j, opts->seed, effective);
            std::ofstream out(opts->out);
            out << j.dump() << "\n";
            std::cout << "holdout_accuracy=" << model.holdout_accuracy << "\n";
        });

        auto* predict_cmd = clf_cmd->add_subcommand("predict", "Per-document probabilities");
        struct ClfPredictOpts {
            std::string corpus, model, out;
        };
        auto popts = std::make_shared<ClfPredictOpts>();
        predict_cmd->add_option("--corpus", popts->corpus)->required();
        predict_cmd->add_option("--model", popts->model)->required();
        predict_cmd->add_option("--out", popts->out)->required();
        predict_cmd->callback([popts] {
            const auto model = load_model(popts->model);
            const auto docs = stream_documents(CorpusHandle(popts->corpus));
            std::vector<std::pair<std::string, DomainVector>> rows;
            rows.reserve(docs.size());
            std::size_t i = 0;
            for (const auto& doc : docs) {
                const std::string id = doc.id ? *doc.id : "line-" + std::to_string(i);
                rows.emplace_back(id, predict_proba(model, doc.text));
                ++i;
            }
            export_proba(rows, popts->out);
        });
    }

    // ---- vectorize ----
    {
        auto* vec_cmd = app.add_subcommand("vectorize", "Dataset domain vectors (matrix)");
        struct VectorizeOpts {
            std::string corpora, model, proba, out;
            std::size_t n_samples = 1000, threads = 1;
            std::uint64_t seed = 0;
        };
        auto opts = std::make_shared<VectorizeOpts>();
        vec_cmd->add_option("--corpora", opts->corpora, "JSON list of corpus paths, or one .jsonl path")
            ->required();
        vec_cmd->add_option("--model", opts->model);
        vec_cmd->add_option("--proba", opts->proba);
        vec_cmd->add_option("--n-samples", opts->n_samples);
        vec_cmd->add_option("--seed", opts->seed);
        vec_cmd->add_option("--threads", opts->threads);
        vec_cmd->add_option("--out", opts->out)->required();
        vec_cmd->callback([opts] {
            const json effective = {{"cmd", "vectorize"},   {"corpora", opts->corpora},
                                    {"model", opts->model}, {"proba", opts->proba},
                                    {"n_samples", opts->n_samples}, {"seed", opts->seed}};
            std::vector<CorpusHandle> handles;
            if (opts->corpora.size() > 5 &&
                opts->corpora.compare(opts->corpora.size() - 5, 5, ".json") == 0) {
                std::ifstream in(opts->corpora);
                if (!in) throw Error(errc::io_failure, "cannot open " + opts->corpora);
                json list;
                in >> list;
                for (const auto& p : list) handles.emplace_back(p.get<std::string>());
            } else {
                handles.emplace_back(opts->corpora);
            }
            LinearClassifierModel model;
            ClassifierSource source = ClassifierSource::from_proba(opts->proba);
            if (!opts->model.empty()) {
                model = load_model(opts->model);
                source = ClassifierSource::from_model(model);
            } else if (opts->proba.empty()) {
                throw Error(errc::bad_argument, "need --model or --proba");
            }
            const auto rec =
                dataset_matrix(handles, source, opts->n_samples, opts->seed, opts->threads);
            save_matrix_record(rec, opts->out);
            std::ifstream in(opts->out);
            json j;
            in >> j;
            stamp(j, opts->seed, effective);
            write_json(j, opts->out);
        });
    }

    // ---- mix ----
    auto* mix_cmd = app.add_subcommand("mix", "Optimal mixture search");
    mix_cmd->require_subcommand(1);
    {
        auto* da2_cmd = mix_cmd->add_subcommand("da2", "Training-free search by distribution alignment");
        struct MixDa2Opts {
            std::string matrix, valid, budget, token_shares, distance = "huber", out;
            std::size_t k = 100000, top_k = 100, threads = 1;
            double gamma = 1.0, delta = 0.005;
            std::string reduction = "mean";
            std::uint64_t seed = 0;
        };
        auto opts = std::make_shared<MixDa2Opts>();
        da2_cmd->add_option("--matrix", opts->matrix)->required();
        da2_cmd->add_option("--valid", opts->valid)->required();
        da2_cmd->add_option("--k", opts->k);
        da2_cmd->add_option("--gamma", opts->gamma);
        da2_cmd->add_option("--distance", opts->distance);
        da2_cmd->add_option("--delta", opts->delta);
        da2_cmd->add_option("--reduction", opts->reduction);
        da2_cmd->add_option("--top-k", opts->top_k);
        da2_cmd->add_option("--seed", opts->seed);
        da2_cmd->add_option("--budget", opts->budget);
        da2_cmd->add_option("--token-shares", opts->token_shares);
        da2_cmd->add_option("--threads", opts->threads);
        da2_cmd->add_option("--out", opts->out)->required();
        da2_cmd->callback([opts] {
            const json effective = {{"cmd", "mix da2"},       {"matrix", opts->matrix},
                                    {"valid", opts->valid},   {"k", opts->k},
                                    {"gamma", opts->gamma},   {"distance", opts->distance},
                                    {"delta", opts->delta},   {"reduction", opts->reduction},
                                    {"top_k", opts->top_k},   {"seed", opts->seed},
                                    {"budget", opts->budget}, {"token_shares", opts->token_shares}};
            const auto matrix_rec = load_matrix_record(opts->matrix);
            const auto valid_rec = load_vector_record(opts->valid);
            std::optional<TokenBudget> budget;
            if (!opts->budget.empty()) budget = load_budget(opts->budget);
            const auto a =
                resolve_token_dist(opts->token_shares, budget, matrix_rec.matrix.cols());
            const auto candidates = sample_candidates(a, opts->k, opts->gamma, opts->seed, budget);
            DistanceSpec spec;
            spec.kind = distance_kind_from_string(opts->distance);
            spec.huber_delta = opts->delta;
            spec.reduction = opts->reduction == "sum" ? Reduction::sum : Reduction::mean;
            const auto result = optimize_da2(matrix_rec.matrix, valid_rec.vector, candidates,
                                             spec, opts->top_k, opts->threads);
            if (budget && !budget->feasible(result.ratio))
                throw Error(errc::infeasible_budget, "top-k average violates the token budget");
            const std::string table_path = opts->out + ".top.csv";
            write_text(score_table_csv(result.report, opts->seed, effective), table_path);
            json j = search_result_json(result, &spec, candidates, table_path);
            stamp(j, opts->seed, effective);
            write_json(j, opts->out);
            std::cout << "distance=" << result.report.best_score << "\n";
        });

        auto* regress_cmd = mix_cmd->add_subcommand("regress", "Per-meta-domain loss regression");
        regress_cmd->require_subcommand(1);

        auto* fit_cmd = regress_cmd->add_subcommand("fit", "Fit per-meta-domain regressors");
        struct RegressFitOpts {
            std::string samples, matrix, kind = "gbdt", out;
            double holdout = 0.125, ridge_lambda = 1e-3, lr = 0.1, subsample = 0.8;
            std::size_t trees = 200, depth = 4;
            std::uint64_t seed = 0;
        };
        auto fopts = std::make_shared<RegressFitOpts>();
        fit_cmd->add_option("--samples", fopts->samples)->required();
        fit_cmd->add_option("--matrix", fopts->matrix);
        fit_cmd->add_option("--kind", fopts->kind);
        fit_cmd->add_option("--holdout", fopts->holdout);
        fit_cmd->add_option("--ridge-lambda", fopts->ridge_lambda);
        fit_cmd->add_option("--trees", fopts->trees);
        fit_cmd->add_option("--depth", fopts->depth);
        fit_cmd->add_option("--lr", fopts->lr);
        fit_cmd->add_option("--subsample", fopts->subsample);
        fit_cmd->add_option("--seed", fopts->seed);
        fit_cmd->add_option("--out", fopts->out)->required();
        fit_cmd->callback([fopts] {
            const json effective = {{"cmd", "mix regress fit"},
                                    {"samples", fopts->samples},
                                    {"matrix", fopts->matrix},
                                    {"kind", fopts->kind},
                                    {"holdout", fopts->holdout},
                                    {"ridge_lambda", fopts->ridge_lambda},
                                    {"trees", fopts->trees},
                                    {"depth", fopts->depth},
                                    {"lr", fopts->lr},
                                    {"subsample", fopts->subsample},
                                    {"seed", fopts->seed}};
            const auto samples = load_fit_samples(fopts->samples);
            RegressConfig config;
            config.kind = regressor_kind_from_string(fopts->kind);
            config.holdout_fraction = fopts->holdout;
            config.ridge_lambda = fopts->ridge_lambda;
            config.gbdt.num_trees = fopts->trees;
            config.gbdt.max_depth = fopts->depth;
            config.gbdt.learning_rate = fopts->lr;
            config.gbdt.subsample = fopts->subsample;
            config.seed = fopts->seed;
            std::optional<DatasetMatrixRecord> matrix_rec;
            if (!fopts->matrix.empty()) matrix_rec = load_matrix_record(fopts->matrix);
            const auto set =
                fit_regressors(samples, matrix_rec ? &matrix_rec->matrix : nullptr, config);
            save_loss_models(set, fopts->out);
            std::ifstream in(fopts->out);
            json j;
            in >> j;
            stamp(j, fopts->seed, effective);
            std::ofstream out(fopts->out);
            out << j.dump() << "\n";
            double median = 0.0;
            if (!set.holdout_spearman.empty()) {
                auto s = set.holdout_spearman;
                std::sort(s.begin(), s.end());
                median = s[s.size() / 2];
            }
            std::cout << "median_holdout_spearman=" << median << "\n";
        });

        auto* search_cmd = regress_cmd->add_subcommand("search", "Search candidates by predicted loss");
        struct RegressSearchOpts {
            std::string models, matrix, valid, budget, token_shares, out;
            std::size_t k = 100000, top_k = 100, threads = 1;
            double gamma = 1.0;
            std::uint64_t seed = 0;
        };
        auto sopts = std::make_shared<RegressSearchOpts>();
        search_cmd->add_option("--models", sopts->models)->required();
        search_cmd->add_option("--matrix", sopts->matrix)->required();
        search_cmd->add_option("--valid", sopts->valid)->required();
        search_cmd->add_option("--k", sopts->k);
        search_cmd->add_option("--gamma", sopts->gamma);
        search_cmd->add_option("--top-k", sopts->top_k);
        search_cmd->add_option("--seed", sopts->seed);
        search_cmd->add_option("--budget", sopts->budget);
        search_cmd->add_option("--token-shares", sopts->token_shares);
        search_cmd->add_option("--threads", sopts->threads);
        search_cmd->add_option("--out", sopts->out)->required();
        search_cmd->callback([sopts] {
            const json effective = {{"cmd", "mix regress search"}, {"models", sopts->models},
                                    {"matrix", sopts->matrix},     {"valid", sopts->valid},
                                    {"k", sopts->k},               {"gamma", sopts->gamma},
                                    {"top_k", sopts->top_k},       {"seed", sopts->seed},
                                    {"budget", sopts->budget},
                                    {"token_shares", sopts->token_shares}};
            const auto matrix_rec = load_matrix_record(sopts->matrix);
            const auto valid_rec = load_vector_record(sopts->valid);
            const auto models = load_loss_models(sopts->models);
            std::optional<TokenBudget> budget;
            if (!sopts->budget.empty()) budget = load_budget(sopts->budget);
            const auto a =
                resolve_token_dist(sopts->token_shares, budget, matrix_rec.matrix.cols());
            const auto candidates = sample_candidates(a, sopts->k, sopts->gamma, sopts->seed, budget);
            const auto result = search_regress(matrix_rec.matrix, valid_rec.vector, models,
                                               candidates, sopts->top_k, sopts->threads);
            const std::string table_path = sopts->out + ".top.csv";
            write_text(score_table_csv(result.report, sopts->seed, effective), table_path);
            json j = search_result_json(result, nullptr, candidates, table_path);
            j["predicted_loss"] = result.report.best_score;
            stamp(j, sopts->seed, effective);
            write_json(j, sopts->out);
            std::cout << "predicted_loss=" << result.report.best_score << "\n";
        });
    }

    // ---- eval ----
    auto* eval_cmd = app.add_subcommand("eval", "Ranking metrics and baselines");
    eval_cmd->require_subcommand(1);
    {
        auto* rank_cmd = eval_cmd->add_subcommand("rank", "Correlate predicted vs actual scores");
        struct EvalRankOpts {
            std::string pred, actual, out;
        };
        auto opts = std::make_shared<EvalRankOpts>();
        rank_cmd->add_option("--pred", opts->pred)->required();
        rank_cmd->add_option("--actual", opts->actual)->required();
        rank_cmd->add_option("--out", opts->out)->required();
        rank_cmd->callback([opts] {
            const json effective = {{"cmd", "eval rank"}, {"pred", opts->pred}, {"actual", opts->actual}};
            const auto report =
                rank_mixtures(read_value_column(opts->pred), read_value_column(opts->actual));
            const std::string table_path = opts->out + ".table.csv";
            write_text(report.to_csv(), table_path);
            json j = {{"pearson", report.pearson},
                      {"spearman", report.spearman},
                      {"n", report.n},
                      {"table_csv", table_path}};
            stamp(j, 0, effective);
            write_json(j, opts->out);
            std::cout << "spearman=" << report.spearman << " pearson=" << report.pearson << "\n";
        });

        auto* knn_cmd = eval_cmd->add_subcommand("knn-baseline", "Embedding-kNN domain vector");
        struct KnnOpts {
            std::string embeddings, vocab, pool = "per-document", out;
            std::size_t k = 1;
        };
        auto kopts = std::make_shared<KnnOpts>();
        knn_cmd->add_option("--embeddings", kopts->embeddings)->required();
        knn_cmd->add_option("--vocab", kopts->vocab)->required();
        knn_cmd->add_option("--k", kopts->k);
        knn_cmd->add_option("--pool", kopts->pool);
        knn_cmd->add_option("--out", kopts->out)->required();
        knn_cmd->callback([kopts] {
            const json effective = {{"cmd", "eval knn-baseline"},
                                    {"embeddings", kopts->embeddings},
                                    {"vocab", kopts->vocab},
                                    {"k", kopts->k},
                                    {"pool", kopts->pool}};
            const auto embeddings = load_embeddings(kopts->embeddings);
            const auto vocab = load_vocabulary(kopts->vocab);
            const auto pooling =
                kopts->pool == "mean" ? KnnPooling::mean : KnnPooling::per_document;
            const auto v = knn_domain_vector(embeddings, vocab.centroids, kopts->k, pooling);
            json j = {{"dataset", kopts->embeddings}, {"n", v.size()}, {"vector", v.entries()},
                      {"num_sampled", embeddings.vectors.size()}, {"model_hash", "knn-baseline"}};
            stamp(j, 0, effective);
            write_json(j, kopts->out);
        });

        auto* rand_cmd = eval_cmd->add_subcommand("random-baseline", "Uniform random scores");
        struct RandOpts {
            std::string out;
            std::size_t count = 2;
            std::uint64_t seed = 0;
        };
        auto ropts = std::make_shared<RandOpts>();
        rand_cmd->add_option("--count", ropts->count)->required();
        rand_cmd->add_option("--seed", ropts->seed);
        rand_cmd->add_option("--out", ropts->out)->required();
        rand_cmd->callback([ropts] {
            const json effective = {{"cmd", "eval random-baseline"},
                                    {"count", ropts->count},
                                    {"seed", ropts->seed}};
            const auto scores = random_baseline(ropts->count, ropts->seed);
            std::ostringstream out;
            out << "# tool_version=" << kToolVersion << " seed=" << ropts->seed
                << " config_hash=" << config_hash(effective) << "\n";
            out << "index,score\n";
            for (std::size_t i = 0; i < scores.size(); ++i) out << i << "," << scores[i] << "\n";
            write_text(out.str(), ropts->out);
        });
    }

    // ---- synth ----
    auto* synth_cmd = app.add_subcommand("synth", "Synthetic world generator and loss oracle");
    synth_cmd->require_subcommand(1);
    {
        auto* world_cmd = synth_cmd->add_subcommand("world", "Generate a synthetic world");
        struct WorldOpts {
            std::string out;
            std::size_t n = 6, alphabet = 100, doc_length = 64;
            std::uint64_t seed = 0;
        };
        auto opts = std::make_shared<WorldOpts>();
        world_cmd->add_option("--n", opts->n);
        world_cmd->add_option("--alphabet", opts->alphabet);
        world_cmd->add_option("--doc-length", opts->doc_length);
        world_cmd->add_option("--seed", opts->seed);
        world_cmd->add_option("--out", opts->out)->required();
        world_cmd->callback([opts] {
            const json effective = {{"cmd", "synth world"},
                                    {"n", opts->n},
                                    {"alphabet", opts->alphabet},
                                    {"doc_length", opts->doc_length},
                                    {"seed", opts->seed}};
            const auto world = generate_world(opts->n, opts->alphabet, opts->doc_length, opts->seed);
            save_world(world, opts->out);
            std::ifstream in(opts->out);
            json j;
            in >> j;
            stamp(j, opts->seed, effective);
            std::ofstream out(opts->out);
            out << j.dump() << "\n";
        });

        auto* dataset_cmd = synth_cmd->add_subcommand("dataset", "Materialize a mixed dataset");
        struct DatasetOpts {
            std::string world, weights, out;
            std::size_t docs = 1000;
            std::uint64_t seed = 0;
        };
        auto dopts = std::make_shared<DatasetOpts>();
        dataset_cmd->add_option("--world", dopts->world)->required();
        dataset_cmd->add_option("--weights", dopts->weights)->required();
        dataset_cmd->add_option("--docs", dopts->docs);
        dataset_cmd->add_option("--seed", dopts->seed);
        dataset_cmd->add_option("--out", dopts->out)->required();
        dataset_cmd->callback([dopts] {
            const auto world = load_world(dopts->world);
            const DomainVector weights(parse_double_list(dopts->weights));
            generate_dataset(world, weights, dopts->docs, dopts->seed, dopts->out);
        });

        auto* oracle_cmd = synth_cmd->add_subcommand("oracle", "Analytic per-meta-domain losses");
        struct OracleOpts {
            std::string world, matrix, ratio, valid, out;
        };
        auto oopts = std::make_shared<OracleOpts>();
        oracle_cmd->add_option("--world", oopts->world)->required();
        oracle_cmd->add_option("--matrix", oopts->matrix)->required();
        oracle_cmd->add_option("--ratio", oopts->ratio)->required();
        oracle_cmd->add_option("--valid", oopts->valid);
        oracle_cmd->add_option("--out", oopts->out)->required();
        oracle_cmd->callback([oopts] {
            const json effective = {{"cmd", "synth oracle"},   {"world", oopts->world},
                                    {"matrix", oopts->matrix}, {"ratio", oopts->ratio},
                                    {"valid", oopts->valid}};
            const auto world = load_world(oopts->world);
            const auto matrix_rec = load_matrix_record(oopts->matrix);
            const MixtureRatio r(parse_double_list(oopts->ratio));
            const auto losses = oracle_loss(world, r, matrix_rec.matrix);
            json j = {{"losses", losses}, {"eps", 1e-9}};
            if (!oopts->valid.empty()) {
                const auto valid_rec = load_vector_record(oopts->valid);
                if (valid_rec.vector.size() != losses.size())
                    throw Error(errc::dimension_mismatch, "validation vector does not match world.n");
                double total = 0.0;
                for (std::size_t i = 0; i < losses.size(); ++i)
                    total += valid_rec.vector[i] * losses[i];
                j["valid_loss"] = total;
            }
            stamp(j, 0, effective);
            write_json(j, oopts->out);
        });
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << json{{"error", "UsageError"}, {"message", e.what()}}.dump() << "\n";
        return 1;
    }
    return exit_code;
}

} // namespace

int main(int argc, char** argv) {
    try {
        return run_app(argc, argv);
    } catch (const d2v::Error& e) {
        std::cerr << json{{"error", e.name()}, {"message", e.what()}}.dump() << "\n";
        return d2v::errc_exit_code(e.code());
    } catch (const std::exception& e) {
        std::cerr << json{{"error", "Internal"}, {"message", e.what()}}.dump() << "\n";
        return 2;
    }
}
