#include "d2v/vectorize.hpp"

#include <fstream>
#include <map>
#include <thread>

#include <nlohmann/json.hpp>

namespace d2v {

namespace {

using json = nlohmann::json;

// Sum classifier outputs over docs [begin, end) into `acc`.
void classify_range(const LinearClassifierModel& model, const std::vector<Document>& docs,
                    std::size_t begin, std::size_t end, std::vector<double>& acc) {
    for (std::size_t i = begin; i < end; ++i) {
        const DomainVector p = predict_proba(model, docs[i].text);
        for (std::size_t j = 0; j < p.size(); ++j) acc[j] += p[j];
    }
}

} // namespace

DomainVectorRecord domain_vector(const CorpusHandle& dataset, const ClassifierSource& source,
                                 std::size_t n_samples, std::uint64_t seed, std::size_t threads) {
    if (n_samples == 0) throw Error(errc::bad_argument, "n_samples must be >= 1");
    DomainVectorRecord rec{dataset.path(), DomainVector({1.0}), 0, false, seed, ""};

    if (source.model) {
        const SampleResult sample = sample_documents(dataset, n_samples, seed);
        const std::size_t count = sample.docs.size();
        const std::size_t n = source.model->n;
        std::vector<double> acc(n, 0.0);
        // Fixed-size chunks with per-chunk partials summed in chunk order:
        // the reduction tree is the same for every thread count, so results
        // are bit-identical whether run serial or parallel.
        constexpr std::size_t kChunk = 256;
        const std::size_t nchunks = (count + kChunk - 1) / kChunk;
        std::vector<std::vector<double>> partials(nchunks, std::vector<double>(n, 0.0));
        const std::size_t nthreads = std::max<std::size_t>(1, std::min(threads, nchunks));
        auto work = [&](std::size_t t) {
            for (std::size_t c = t; c < nchunks; c += nthreads)
                classify_range(*source.model, sample.docs, c * kChunk,
                               std::min((c + 1) * kChunk, count), partials[c]);
        };
        if (nthreads == 1) {
            work(0);
        } else {
            std::vector<std::thread> pool;
            for (std::size_t t = 0; t < nthreads; ++t) pool.emplace_back(work, t);
            for (auto& th : pool) th.join();
        }
        for (const auto& part : partials)
            for (std::size_t j = 0; j < n; ++j) acc[j] += part[j];
        for (double& v : acc) v /= static_cast<double>(count);
        rec.vector = DomainVector(std::move(acc), kInternalTolerance);
        rec.num_sampled = count;
        rec.undersized = sample.undersized;
        rec.model_hash = model_hash(*source.model);
    } else {
        // Imported probabilities: join on document id over the same sample.
        const auto rows = import_proba(source.proba_path);
        if (rows.empty()) throw Error(errc::empty_corpus, source.proba_path);
        std::map<std::string, const DomainVector*> by_id;
        for (const auto& [id, v] : rows) by_id[id] = &v;
        const SampleResult sample = sample_documents(dataset, n_samples, seed);
        const std::size_t n = rows[0].second.size();
        std::vector<double> acc(n, 0.0);
        std::size_t matched = 0;
        for (const auto& doc : sample.docs) {
            if (!doc.id)
                throw Error(errc::malformed_record, "document without id cannot join imported probabilities");
            auto it = by_id.find(*doc.id);
            if (it == by_id.end())
                throw Error(errc::malformed_record, "no imported probabilities for id " + *doc.id);
            for (std::size_t j = 0; j < n; ++j) acc[j] += (*it->second)[j];
            ++matched;
        }
        for (double& v : acc) v /= static_cast<double>(matched);
        rec.vector = DomainVector(std::move(acc), kInternalTolerance);
        rec.num_sampled = matched;
        rec.undersized = sample.undersized;
        rec.model_hash = "imported";
    }
    return rec;
}

DatasetMatrixRecord dataset_matrix(const std::vector<CorpusHandle>& datasets,
                                   const ClassifierSource& source, std::size_t n_samples,
                                   std::uint64_t seed, std::size_t threads) {
    if (datasets.empty()) throw Error(errc::bad_argument, "need at least one dataset");
    std::vector<DomainVectorRecord> records;
    records.reserve(datasets.size());
    std::vector<DomainVector> columns;
    for (std::size_t j = 0; j < datasets.size(); ++j) {
        records.push_back(domain_vector(datasets[j], source, n_samples, seed + j, threads));
        columns.push_back(records.back().vector);
    }
    return {DatasetMatrix(std::move(columns)), std::move(records)};
}

namespace {

json record_to_json(const DomainVectorRecord& rec) {
    return json{{"dataset", rec.dataset},
                {"n", rec.vector.size()},
                {"vector", rec.vector.entries()},
                {"num_sampled", rec.num_sampled},
                {"undersized", rec.undersized},
                {"seed", rec.seed},
                {"model_hash", rec.model_hash}};
}

DomainVectorRecord record_from_json(const json& j) {
    return DomainVectorRecord{j.value("dataset", std::string()),
                              DomainVector(j.at("vector").get<std::vector<double>>()),
                              j.value("num_sampled", std::size_t{0}),
                              j.value("undersized", false),
                              j.value("seed", 0ULL),
                              j.value("model_hash", std::string())};
}

} // namespace

void save_vector_record(const DomainVectorRecord& rec, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw Error(errc::io_failure, "cannot write " + path);
    out << record_to_json(rec).dump(2) << "\n";
}

DomainVectorRecord load_vector_record(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error(errc::io_failure, "cannot open " + path);
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw Error(errc::malformed_record, std::string(e.what()));
    }
    // A single-column matrix record is accepted as a vector record, so a
    // vectorized validation corpus can be used directly.
    if (j.contains("columns")) {
        const auto& cols = j.at("columns");
        if (cols.size() != 1)
            throw Error(errc::malformed_record,
                        path + " holds " + std::to_string(cols.size()) +
                            " columns, expected a single vector");
        return record_from_json(cols.at(0));
    }
    return record_from_json(j);
}

void save_matrix_record(const DatasetMatrixRecord& rec, const std::string& path) {
    json j;
    j["columns"] = json::array();
    for (const auto& r : rec.records) j["columns"].push_back(record_to_json(r));
    std::ofstream out(path);
    if (!out) throw Error(errc::io_failure, "cannot write " + path);
    out << j.dump(2) << "\n";
}

DatasetMatrixRecord load_matrix_record(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error(errc::io_failure, "cannot open " + path);
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw Error(errc::malformed_record, std::string(e.what()));
    }
    DatasetMatrixRecord rec{DatasetMatrix({DomainVector({1.0})}), {}};
    std::vector<DomainVector> columns;
    for (const auto& cj : j.at("columns")) {
        rec.records.push_back(record_from_json(cj));
        columns.push_back(rec.records.back().vector);
    }
    rec.matrix = DatasetMatrix(std::move(columns));
    return rec;
}

} // namespace d2v
