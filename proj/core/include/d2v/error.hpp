#pragma once

#include <stdexcept>
#include <string>

namespace d2v {

enum class errc {
    // usage / dimension errors
    index_out_of_range,
    dimension_mismatch,
    length_mismatch,
    k_too_large,
    bad_argument,
    // data errors
    negative_entry,
    sum_out_of_tolerance,
    io_failure,
    malformed_record,
    empty_corpus,
    empty_document,
    single_class_corpus,
    label_out_of_range,
    too_few_points,
    too_few_samples,
    degenerate_embeddings,
    missing_metadata,
    zero_variance,
    alphabet_too_small,
    // infeasibility / convergence errors
    infeasible_budget,
    retry_ceiling_exceeded,
};

inline const char* errc_name(errc c) {
    switch (c) {
        case errc::index_out_of_range: return "IndexOutOfRange";
        case errc::dimension_mismatch: return "DimensionMismatch";
        case errc::length_mismatch: return "LengthMismatch";
        case errc::k_too_large: return "KTooLarge";
        case errc::bad_argument: return "BadArgument";
        case errc::negative_entry: return "NegativeEntry";
        case errc::sum_out_of_tolerance: return "SumOutOfTolerance";
        case errc::io_failure: return "IoFailure";
        case errc::malformed_record: return "MalformedRecord";
        case errc::empty_corpus: return "EmptyCorpus";
        case errc::empty_document: return "EmptyDocument";
        case errc::single_class_corpus: return "SingleClassCorpus";
        case errc::label_out_of_range: return "LabelOutOfRange";
        case errc::too_few_points: return "TooFewPoints";
        case errc::too_few_samples: return "TooFewSamples";
        case errc::degenerate_embeddings: return "DegenerateEmbeddings";
        case errc::missing_metadata: return "MissingMetadata";
        case errc::zero_variance: return "ZeroVariance";
        case errc::alphabet_too_small: return "AlphabetTooSmall";
        case errc::infeasible_budget: return "InfeasibleBudget";
        case errc::retry_ceiling_exceeded: return "RetryCeilingExceeded";
    }
    return "Unknown";
}

// Exit-code category used by the CLI: 1 usage, 2 data, 3 infeasible/convergence.
inline int errc_exit_code(errc c) {
    switch (c) {
        case errc::index_out_of_range:
        case errc::dimension_mismatch:
        case errc::length_mismatch:
        case errc::k_too_large:
        case errc::bad_argument:
            return 1;
        case errc::infeasible_budget:
        case errc::retry_ceiling_exceeded:
            return 3;
        default:
            return 2;
    }
}

class Error : public std::runtime_error {
public:
    Error(errc code, const std::string& msg)
        : std::runtime_error(std::string(errc_name(code)) + ": " + msg), code_(code) {}

    errc code() const { return code_; }
    const char* name() const { return errc_name(code_); }

private:
    errc code_;
};

} // namespace d2v
