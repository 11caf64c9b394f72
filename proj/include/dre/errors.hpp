#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace dre {

enum class ErrorCode {
    ProviderUnavailable,
    BudgetExceeded,
    Interrupted,
    MalformedOutput,
    FetchFailed,
    PageNotFound,
    DomainUnknown,
    PartialGeneration,
    EmptyBaseline,
    PipelineEmpty,
    DimensionCollision,
    NegativeWeight,
    EmptyCriteria,
    ScoreOutOfRange,
    CriterionMismatch,
    MissingDimension,
    CardinalityMismatch,
    EmptyReport,
    LabelUnknownValue,
    SchemaViolation,
    StoreUnavailable,
    RunNotFound,
    CorruptRecord,
    NoResults,
    ConfigInvalid,
    CacheMiss,
    Precondition,
    Internal,
};

std::string_view error_code_name(ErrorCode code);

// Single exception type for every harness-level failure. `detail` carries a
// machine-readable discriminator (e.g. "empty_response") on top of the code.
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, std::string message, std::string detail = {})
        : std::runtime_error(std::move(message)), code_(code), detail_(std::move(detail)) {}

    ErrorCode code() const { return code_; }
    const std::string& detail() const { return detail_; }
    std::string_view code_name() const { return error_code_name(code_); }

private:
    ErrorCode code_;
    std::string detail_;
};

// Pipelines isolate per-item failures as warnings so one bad item cannot sink
// a run. These two codes are different: an interrupt is a user abort, and a
// cache miss under replay means the run cannot be reproduced at all. Both must
// surface immediately instead of being downgraded.
inline void rethrow_if_fatal(const Error& e) {
    if (e.code() == ErrorCode::Interrupted || e.code() == ErrorCode::CacheMiss) throw e;
}

}  // namespace dre
