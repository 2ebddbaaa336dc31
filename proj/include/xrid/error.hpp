// Error taxonomy shared by all xrid modules. Every failure carries a stable
// category token so the CLI can emit single-line machine-parsable diagnostics.
#pragma once

#include <stdexcept>
#include <string>
#include <utility>

namespace xrid {

class Error : public std::runtime_error {
public:
    Error(std::string category, const std::string& message)
        : std::runtime_error(category + ": " + message), category_(std::move(category)) {}

    const std::string& category() const noexcept { return category_; }

private:
    std::string category_;
};

#define XRID_ERROR_TYPE(NAME, TOKEN)                    \
    class NAME : public Error {                         \
    public:                                             \
        explicit NAME(const std::string& m) : Error(TOKEN, m) {} \
    }

XRID_ERROR_TYPE(SchemaError, "schema-error");
XRID_ERROR_TYPE(FormatError, "format-error");
XRID_ERROR_TYPE(EmptyRecordingError, "empty-recording-error");
XRID_ERROR_TYPE(ParameterError, "parameter-error");
XRID_ERROR_TYPE(TrimError, "trim-error");
XRID_ERROR_TYPE(SplitError, "split-error");
XRID_ERROR_TYPE(EnrollmentError, "enrollment-error");
XRID_ERROR_TYPE(UnsupportedEncodingError, "unsupported-encoding-error");
XRID_ERROR_TYPE(TooShortError, "too-short-error");
XRID_ERROR_TYPE(DegenerateRotationError, "degenerate-rotation-error");
XRID_ERROR_TYPE(ShapeError, "shape-error");
XRID_ERROR_TYPE(LabelError, "label-error");
XRID_ERROR_TYPE(StateError, "state-error");
XRID_ERROR_TYPE(TrainingError, "training-error");
XRID_ERROR_TYPE(CheckpointError, "checkpoint-error");
XRID_ERROR_TYPE(ConfigError, "config-error");
XRID_ERROR_TYPE(IoError, "io-error");

#undef XRID_ERROR_TYPE

} // namespace xrid
