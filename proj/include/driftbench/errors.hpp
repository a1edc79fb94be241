#pragma once

#include <stdexcept>
#include <string>

namespace driftbench {

// Error taxonomy mirrors the CLI exit codes: config problems are caught at
// parse/validation time, ingest problems while reading external files,
// everything else surfaces as a runtime failure.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct ConfigError : Error {
    using Error::Error;
};

struct IngestError : Error {
    using Error::Error;
};

struct PipelineError : Error {
    using Error::Error;
};

struct TrainError : Error {
    using Error::Error;
};

struct PredictError : Error {
    using Error::Error;
};

struct MetricError : Error {
    using Error::Error;
};

struct RegimeError : Error {
    using Error::Error;
};

struct ReportError : Error {
    using Error::Error;
};

}  // namespace driftbench
