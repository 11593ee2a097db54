#pragma once

#include <stdexcept>
#include <string>

namespace tcshpt {

enum class Errc {
    // validation
    kUnknownParameter,
    kInvalidChoice,
    kMalformedValue,
    kInvalidSpace,
    // selection / summarization
    kNoCompletedTrials,
    kEmptyLog,
    // agents
    kParseFailure,
    // backend
    kTimeout,
    kHttpError,
    kEmptyResponse,
    kScriptExhausted,
    kBackendUnavailable,
    // executor
    kObjectiveNotFound,
    kCommandTimeout,
    kProtocolViolation,
    // orchestrator / io / config
    kAborted,
    kIoError,
    kInvalidExperiment,
};

const char* to_string(Errc c);

class Error : public std::runtime_error {
public:
    Error(Errc code, std::string message)
        : std::runtime_error(std::move(message)), code_(code) {}

    Error(Errc code, std::string message, std::string param)
        : std::runtime_error(std::move(message)),
          code_(code),
          param_(std::move(param)) {}

    Errc code() const { return code_; }
    // Parameter name for validation errors, empty otherwise.
    const std::string& param() const { return param_; }
    // HTTP status for kHttpError, 0 otherwise.
    int http_status() const { return http_status_; }
    void set_http_status(int status) { http_status_ = status; }

private:
    Errc code_;
    std::string param_;
    int http_status_ = 0;
};

}  // namespace tcshpt
