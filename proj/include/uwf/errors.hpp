#pragma once

#include <stdexcept>
#include <string>

namespace uwf {

enum class Err {
    // workflow engine
    DuplicateKind,
    DuplicateQueueName,
    UnknownEntryQueue,
    UnknownKind,
    UnknownIncident,
    InvalidStateTransition,
    UnknownQueue,
    IncidentNotActive,
    UnknownHandler,
    // simulation manager
    NoEligibleMachine,
    BadCallbackQueue,
    TemplateNotFound,
    UnknownSimulation,
    BadWalltime,
    // testbed
    UnknownJob,
    UnknownMachine,
    LivelockGuard,
    // data manager
    DataManagerError,
    UnknownDataItem,
    // machine runner
    SyntaxError,
    UnknownReference,
    CycleDetected,
    TypeMismatch,
    UnboundRequiredInput,
    MemberTooWide,
    StepFailed,
    // bench / misc
    ConfigError,
    IoError,
};

const char* err_name(Err e);

class Error : public std::runtime_error {
public:
    Error(Err code, std::string message)
        : std::runtime_error(std::string(err_name(code)) + ": " + message),
          code_(code) {}

    Err code() const { return code_; }

private:
    Err code_;
};

}  // namespace uwf
