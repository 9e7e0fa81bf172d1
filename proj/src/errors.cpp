#include "uwf/errors.hpp"

namespace uwf {

const char* err_name(Err e) {
    switch (e) {
        case Err::DuplicateKind: return "DuplicateKind";
        case Err::DuplicateQueueName: return "DuplicateQueueName";
        case Err::UnknownEntryQueue: return "UnknownEntryQueue";
        case Err::UnknownKind: return "UnknownKind";
        case Err::UnknownIncident: return "UnknownIncident";
        case Err::InvalidStateTransition: return "InvalidStateTransition";
        case Err::UnknownQueue: return "UnknownQueue";
        case Err::IncidentNotActive: return "IncidentNotActive";
        case Err::UnknownHandler: return "UnknownHandler";
        case Err::NoEligibleMachine: return "NoEligibleMachine";
        case Err::BadCallbackQueue: return "BadCallbackQueue";
        case Err::TemplateNotFound: return "TemplateNotFound";
        case Err::UnknownSimulation: return "UnknownSimulation";
        case Err::BadWalltime: return "BadWalltime";
        case Err::UnknownJob: return "UnknownJob";
        case Err::UnknownMachine: return "UnknownMachine";
        case Err::LivelockGuard: return "LivelockGuard";
        case Err::DataManagerError: return "DataManagerError";
        case Err::UnknownDataItem: return "UnknownDataItem";
        case Err::SyntaxError: return "SyntaxError";
        case Err::UnknownReference: return "UnknownReference";
        case Err::CycleDetected: return "CycleDetected";
        case Err::TypeMismatch: return "TypeMismatch";
        case Err::UnboundRequiredInput: return "UnboundRequiredInput";
        case Err::MemberTooWide: return "MemberTooWide";
        case Err::StepFailed: return "StepFailed";
        case Err::ConfigError: return "ConfigError";
        case Err::IoError: return "IoError";
    }
    return "Unknown";
}

}  // namespace uwf
