#pragma once

#include <map>
#include <string>
#include <vector>

#include "uwf/kvconfig.hpp"
#include "uwf/runner/packing.hpp"
#include "uwf/runner/workflow.hpp"

namespace uwf::runner {

// Scenario- or machine-specific bindings injected into a workflow skeleton.
struct ParameterSet {
    std::map<std::string, std::string> scalars;
    std::map<std::string, std::vector<std::string>> arrays;

    static ParameterSet from_kv(const KvConfig& cfg);
    static ParameterSet from_file(const std::filesystem::path& path);
};

struct ConcreteStep {
    std::string step_id;
    std::string command;  // fully substituted; empty for scatter steps
    std::vector<std::string> outputs;
    std::vector<std::string> producer_steps;  // steps this one consumes from

    bool scattered = false;
    int cores_per_member = 0;
    std::vector<std::string> member_commands;  // one per member, index order
    std::vector<NodeJob> node_jobs;
};

struct ConcretePlan {
    std::string workflow_id;
    int cores_per_node = 128;
    std::vector<ConcreteStep> steps;  // topological order
    std::map<std::string, std::string> bindings;  // final scalar bindings
    std::vector<OutputDecl> outputs;
};

// Merges bindings with precedence scenario > machine > declared default,
// type-checks them, substitutes every command template and lays out scatter
// steps as packed node jobs. The machine parameter `cores_per_node` drives
// packing (default 128).
ConcretePlan concretise(const MachineWorkflow& skeleton, const ParameterSet& scenario,
                        const ParameterSet& machine);

}  // namespace uwf::runner
