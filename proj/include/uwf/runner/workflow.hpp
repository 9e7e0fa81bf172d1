#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace uwf::runner {

// Typed workflow subset: linear text grammar, typed inputs, coupled steps
// with declared file outputs, command templates with {placeholder}
// substitution and a scatter construct. See docs/workflow-format.md.

enum class ValueKind { String, Int, Float, File, Array };

struct TypeSpec {
    ValueKind kind = ValueKind::String;
    ValueKind element = ValueKind::String;  // meaningful when kind == Array

    bool operator==(const TypeSpec&) const = default;
    std::string to_string() const;
};

TypeSpec parse_type(const std::string& text, int line);

struct InputDecl {
    std::string name;
    TypeSpec type;
    bool required = false;
    std::optional<std::string> default_value;
};

struct Reference {
    enum class Kind { WorkflowInput, StepOutput };
    Kind kind = Kind::WorkflowInput;
    std::string step_id;  // StepOutput only
    std::string name;     // input name or output file name
};

struct ScatterSpec {
    std::string over_input;       // array-typed workflow input
    std::string cores_spec = "1"; // integer literal or {placeholder}
};

struct StepDecl {
    std::string step_id;
    std::string command_template;
    std::map<std::string, Reference> inputs;  // local name -> reference
    std::vector<std::string> outputs;         // declared output file names
    std::optional<ScatterSpec> scatter;
    int line = 0;
};

struct OutputDecl {
    std::string name;
    Reference source;  // StepOutput
};

struct MachineWorkflow {
    std::string workflow_id;
    std::vector<InputDecl> inputs;
    std::vector<StepDecl> steps;
    std::vector<OutputDecl> outputs;

    const InputDecl* find_input(const std::string& name) const;
    const StepDecl* find_step(const std::string& id) const;
};

MachineWorkflow parse_workflow(const std::string& document,
                               const std::string& origin = "<string>");
MachineWorkflow parse_workflow_file(const std::filesystem::path& path);

}  // namespace uwf::runner
