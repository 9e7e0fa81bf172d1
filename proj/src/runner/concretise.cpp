#include <algorithm>

#include "uwf/errors.hpp"
#include "uwf/runner/plan.hpp"

namespace uwf::runner {

namespace {

void check_scalar_type(const std::string& value, const TypeSpec& type, const std::string& name) {
    switch (type.kind == ValueKind::Array ? type.element : type.kind) {
        case ValueKind::Int:
            parse_int_strict(value, "input '" + name + "'");
            break;
        case ValueKind::Float:
            parse_double_strict(value, "input '" + name + "'");
            break;
        default:
            break;  // string/file accept any text
    }
}

struct Bindings {
    std::map<std::string, std::string> scalars;
    std::map<std::string, std::vector<std::string>> arrays;
};

Bindings merge_bindings(const MachineWorkflow& wf, const ParameterSet& scenario,
                        const ParameterSet& machine) {
    Bindings out;
    for (const InputDecl& in : wf.inputs) {
        const std::vector<std::string>* arr = nullptr;
        const std::string* scalar = nullptr;
        // Scenario beats machine beats the declared default.
        for (const ParameterSet* ps : {&scenario, &machine}) {
            if (auto it = ps->arrays.find(in.name); arr == nullptr && it != ps->arrays.end())
                arr = &it->second;
            if (auto it = ps->scalars.find(in.name); arr == nullptr && scalar == nullptr &&
                                                     it != ps->scalars.end())
                scalar = &it->second;
            if (arr || scalar) break;
        }
        if (in.type.kind == ValueKind::Array) {
            std::vector<std::string> value;
            if (arr)
                value = *arr;
            else if (scalar)
                value = {*scalar};
            else if (in.default_value)
                value = {*in.default_value};
            else if (in.required)
                throw Error(Err::UnboundRequiredInput, in.name);
            else
                continue;
            for (const std::string& v : value) check_scalar_type(v, in.type, in.name);
            out.arrays[in.name] = std::move(value);
        } else {
            if (arr)
                throw Error(Err::TypeMismatch, "input '" + in.name + "' expected " +
                                                   in.type.to_string() + ", got array");
            std::string value;
            if (scalar)
                value = *scalar;
            else if (in.default_value)
                value = *in.default_value;
            else if (in.required)
                throw Error(Err::UnboundRequiredInput, in.name);
            else
                continue;
            check_scalar_type(value, in.type, in.name);
            out.scalars[in.name] = std::move(value);
        }
    }
    return out;
}

std::vector<const StepDecl*> topological_order(const MachineWorkflow& wf) {
    // Kahn over producer edges, declaration order as the stable tiebreak.
    std::map<std::string, std::vector<std::string>> producers;
    for (const StepDecl& s : wf.steps)
        for (const auto& [_, ref] : s.inputs)
            if (ref.kind == Reference::Kind::StepOutput) producers[s.step_id].push_back(ref.step_id);
    std::vector<const StepDecl*> order;
    std::vector<std::string> done;
    while (order.size() < wf.steps.size()) {
        bool progressed = false;
        for (const StepDecl& s : wf.steps) {
            if (std::find_if(order.begin(), order.end(),
                             [&](const StepDecl* p) { return p->step_id == s.step_id; }) !=
                order.end())
                continue;
            bool ready = true;
            for (const std::string& p : producers[s.step_id])
                if (std::find(done.begin(), done.end(), p) == done.end()) ready = false;
            if (ready) {
                order.push_back(&s);
                done.push_back(s.step_id);
                progressed = true;
            }
        }
        if (!progressed)
            throw Error(Err::CycleDetected, "unresolvable step order");  // parser catches earlier
    }
    return order;
}

std::string substitute(const std::string& tmpl, const StepDecl& step, const Bindings& bound,
                       const std::string* member, long long member_index) {
    std::string out;
    size_t i = 0;
    while (i < tmpl.size()) {
        if (tmpl[i] != '{') {
            out += tmpl[i++];
            continue;
        }
        size_t j = tmpl.find('}', i);
        if (j == std::string::npos) {
            out += tmpl.substr(i);
            break;
        }
        std::string name = tmpl.substr(i + 1, j - i - 1);
        i = j + 1;
        if (member && name == "member") {
            out += *member;
            continue;
        }
        if (member && name == "member_index") {
            out += std::to_string(member_index);
            continue;
        }
        auto local = step.inputs.find(name);
        if (local != step.inputs.end() && local->second.kind == Reference::Kind::StepOutput) {
            // Steps run inside <workdir>/<step_id>/, so a sibling step's
            // output is one directory up.
            out += "../" + local->second.step_id + "/" + local->second.name;
            continue;
        }
        std::string bound_name =
            local != step.inputs.end() ? local->second.name : name;
        auto sc = bound.scalars.find(bound_name);
        if (sc == bound.scalars.end()) {
            if (bound.arrays.count(bound_name))
                throw Error(Err::TypeMismatch,
                            "step " + step.step_id + ": placeholder {" + name +
                                "} names an array input");
            throw Error(Err::UnboundRequiredInput,
                        "step " + step.step_id + ": placeholder {" + name + "} is unbound");
        }
        out += sc->second;
    }
    return out;
}

}  // namespace

ParameterSet ParameterSet::from_kv(const KvConfig& cfg) {
    ParameterSet ps;
    for (const KvEntry& e : cfg.entries()) {
        if (e.is_array)
            ps.arrays[e.key] = e.array;
        else
            ps.scalars[e.key] = e.scalar;
    }
    return ps;
}

ParameterSet ParameterSet::from_file(const std::filesystem::path& path) {
    return from_kv(KvConfig::parse_file(path));
}

ConcretePlan concretise(const MachineWorkflow& skeleton, const ParameterSet& scenario,
                        const ParameterSet& machine) {
    Bindings bound = merge_bindings(skeleton, scenario, machine);

    ConcretePlan plan;
    plan.workflow_id = skeleton.workflow_id;
    plan.outputs = skeleton.outputs;
    plan.bindings = bound.scalars;
    if (auto it = bound.scalars.find("cores_per_node"); it != bound.scalars.end())
        plan.cores_per_node =
            static_cast<int>(parse_int_strict(it->second, "cores_per_node"));
    else if (auto mit = machine.scalars.find("cores_per_node"); mit != machine.scalars.end())
        plan.cores_per_node = static_cast<int>(parse_int_strict(mit->second, "cores_per_node"));

    for (const StepDecl* decl : topological_order(skeleton)) {
        ConcreteStep step;
        step.step_id = decl->step_id;
        step.outputs = decl->outputs;
        for (const auto& [_, ref] : decl->inputs)
            if (ref.kind == Reference::Kind::StepOutput &&
                std::find(step.producer_steps.begin(), step.producer_steps.end(), ref.step_id) ==
                    step.producer_steps.end())
                step.producer_steps.push_back(ref.step_id);

        if (decl->scatter) {
            step.scattered = true;
            auto members = bound.arrays.find(decl->scatter->over_input);
            if (members == bound.arrays.end())
                throw Error(Err::UnboundRequiredInput,
                            "scatter input '" + decl->scatter->over_input + "'");
            std::string cores_text = decl->scatter->cores_spec;
            if (!cores_text.empty() && cores_text.front() == '{')
                cores_text = substitute(cores_text, *decl, bound, nullptr, 0);
            step.cores_per_member = static_cast<int>(
                parse_int_strict(cores_text, "scatter cores for step " + decl->step_id));
            if (step.cores_per_member < 1)
                throw Error(Err::ConfigError,
                            "scatter cores must be >= 1 in step " + decl->step_id);
            for (long long idx = 0; idx < static_cast<long long>(members->second.size()); ++idx)
                step.member_commands.push_back(substitute(decl->command_template, *decl, bound,
                                                          &members->second[idx], idx));
            step.node_jobs = pack_members(static_cast<long long>(members->second.size()),
                                          step.cores_per_member, plan.cores_per_node);
        } else {
            step.command = substitute(decl->command_template, *decl, bound, nullptr, 0);
        }
        plan.steps.push_back(std::move(step));
    }
    return plan;
}

}  // namespace uwf::runner
