#include <algorithm>
#include <fstream>
#include <functional>
#include <set>
#include <sstream>

#include "uwf/errors.hpp"
#include "uwf/runner/workflow.hpp"

namespace uwf::runner {

namespace {

[[noreturn]] void syntax_error(const std::string& origin, int line, const std::string& what) {
    throw Error(Err::SyntaxError, origin + ":" + std::to_string(line) + ": " + what);
}

std::string trim(const std::string& s) {
    size_t a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return "";
    size_t b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

std::vector<std::string> words(const std::string& s) {
    std::istringstream in(s);
    std::vector<std::string> out;
    std::string w;
    while (in >> w) out.push_back(w);
    return out;
}

Reference parse_reference(const std::string& text, const std::string& origin, int line) {
    size_t dot = text.find('.');
    if (dot == std::string::npos)
        syntax_error(origin, line, "reference must be inputs.<name> or <step>.<file>: " + text);
    Reference ref;
    std::string head = text.substr(0, dot);
    if (head == "inputs") {
        ref.kind = Reference::Kind::WorkflowInput;
        ref.name = text.substr(dot + 1);
    } else {
        ref.kind = Reference::Kind::StepOutput;
        ref.step_id = head;
        ref.name = text.substr(dot + 1);
    }
    if (ref.name.empty()) syntax_error(origin, line, "empty reference target: " + text);
    return ref;
}

// Extracts {placeholder} names from a command template.
std::vector<std::string> placeholders(const std::string& tmpl) {
    std::vector<std::string> out;
    size_t i = 0;
    while ((i = tmpl.find('{', i)) != std::string::npos) {
        size_t j = tmpl.find('}', i);
        if (j == std::string::npos) break;
        out.push_back(tmpl.substr(i + 1, j - i - 1));
        i = j + 1;
    }
    return out;
}

void check_cycles(const MachineWorkflow& wf) {
    // DFS over step -> producer edges; reports the cycle path it finds.
    std::map<std::string, std::vector<std::string>> edges;
    for (const StepDecl& s : wf.steps)
        for (const auto& [_, ref] : s.inputs)
            if (ref.kind == Reference::Kind::StepOutput)
                edges[s.step_id].push_back(ref.step_id);
    std::map<std::string, int> mark;  // 0 unseen, 1 on stack, 2 done
    std::vector<std::string> stack;

    std::function<void(const std::string&)> visit = [&](const std::string& id) {
        mark[id] = 1;
        stack.push_back(id);
        for (const std::string& dep : edges[id]) {
            if (mark[dep] == 1) {
                auto at = std::find(stack.begin(), stack.end(), dep);
                std::string path;
                for (auto it = at; it != stack.end(); ++it) path += *it + " -> ";
                path += dep;
                throw Error(Err::CycleDetected, path);
            }
            if (mark[dep] == 0) visit(dep);
        }
        stack.pop_back();
        mark[id] = 2;
    };
    for (const StepDecl& s : wf.steps)
        if (mark[s.step_id] == 0) visit(s.step_id);
}

}  // namespace

std::string TypeSpec::to_string() const {
    auto scalar = [](ValueKind k) {
        switch (k) {
            case ValueKind::String: return "string";
            case ValueKind::Int: return "int";
            case ValueKind::Float: return "float";
            case ValueKind::File: return "file";
            case ValueKind::Array: return "array";
        }
        return "?";
    };
    if (kind == ValueKind::Array) return std::string("array<") + scalar(element) + ">";
    return scalar(kind);
}

TypeSpec parse_type(const std::string& text, int line) {
    auto scalar = [&](const std::string& t) -> std::optional<ValueKind> {
        if (t == "string") return ValueKind::String;
        if (t == "int") return ValueKind::Int;
        if (t == "float") return ValueKind::Float;
        if (t == "file") return ValueKind::File;
        return std::nullopt;
    };
    TypeSpec ts;
    if (text.rfind("array<", 0) == 0 && text.back() == '>') {
        ts.kind = ValueKind::Array;
        auto elem = scalar(text.substr(6, text.size() - 7));
        if (!elem)
            throw Error(Err::SyntaxError,
                        "line " + std::to_string(line) + ": bad array element type: " + text);
        ts.element = *elem;
        return ts;
    }
    auto k = scalar(text);
    if (!k)
        throw Error(Err::SyntaxError, "line " + std::to_string(line) + ": unknown type: " + text);
    ts.kind = *k;
    return ts;
}

const InputDecl* MachineWorkflow::find_input(const std::string& name) const {
    for (const auto& i : inputs)
        if (i.name == name) return &i;
    return nullptr;
}

const StepDecl* MachineWorkflow::find_step(const std::string& id) const {
    for (const auto& s : steps)
        if (s.step_id == id) return &s;
    return nullptr;
}

MachineWorkflow parse_workflow(const std::string& document, const std::string& origin) {
    MachineWorkflow wf;
    long current = -1;  // index into wf.steps; push_back may reallocate
    std::istringstream in(document);
    std::string raw;
    int lineno = 0;
    while (std::getline(in, raw)) {
        ++lineno;
        std::string line = raw;
        size_t hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        std::vector<std::string> w = words(line);
        const std::string& kw = w[0];

        if (kw == "workflow") {
            if (w.size() != 2) syntax_error(origin, lineno, "workflow wants one identifier");
            wf.workflow_id = w[1];
        } else if (kw == "input") {
            if (w.size() < 3) syntax_error(origin, lineno, "input wants: input <name> <type> ...");
            InputDecl d;
            d.name = w[1];
            if (wf.find_input(d.name))
                syntax_error(origin, lineno, "duplicate input: " + d.name);
            d.type = parse_type(w[2], lineno);
            for (size_t i = 3; i < w.size(); ++i) {
                if (w[i] == "required")
                    d.required = true;
                else if (w[i].rfind("default=", 0) == 0)
                    d.default_value = w[i].substr(8);
                else
                    syntax_error(origin, lineno, "unknown input attribute: " + w[i]);
            }
            wf.inputs.push_back(std::move(d));
            current = -1;
        } else if (kw == "step") {
            if (w.size() != 2) syntax_error(origin, lineno, "step wants one identifier");
            if (wf.find_step(w[1])) syntax_error(origin, lineno, "duplicate step: " + w[1]);
            StepDecl s;
            s.step_id = w[1];
            s.line = lineno;
            wf.steps.push_back(std::move(s));
            current = static_cast<long>(wf.steps.size()) - 1;
        } else if (kw == "in") {
            if (current < 0) syntax_error(origin, lineno, "'in' outside a step");
            StepDecl& st = wf.steps[current];
            if (w.size() != 4 || w[2] != "=")
                syntax_error(origin, lineno, "in wants: in <name> = <ref>");
            if (st.inputs.count(w[1]))
                syntax_error(origin, lineno, "duplicate step input: " + w[1]);
            st.inputs[w[1]] = parse_reference(w[3], origin, lineno);
        } else if (kw == "run") {
            if (current < 0) syntax_error(origin, lineno, "'run' outside a step");
            StepDecl& st = wf.steps[current];
            if (!st.command_template.empty())
                syntax_error(origin, lineno, "step already has a run line");
            st.command_template = trim(line.substr(3));
            if (st.command_template.empty())
                syntax_error(origin, lineno, "empty run command");
        } else if (kw == "out") {
            if (current < 0) syntax_error(origin, lineno, "'out' outside a step");
            if (w.size() != 2) syntax_error(origin, lineno, "out wants one file name");
            wf.steps[current].outputs.push_back(w[1]);
        } else if (kw == "scatter") {
            if (current < 0) syntax_error(origin, lineno, "'scatter' outside a step");
            StepDecl& st = wf.steps[current];
            if (st.scatter) syntax_error(origin, lineno, "step already scatters");
            if (w.size() != 3 || w[2].rfind("cores=", 0) != 0)
                syntax_error(origin, lineno, "scatter wants: scatter <input> cores=<n>");
            ScatterSpec sc;
            sc.over_input = w[1];
            sc.cores_spec = w[2].substr(6);
            st.scatter = std::move(sc);
        } else if (kw == "output") {
            if (w.size() != 4 || w[2] != "=")
                syntax_error(origin, lineno, "output wants: output <name> = <step>.<file>");
            OutputDecl o;
            o.name = w[1];
            o.source = parse_reference(w[3], origin, lineno);
            if (o.source.kind != Reference::Kind::StepOutput)
                syntax_error(origin, lineno, "workflow output must come from a step");
            wf.outputs.push_back(std::move(o));
            current = -1;
        } else {
            syntax_error(origin, lineno, "unknown keyword: " + kw);
        }
    }

    if (wf.workflow_id.empty())
        throw Error(Err::SyntaxError, origin + ": missing 'workflow <id>' line");

    // Reference resolution. Forward references between steps are legal text;
    // the cycle check below rejects loops.
    auto resolve = [&](const Reference& ref, const std::string& where) {
        if (ref.kind == Reference::Kind::WorkflowInput) {
            if (!wf.find_input(ref.name))
                throw Error(Err::UnknownReference, where + ": no workflow input '" + ref.name + "'");
        } else {
            const StepDecl* producer = wf.find_step(ref.step_id);
            if (!producer)
                throw Error(Err::UnknownReference, where + ": no step '" + ref.step_id + "'");
            if (std::find(producer->outputs.begin(), producer->outputs.end(), ref.name) ==
                producer->outputs.end())
                throw Error(Err::UnknownReference, where + ": step '" + ref.step_id +
                                                       "' declares no output '" + ref.name + "'");
        }
    };

    for (const StepDecl& s : wf.steps) {
        if (s.command_template.empty())
            throw Error(Err::SyntaxError, origin + ": step '" + s.step_id + "' has no run line");
        for (const auto& [name, ref] : s.inputs) resolve(ref, "step " + s.step_id);
        if (s.scatter) {
            const InputDecl* over = wf.find_input(s.scatter->over_input);
            if (!over)
                throw Error(Err::UnknownReference, "step " + s.step_id + ": no workflow input '" +
                                                       s.scatter->over_input + "'");
            if (over->type.kind != ValueKind::Array)
                throw Error(Err::TypeMismatch, "step " + s.step_id + ": scatter over '" +
                                                   over->name + "' expected array, got " +
                                                   over->type.to_string());
        }
        for (const std::string& ph : placeholders(s.command_template)) {
            if (s.inputs.count(ph) || wf.find_input(ph)) continue;
            if (s.scatter && (ph == "member" || ph == "member_index")) continue;
            throw Error(Err::UnknownReference,
                        "step " + s.step_id + ": placeholder {" + ph + "} is unbound");
        }
    }
    for (const OutputDecl& o : wf.outputs) resolve(o.source, "output " + o.name);

    check_cycles(wf);
    return wf;
}

MachineWorkflow parse_workflow_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error(Err::IoError, "cannot open " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_workflow(ss.str(), path.string());
}

}  // namespace uwf::runner
