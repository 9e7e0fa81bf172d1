#include <sys/wait.h>

#include <chrono>
#include <cstdlib>
#include <fstream>

#include "json.hpp"
#include "uwf/errors.hpp"
#include "uwf/runner/execute.hpp"

namespace uwf::runner {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string shell_quote(const std::string& s) {
    std::string out = "'";
    for (char c : s)
        out += c == '\'' ? std::string("'\\''") : std::string(1, c);
    return out + "'";
}

int run_shell(const std::string& command) {
    int status = std::system(command.c_str());
    if (status < 0) return 127;
    if (WIFEXITED(status)) return WEXITSTATUS(status);
    return 128;
}

}  // namespace

int LocalLauncher::run_command(const std::string& command, const std::filesystem::path& cwd) {
    return run_shell("cd " + shell_quote(cwd.string()) + " && { " + command + " ; }");
}

std::vector<MemberResult> LocalLauncher::run_scatter(const ConcreteStep& step,
                                                     const std::filesystem::path& cwd) {
    std::vector<MemberResult> out;
    for (size_t job = 0; job < step.node_jobs.size(); ++job) {
        for (long long idx : step.node_jobs[job].member_indices) {
            MemberResult mr;
            mr.member_index = idx;
            mr.node_job = static_cast<long long>(job);
            Clock::time_point t0 = Clock::now();
            mr.exit_code = run_shell(
                "cd " + shell_quote(cwd.string()) + " && export MEMBER_INDEX=" +
                std::to_string(idx) + " CORES_PER_MEMBER=" +
                std::to_string(step.cores_per_member) + " && { " +
                step.member_commands[static_cast<size_t>(idx)] + " ; }");
            mr.duration_seconds = seconds_since(t0);
            out.push_back(mr);
        }
    }
    return out;
}

RunReport execute_plan(const ConcretePlan& plan, StepLauncher& launcher,
                       const std::filesystem::path& workdir) {
    RunReport report;
    report.workflow_id = plan.workflow_id;
    std::filesystem::create_directories(workdir);

    bool failed = false;
    for (const ConcreteStep& step : plan.steps) {
        StepResult sr;
        sr.step_id = step.step_id;
        sr.scattered = step.scattered;
        if (failed) {
            sr.detail = "skipped: upstream failure";
            report.steps.push_back(std::move(sr));
            continue;
        }
        std::filesystem::path stepdir = workdir / step.step_id;
        std::filesystem::create_directories(stepdir);
        sr.ran = true;
        Clock::time_point t0 = Clock::now();
        if (step.scattered) {
            sr.members = launcher.run_scatter(step, stepdir);
            sr.ok = true;
            for (const MemberResult& mr : sr.members) {
                if (mr.exit_code != 0) {
                    sr.ok = false;
                    sr.exit_code = mr.exit_code;
                    sr.detail = "member " + std::to_string(mr.member_index) + " exited " +
                                std::to_string(mr.exit_code);
                    break;
                }
            }
        } else {
            sr.exit_code = launcher.run_command(step.command, stepdir);
            sr.ok = sr.exit_code == 0;
            if (!sr.ok) sr.detail = "command exited " + std::to_string(sr.exit_code);
        }
        if (sr.ok) {
            for (const std::string& outname : step.outputs) {
                if (!std::filesystem::exists(stepdir / outname)) {
                    sr.ok = false;
                    sr.detail = "declared output missing: " + outname;
                    break;
                }
            }
        }
        sr.duration_seconds = seconds_since(t0);
        if (!sr.ok) {
            failed = true;
            report.failed_step = step.step_id;
        }
        report.steps.push_back(std::move(sr));
    }
    report.ok = !failed;
    return report;
}

std::string RunReport::to_json() const {
    nlohmann::json j;
    j["workflow_id"] = workflow_id;
    j["ok"] = ok;
    if (!failed_step.empty()) j["failed_step"] = failed_step;
    j["steps"] = nlohmann::json::array();
    for (const StepResult& sr : steps) {
        nlohmann::json js;
        js["step_id"] = sr.step_id;
        js["scattered"] = sr.scattered;
        js["ran"] = sr.ran;
        js["ok"] = sr.ok;
        js["exit_code"] = sr.exit_code;
        js["duration_seconds"] = sr.duration_seconds;
        if (!sr.detail.empty()) js["detail"] = sr.detail;
        if (sr.scattered) {
            js["members"] = nlohmann::json::array();
            for (const MemberResult& mr : sr.members)
                js["members"].push_back({{"member_index", mr.member_index},
                                         {"node_job", mr.node_job},
                                         {"exit_code", mr.exit_code},
                                         {"duration_seconds", mr.duration_seconds}});
        }
        j["steps"].push_back(std::move(js));
    }
    return j.dump(2);
}

void write_report(const RunReport& report, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw Error(Err::IoError, "cannot write " + path.string());
    out << report.to_json() << "\n";
}

}  // namespace uwf::runner
