#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "uwf/runner/plan.hpp"

namespace uwf::runner {

struct MemberResult {
    long long member_index = 0;
    long long node_job = 0;
    int exit_code = 0;
    double duration_seconds = 0.0;
};

struct StepResult {
    std::string step_id;
    bool scattered = false;
    bool ran = false;
    bool ok = false;
    int exit_code = 0;
    double duration_seconds = 0.0;
    std::string detail;
    std::vector<MemberResult> members;
};

struct RunReport {
    std::string workflow_id;
    bool ok = false;
    std::string failed_step;
    std::vector<StepResult> steps;

    std::string to_json() const;
};

// Runs one step's work. Scatter outcomes come back one per member, index
// order, regardless of failures; the barrier over all members lives here.
class StepLauncher {
  public:
    virtual ~StepLauncher() = default;
    virtual int run_command(const std::string& command, const std::filesystem::path& cwd) = 0;
    virtual std::vector<MemberResult> run_scatter(const ConcreteStep& step,
                                                  const std::filesystem::path& cwd) = 0;
};

// Executes commands as local subprocesses. Scatter members run with
// MEMBER_INDEX and CORES_PER_MEMBER in the environment.
class LocalLauncher : public StepLauncher {
  public:
    int run_command(const std::string& command, const std::filesystem::path& cwd) override;
    std::vector<MemberResult> run_scatter(const ConcreteStep& step,
                                          const std::filesystem::path& cwd) override;
};

// Steps run inside <workdir>/<step_id>/ in plan order. A failing step stops
// the workflow; its successors are reported as not run.
RunReport execute_plan(const ConcretePlan& plan, StepLauncher& launcher,
                       const std::filesystem::path& workdir);

void write_report(const RunReport& report, const std::filesystem::path& path);

}  // namespace uwf::runner
