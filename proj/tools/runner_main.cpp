#include <cstdio>
#include <string>

#include "CLI11.hpp"
#include "uwf/errors.hpp"
#include "uwf/runner/execute.hpp"
#include "uwf/runner/plan.hpp"

int main(int argc, char** argv) {
    CLI::App app{"machine-side workflow runner"};
    app.require_subcommand(1);

    std::string workflow_path, scenario_path, machine_path, workdir, report_path;
    CLI::App* run = app.add_subcommand("run", "concretise and execute a workflow");
    run->add_option("--workflow", workflow_path, "workflow document")->required();
    run->add_option("--scenario", scenario_path, "scenario parameter file");
    run->add_option("--machine", machine_path, "machine parameter file");
    run->add_option("--workdir", workdir, "working directory")->required();
    run->add_option("--report", report_path, "write the run report JSON here");

    CLI11_PARSE(app, argc, argv);

    try {
        uwf::runner::MachineWorkflow wf = uwf::runner::parse_workflow_file(workflow_path);
        uwf::runner::ParameterSet scenario, machine;
        if (!scenario_path.empty())
            scenario = uwf::runner::ParameterSet::from_file(scenario_path);
        if (!machine_path.empty()) machine = uwf::runner::ParameterSet::from_file(machine_path);
        uwf::runner::ConcretePlan plan = uwf::runner::concretise(wf, scenario, machine);
        uwf::runner::LocalLauncher launcher;
        uwf::runner::RunReport report = uwf::runner::execute_plan(plan, launcher, workdir);
        if (!report_path.empty()) uwf::runner::write_report(report, report_path);
        if (!report.ok) {
            std::fprintf(stderr, "workflow %s failed at step %s\n", report.workflow_id.c_str(),
                         report.failed_step.c_str());
            return 1;
        }
        std::printf("workflow %s completed, %zu steps\n", report.workflow_id.c_str(),
                    report.steps.size());
        return 0;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    }
}
