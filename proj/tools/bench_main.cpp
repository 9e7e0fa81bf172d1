#include <cstdio>
#include <string>

#include "CLI11.hpp"
#include "uwf/bench/experiments.hpp"

namespace {

int run_experiment(bool fig5, const std::string& counts, double latency, double cycle,
                   const std::string& model, const std::string& out) {
    using namespace uwf::bench;
    try {
        ExperimentConfig cfg;
        cfg.ensemble_counts = ExperimentConfig::parse_counts(counts);
        cfg.submission_latency = latency;
        cfg.scheduler_cycle = cycle;
        cfg.model = RuntimeModel::parse(model);
        std::vector<RunRecord> records;
        std::vector<std::string> violations;
        if (fig5) {
            cfg.strategies = {Strategy::FineGrained, Strategy::Scatter};
            records = run_fig5(cfg);
            violations = check_fig5(records);
        } else {
            cfg.strategies = {Strategy::MpiScatter, Strategy::ScatterOnly, Strategy::MpiOnly};
            cfg.num_nodes = 1024;
            records = run_fig6(cfg);
            violations = check_fig6(records);
        }
        if (!out.empty()) emit_csv(records, out);
        std::fputs(emit_summary(records).c_str(), stdout);
        for (const std::string& v : violations)
            std::fprintf(stderr, "invariant violated: %s\n", v.c_str());
        return violations.empty() ? 0 : 1;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"queue-interaction and runtime benchmarks"};
    app.require_subcommand(1);

    std::string counts5 = "16,32,64,128,256,512,1024,2048";
    double latency = 1.0, cycle = 1.0;
    std::string out5;
    CLI::App* fig5 = app.add_subcommand("fig5", "time to last job queued");
    fig5->add_option("--n", counts5, "comma-separated ensemble counts");
    fig5->add_option("--latency", latency, "submission latency, seconds");
    fig5->add_option("--cycle", cycle, "scheduler cycle, seconds");
    fig5->add_option("--out", out5, "CSV output path");

    std::string counts6 = "1,2,4,8,16,32,64,128,256,512,1024";
    std::string model = "t1=512,f=0.01,beta=0.02";
    std::string out6;
    CLI::App* fig6 = app.add_subcommand("fig6", "total ensemble runtime by strategy");
    fig6->add_option("--n", counts6, "comma-separated ensemble counts");
    fig6->add_option("--model", model, "runtime model, t1=..,f=..,beta=..");
    fig6->add_option("--out", out6, "CSV output path");

    CLI11_PARSE(app, argc, argv);

    if (app.got_subcommand(fig5)) return run_experiment(true, counts5, latency, cycle, model, out5);
    return run_experiment(false, counts6, latency, cycle, model, out6);
}
