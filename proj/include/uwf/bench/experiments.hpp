#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "uwf/bench/runtime_model.hpp"

namespace uwf::bench {

enum class Strategy { FineGrained, Scatter, MpiScatter, ScatterOnly, MpiOnly };
const char* strategy_name(Strategy s);

struct ExperimentConfig {
    std::vector<long long> ensemble_counts;
    std::vector<Strategy> strategies;
    double submission_latency = 1.0;  // seconds
    double scheduler_cycle = 1.0;
    int cores_per_node = 128;
    int num_nodes = 1024;       // fig5 overrides with an effectively unbounded pool
    RuntimeModel model;

    static std::vector<long long> parse_counts(const std::string& csv);
};

struct RunRecord {
    Strategy strategy = Strategy::FineGrained;
    long long n_ensembles = 0;
    long long jobs_submitted = 0;
    long long nodes_used = 0;
    double time_last_queued = 0.0;  // virtual seconds
    double total_runtime = 0.0;
    long long rejections_deferred = 0;
};

// Time to last job queued: fine-grained one-job-per-member submissions versus
// one packed scatter job per node, on a machine whose node pool never binds.
std::vector<RunRecord> run_fig5(const ExperimentConfig& config);

// Total runtime of N synthetic members under MPI+Scatter (8 cores/member),
// Scatter-only (1 core/member) and MPI-only (one full node per member).
std::vector<RunRecord> run_fig6(const ExperimentConfig& config);

void emit_csv(const std::vector<RunRecord>& records, const std::filesystem::path& path);
std::string emit_summary(const std::vector<RunRecord>& records);

// Declared shape invariants; any violated ordering comes back as a message.
std::vector<std::string> check_fig5(const std::vector<RunRecord>& records);
std::vector<std::string> check_fig6(const std::vector<RunRecord>& records);

}  // namespace uwf::bench
