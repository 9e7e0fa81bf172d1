#include "uwf/bench/experiments.hpp"

#include <unistd.h>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

#include "uwf/engine.hpp"
#include "uwf/errors.hpp"
#include "uwf/runner/packing.hpp"
#include "uwf/simulation_manager.hpp"
#include "uwf/testbed.hpp"

namespace uwf::bench {

namespace {

constexpr const char* kMachine = "archer2";

struct Harness {
    VirtualClock clock;
    Testbed bed{clock};
    WorkflowEngine engine;
    SimulationManager sims{engine, bed, clock};
    std::string incident;
    std::filesystem::path root;

    Harness(const ExperimentConfig& cfg, int num_nodes) {
        static std::atomic<std::uint64_t> serial{0};
        root = std::filesystem::temp_directory_path() /
               ("uwf-bench-" + std::to_string(::getpid()) + "-" + std::to_string(++serial));
        std::filesystem::create_directories(root);
        MachineConfig mc;
        mc.machine_name = kMachine;
        mc.num_nodes = num_nodes;
        mc.cores_per_node = cfg.cores_per_node;
        mc.submission_latency = vtime_from_seconds(cfg.submission_latency);
        mc.scheduler_cycle = vtime_from_seconds(cfg.scheduler_cycle);
        mc.filesystem_root = root;
        bed.add_machine(mc);
        engine.register_workflow_kind(
            "bench", {{"entry", "bench-entry", [](const Message&, StageContext&) {}}},
            "bench-entry");
        incident = engine.create_incident("bench", "bench");
        engine.activate_incident(incident);
    }

    ~Harness() {
        std::error_code ec;
        std::filesystem::remove_all(root, ec);
    }

    RunRecord measure(Strategy strategy, long long n) const {
        RunRecord r;
        r.strategy = strategy;
        r.n_ensembles = n;
        for (const LogRecord& ev : bed.event_log()) {
            if (ev.kind == "PENDING") {
                ++r.jobs_submitted;
                r.time_last_queued = std::max(r.time_last_queued, vtime_to_seconds(ev.time));
            } else if (ev.kind == "COMPLETED") {
                r.total_runtime = std::max(r.total_runtime, vtime_to_seconds(ev.time));
            }
        }
        r.nodes_used = r.jobs_submitted;  // every strategy packs node-sized jobs
        r.rejections_deferred = static_cast<long long>(sims.deferred_total());
        return r;
    }
};

void submit_batch(Harness& h, long long jobs, int cores, WorkModel model, VTime duration) {
    for (long long i = 0; i < jobs; ++i) {
        SimulationSpec spec;
        spec.requested_cores = cores;
        spec.walltime = "10:00:00";
        spec.work_model = model;
        spec.synthetic_duration = duration;
        h.sims.submit_simulation(h.sims.create_simulation(h.incident, spec));
    }
    h.bed.run_until_idle();
}

}  // namespace

const char* strategy_name(Strategy s) {
    switch (s) {
        case Strategy::FineGrained: return "FINE_GRAINED";
        case Strategy::Scatter: return "SCATTER";
        case Strategy::MpiScatter: return "MPI_SCATTER";
        case Strategy::ScatterOnly: return "SCATTER_ONLY";
        case Strategy::MpiOnly: return "MPI_ONLY";
    }
    return "?";
}

std::vector<long long> ExperimentConfig::parse_counts(const std::string& csv) {
    std::vector<long long> out;
    std::istringstream in(csv);
    std::string part;
    while (std::getline(in, part, ','))
        if (!part.empty()) out.push_back(parse_int_strict(part, "ensemble count"));
    if (out.empty()) throw Error(Err::ConfigError, "no ensemble counts");
    return out;
}

std::vector<RunRecord> run_fig5(const ExperimentConfig& config) {
    std::vector<RunRecord> records;
    for (Strategy s : config.strategies) {
        if (s != Strategy::FineGrained && s != Strategy::Scatter)
            throw Error(Err::ConfigError, std::string("strategy not in this experiment: ") +
                                              strategy_name(s));
        for (long long n : config.ensemble_counts) {
            // Node pool large enough to never bind: the measurement isolates
            // submission and queue interaction from execution.
            Harness h(config, 1 << 20);
            if (s == Strategy::FineGrained) {
                submit_batch(h, n, 1, WorkModel::Noop, 0);
            } else {
                auto node_jobs = runner::pack_members(n, 1, config.cores_per_node);
                for (size_t i = 0; i < node_jobs.size(); ++i) {
                    JobSpec js;
                    js.nodes = 1;
                    js.model = WorkModel::Noop;
                    js.owner = "scatter-" + std::to_string(i);
                    h.bed.submit_job(kMachine, js);
                }
                h.bed.run_until_idle();
            }
            records.push_back(h.measure(s, n));
        }
    }
    return records;
}

std::vector<RunRecord> run_fig6(const ExperimentConfig& config) {
    std::vector<RunRecord> records;
    for (Strategy s : config.strategies) {
        long long jobs = 0;
        int cores_per_member = 0;
        for (long long n : config.ensemble_counts) {
            switch (s) {
                case Strategy::MpiScatter: cores_per_member = 8; break;
                case Strategy::ScatterOnly: cores_per_member = 1; break;
                case Strategy::MpiOnly: cores_per_member = config.cores_per_node; break;
                default:
                    throw Error(Err::ConfigError,
                                std::string("strategy not in this experiment: ") +
                                    strategy_name(s));
            }
            jobs = static_cast<long long>(
                runner::pack_members(n, cores_per_member, config.cores_per_node).size());
            Harness h(config, config.num_nodes);
            VTime member_time =
                vtime_from_seconds(config.model.runtime_seconds(cores_per_member));
            submit_batch(h, jobs, config.cores_per_node, WorkModel::Synthetic, member_time);
            records.push_back(h.measure(s, n));
        }
    }
    return records;
}

static void sort_records(std::vector<RunRecord>& records) {
    std::sort(records.begin(), records.end(), [](const RunRecord& a, const RunRecord& b) {
        std::string an = strategy_name(a.strategy), bn = strategy_name(b.strategy);
        if (an != bn) return an < bn;
        return a.n_ensembles < b.n_ensembles;
    });
}

void emit_csv(const std::vector<RunRecord>& records, const std::filesystem::path& path) {
    if (records.empty()) throw Error(Err::ConfigError, "no records to emit");
    std::vector<RunRecord> sorted = records;
    sort_records(sorted);
    std::ofstream out(path);
    if (!out) throw Error(Err::IoError, "cannot write " + path.string());
    out << "strategy,n,jobs,nodes,time_last_queued,total_runtime,deferred\n";
    char buf[64];
    for (const RunRecord& r : sorted) {
        out << strategy_name(r.strategy) << ',' << r.n_ensembles << ',' << r.jobs_submitted << ','
            << r.nodes_used << ',';
        std::snprintf(buf, sizeof buf, "%.6f", r.time_last_queued);
        out << buf << ',';
        std::snprintf(buf, sizeof buf, "%.6f", r.total_runtime);
        out << buf << ',' << r.rejections_deferred << '\n';
    }
}

std::string emit_summary(const std::vector<RunRecord>& records) {
    if (records.empty()) throw Error(Err::ConfigError, "no records to summarize");
    std::vector<RunRecord> sorted = records;
    sort_records(sorted);
    std::ostringstream out;
    char line[160];
    std::snprintf(line, sizeof line, "%-14s %8s %8s %8s %18s %14s %9s\n", "strategy", "n", "jobs",
                  "nodes", "time_last_queued", "total_runtime", "deferred");
    out << line;
    for (const RunRecord& r : sorted) {
        std::snprintf(line, sizeof line, "%-14s %8lld %8lld %8lld %18.3f %14.3f %9lld\n",
                      strategy_name(r.strategy), r.n_ensembles, r.jobs_submitted, r.nodes_used,
                      r.time_last_queued, r.total_runtime, r.rejections_deferred);
        out << line;
    }
    return out.str();
}

namespace {

std::map<long long, RunRecord> by_n(const std::vector<RunRecord>& records, Strategy s) {
    std::map<long long, RunRecord> out;
    for (const RunRecord& r : records)
        if (r.strategy == s) out[r.n_ensembles] = r;
    return out;
}

}  // namespace

std::vector<std::string> check_fig5(const std::vector<RunRecord>& records) {
    std::vector<std::string> bad;
    auto fine = by_n(records, Strategy::FineGrained);
    auto scatter = by_n(records, Strategy::Scatter);

    double prev = -1.0;
    for (const auto& [n, r] : fine) {
        if (r.jobs_submitted != n)
            bad.push_back("FINE_GRAINED n=" + std::to_string(n) + ": expected " +
                          std::to_string(n) + " jobs, got " + std::to_string(r.jobs_submitted));
        if (r.time_last_queued <= prev)
            bad.push_back("FINE_GRAINED time_last_queued not strictly increasing at n=" +
                          std::to_string(n));
        prev = r.time_last_queued;
    }
    double per_job = -1.0;
    for (const auto& [n, r] : scatter) {
        long long jobs = (n + 127) / 128;
        if (r.jobs_submitted != jobs)
            bad.push_back("SCATTER n=" + std::to_string(n) + ": expected " +
                          std::to_string(jobs) + " jobs, got " + std::to_string(r.jobs_submitted));
        double ratio = r.time_last_queued / static_cast<double>(jobs);
        if (per_job >= 0 && std::abs(ratio - per_job) > 1e-6)
            bad.push_back("SCATTER time_last_queued not linear in job count at n=" +
                          std::to_string(n));
        per_job = ratio;
    }
    if (fine.count(64) && fine.count(128) &&
        !(fine[128].time_last_queued > 2.0 * fine[64].time_last_queued))
        bad.push_back("FINE_GRAINED lacks the cap-induced jump between n=64 and n=128");
    if (fine.count(2048) && scatter.count(2048) &&
        fine[2048].time_last_queued < 100.0 * scatter[2048].time_last_queued)
        bad.push_back("FINE_GRAINED / SCATTER ratio at n=2048 below 100");
    return bad;
}

std::vector<std::string> check_fig6(const std::vector<RunRecord>& records) {
    std::vector<std::string> bad;
    auto mpi_scatter = by_n(records, Strategy::MpiScatter);
    auto scatter_only = by_n(records, Strategy::ScatterOnly);
    auto mpi_only = by_n(records, Strategy::MpiOnly);
    for (const auto& [n, ms] : mpi_scatter) {
        if (scatter_only.count(n) && !(scatter_only[n].total_runtime > ms.total_runtime))
            bad.push_back("SCATTER_ONLY not slower than MPI_SCATTER at n=" + std::to_string(n));
        if (mpi_only.count(n)) {
            if (n <= 16 && !(mpi_only[n].total_runtime < ms.total_runtime))
                bad.push_back("MPI_ONLY not faster than MPI_SCATTER at n=" + std::to_string(n));
            if (n >= 128 && !(mpi_only[n].total_runtime > ms.total_runtime))
                bad.push_back("MPI_ONLY not slower than MPI_SCATTER at n=" + std::to_string(n));
        }
    }
    return bad;
}

}  // namespace uwf::bench
