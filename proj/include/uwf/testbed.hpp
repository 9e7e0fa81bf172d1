#pragma once

#include <cstdint>
#include <deque>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "uwf/kvconfig.hpp"
#include "uwf/virtual_clock.hpp"
#include "uwf/vtime.hpp"

namespace uwf {

enum class JobState { Pending, Running, Completed, Error, Cancelled };
const char* job_state_name(JobState s);

enum class WorkModel {
    Script,     // run the submit script as a real subprocess at dispatch
    Noop,       // complete at the dispatch instant
    Synthetic,  // occupy the node for a fixed virtual duration
};

struct JobSpec {
    int nodes = 1;
    VTime walltime = 0;  // 0 = unlimited
    WorkModel model = WorkModel::Noop;
    VTime synthetic_duration = 0;
    std::string script;   // relative to workdir, Script model only
    std::string workdir;  // absolute path, Script model only
    std::string owner;    // opaque tag carried through events (sim id)
};

enum class RejectReason { QueueFull, TooLarge };

struct SubmitOutcome {
    bool accepted = false;
    std::uint64_t job_id = 0;
    RejectReason reason = RejectReason::QueueFull;
};

struct MachineSummary {
    std::string name;
    int num_nodes = 0;
    int cores_per_node = 0;
    int pending = 0;  // accepted but not yet running (in-flight included)
    int running = 0;
    int free_nodes = 0;
};

// Connector surface the simulation manager drives. The testbed is the only
// implementation built here; a production connector would speak SSH/SLURM
// behind the same interface.
class MachineConnector {
public:
    using EventSink = std::function<void(const std::string& machine, std::uint64_t job_id,
                                         JobState state, const std::string& detail)>;

    virtual ~MachineConnector() = default;

    virtual std::vector<MachineSummary> machines() const = 0;
    virtual MachineSummary machine_summary(const std::string& machine) const = 0;
    virtual std::filesystem::path filesystem_root(const std::string& machine) const = 0;
    virtual SubmitOutcome submit_job(const std::string& machine, const JobSpec& spec) = 0;
    virtual void cancel_job(const std::string& machine, std::uint64_t job_id) = 0;
    virtual void set_event_sink(EventSink sink) = 0;
};

struct MachineConfig {
    std::string machine_name;
    int num_nodes = 1;
    int cores_per_node = 128;
    int max_jobs_in_system = 64;
    int max_running_jobs = 16;
    VTime submission_latency = kMicrosPerSecond;  // charged per submission attempt
    VTime scheduler_cycle = kMicrosPerSecond;
    std::filesystem::path filesystem_root;

    void validate() const;
    static MachineConfig from_kv(const KvConfig& block);
};

struct JobRecord {
    std::uint64_t job_id = 0;
    JobSpec spec;
    JobState state = JobState::Pending;
    bool entered_queue = false;  // submission latency elapsed, visible to scheduler
    VTime submit_time = 0;       // submit call instant
    VTime entry_time = 0;        // accepted into the queue (latency charged)
    VTime start_time = 0;
    VTime end_time = 0;
    std::string detail;
    std::uint64_t epoch = 0;  // bumped on cancel so stale timers are ignored
};

struct LogRecord {
    VTime time;
    std::uint64_t seq;
    std::string kind;  // SUBMIT, REJECT, PENDING, RUNNING, COMPLETED, ERROR, CANCELLED
    std::uint64_t job_id;
    std::string detail;
};

// Discrete-event batch system: per-machine node pool, strict FIFO dispatch in
// units of nodes (head-of-queue blocks, no backfill), a cap on jobs in the
// system and on concurrently running jobs, and a serial submission channel
// that charges latency per attempt, rejected or not.
class Testbed : public MachineConnector {
public:
    explicit Testbed(VirtualClock& clock) : clock_(clock) {}

    void add_machine(MachineConfig config);
    void load_machines(const std::filesystem::path& config_file);

    // MachineConnector
    std::vector<MachineSummary> machines() const override;
    MachineSummary machine_summary(const std::string& machine) const override;
    std::filesystem::path filesystem_root(const std::string& machine) const override;
    SubmitOutcome submit_job(const std::string& machine, const JobSpec& spec) override;
    void cancel_job(const std::string& machine, std::uint64_t job_id) override;
    void set_event_sink(EventSink sink) override { sink_ = std::move(sink); }

    const JobRecord& query_job(const std::string& machine, std::uint64_t job_id) const;

    VTime run_until_idle(std::uint64_t max_events = 10'000'000) {
        return clock_.run_until_idle(max_events);
    }
    void advance_to(VTime t) { clock_.advance_to(t); }
    VirtualClock& clock() { return clock_; }

    const std::vector<LogRecord>& event_log() const { return log_; }
    std::string event_log_csv() const;
    void export_event_log(const std::filesystem::path& path) const;

private:
    struct Machine {
        MachineConfig config;
        std::map<std::uint64_t, JobRecord> jobs;
        std::deque<std::uint64_t> queue;  // entered, waiting to run, FIFO
        int running_count = 0;
        int in_system = 0;  // accepted (incl. in-flight) minus terminal
        int free_nodes = 0;
        VTime submit_cursor = 0;  // serial submission channel
        bool cycle_scheduled = false;
    };

    Machine& get_machine(const std::string& name);
    const Machine& get_machine(const std::string& name) const;

    void log_event(const std::string& kind, std::uint64_t job_id, const std::string& detail);
    void notify(const Machine& m, const JobRecord& job);
    void ensure_cycle(Machine& m);
    void on_queue_entry(Machine& m, std::uint64_t job_id);
    void scheduler_step(Machine& m);
    void start_job(Machine& m, JobRecord& job);
    void finish_job(Machine& m, JobRecord& job, JobState terminal, const std::string& detail);
    void run_script_job(Machine& m, JobRecord& job);

    VirtualClock& clock_;
    std::map<std::string, Machine> machines_;
    EventSink sink_;
    std::vector<LogRecord> log_;
    std::uint64_t next_job_id_ = 1;
    std::uint64_t next_log_seq_ = 0;
};

}  // namespace uwf
