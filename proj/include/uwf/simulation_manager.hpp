#pragma once

#include <cstdint>
#include <deque>
#include <map>
#include <mutex>
#include <set>
#include <string>
#include <vector>

#include "uwf/testbed.hpp"
#include "uwf/virtual_clock.hpp"
#include "uwf/vtime.hpp"

namespace uwf {

class WorkflowEngine;

enum class SimStatus { Created, Queued, Running, Completed, Error, Cancelled };
const char* sim_status_name(SimStatus s);

struct SimulationSpec {
    int requested_cores = 1;
    std::string walltime = "01:00:00";  // HH:MM:SS
    std::string description;
    std::string submit_script = "submit.sh";
    std::map<SimStatus, std::string> callbacks;  // status -> queue name
    std::string template_dir;                    // optional, copied verbatim
    // How the testbed models the job's work. Production connectors would only
    // ever see Script.
    WorkModel work_model = WorkModel::Script;
    VTime synthetic_duration = 0;
};

struct SimulationInfo {
    std::string sim_id;
    std::string incident_id;
    int requested_cores = 1;
    VTime walltime = 0;
    std::string description;
    std::string submit_script;
    std::string machine_name;
    std::string directory;
    SimStatus status = SimStatus::Created;
    std::map<SimStatus, std::string> callbacks;
    std::uint64_t job_id = 0;  // 0 until the machine accepts the job
    std::vector<std::pair<SimStatus, VTime>> history;
};

// Owns the two-phase create/submit protocol: create picks a machine and makes
// the job directory (data can be staged in before submission), submit hands
// the job to the machine connector. Submissions the machine turns away for
// queue-cap reasons sit in a FIFO deferred list and are retried whenever a job
// leaves that machine's system.
class SimulationManager {
public:
    SimulationManager(WorkflowEngine& engine, MachineConnector& connector, VirtualClock& clock);

    std::string create_simulation(const std::string& incident_id, const SimulationSpec& spec);
    void submit_simulation(const std::string& sim_id);
    void cancel_simulation(const std::string& sim_id);
    SimulationInfo simulation(const std::string& sim_id) const;

    // Deterministic default policy: among machines that can ever satisfy the
    // request, fewest queued+running jobs, ties by machine name.
    std::string select_machine(int requested_cores) const;

    // Wired as the connector's event sink.
    void handle_job_event(const std::string& machine, std::uint64_t job_id, JobState state,
                          const std::string& detail);

    std::size_t deferred_count() const;
    // Submissions that went through the deferred list at least once.
    std::uint64_t deferred_total() const;

private:
    struct Sim {
        SimulationInfo info;
        SimulationSpec spec;
        std::set<SimStatus> emitted;  // callbacks already sent
        bool deferred = false;
    };

    void set_status_locked(Sim& sim, SimStatus status);
    void emit_callback(const std::string& sim_id, SimStatus status, const std::string& detail);
    bool try_submit_locked(Sim& sim);
    void release_deferred(const std::string& machine);
    Sim& get_locked(const std::string& sim_id);
    const Sim& get_locked(const std::string& sim_id) const;

    WorkflowEngine& engine_;
    MachineConnector& connector_;
    VirtualClock& clock_;

    mutable std::mutex mu_;
    std::map<std::string, Sim> sims_;
    std::map<std::pair<std::string, std::uint64_t>, std::string> job_to_sim_;
    std::map<std::string, std::deque<std::string>> deferred_;  // machine -> sim ids
    std::uint64_t next_id_ = 1;
    std::uint64_t deferred_total_ = 0;
};

}  // namespace uwf
