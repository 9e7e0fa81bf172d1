#include "uwf/simulation_manager.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <iostream>

#include <nlohmann/json.hpp>

#include "uwf/engine.hpp"
#include "uwf/errors.hpp"

using nlohmann::json;

namespace uwf {

namespace fs = std::filesystem;

const char* sim_status_name(SimStatus s) {
    switch (s) {
        case SimStatus::Created: return "CREATED";
        case SimStatus::Queued: return "QUEUED";
        case SimStatus::Running: return "RUNNING";
        case SimStatus::Completed: return "COMPLETED";
        case SimStatus::Error: return "ERROR";
        case SimStatus::Cancelled: return "CANCELLED";
    }
    return "?";
}

namespace {

bool is_terminal(SimStatus s) {
    return s == SimStatus::Completed || s == SimStatus::Error || s == SimStatus::Cancelled;
}

// Legal forward transitions; Cancelled is reachable from any non-terminal.
bool transition_ok(SimStatus from, SimStatus to) {
    if (is_terminal(from)) return false;
    if (to == SimStatus::Cancelled) return true;
    switch (from) {
        case SimStatus::Created: return to == SimStatus::Queued;
        case SimStatus::Queued: return to == SimStatus::Running;
        case SimStatus::Running: return to == SimStatus::Completed || to == SimStatus::Error;
        default: return false;
    }
}

SimStatus status_from_job_state(JobState s) {
    switch (s) {
        case JobState::Pending: return SimStatus::Queued;
        case JobState::Running: return SimStatus::Running;
        case JobState::Completed: return SimStatus::Completed;
        case JobState::Error: return SimStatus::Error;
        case JobState::Cancelled: return SimStatus::Cancelled;
    }
    return SimStatus::Error;
}

}  // namespace

SimulationManager::SimulationManager(WorkflowEngine& engine, MachineConnector& connector,
                                     VirtualClock& clock)
    : engine_(engine), connector_(connector), clock_(clock) {
    connector_.set_event_sink([this](const std::string& machine, std::uint64_t job_id,
                                     JobState state, const std::string& detail) {
        handle_job_event(machine, job_id, state, detail);
    });
    engine_.set_cancel_hook([this](const std::string& incident_id) {
        std::vector<std::string> to_cancel;
        {
            std::lock_guard<std::mutex> g(mu_);
            for (const auto& [id, sim] : sims_)
                if (sim.info.incident_id == incident_id && !is_terminal(sim.info.status))
                    to_cancel.push_back(id);
        }
        for (const auto& id : to_cancel) cancel_simulation(id);
    });
}

std::string SimulationManager::select_machine(int requested_cores) const {
    std::string best;
    int best_load = 0;
    for (const MachineSummary& m : connector_.machines()) {
        long long capacity = static_cast<long long>(m.num_nodes) * m.cores_per_node;
        if (requested_cores > capacity) continue;
        int load = m.pending + m.running;
        if (best.empty() || load < best_load || (load == best_load && m.name < best)) {
            best = m.name;
            best_load = load;
        }
    }
    if (best.empty())
        throw Error(Err::NoEligibleMachine,
                    "no machine can satisfy " + std::to_string(requested_cores) + " cores");
    return best;
}

std::string SimulationManager::create_simulation(const std::string& incident_id,
                                                 const SimulationSpec& spec) {
    if (spec.requested_cores < 1)
        throw Error(Err::ConfigError, "requested_cores must be >= 1");
    VTime walltime = parse_walltime(spec.walltime);
    IncidentInfo inc = engine_.incident(incident_id);
    if (inc.state != IncidentState::Active)
        throw Error(Err::IncidentNotActive, incident_id);
    for (const auto& [status, queue] : spec.callbacks)
        if (!engine_.queue_bound_for_incident(incident_id, queue))
            throw Error(Err::BadCallbackQueue, queue);
    if (!spec.template_dir.empty() && !fs::is_directory(spec.template_dir))
        throw Error(Err::TemplateNotFound, spec.template_dir);

    std::string machine = select_machine(spec.requested_cores);
    fs::path root = connector_.filesystem_root(machine);
    if (root.empty())
        throw Error(Err::ConfigError, "machine " + machine + " has no filesystem root");

    std::string sim_id;
    {
        std::lock_guard<std::mutex> g(mu_);
        char buf[32];
        std::snprintf(buf, sizeof(buf), "sim-%06llu", static_cast<unsigned long long>(next_id_++));
        sim_id = buf;
    }
    fs::path dir = root / incident_id / sim_id;
    fs::create_directories(dir);
    if (!spec.template_dir.empty())
        fs::copy(spec.template_dir, dir,
                 fs::copy_options::recursive | fs::copy_options::overwrite_existing);

    {
        std::lock_guard<std::mutex> g(mu_);
        Sim sim;
        sim.info.sim_id = sim_id;
        sim.info.incident_id = incident_id;
        sim.info.requested_cores = spec.requested_cores;
        sim.info.walltime = walltime;
        sim.info.description = spec.description;
        sim.info.submit_script = spec.submit_script;
        sim.info.machine_name = machine;
        sim.info.directory = dir.string();
        sim.info.callbacks = spec.callbacks;
        sim.spec = spec;
        sim.info.history.emplace_back(SimStatus::Created, clock_.now());
        sims_.emplace(sim_id, std::move(sim));
    }
    engine_.associate_simulation(incident_id, sim_id);
    return sim_id;
}

SimulationManager::Sim& SimulationManager::get_locked(const std::string& sim_id) {
    auto it = sims_.find(sim_id);
    if (it == sims_.end()) throw Error(Err::UnknownSimulation, sim_id);
    return it->second;
}

const SimulationManager::Sim& SimulationManager::get_locked(const std::string& sim_id) const {
    auto it = sims_.find(sim_id);
    if (it == sims_.end()) throw Error(Err::UnknownSimulation, sim_id);
    return it->second;
}

void SimulationManager::set_status_locked(Sim& sim, SimStatus status) {
    sim.info.status = status;
    sim.info.history.emplace_back(status, clock_.now());
}

bool SimulationManager::try_submit_locked(Sim& sim) {
    MachineSummary m = connector_.machine_summary(sim.info.machine_name);
    int nodes = static_cast<int>(
        (static_cast<long long>(sim.info.requested_cores) + m.cores_per_node - 1) /
        m.cores_per_node);
    JobSpec spec;
    spec.nodes = nodes;
    spec.walltime = sim.info.walltime;
    spec.model = sim.spec.work_model;
    spec.synthetic_duration = sim.spec.synthetic_duration;
    spec.script = sim.info.submit_script;
    spec.workdir = sim.info.directory;
    spec.owner = sim.info.sim_id;
    SubmitOutcome out = connector_.submit_job(sim.info.machine_name, spec);
    if (!out.accepted) {
        if (out.reason == RejectReason::TooLarge)
            throw Error(Err::NoEligibleMachine,
                        sim.info.sim_id + " needs " + std::to_string(nodes) + " nodes");
        return false;
    }
    sim.info.job_id = out.job_id;
    set_status_locked(sim, SimStatus::Queued);
    job_to_sim_[{sim.info.machine_name, out.job_id}] = sim.info.sim_id;
    return true;
}

void SimulationManager::submit_simulation(const std::string& sim_id) {
    std::lock_guard<std::mutex> g(mu_);
    Sim& sim = get_locked(sim_id);
    if (sim.info.status != SimStatus::Created || sim.deferred)
        throw Error(Err::InvalidStateTransition,
                    sim_id + " is " + sim_status_name(sim.info.status));
    if (!try_submit_locked(sim)) {
        sim.deferred = true;
        deferred_total_ += 1;
        deferred_[sim.info.machine_name].push_back(sim_id);
    }
}

void SimulationManager::release_deferred(const std::string& machine) {
    std::lock_guard<std::mutex> g(mu_);
    auto it = deferred_.find(machine);
    if (it == deferred_.end()) return;
    auto& queue = it->second;
    while (!queue.empty()) {
        Sim& sim = get_locked(queue.front());
        if (is_terminal(sim.info.status)) {  // cancelled while deferred
            queue.pop_front();
            continue;
        }
        if (!try_submit_locked(sim)) return;  // still full, keep FIFO head
        sim.deferred = false;
        queue.pop_front();
        return;  // one release per capacity-change event
    }
}

void SimulationManager::emit_callback(const std::string& sim_id, SimStatus status,
                                      const std::string& detail) {
    std::string queue;
    std::string incident_id;
    {
        std::lock_guard<std::mutex> g(mu_);
        Sim& sim = get_locked(sim_id);
        auto cb = sim.info.callbacks.find(status);
        if (cb == sim.info.callbacks.end()) return;
        if (!sim.emitted.insert(status).second) return;  // at most once per status
        queue = cb->second;
        incident_id = sim.info.incident_id;
    }
    json payload{{"sim_id", sim_id}, {"status", sim_status_name(status)}, {"detail", detail}};
    try {
        engine_.send_message(queue, incident_id, payload.dump(), "system");
    } catch (const Error& e) {
        // The incident may have terminated already; a late callback is not an
        // error worth failing the event pipeline for.
        if (e.code() != Err::IncidentNotActive) throw;
    }
}

void SimulationManager::handle_job_event(const std::string& machine, std::uint64_t job_id,
                                         JobState state, const std::string& detail) {
    std::string sim_id;
    SimStatus status = status_from_job_state(state);
    bool changed = false;
    {
        std::lock_guard<std::mutex> g(mu_);
        auto it = job_to_sim_.find({machine, job_id});
        // Jobs submitted to the connector directly are not ours; their
        // departures still free capacity for the deferred list below.
        if (it != job_to_sim_.end()) {
            sim_id = it->second;
            Sim& sim = get_locked(sim_id);
            if (transition_ok(sim.info.status, status)) {
                set_status_locked(sim, status);
                changed = true;
            }
        }
    }
    if (changed) emit_callback(sim_id, status, detail);
    if (state == JobState::Completed || state == JobState::Error || state == JobState::Cancelled)
        release_deferred(machine);
}

void SimulationManager::cancel_simulation(const std::string& sim_id) {
    std::string machine;
    std::uint64_t job_id = 0;
    bool need_connector_cancel = false;
    {
        std::lock_guard<std::mutex> g(mu_);
        Sim& sim = get_locked(sim_id);
        if (is_terminal(sim.info.status))
            throw Error(Err::InvalidStateTransition,
                        sim_id + " is " + sim_status_name(sim.info.status));
        if (sim.deferred) {
            auto& queue = deferred_[sim.info.machine_name];
            auto pos = std::find(queue.begin(), queue.end(), sim_id);
            if (pos != queue.end()) queue.erase(pos);
            sim.deferred = false;
        }
        if (sim.info.status == SimStatus::Queued || sim.info.status == SimStatus::Running) {
            need_connector_cancel = true;
            machine = sim.info.machine_name;
            job_id = sim.info.job_id;
        } else {
            set_status_locked(sim, SimStatus::Cancelled);
        }
    }
    if (need_connector_cancel) {
        // The CANCELLED event flows back through handle_job_event and records
        // the status change there.
        connector_.cancel_job(machine, job_id);
    } else {
        emit_callback(sim_id, SimStatus::Cancelled, "cancelled before submission");
    }
}

SimulationInfo SimulationManager::simulation(const std::string& sim_id) const {
    std::lock_guard<std::mutex> g(mu_);
    return get_locked(sim_id).info;
}

std::size_t SimulationManager::deferred_count() const {
    std::lock_guard<std::mutex> g(mu_);
    std::size_t n = 0;
    for (const auto& [_, q] : deferred_) n += q.size();
    return n;
}

std::uint64_t SimulationManager::deferred_total() const {
    std::lock_guard<std::mutex> g(mu_);
    return deferred_total_;
}

}  // namespace uwf
