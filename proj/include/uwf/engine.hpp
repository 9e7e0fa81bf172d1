#pragma once

#include <cstdint>
#include <deque>
#include <filesystem>
#include <functional>
#include <map>
#include <mutex>
#include <string>
#include <vector>

namespace uwf {

class SimulationManager;
class DataManager;
class WorkflowEngine;

enum class IncidentState { Pending, Active, Complete, Cancelled };
const char* incident_state_name(IncidentState s);

enum class MessageState { Enqueued, Dispatched, Failed, Discarded };

struct Message {
    std::uint64_t message_id = 0;
    std::string queue_name;
    std::string incident_id;
    std::string payload;  // opaque bytes, structure is workflow convention
    std::string originator;
    std::uint64_t enqueue_seq = 0;
};

// What a stage handler gets to work with: the engine itself plus the manager
// services, addressed through one capability handle.
struct StageContext {
    WorkflowEngine& engine;
    SimulationManager* simulations = nullptr;
    DataManager* data = nullptr;
};

using StageHandler = std::function<void(const Message&, StageContext&)>;

struct WorkflowStage {
    std::string stage_name;
    std::string queue_name;
    StageHandler handler;
};

struct IncidentInfo {
    std::string incident_id;
    std::string name;
    std::string kind;
    IncidentState state = IncidentState::Pending;
    std::int64_t created_at = 0;  // wall microseconds, persisted
    std::vector<std::string> simulation_ids;
    std::vector<std::string> data_ids;
    std::map<std::string, std::string> kv;
};

struct MessageInfo {
    Message message;
    MessageState state = MessageState::Enqueued;
    std::string error;
};

// Incident workflow engine: named stages bound to message queues, FIFO
// dispatch per queue, serialized per (incident, queue), with an append-only
// single-file store for crash recovery.
//
// Dispatch runs inline on sender threads: the first sender to find a
// (incident, queue) lane idle becomes its drainer and works the backlog in
// sequence order. Handlers never run under the engine lock.
class WorkflowEngine {
public:
    explicit WorkflowEngine(std::filesystem::path store_path = {});
    ~WorkflowEngine();

    WorkflowEngine(const WorkflowEngine&) = delete;
    WorkflowEngine& operator=(const WorkflowEngine&) = delete;

    void set_services(SimulationManager* simulations, DataManager* data);
    // Invoked when an incident is cancelled, with its id; wired to the
    // simulation manager so in-flight jobs get withdrawn.
    void set_cancel_hook(std::function<void(const std::string&)> hook);

    // --- workflow kinds ---
    void register_workflow_kind(const std::string& kind, std::vector<WorkflowStage> stages,
                                const std::string& entry_queue);
    std::vector<std::string> registered_kinds() const;

    // Named handlers referenced from manifest files.
    void register_handler(const std::string& name, StageHandler handler);
    void load_manifest(const std::filesystem::path& path);

    // --- incident lifecycle ---
    std::string create_incident(const std::string& name, const std::string& kind);
    void activate_incident(const std::string& incident_id);
    void complete_incident(const std::string& incident_id);
    void cancel_incident(const std::string& incident_id);

    std::uint64_t send_message(const std::string& queue_name, const std::string& incident_id,
                               const std::string& payload, const std::string& originator);

    IncidentInfo incident(const std::string& incident_id) const;
    std::vector<IncidentInfo> incidents() const;
    MessageInfo message(std::uint64_t message_id) const;
    bool queue_bound_for_incident(const std::string& incident_id,
                                  const std::string& queue_name) const;

    // --- per-incident scratch state and associations ---
    void kv_put(const std::string& incident_id, const std::string& key, const std::string& value);
    std::string kv_get(const std::string& incident_id, const std::string& key) const;
    void associate_simulation(const std::string& incident_id, const std::string& sim_id);
    void associate_data(const std::string& incident_id, const std::string& data_id);

    // --- persistence ---
    // Rebuilds state from the store and re-dispatches messages that were
    // enqueued but never handed to a handler. Kinds and named handlers must be
    // registered before calling this.
    void recover();
    // Appends a materialized snapshot; recovery then starts from it.
    void checkpoint();
    std::string state_digest() const;

private:
    struct KindDef {
        std::vector<WorkflowStage> stages;
        std::string entry_queue;
        std::map<std::string, std::size_t> queue_to_stage;
    };
    struct LaneKey {
        std::string incident_id;
        std::string queue_name;
        bool operator==(const LaneKey& o) const = default;
        bool operator<(const LaneKey& o) const {
            if (incident_id != o.incident_id) return incident_id < o.incident_id;
            return queue_name < o.queue_name;
        }
    };
    struct Lane {
        std::deque<std::uint64_t> backlog;
        bool busy = false;
    };

    void append_record(const std::string& json_line);
    std::uint64_t enqueue_locked(const std::string& queue_name, const std::string& incident_id,
                                 const std::string& payload, const std::string& originator,
                                 std::vector<std::string>& log_out);
    void drain_lane(const LaneKey& key);
    void discard_pending_locked(const std::string& incident_id, std::vector<std::string>& log_out);
    const KindDef& kind_for_incident_locked(const std::string& incident_id) const;
    std::string snapshot_json_locked() const;

    mutable std::mutex mu_;
    std::map<std::string, KindDef> kinds_;
    std::map<std::string, StageHandler> named_handlers_;
    std::map<std::string, IncidentInfo> incidents_;
    std::map<std::uint64_t, MessageInfo> messages_;
    std::map<std::string, std::uint64_t> queue_seq_;
    std::map<LaneKey, Lane> lanes_;
    std::uint64_t next_incident_ = 1;
    std::uint64_t next_message_ = 1;

    SimulationManager* simulations_ = nullptr;
    DataManager* data_ = nullptr;
    std::function<void(const std::string&)> cancel_hook_;

    std::filesystem::path store_path_;
    std::mutex store_mu_;
};

}  // namespace uwf
