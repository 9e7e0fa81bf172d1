#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <mutex>
#include <set>
#include <string>
#include <vector>

#include "uwf/vtime.hpp"

namespace uwf {

class WorkflowEngine;

// External data ingress: polled sensor feeds and pushed client payloads, both
// landing as messages on a workflow queue.
struct DataSource {
    enum class Mode { Poll, Push };

    std::string source_id;
    Mode mode = Mode::Poll;
    VTime poll_interval = 0;   // Poll only, > 0
    std::string endpoint;      // Poll: locator handed to the fetcher
    std::string target_queue;
    std::string incident_id;   // messages are scoped to one incident
    std::string dedup_key;     // optional JSON field suppressing repeats
};

struct FetchResult {
    bool ok = false;
    std::string payload;
};

using Fetcher = std::function<FetchResult(const DataSource&)>;

class DataSourceManager {
public:
    explicit DataSourceManager(WorkflowEngine& engine) : engine_(engine) {}

    void register_source(DataSource source, Fetcher fetcher = {});
    bool has_source(const std::string& source_id) const;

    // Push ingress; returns true when a message was enqueued, false when the
    // payload was a dedup repeat.
    bool push(const std::string& source_id, const std::string& payload);

    // Runs every Poll source whose interval elapsed. Fetch failures double the
    // source's backoff (capped at 64 intervals) and are never fatal.
    std::vector<std::uint64_t> poll_sources(VTime now);

private:
    struct State {
        DataSource source;
        Fetcher fetcher;
        VTime next_due = 0;
        int backoff = 1;  // multiplier on poll_interval
        std::set<std::string> seen;
    };

    bool ingest_locked(State& st, const std::string& payload, std::uint64_t* message_id);

    WorkflowEngine& engine_;
    mutable std::mutex mu_;
    std::map<std::string, State> sources_;
};

}  // namespace uwf
