#include "uwf/service/data_sources.hpp"

#include "json.hpp"
#include "uwf/engine.hpp"
#include "uwf/errors.hpp"

namespace uwf {

namespace {

constexpr int kMaxBackoff = 64;

// Dedup value: the named field of a JSON payload, or the whole payload when
// the field is absent or the body is not JSON.
std::string dedup_value(const std::string& payload, const std::string& key) {
    if (key.empty()) return payload;
    auto j = nlohmann::json::parse(payload, nullptr, false);
    if (j.is_discarded() || !j.is_object() || !j.contains(key)) return payload;
    const auto& v = j[key];
    return v.is_string() ? v.get<std::string>() : v.dump();
}

}  // namespace

void DataSourceManager::register_source(DataSource source, Fetcher fetcher) {
    if (source.source_id.empty())
        throw Error(Err::ConfigError, "data source needs an id");
    if (source.mode == DataSource::Mode::Poll && source.poll_interval <= 0)
        throw Error(Err::ConfigError, "poll source " + source.source_id +
                                          " needs poll_interval > 0");
    if (!engine_.queue_bound_for_incident(source.incident_id, source.target_queue))
        throw Error(Err::UnknownQueue, "source " + source.source_id + ": queue '" +
                                           source.target_queue + "' not bound for incident " +
                                           source.incident_id);
    std::lock_guard lock(mu_);
    if (sources_.count(source.source_id))
        throw Error(Err::ConfigError, "duplicate data source: " + source.source_id);
    State st;
    st.source = std::move(source);
    st.fetcher = std::move(fetcher);
    sources_.emplace(st.source.source_id, std::move(st));
}

bool DataSourceManager::has_source(const std::string& source_id) const {
    std::lock_guard lock(mu_);
    return sources_.count(source_id) != 0;
}

bool DataSourceManager::ingest_locked(State& st, const std::string& payload,
                                      std::uint64_t* message_id) {
    std::string key = dedup_value(payload, st.source.dedup_key);
    if (!st.seen.insert(key).second) return false;
    std::uint64_t id = engine_.send_message(st.source.target_queue, st.source.incident_id,
                                            payload, "external");
    if (message_id) *message_id = id;
    return true;
}

bool DataSourceManager::push(const std::string& source_id, const std::string& payload) {
    std::lock_guard lock(mu_);
    auto it = sources_.find(source_id);
    if (it == sources_.end())
        throw Error(Err::ConfigError, "unknown data source: " + source_id);
    if (it->second.source.mode != DataSource::Mode::Push)
        throw Error(Err::ConfigError, "source " + source_id + " is not a push source");
    return ingest_locked(it->second, payload, nullptr);
}

std::vector<std::uint64_t> DataSourceManager::poll_sources(VTime now) {
    std::lock_guard lock(mu_);
    std::vector<std::uint64_t> out;
    for (auto& [id, st] : sources_) {
        if (st.source.mode != DataSource::Mode::Poll || !st.fetcher) continue;
        if (now < st.next_due) continue;
        FetchResult fr;
        try {
            fr = st.fetcher(st.source);
        } catch (const std::exception&) {
            fr.ok = false;
        }
        if (!fr.ok) {
            st.next_due = now + st.source.poll_interval * st.backoff;
            st.backoff = std::min(st.backoff * 2, kMaxBackoff);
            continue;
        }
        st.backoff = 1;
        st.next_due = now + st.source.poll_interval;
        std::uint64_t message_id = 0;
        if (ingest_locked(st, fr.payload, &message_id)) out.push_back(message_id);
    }
    return out;
}

}  // namespace uwf
