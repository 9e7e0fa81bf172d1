#include "uwf/engine.hpp"

#include <algorithm>
#include <chrono>
#include <fstream>

#include <nlohmann/json.hpp>

#include "uwf/errors.hpp"
#include "uwf/kvconfig.hpp"

using nlohmann::json;

namespace uwf {

namespace {

std::string to_hex(const std::string& bytes) {
    static const char* digits = "0123456789abcdef";
    std::string out;
    out.reserve(bytes.size() * 2);
    for (unsigned char c : bytes) {
        out += digits[c >> 4];
        out += digits[c & 0xf];
    }
    return out;
}

int nibble(char c) {
    if (c >= '0' && c <= '9') return c - '0';
    if (c >= 'a' && c <= 'f') return c - 'a' + 10;
    throw Error(Err::IoError, "bad hex digit in store");
}

std::string from_hex(const std::string& hex) {
    std::string out;
    out.reserve(hex.size() / 2);
    for (std::size_t i = 0; i + 1 < hex.size(); i += 2)
        out += static_cast<char>((nibble(hex[i]) << 4) | nibble(hex[i + 1]));
    return out;
}

std::int64_t wall_micros() {
    return std::chrono::duration_cast<std::chrono::microseconds>(
               std::chrono::system_clock::now().time_since_epoch())
        .count();
}

std::uint64_t fnv1a(const std::string& s) {
    std::uint64_t h = 14695981039346656037ull;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

const char* message_state_name(MessageState s) {
    switch (s) {
        case MessageState::Enqueued: return "ENQUEUED";
        case MessageState::Dispatched: return "DISPATCHED";
        case MessageState::Failed: return "FAILED";
        case MessageState::Discarded: return "DISCARDED";
    }
    return "?";
}

IncidentState incident_state_from_name(const std::string& n) {
    if (n == "PENDING") return IncidentState::Pending;
    if (n == "ACTIVE") return IncidentState::Active;
    if (n == "COMPLETE") return IncidentState::Complete;
    if (n == "CANCELLED") return IncidentState::Cancelled;
    throw Error(Err::IoError, "bad incident state in store: " + n);
}

MessageState message_state_from_name(const std::string& n) {
    if (n == "ENQUEUED") return MessageState::Enqueued;
    if (n == "DISPATCHED") return MessageState::Dispatched;
    if (n == "FAILED") return MessageState::Failed;
    if (n == "DISCARDED") return MessageState::Discarded;
    throw Error(Err::IoError, "bad message state in store: " + n);
}

}  // namespace

const char* incident_state_name(IncidentState s) {
    switch (s) {
        case IncidentState::Pending: return "PENDING";
        case IncidentState::Active: return "ACTIVE";
        case IncidentState::Complete: return "COMPLETE";
        case IncidentState::Cancelled: return "CANCELLED";
    }
    return "?";
}

WorkflowEngine::WorkflowEngine(std::filesystem::path store_path)
    : store_path_(std::move(store_path)) {}

WorkflowEngine::~WorkflowEngine() = default;

void WorkflowEngine::set_services(SimulationManager* simulations, DataManager* data) {
    simulations_ = simulations;
    data_ = data;
}

void WorkflowEngine::set_cancel_hook(std::function<void(const std::string&)> hook) {
    cancel_hook_ = std::move(hook);
}

void WorkflowEngine::append_record(const std::string& json_line) {
    if (store_path_.empty()) return;
    std::lock_guard<std::mutex> g(store_mu_);
    std::ofstream out(store_path_, std::ios::app);
    if (!out) throw Error(Err::IoError, "cannot append to " + store_path_.string());
    out << json_line << '\n';
}

void WorkflowEngine::register_workflow_kind(const std::string& kind,
                                            std::vector<WorkflowStage> stages,
                                            const std::string& entry_queue) {
    std::lock_guard<std::mutex> g(mu_);
    if (kinds_.count(kind)) throw Error(Err::DuplicateKind, kind);
    KindDef def;
    for (std::size_t i = 0; i < stages.size(); ++i) {
        const auto& st = stages[i];
        if (!def.queue_to_stage.emplace(st.queue_name, i).second)
            throw Error(Err::DuplicateQueueName, st.queue_name + " in kind " + kind);
    }
    if (!def.queue_to_stage.count(entry_queue))
        throw Error(Err::UnknownEntryQueue, entry_queue + " in kind " + kind);
    def.stages = std::move(stages);
    def.entry_queue = entry_queue;
    kinds_.emplace(kind, std::move(def));
}

std::vector<std::string> WorkflowEngine::registered_kinds() const {
    std::lock_guard<std::mutex> g(mu_);
    std::vector<std::string> out;
    for (const auto& [k, _] : kinds_) out.push_back(k);
    return out;
}

void WorkflowEngine::register_handler(const std::string& name, StageHandler handler) {
    std::lock_guard<std::mutex> g(mu_);
    named_handlers_[name] = std::move(handler);
}

void WorkflowEngine::load_manifest(const std::filesystem::path& path) {
    KvConfig cfg = KvConfig::parse_file(path);
    std::string kind = cfg.get_string("kind");
    std::string entry = cfg.get_string("entry");
    std::vector<WorkflowStage> stages;
    for (const KvEntry& e : cfg.entries()) {
        if (e.key != "stage") continue;
        if (!e.is_array || e.array.size() != 3)
            throw Error(Err::ConfigError,
                        path.string() + ": stage wants [name, queue, handler]");
        WorkflowStage st;
        st.stage_name = e.array[0];
        st.queue_name = e.array[1];
        {
            std::lock_guard<std::mutex> g(mu_);
            auto it = named_handlers_.find(e.array[2]);
            if (it == named_handlers_.end()) throw Error(Err::UnknownHandler, e.array[2]);
            st.handler = it->second;
        }
        stages.push_back(std::move(st));
    }
    register_workflow_kind(kind, std::move(stages), entry);
}

std::string WorkflowEngine::create_incident(const std::string& name, const std::string& kind) {
    std::lock_guard<std::mutex> g(mu_);
    if (!kinds_.count(kind)) throw Error(Err::UnknownKind, kind);
    char buf[32];
    std::snprintf(buf, sizeof(buf), "inc-%06llu", static_cast<unsigned long long>(next_incident_++));
    IncidentInfo inc;
    inc.incident_id = buf;
    inc.name = name;
    inc.kind = kind;
    inc.state = IncidentState::Pending;
    inc.created_at = wall_micros();
    incidents_.emplace(inc.incident_id, inc);
    append_record(json{{"t", "inc"},
                       {"id", inc.incident_id},
                       {"name", name},
                       {"kind", kind},
                       {"ts", inc.created_at}}
                      .dump());
    return inc.incident_id;
}

const WorkflowEngine::KindDef& WorkflowEngine::kind_for_incident_locked(
    const std::string& incident_id) const {
    auto it = incidents_.find(incident_id);
    if (it == incidents_.end()) throw Error(Err::UnknownIncident, incident_id);
    return kinds_.at(it->second.kind);
}

std::uint64_t WorkflowEngine::enqueue_locked(const std::string& queue_name,
                                             const std::string& incident_id,
                                             const std::string& payload,
                                             const std::string& originator,
                                             std::vector<std::string>& log_out) {
    const KindDef& kd = kind_for_incident_locked(incident_id);
    if (!kd.queue_to_stage.count(queue_name))
        throw Error(Err::UnknownQueue, queue_name + " for incident " + incident_id);
    MessageInfo mi;
    mi.message.message_id = next_message_++;
    mi.message.queue_name = queue_name;
    mi.message.incident_id = incident_id;
    mi.message.payload = payload;
    mi.message.originator = originator;
    mi.message.enqueue_seq = ++queue_seq_[queue_name];
    std::uint64_t mid = mi.message.message_id;
    log_out.push_back(json{{"t", "msg"},
                           {"mid", mid},
                           {"q", queue_name},
                           {"inc", incident_id},
                           {"p", to_hex(payload)},
                           {"o", originator},
                           {"seq", mi.message.enqueue_seq}}
                          .dump());
    messages_.emplace(mid, std::move(mi));
    lanes_[LaneKey{incident_id, queue_name}].backlog.push_back(mid);
    return mid;
}

void WorkflowEngine::activate_incident(const std::string& incident_id) {
    LaneKey key;
    {
        std::lock_guard<std::mutex> g(mu_);
        auto it = incidents_.find(incident_id);
        if (it == incidents_.end()) throw Error(Err::UnknownIncident, incident_id);
        if (it->second.state != IncidentState::Pending)
            throw Error(Err::InvalidStateTransition,
                        incident_id + " is " + incident_state_name(it->second.state));
        it->second.state = IncidentState::Active;
        append_record(json{{"t", "st"}, {"id", incident_id}, {"s", "ACTIVE"}}.dump());
        const KindDef& kd = kinds_.at(it->second.kind);
        std::vector<std::string> log;
        enqueue_locked(kd.entry_queue, incident_id, "", "system", log);
        for (const auto& line : log) append_record(line);
        key = LaneKey{incident_id, kd.entry_queue};
        Lane& lane = lanes_[key];
        if (lane.busy) return;
        lane.busy = true;
    }
    drain_lane(key);
}

std::uint64_t WorkflowEngine::send_message(const std::string& queue_name,
                                           const std::string& incident_id,
                                           const std::string& payload,
                                           const std::string& originator) {
    std::uint64_t mid;
    bool claimed = false;
    LaneKey key{incident_id, queue_name};
    {
        std::lock_guard<std::mutex> g(mu_);
        auto it = incidents_.find(incident_id);
        if (it == incidents_.end()) throw Error(Err::UnknownIncident, incident_id);
        if (it->second.state != IncidentState::Active)
            throw Error(Err::IncidentNotActive,
                        incident_id + " is " + incident_state_name(it->second.state));
        std::vector<std::string> log;
        mid = enqueue_locked(queue_name, incident_id, payload, originator, log);
        for (const auto& line : log) append_record(line);
        Lane& lane = lanes_[key];
        if (!lane.busy) {
            lane.busy = true;
            claimed = true;
        }
    }
    if (claimed) drain_lane(key);
    return mid;
}

void WorkflowEngine::drain_lane(const LaneKey& key) {
    for (;;) {
        StageHandler handler;
        Message msg;
        {
            std::lock_guard<std::mutex> g(mu_);
            Lane& lane = lanes_[key];
            for (;;) {
                if (lane.backlog.empty()) {
                    lane.busy = false;
                    return;
                }
                std::uint64_t mid = lane.backlog.front();
                lane.backlog.pop_front();
                MessageInfo& mi = messages_.at(mid);
                const IncidentInfo& inc = incidents_.at(key.incident_id);
                if (inc.state != IncidentState::Active) {
                    mi.state = MessageState::Discarded;
                    append_record(json{{"t", "disc"}, {"mid", mid}}.dump());
                    continue;
                }
                const KindDef& kd = kinds_.at(inc.kind);
                handler = kd.stages[kd.queue_to_stage.at(key.queue_name)].handler;
                // The dispatch record goes down before the handler starts, so
                // recovery never runs a handler twice.
                mi.state = MessageState::Dispatched;
                append_record(json{{"t", "disp"}, {"mid", mid}}.dump());
                msg = mi.message;
                break;
            }
        }
        StageContext ctx{*this, simulations_, data_};
        try {
            if (handler) handler(msg, ctx);
        } catch (const std::exception& e) {
            std::lock_guard<std::mutex> g(mu_);
            MessageInfo& mi = messages_.at(msg.message_id);
            mi.state = MessageState::Failed;
            mi.error = e.what();
            append_record(json{{"t", "fail"}, {"mid", msg.message_id}, {"err", mi.error}}.dump());
        }
    }
}

void WorkflowEngine::discard_pending_locked(const std::string& incident_id,
                                            std::vector<std::string>& log_out) {
    for (auto& [key, lane] : lanes_) {
        if (key.incident_id != incident_id) continue;
        for (std::uint64_t mid : lane.backlog) {
            MessageInfo& mi = messages_.at(mid);
            mi.state = MessageState::Discarded;
            log_out.push_back(json{{"t", "disc"}, {"mid", mid}}.dump());
        }
        lane.backlog.clear();
    }
}

void WorkflowEngine::complete_incident(const std::string& incident_id) {
    std::lock_guard<std::mutex> g(mu_);
    auto it = incidents_.find(incident_id);
    if (it == incidents_.end()) throw Error(Err::UnknownIncident, incident_id);
    if (it->second.state != IncidentState::Active)
        throw Error(Err::InvalidStateTransition,
                    incident_id + " is " + incident_state_name(it->second.state));
    it->second.state = IncidentState::Complete;
    append_record(json{{"t", "st"}, {"id", incident_id}, {"s", "COMPLETE"}}.dump());
    std::vector<std::string> log;
    discard_pending_locked(incident_id, log);
    for (const auto& line : log) append_record(line);
}

void WorkflowEngine::cancel_incident(const std::string& incident_id) {
    {
        std::lock_guard<std::mutex> g(mu_);
        auto it = incidents_.find(incident_id);
        if (it == incidents_.end()) throw Error(Err::UnknownIncident, incident_id);
        // Operators may abandon an incident before it ever activates.
        if (it->second.state != IncidentState::Active &&
            it->second.state != IncidentState::Pending)
            throw Error(Err::InvalidStateTransition,
                        incident_id + " is " + incident_state_name(it->second.state));
        it->second.state = IncidentState::Cancelled;
        append_record(json{{"t", "st"}, {"id", incident_id}, {"s", "CANCELLED"}}.dump());
        std::vector<std::string> log;
        discard_pending_locked(incident_id, log);
        for (const auto& line : log) append_record(line);
    }
    if (cancel_hook_) cancel_hook_(incident_id);
}

IncidentInfo WorkflowEngine::incident(const std::string& incident_id) const {
    std::lock_guard<std::mutex> g(mu_);
    auto it = incidents_.find(incident_id);
    if (it == incidents_.end()) throw Error(Err::UnknownIncident, incident_id);
    return it->second;
}

std::vector<IncidentInfo> WorkflowEngine::incidents() const {
    std::lock_guard<std::mutex> g(mu_);
    std::vector<IncidentInfo> out;
    for (const auto& [_, inc] : incidents_) out.push_back(inc);
    return out;
}

MessageInfo WorkflowEngine::message(std::uint64_t message_id) const {
    std::lock_guard<std::mutex> g(mu_);
    auto it = messages_.find(message_id);
    if (it == messages_.end())
        throw Error(Err::UnknownQueue, "no message " + std::to_string(message_id));
    return it->second;
}

bool WorkflowEngine::queue_bound_for_incident(const std::string& incident_id,
                                              const std::string& queue_name) const {
    std::lock_guard<std::mutex> g(mu_);
    return kind_for_incident_locked(incident_id).queue_to_stage.count(queue_name) > 0;
}

void WorkflowEngine::kv_put(const std::string& incident_id, const std::string& key,
                            const std::string& value) {
    std::lock_guard<std::mutex> g(mu_);
    auto it = incidents_.find(incident_id);
    if (it == incidents_.end()) throw Error(Err::UnknownIncident, incident_id);
    it->second.kv[key] = value;
    append_record(
        json{{"t", "kv"}, {"inc", incident_id}, {"k", key}, {"v", to_hex(value)}}.dump());
}

std::string WorkflowEngine::kv_get(const std::string& incident_id, const std::string& key) const {
    std::lock_guard<std::mutex> g(mu_);
    auto it = incidents_.find(incident_id);
    if (it == incidents_.end()) throw Error(Err::UnknownIncident, incident_id);
    auto kv = it->second.kv.find(key);
    return kv == it->second.kv.end() ? std::string() : kv->second;
}

void WorkflowEngine::associate_simulation(const std::string& incident_id,
                                          const std::string& sim_id) {
    std::lock_guard<std::mutex> g(mu_);
    auto it = incidents_.find(incident_id);
    if (it == incidents_.end()) throw Error(Err::UnknownIncident, incident_id);
    it->second.simulation_ids.push_back(sim_id);
    append_record(json{{"t", "sim"}, {"inc", incident_id}, {"sid", sim_id}}.dump());
}

void WorkflowEngine::associate_data(const std::string& incident_id, const std::string& data_id) {
    std::lock_guard<std::mutex> g(mu_);
    auto it = incidents_.find(incident_id);
    if (it == incidents_.end()) throw Error(Err::UnknownIncident, incident_id);
    it->second.data_ids.push_back(data_id);
    append_record(json{{"t", "dat"}, {"inc", incident_id}, {"did", data_id}}.dump());
}

std::string WorkflowEngine::snapshot_json_locked() const {
    json incs = json::array();
    for (const auto& [_, inc] : incidents_) {
        json kv = json::object();
        for (const auto& [k, v] : inc.kv) kv[k] = to_hex(v);
        incs.push_back(json{{"id", inc.incident_id},
                            {"name", inc.name},
                            {"kind", inc.kind},
                            {"s", incident_state_name(inc.state)},
                            {"ts", inc.created_at},
                            {"sims", inc.simulation_ids},
                            {"data", inc.data_ids},
                            {"kv", kv}});
    }
    json msgs = json::array();
    for (const auto& [_, mi] : messages_) {
        msgs.push_back(json{{"mid", mi.message.message_id},
                            {"q", mi.message.queue_name},
                            {"inc", mi.message.incident_id},
                            {"p", to_hex(mi.message.payload)},
                            {"o", mi.message.originator},
                            {"seq", mi.message.enqueue_seq},
                            {"s", message_state_name(mi.state)},
                            {"err", mi.error}});
    }
    return json{{"t", "snap"},
                {"incidents", incs},
                {"messages", msgs},
                {"next_incident", next_incident_},
                {"next_message", next_message_}}
        .dump();
}

void WorkflowEngine::checkpoint() {
    std::lock_guard<std::mutex> g(mu_);
    append_record(snapshot_json_locked());
}

void WorkflowEngine::recover() {
    if (store_path_.empty() || !std::filesystem::exists(store_path_)) return;
    std::vector<std::pair<LaneKey, std::uint64_t>> replay;
    {
        std::lock_guard<std::mutex> g(mu_);
        incidents_.clear();
        messages_.clear();
        lanes_.clear();
        queue_seq_.clear();
        next_incident_ = 1;
        next_message_ = 1;

        std::ifstream in(store_path_);
        std::string line;
        while (std::getline(in, line)) {
            if (line.empty()) continue;
            json r = json::parse(line);
            const std::string t = r.at("t");
            if (t == "inc") {
                IncidentInfo inc;
                inc.incident_id = r.at("id");
                inc.name = r.at("name");
                inc.kind = r.at("kind");
                inc.created_at = r.at("ts");
                incidents_[inc.incident_id] = inc;
            } else if (t == "st") {
                incidents_.at(r.at("id")).state = incident_state_from_name(r.at("s"));
            } else if (t == "msg") {
                MessageInfo mi;
                mi.message.message_id = r.at("mid");
                mi.message.queue_name = r.at("q");
                mi.message.incident_id = r.at("inc");
                mi.message.payload = from_hex(r.at("p"));
                mi.message.originator = r.at("o");
                mi.message.enqueue_seq = r.at("seq");
                messages_[mi.message.message_id] = std::move(mi);
            } else if (t == "disp") {
                messages_.at(r.at("mid")).state = MessageState::Dispatched;
            } else if (t == "fail") {
                MessageInfo& mi = messages_.at(r.at("mid"));
                mi.state = MessageState::Failed;
                mi.error = r.at("err");
            } else if (t == "disc") {
                messages_.at(r.at("mid")).state = MessageState::Discarded;
            } else if (t == "kv") {
                incidents_.at(r.at("inc")).kv[r.at("k")] = from_hex(r.at("v"));
            } else if (t == "sim") {
                incidents_.at(r.at("inc")).simulation_ids.push_back(r.at("sid"));
            } else if (t == "dat") {
                incidents_.at(r.at("inc")).data_ids.push_back(r.at("did"));
            } else if (t == "snap") {
                incidents_.clear();
                messages_.clear();
                for (const json& ji : r.at("incidents")) {
                    IncidentInfo inc;
                    inc.incident_id = ji.at("id");
                    inc.name = ji.at("name");
                    inc.kind = ji.at("kind");
                    inc.state = incident_state_from_name(ji.at("s"));
                    inc.created_at = ji.at("ts");
                    inc.simulation_ids = ji.at("sims").get<std::vector<std::string>>();
                    inc.data_ids = ji.at("data").get<std::vector<std::string>>();
                    for (auto it = ji.at("kv").begin(); it != ji.at("kv").end(); ++it)
                        inc.kv[it.key()] = from_hex(it.value().get<std::string>());
                    incidents_[inc.incident_id] = std::move(inc);
                }
                for (const json& jm : r.at("messages")) {
                    MessageInfo mi;
                    mi.message.message_id = jm.at("mid");
                    mi.message.queue_name = jm.at("q");
                    mi.message.incident_id = jm.at("inc");
                    mi.message.payload = from_hex(jm.at("p"));
                    mi.message.originator = jm.at("o");
                    mi.message.enqueue_seq = jm.at("seq");
                    mi.state = message_state_from_name(jm.at("s"));
                    mi.error = jm.at("err");
                    messages_[mi.message.message_id] = std::move(mi);
                }
                next_incident_ = r.at("next_incident");
                next_message_ = r.at("next_message");
            } else {
                throw Error(Err::IoError, "unknown store record type: " + t);
            }
        }

        for (const auto& [id, _] : incidents_) {
            unsigned long long n = std::strtoull(id.c_str() + 4, nullptr, 10);
            next_incident_ = std::max<std::uint64_t>(next_incident_, n + 1);
        }
        std::vector<const MessageInfo*> pending;
        for (auto& [mid, mi] : messages_) {
            next_message_ = std::max<std::uint64_t>(next_message_, mid + 1);
            queue_seq_[mi.message.queue_name] =
                std::max(queue_seq_[mi.message.queue_name], mi.message.enqueue_seq);
            if (mi.state == MessageState::Enqueued) pending.push_back(&mi);
        }
        std::sort(pending.begin(), pending.end(), [](const MessageInfo* a, const MessageInfo* b) {
            if (a->message.queue_name != b->message.queue_name)
                return a->message.queue_name < b->message.queue_name;
            return a->message.enqueue_seq < b->message.enqueue_seq;
        });
        for (const MessageInfo* mi : pending) {
            LaneKey key{mi->message.incident_id, mi->message.queue_name};
            lanes_[key].backlog.push_back(mi->message.message_id);
            replay.emplace_back(key, mi->message.message_id);
        }
        for (auto& [key, _] : replay) lanes_[key].busy = true;
    }
    // Re-dispatch whatever never reached a handler; duplicates are impossible
    // because the dispatch record was written before any handler ran.
    std::vector<LaneKey> seen;
    for (auto& [key, _] : replay) {
        if (std::find(seen.begin(), seen.end(), key) != seen.end()) continue;
        seen.push_back(key);
        drain_lane(key);
    }
}

std::string WorkflowEngine::state_digest() const {
    std::lock_guard<std::mutex> g(mu_);
    std::string canon;
    for (const auto& [_, inc] : incidents_) {
        canon += inc.incident_id + '|' + inc.name + '|' + inc.kind + '|' +
                 incident_state_name(inc.state) + '|' + std::to_string(inc.created_at) + '|';
        for (const auto& s : inc.simulation_ids) canon += s + ';';
        canon += '|';
        for (const auto& d : inc.data_ids) canon += d + ';';
        canon += '|';
        for (const auto& [k, v] : inc.kv) canon += k + '=' + to_hex(v) + ';';
        canon += '\n';
    }
    for (const auto& [mid, mi] : messages_)
        canon += std::to_string(mid) + '|' + mi.message.queue_name + '|' +
                 std::to_string(mi.message.enqueue_seq) + '|' + message_state_name(mi.state) +
                 '\n';
    char buf[20];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(fnv1a(canon)));
    return buf;
}

}  // namespace uwf
