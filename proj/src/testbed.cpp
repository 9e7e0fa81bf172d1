#include "uwf/testbed.hpp"

#include <sys/wait.h>

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "uwf/errors.hpp"

namespace uwf {

const char* job_state_name(JobState s) {
    switch (s) {
        case JobState::Pending: return "PENDING";
        case JobState::Running: return "RUNNING";
        case JobState::Completed: return "COMPLETED";
        case JobState::Error: return "ERROR";
        case JobState::Cancelled: return "CANCELLED";
    }
    return "?";
}

void MachineConfig::validate() const {
    if (machine_name.empty()) throw Error(Err::ConfigError, "machine_name empty");
    if (num_nodes < 1 || cores_per_node < 1 || max_jobs_in_system < 1 || max_running_jobs < 1)
        throw Error(Err::ConfigError, machine_name + ": counts must be >= 1");
    if (submission_latency <= 0 || scheduler_cycle <= 0)
        throw Error(Err::ConfigError, machine_name + ": latencies must be > 0");
}

MachineConfig MachineConfig::from_kv(const KvConfig& block) {
    MachineConfig c;
    c.machine_name = block.get_string("machine");
    c.num_nodes = static_cast<int>(block.get_int("nodes", 1));
    c.cores_per_node = static_cast<int>(block.get_int("cores_per_node", 128));
    c.max_jobs_in_system = static_cast<int>(block.get_int("max_jobs_in_system", 64));
    c.max_running_jobs = static_cast<int>(block.get_int("max_running_jobs", 16));
    c.submission_latency = block.get_duration("submission_latency", kMicrosPerSecond);
    c.scheduler_cycle = block.get_duration("scheduler_cycle", kMicrosPerSecond);
    c.filesystem_root = block.get_string("filesystem_root", "");
    c.validate();
    return c;
}

void Testbed::add_machine(MachineConfig config) {
    config.validate();
    if (machines_.count(config.machine_name))
        throw Error(Err::ConfigError, "machine already registered: " + config.machine_name);
    Machine m;
    m.free_nodes = config.num_nodes;
    m.config = std::move(config);
    if (!m.config.filesystem_root.empty())
        std::filesystem::create_directories(m.config.filesystem_root);
    machines_.emplace(m.config.machine_name, std::move(m));
}

void Testbed::load_machines(const std::filesystem::path& config_file) {
    KvConfig cfg = KvConfig::parse_file(config_file);
    for (const KvConfig& block : cfg.split_blocks("machine"))
        add_machine(MachineConfig::from_kv(block));
}

Testbed::Machine& Testbed::get_machine(const std::string& name) {
    auto it = machines_.find(name);
    if (it == machines_.end()) throw Error(Err::UnknownMachine, name);
    return it->second;
}

const Testbed::Machine& Testbed::get_machine(const std::string& name) const {
    auto it = machines_.find(name);
    if (it == machines_.end()) throw Error(Err::UnknownMachine, name);
    return it->second;
}

std::vector<MachineSummary> Testbed::machines() const {
    std::vector<MachineSummary> out;
    for (const auto& [name, m] : machines_) out.push_back(machine_summary(name));
    return out;
}

MachineSummary Testbed::machine_summary(const std::string& machine) const {
    const Machine& m = get_machine(machine);
    MachineSummary s;
    s.name = m.config.machine_name;
    s.num_nodes = m.config.num_nodes;
    s.cores_per_node = m.config.cores_per_node;
    s.running = m.running_count;
    s.pending = m.in_system - m.running_count;
    s.free_nodes = m.free_nodes;
    return s;
}

std::filesystem::path Testbed::filesystem_root(const std::string& machine) const {
    return get_machine(machine).config.filesystem_root;
}

void Testbed::log_event(const std::string& kind, std::uint64_t job_id,
                        const std::string& detail) {
    std::string clean = detail;
    std::replace(clean.begin(), clean.end(), ',', ';');
    std::replace(clean.begin(), clean.end(), '\n', ' ');
    log_.push_back(LogRecord{clock_.now(), next_log_seq_++, kind, job_id, clean});
}

void Testbed::notify(const Machine& m, const JobRecord& job) {
    if (sink_) sink_(m.config.machine_name, job.job_id, job.state, job.detail);
}

SubmitOutcome Testbed::submit_job(const std::string& machine, const JobSpec& spec) {
    Machine& m = get_machine(machine);
    // Every submission attempt occupies the serial submission channel for one
    // latency period, including attempts the machine turns away.
    VTime effect = std::max(clock_.now(), m.submit_cursor) + m.config.submission_latency;
    if (spec.nodes < 1 || spec.nodes > m.config.num_nodes) {
        m.submit_cursor = effect;
        log_event("REJECT", 0, "too_large nodes=" + std::to_string(spec.nodes));
        return SubmitOutcome{false, 0, RejectReason::TooLarge};
    }
    if (m.in_system >= m.config.max_jobs_in_system) {
        m.submit_cursor = effect;
        log_event("REJECT", 0, "queue_full");
        return SubmitOutcome{false, 0, RejectReason::QueueFull};
    }
    m.submit_cursor = effect;
    m.in_system += 1;
    std::uint64_t id = next_job_id_++;
    JobRecord job;
    job.job_id = id;
    job.spec = spec;
    job.submit_time = clock_.now();
    job.entry_time = effect;
    m.jobs.emplace(id, std::move(job));
    log_event("SUBMIT", id, "nodes=" + std::to_string(spec.nodes));
    std::string name = m.config.machine_name;
    clock_.schedule(effect, [this, name, id] { on_queue_entry(get_machine(name), id); });
    return SubmitOutcome{true, id, RejectReason::QueueFull};
}

void Testbed::on_queue_entry(Machine& m, std::uint64_t job_id) {
    JobRecord& job = m.jobs.at(job_id);
    if (job.state != JobState::Pending) return;  // cancelled while in flight
    job.entered_queue = true;
    m.queue.push_back(job_id);
    log_event("PENDING", job_id, "");
    notify(m, job);
    ensure_cycle(m);
}

void Testbed::ensure_cycle(Machine& m) {
    if (m.cycle_scheduled) return;
    m.cycle_scheduled = true;
    VTime cycle = m.config.scheduler_cycle;
    VTime next = (clock_.now() / cycle + 1) * cycle;
    std::string name = m.config.machine_name;
    clock_.schedule(next, [this, name] { scheduler_step(get_machine(name)); });
}

void Testbed::scheduler_step(Machine& m) {
    m.cycle_scheduled = false;
    // One dispatch pass: at most the free running slots measured at the start
    // of the pass, strict FIFO, head of queue blocks.
    int slots = m.config.max_running_jobs - m.running_count;
    while (!m.queue.empty() && slots > 0) {
        JobRecord& head = m.jobs.at(m.queue.front());
        if (head.spec.nodes > m.free_nodes) break;
        m.queue.pop_front();
        --slots;
        start_job(m, head);
    }
    if (!m.queue.empty()) ensure_cycle(m);
}

void Testbed::start_job(Machine& m, JobRecord& job) {
    job.state = JobState::Running;
    job.start_time = clock_.now();
    m.free_nodes -= job.spec.nodes;
    m.running_count += 1;
    log_event("RUNNING", job.job_id, "");
    notify(m, job);

    switch (job.spec.model) {
        case WorkModel::Noop:
            finish_job(m, job, JobState::Completed, "");
            break;
        case WorkModel::Script:
            run_script_job(m, job);
            break;
        case WorkModel::Synthetic: {
            VTime dur = job.spec.synthetic_duration;
            bool overrun = job.spec.walltime > 0 && dur > job.spec.walltime;
            VTime end = job.start_time + (overrun ? job.spec.walltime : dur);
            std::string name = m.config.machine_name;
            std::uint64_t id = job.job_id;
            std::uint64_t epoch = job.epoch;
            clock_.schedule(end, [this, name, id, epoch, overrun] {
                Machine& mm = get_machine(name);
                JobRecord& j = mm.jobs.at(id);
                if (j.state != JobState::Running || j.epoch != epoch) return;
                if (overrun)
                    finish_job(mm, j, JobState::Error, "walltime exceeded");
                else
                    finish_job(mm, j, JobState::Completed, "");
            });
            break;
        }
    }
}

void Testbed::run_script_job(Machine& m, JobRecord& job) {
    std::string cmd = "cd '" + job.spec.workdir + "' && sh '" + job.spec.script + "'";
    int rc = std::system(cmd.c_str());
    int exit_code = (rc == -1) ? -1 : WEXITSTATUS(rc);
    if (exit_code == 0)
        finish_job(m, job, JobState::Completed, "");
    else
        finish_job(m, job, JobState::Error, "script exited with " + std::to_string(exit_code));
}

void Testbed::finish_job(Machine& m, JobRecord& job, JobState terminal,
                         const std::string& detail) {
    job.state = terminal;
    job.end_time = clock_.now();
    job.detail = detail;
    m.free_nodes += job.spec.nodes;
    m.running_count -= 1;
    m.in_system -= 1;
    log_event(job_state_name(terminal), job.job_id, detail);
    notify(m, job);
    if (!m.queue.empty()) ensure_cycle(m);
}

void Testbed::cancel_job(const std::string& machine, std::uint64_t job_id) {
    Machine& m = get_machine(machine);
    auto it = m.jobs.find(job_id);
    if (it == m.jobs.end()) throw Error(Err::UnknownJob, std::to_string(job_id));
    JobRecord& job = it->second;
    switch (job.state) {
        case JobState::Pending:
            if (job.entered_queue) {
                auto pos = std::find(m.queue.begin(), m.queue.end(), job_id);
                if (pos != m.queue.end()) m.queue.erase(pos);
            }
            m.in_system -= 1;
            job.state = JobState::Cancelled;
            job.end_time = clock_.now();
            log_event("CANCELLED", job_id, "");
            notify(m, job);
            break;
        case JobState::Running:
            job.epoch += 1;  // invalidates the scheduled completion
            finish_job(m, job, JobState::Cancelled, "");
            break;
        default:
            break;  // already terminal, cancel is idempotent
    }
}

const JobRecord& Testbed::query_job(const std::string& machine, std::uint64_t job_id) const {
    const Machine& m = get_machine(machine);
    auto it = m.jobs.find(job_id);
    if (it == m.jobs.end()) throw Error(Err::UnknownJob, std::to_string(job_id));
    return it->second;
}

std::string Testbed::event_log_csv() const {
    std::ostringstream out;
    out << "time,seq,kind,job_id,detail\n";
    for (const LogRecord& r : log_)
        out << format_vtime(r.time) << ',' << r.seq << ',' << r.kind << ',' << r.job_id << ','
            << r.detail << '\n';
    return out.str();
}

void Testbed::export_event_log(const std::filesystem::path& path) const {
    std::ofstream out(path);
    if (!out) throw Error(Err::IoError, "cannot write " + path.string());
    out << event_log_csv();
}

}  // namespace uwf
