#include <filesystem>
#include <fstream>
#include <random>

#include "doctest.h"
#include "uwf/errors.hpp"
#include "uwf/testbed.hpp"

using namespace uwf;

namespace {

MachineConfig small_machine(const std::string& name = "m", int nodes = 8) {
    MachineConfig c;
    c.machine_name = name;
    c.num_nodes = nodes;
    return c;  // defaults: 128 cores/node, 64 in-system, 16 running, 1s/1s
}

JobSpec noop_job(int nodes = 1) {
    JobSpec s;
    s.nodes = nodes;
    s.model = WorkModel::Noop;
    return s;
}

JobSpec synthetic_job(VTime duration, int nodes = 1, VTime walltime = 0) {
    JobSpec s;
    s.nodes = nodes;
    s.model = WorkModel::Synthetic;
    s.synthetic_duration = duration;
    s.walltime = walltime;
    return s;
}

}  // namespace

TEST_CASE("config validation") {
    CHECK_THROWS_AS(MachineConfig{}.validate(), Error);  // empty name
    MachineConfig c = small_machine();
    c.max_running_jobs = 0;
    CHECK_THROWS_AS(c.validate(), Error);
    c = small_machine();
    c.scheduler_cycle = 0;
    CHECK_THROWS_AS(c.validate(), Error);
    KvConfig kv = KvConfig::parse(
        "machine: archer2\nnodes: 8\nsubmission_latency: 0.5\nscheduler_cycle: 2\n");
    MachineConfig parsed = MachineConfig::from_kv(kv);
    CHECK(parsed.cores_per_node == 128);
    CHECK(parsed.max_jobs_in_system == 64);
    CHECK(parsed.submission_latency == 500'000);
    CHECK(parsed.scheduler_cycle == 2 * kMicrosPerSecond);
}

TEST_CASE("single noop job: entry after latency, dispatch on next cycle") {
    VirtualClock clock;
    Testbed bed(clock);
    bed.add_machine(small_machine());
    SubmitOutcome out = bed.submit_job("m", noop_job());
    REQUIRE(out.accepted);
    VTime elapsed = bed.run_until_idle();
    CHECK(elapsed == 2 * kMicrosPerSecond);  // queued at 1s, started at the 2s cycle
    const JobRecord& job = bed.query_job("m", out.job_id);
    CHECK(job.state == JobState::Completed);
    CHECK(job.entry_time == kMicrosPerSecond);
    CHECK(job.start_time == 2 * kMicrosPerSecond);
    CHECK(job.end_time == 2 * kMicrosPerSecond);
}

TEST_CASE("running cap: 20 simultaneous pending jobs need two cycles") {
    VirtualClock clock;
    Testbed bed(clock);
    MachineConfig c = small_machine("m", 32);
    c.submission_latency = 1;  // all 20 in the queue before the first cycle
    bed.add_machine(c);
    std::vector<std::uint64_t> ids;
    for (int i = 0; i < 20; ++i) ids.push_back(bed.submit_job("m", noop_job()).job_id);
    bed.run_until_idle();
    int first_cycle = 0, second_cycle = 0;
    for (std::uint64_t id : ids) {
        const JobRecord& j = bed.query_job("m", id);
        CHECK(j.state == JobState::Completed);
        if (j.start_time == kMicrosPerSecond) ++first_cycle;
        if (j.start_time == 2 * kMicrosPerSecond) ++second_cycle;
    }
    CHECK(first_cycle == 16);
    CHECK(second_cycle == 4);
}

TEST_CASE("in-system cap: the 65th simultaneous submission is rejected") {
    VirtualClock clock;
    Testbed bed(clock);
    bed.add_machine(small_machine("m", 128));
    for (int i = 0; i < 64; ++i) REQUIRE(bed.submit_job("m", noop_job()).accepted);
    SubmitOutcome out = bed.submit_job("m", noop_job());
    CHECK_FALSE(out.accepted);
    CHECK(out.reason == RejectReason::QueueFull);
    // The rejected attempt still occupied the submission channel.
    SubmitOutcome later = bed.submit_job("m", noop_job());
    CHECK_FALSE(later.accepted);
    bed.run_until_idle();
    CHECK(bed.submit_job("m", noop_job()).accepted);
}

TEST_CASE("oversized requests are rejected as too large") {
    VirtualClock clock;
    Testbed bed(clock);
    bed.add_machine(small_machine("m", 8));
    SubmitOutcome out = bed.submit_job("m", noop_job(9));
    CHECK_FALSE(out.accepted);
    CHECK(out.reason == RejectReason::TooLarge);
    CHECK_THROWS_AS(bed.submit_job("nope", noop_job()), Error);
}

TEST_CASE("serial submission channel charges latency per attempt") {
    VirtualClock clock;
    Testbed bed(clock);
    bed.add_machine(small_machine("m", 128));
    std::vector<std::uint64_t> ids;
    for (int i = 0; i < 5; ++i) ids.push_back(bed.submit_job("m", noop_job()).job_id);
    bed.run_until_idle();
    for (int i = 0; i < 5; ++i)
        CHECK(bed.query_job("m", ids[i]).entry_time == (i + 1) * kMicrosPerSecond);
}

TEST_CASE("strict FIFO: a blocked head stops later jobs (no backfill)") {
    VirtualClock clock;
    Testbed bed(clock);
    bed.add_machine(small_machine("m", 2));
    std::uint64_t wide = bed.submit_job("m", synthetic_job(10 * kMicrosPerSecond, 2)).job_id;
    std::uint64_t blocker = bed.submit_job("m", synthetic_job(10 * kMicrosPerSecond, 2)).job_id;
    std::uint64_t narrow = bed.submit_job("m", synthetic_job(kMicrosPerSecond, 1)).job_id;
    bed.run_until_idle();
    const JobRecord& j1 = bed.query_job("m", wide);
    const JobRecord& j2 = bed.query_job("m", blocker);
    const JobRecord& j3 = bed.query_job("m", narrow);
    // blocker needs both nodes, so narrow must wait behind it despite fitting.
    CHECK(j2.start_time >= j1.end_time);
    CHECK(j3.start_time >= j2.start_time);
}

TEST_CASE("synthetic jobs occupy their duration; walltime overrun errors") {
    VirtualClock clock;
    Testbed bed(clock);
    bed.add_machine(small_machine());
    std::uint64_t ok = bed.submit_job("m", synthetic_job(3 * kMicrosPerSecond)).job_id;
    std::uint64_t bad =
        bed.submit_job("m", synthetic_job(10 * kMicrosPerSecond, 1, 2 * kMicrosPerSecond)).job_id;
    bed.run_until_idle();
    const JobRecord& jok = bed.query_job("m", ok);
    CHECK(jok.state == JobState::Completed);
    CHECK(jok.end_time - jok.start_time == 3 * kMicrosPerSecond);
    const JobRecord& jbad = bed.query_job("m", bad);
    CHECK(jbad.state == JobState::Error);
    CHECK(jbad.end_time - jbad.start_time == 2 * kMicrosPerSecond);
    CHECK(jbad.detail.find("walltime") != std::string::npos);
}

TEST_CASE("script jobs run as real subprocesses") {
    auto dir = std::filesystem::temp_directory_path() / "uwf-testbed-script";
    std::filesystem::create_directories(dir);
    {
        std::ofstream out(dir / "job.sh");
        out << "echo done > produced.txt\n";
    }
    VirtualClock clock;
    Testbed bed(clock);
    bed.add_machine(small_machine());
    JobSpec spec;
    spec.model = WorkModel::Script;
    spec.script = "job.sh";
    spec.workdir = dir.string();
    std::uint64_t ok = bed.submit_job("m", spec).job_id;
    spec.script = "missing.sh";
    std::uint64_t bad = bed.submit_job("m", spec).job_id;
    bed.run_until_idle();
    CHECK(bed.query_job("m", ok).state == JobState::Completed);
    CHECK(std::filesystem::exists(dir / "produced.txt"));
    CHECK(bed.query_job("m", bad).state == JobState::Error);
    std::filesystem::remove_all(dir);
}

TEST_CASE("cancellation at every stage") {
    VirtualClock clock;
    Testbed bed(clock);
    bed.add_machine(small_machine());

    // in flight, before queue entry
    std::uint64_t in_flight = bed.submit_job("m", noop_job()).job_id;
    bed.cancel_job("m", in_flight);
    // queued
    std::uint64_t queued = bed.submit_job("m", synthetic_job(5 * kMicrosPerSecond)).job_id;
    // running
    std::uint64_t running = bed.submit_job("m", synthetic_job(50 * kMicrosPerSecond)).job_id;
    clock.advance_to(4 * kMicrosPerSecond);  // running started, queued still behind it
    CHECK(bed.query_job("m", running).state == JobState::Running);
    bed.cancel_job("m", running);
    bed.cancel_job("m", queued);
    bed.run_until_idle();

    CHECK(bed.query_job("m", in_flight).state == JobState::Cancelled);
    CHECK(bed.query_job("m", queued).state == JobState::Cancelled);
    CHECK(bed.query_job("m", running).state == JobState::Cancelled);
    // terminal cancel is idempotent
    bed.cancel_job("m", running);
    CHECK(bed.query_job("m", running).state == JobState::Cancelled);
    CHECK_THROWS_AS(bed.cancel_job("m", 999), Error);
    // the cancelled running job's scheduled completion must not fire
    CHECK(bed.machine_summary("m").running == 0);
    CHECK(bed.machine_summary("m").free_nodes == 8);
}

TEST_CASE("event log audit under a randomized workload") {
    std::mt19937 rng(20260823);
    VirtualClock clock;
    Testbed bed(clock);
    MachineConfig c = small_machine("m", 64);
    bed.add_machine(c);
    std::uniform_int_distribution<int> nodes(1, 4), dur(0, 8), gap(0, 3);
    VTime t = 0;
    for (int i = 0; i < 400; ++i) {
        t += gap(rng) * kMicrosPerSecond / 2;
        clock.schedule(t, [&bed, &rng, &nodes, &dur] {
            JobSpec s;
            s.nodes = nodes(rng);
            s.model = WorkModel::Synthetic;
            s.synthetic_duration = dur(rng) * kMicrosPerSecond;
            bed.submit_job("m", s);
        });
    }
    bed.run_until_idle();
    REQUIRE(bed.event_log().size() >= 1000);
    int running = 0, in_system = 0;
    for (const LogRecord& r : bed.event_log()) {
        if (r.kind == "SUBMIT") ++in_system;
        if (r.kind == "RUNNING") ++running;
        if (r.kind == "COMPLETED" || r.kind == "ERROR" || r.kind == "CANCELLED") {
            --running;
            --in_system;
        }
        CHECK(running <= 16);
        CHECK(in_system <= 64);
    }
}

TEST_CASE("identical workloads give byte-identical event logs") {
    auto run_once = [] {
        VirtualClock clock;
        Testbed bed(clock);
        bed.add_machine(small_machine("m", 16));
        std::mt19937 rng(7);
        std::uniform_int_distribution<int> dur(0, 5);
        for (int i = 0; i < 100; ++i) {
            JobSpec s;
            s.model = WorkModel::Synthetic;
            s.synthetic_duration = dur(rng) * kMicrosPerSecond;
            bed.submit_job("m", s);
        }
        bed.run_until_idle();
        return bed.event_log_csv();
    };
    std::string first = run_once();
    CHECK(first.rfind("time,seq,kind,job_id,detail\n", 0) == 0);
    for (int i = 0; i < 9; ++i) CHECK(run_once() == first);
}

TEST_CASE("load_machines parses multi-machine files") {
    auto path = std::filesystem::temp_directory_path() / "uwf-machines.yaml";
    {
        std::ofstream out(path);
        out << "machine: alpha\nnodes: 4\nmachine: beta\nnodes: 2\ncores_per_node: 64\n";
    }
    VirtualClock clock;
    Testbed bed(clock);
    bed.load_machines(path);
    CHECK(bed.machines().size() == 2);
    CHECK(bed.machine_summary("beta").cores_per_node == 64);
    CHECK(bed.machine_summary("alpha").free_nodes == 4);
    std::filesystem::remove(path);
}
