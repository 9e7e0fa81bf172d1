#include <unistd.h>

#include <filesystem>
#include <fstream>

#include "doctest.h"
#include "uwf/engine.hpp"
#include "uwf/errors.hpp"
#include "uwf/simulation_manager.hpp"
#include "uwf/testbed.hpp"

using namespace uwf;
namespace fs = std::filesystem;

namespace {

struct Fixture {
    fs::path base;
    VirtualClock clock;
    Testbed bed{clock};
    WorkflowEngine engine;
    SimulationManager sims{engine, bed, clock};
    std::vector<std::string> callback_payloads;
    std::string incident;

    explicit Fixture(int nodes = 8, int extra_machines = 0) {
        static int n = 0;
        base = fs::temp_directory_path() /
               ("uwf-simman-" + std::to_string(::getpid()) + "-" + std::to_string(n++));
        add_machine("alpha", nodes);
        for (int i = 0; i < extra_machines; ++i) add_machine("m" + std::to_string(i), nodes);
        engine.register_workflow_kind(
            "wf",
            {{"entry", "in", {}},
             {"done", "q-done",
              [this](const Message& m, StageContext&) { callback_payloads.push_back(m.payload); }}},
            "in");
        incident = engine.create_incident("i", "wf");
        engine.activate_incident(incident);
    }

    void add_machine(const std::string& name, int nodes) {
        MachineConfig c;
        c.machine_name = name;
        c.num_nodes = nodes;
        c.filesystem_root = base / name;
        bed.add_machine(c);
    }

    ~Fixture() {
        std::error_code ec;
        fs::remove_all(base, ec);
    }

    SimulationSpec noop_spec() {
        SimulationSpec s;
        s.work_model = WorkModel::Noop;
        return s;
    }
};

}  // namespace

TEST_CASE("create picks a machine, makes the directory, copies the template") {
    Fixture f;
    fs::path tmpl = f.base / "template";
    fs::create_directories(tmpl / "sub");
    {
        std::ofstream out(tmpl / "input.cfg");
        out << "seed: 1\n";
        std::ofstream out2(tmpl / "sub" / "nested.txt");
        out2 << "x\n";
    }
    SimulationSpec spec = f.noop_spec();
    spec.template_dir = tmpl.string();
    spec.description = "reconnection run";
    std::string id = f.sims.create_simulation(f.incident, spec);
    SimulationInfo info = f.sims.simulation(id);
    CHECK(info.status == SimStatus::Created);
    CHECK(info.machine_name == "alpha");
    CHECK(info.directory == (f.base / "alpha" / f.incident / id).string());
    CHECK(fs::exists(fs::path(info.directory) / "input.cfg"));
    CHECK(fs::exists(fs::path(info.directory) / "sub" / "nested.txt"));
    CHECK(f.engine.incident(f.incident).simulation_ids ==
          std::vector<std::string>{id});
}

TEST_CASE("create validates its inputs") {
    Fixture f;
    SimulationSpec spec = f.noop_spec();
    spec.callbacks[SimStatus::Completed] = "no-such-queue";
    CHECK_THROWS_AS(f.sims.create_simulation(f.incident, spec), Error);
    spec = f.noop_spec();
    spec.template_dir = "/no/such/template";
    CHECK_THROWS_AS(f.sims.create_simulation(f.incident, spec), Error);
    spec = f.noop_spec();
    spec.walltime = "junk";
    CHECK_THROWS_AS(f.sims.create_simulation(f.incident, spec), Error);
    spec = f.noop_spec();
    spec.requested_cores = 0;
    CHECK_THROWS_AS(f.sims.create_simulation(f.incident, spec), Error);
    spec = f.noop_spec();
    spec.requested_cores = 9 * 128;  // exceeds every machine
    CHECK_THROWS_AS(f.sims.create_simulation(f.incident, spec), Error);
    CHECK_THROWS_AS(f.sims.create_simulation("inc-999999", f.noop_spec()), Error);

    std::string pending = f.engine.create_incident("p", "wf");
    CHECK_THROWS_AS(f.sims.create_simulation(pending, f.noop_spec()), Error);
}

TEST_CASE("machine selection prefers the least loaded, ties by name") {
    Fixture f(8, 2);  // alpha, m0, m1
    CHECK(f.sims.select_machine(1) == "alpha");  // all idle, lexicographic tie
    SimulationSpec spec;
    spec.work_model = WorkModel::Synthetic;
    spec.synthetic_duration = 30 * kMicrosPerSecond;
    f.sims.submit_simulation(f.sims.create_simulation(f.incident, spec));
    CHECK(f.sims.select_machine(1) == "m0");  // alpha now carries load
    std::string next = f.sims.create_simulation(f.incident, spec);
    CHECK(f.sims.simulation(next).machine_name == "m0");
}

TEST_CASE("two-phase protocol: stage data between create and submit") {
    Fixture f;
    SimulationSpec spec;
    spec.work_model = WorkModel::Script;
    spec.submit_script = "submit.sh";
    spec.callbacks[SimStatus::Completed] = "q-done";
    std::string id = f.sims.create_simulation(f.incident, spec);
    SimulationInfo info = f.sims.simulation(id);
    {
        // the "myconfig" staging step of the create/submit protocol
        std::ofstream cfg(fs::path(info.directory) / "myconfig");
        cfg << "mode=fast\n";
        std::ofstream script(fs::path(info.directory) / "submit.sh");
        script << "test -f myconfig && cp myconfig observed\n";
    }
    f.sims.submit_simulation(id);
    CHECK(f.sims.simulation(id).status == SimStatus::Queued);
    f.bed.run_until_idle();
    CHECK(f.sims.simulation(id).status == SimStatus::Completed);
    CHECK(fs::exists(fs::path(info.directory) / "observed"));
    REQUIRE(f.callback_payloads.size() == 1);
    CHECK(f.callback_payloads[0].find("COMPLETED") != std::string::npos);
    CHECK(f.callback_payloads[0].find(id) != std::string::npos);
}

TEST_CASE("status history and callbacks fire at most once per status") {
    Fixture f;
    SimulationSpec spec = f.noop_spec();
    spec.callbacks[SimStatus::Completed] = "q-done";
    std::string id = f.sims.create_simulation(f.incident, spec);
    f.sims.submit_simulation(id);
    f.bed.run_until_idle();
    CHECK(f.callback_payloads.size() == 1);
    SimulationInfo info = f.sims.simulation(id);
    REQUIRE(info.history.size() == 4);
    CHECK(info.history[0].first == SimStatus::Created);
    CHECK(info.history[1].first == SimStatus::Queued);
    CHECK(info.history[2].first == SimStatus::Running);
    CHECK(info.history[3].first == SimStatus::Completed);
    CHECK_THROWS_AS(f.sims.submit_simulation(id), Error);  // already terminal
}

TEST_CASE("cap-rejected submissions defer and release in FIFO order") {
    Fixture f(128);
    std::vector<std::string> ids;
    for (int i = 0; i < 70; ++i) {
        SimulationSpec spec;
        spec.work_model = WorkModel::Synthetic;
        spec.synthetic_duration = kMicrosPerSecond;
        ids.push_back(f.sims.create_simulation(f.incident, spec));
        f.sims.submit_simulation(ids.back());
    }
    CHECK(f.sims.deferred_count() == 6);
    CHECK(f.sims.deferred_total() == 6);
    for (int i = 0; i < 64; ++i) CHECK(f.sims.simulation(ids[i]).status == SimStatus::Queued);
    for (int i = 64; i < 70; ++i) CHECK(f.sims.simulation(ids[i]).status == SimStatus::Created);
    f.bed.run_until_idle();
    CHECK(f.sims.deferred_count() == 0);
    for (const std::string& id : ids)
        CHECK(f.sims.simulation(id).status == SimStatus::Completed);
    // FIFO: deferred sims reach the machine in creation order; the serial
    // submission channel makes their queue-entry times strictly increasing.
    std::vector<VTime> entries;
    for (int i = 64; i < 70; ++i)
        entries.push_back(f.bed.query_job("alpha", f.sims.simulation(ids[i]).job_id).entry_time);
    REQUIRE(entries.size() == 6);
    for (std::size_t i = 1; i < entries.size(); ++i) CHECK(entries[i] > entries[i - 1]);
}

TEST_CASE("cancel works on deferred, queued and running simulations") {
    Fixture f(128);
    std::vector<std::string> ids;
    for (int i = 0; i < 65; ++i) {
        SimulationSpec spec;
        spec.work_model = WorkModel::Synthetic;
        spec.synthetic_duration = 30 * kMicrosPerSecond;
        ids.push_back(f.sims.create_simulation(f.incident, spec));
        f.sims.submit_simulation(ids.back());
    }
    CHECK(f.sims.deferred_count() == 1);
    f.sims.cancel_simulation(ids[64]);  // deferred
    CHECK(f.sims.deferred_count() == 0);
    CHECK(f.sims.simulation(ids[64]).status == SimStatus::Cancelled);

    f.sims.cancel_simulation(ids[20]);  // still pending in the queue
    f.clock.advance_to(3 * kMicrosPerSecond);
    CHECK(f.sims.simulation(ids[0]).status == SimStatus::Running);
    f.sims.cancel_simulation(ids[0]);  // running
    CHECK(f.sims.simulation(ids[0]).status == SimStatus::Cancelled);
    CHECK_THROWS_AS(f.sims.cancel_simulation(ids[0]), Error);  // already terminal
    CHECK_THROWS_AS(f.sims.cancel_simulation("sim-999999"), Error);
    f.bed.run_until_idle();
    CHECK(f.sims.simulation(ids[20]).status == SimStatus::Cancelled);
    CHECK(f.sims.simulation(ids[63]).status == SimStatus::Completed);
}

TEST_CASE("cancelling the incident withdraws its in-flight simulations") {
    Fixture f;
    SimulationSpec spec;
    spec.work_model = WorkModel::Synthetic;
    spec.synthetic_duration = 30 * kMicrosPerSecond;
    std::string a = f.sims.create_simulation(f.incident, spec);
    std::string b = f.sims.create_simulation(f.incident, spec);
    f.sims.submit_simulation(a);
    f.clock.advance_to(3 * kMicrosPerSecond);
    f.engine.cancel_incident(f.incident);
    f.bed.run_until_idle();
    CHECK(f.sims.simulation(a).status == SimStatus::Cancelled);
    CHECK(f.sims.simulation(b).status == SimStatus::Cancelled);
}

TEST_CASE("nodes are requested in cores_per_node units") {
    Fixture f(8);
    SimulationSpec spec = f.noop_spec();
    spec.requested_cores = 129;  // 2 nodes on 128-core nodes
    std::string id = f.sims.create_simulation(f.incident, spec);
    f.sims.submit_simulation(id);
    f.bed.run_until_idle();
    const JobRecord& job = f.bed.query_job("alpha", f.sims.simulation(id).job_id);
    CHECK(job.spec.nodes == 2);
}
