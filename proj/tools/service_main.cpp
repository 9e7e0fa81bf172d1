#include <atomic>
#include <chrono>
#include <csignal>
#include <cstdio>
#include <string>
#include <thread>

#include "CLI11.hpp"
#include "uwf/data_manager.hpp"
#include "uwf/engine.hpp"
#include "uwf/service/api.hpp"
#include "uwf/simulation_manager.hpp"
#include "uwf/testbed.hpp"

namespace {
std::atomic<bool> stop_requested{false};
void on_signal(int) { stop_requested = true; }
}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"incident workflow service"};

    std::string machines_path, manifest_path, store_path = "service-store.jsonl", api_key;
    int port = 8080;
    bool describe = false;
    app.add_option("--machines", machines_path, "machine configuration file");
    app.add_option("--manifest", manifest_path, "workflow kind manifest");
    app.add_option("--store", store_path, "engine persistence file");
    app.add_option("--port", port, "listen port");
    app.add_option("--api-key", api_key, "static API key (empty disables auth)");
    app.add_flag("--describe", describe, "print the API description and exit");

    CLI11_PARSE(app, argc, argv);

    if (describe) {
        std::puts(uwf::ApiService::api_description_json().c_str());
        return 0;
    }

    try {
        uwf::VirtualClock clock;
        uwf::Testbed bed(clock);
        if (!machines_path.empty()) bed.load_machines(machines_path);
        uwf::WorkflowEngine engine(store_path);
        uwf::SimulationManager sims(engine, bed, clock);
        uwf::DataManager data(bed, &engine);
        engine.set_services(&sims, &data);
        if (!manifest_path.empty()) engine.load_manifest(manifest_path);
        engine.recover();
        uwf::DataSourceManager sources(engine);

        uwf::ServiceConfig cfg;
        cfg.api_key = api_key;
        cfg.port = port;
        uwf::ApiService api(engine, sims, data, sources, cfg);
        int bound = api.start();
        std::printf("listening on port %d\n", bound);

        std::signal(SIGINT, on_signal);
        std::signal(SIGTERM, on_signal);
        auto started = std::chrono::steady_clock::now();
        while (!stop_requested) {
            std::this_thread::sleep_for(std::chrono::milliseconds(250));
            auto elapsed = std::chrono::duration_cast<std::chrono::microseconds>(
                               std::chrono::steady_clock::now() - started)
                               .count();
            sources.poll_sources(static_cast<uwf::VTime>(elapsed));
            bed.advance_to(static_cast<uwf::VTime>(elapsed));
        }
        api.stop();
        return 0;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    }
}
