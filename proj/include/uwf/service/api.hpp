#pragma once

#include <memory>
#include <string>
#include <thread>

#include "uwf/service/data_sources.hpp"

namespace httplib {
class Server;
}

namespace uwf {

class WorkflowEngine;
class SimulationManager;
class DataManager;

struct ServiceConfig {
    std::string api_key;  // empty disables auth
    std::string bind_host = "127.0.0.1";
    int port = 0;  // 0 picks a free port
};

// JSON-over-HTTP face of the engine and managers. Every route is a thin
// wrapper; all state lives behind the wrapped APIs.
class ApiService {
public:
    ApiService(WorkflowEngine& engine, SimulationManager& simulations, DataManager& data,
               DataSourceManager& sources, ServiceConfig config);
    ~ApiService();

    ApiService(const ApiService&) = delete;
    ApiService& operator=(const ApiService&) = delete;

    // Binds and serves on a background thread; returns the bound port.
    int start();
    void stop();

    static std::string api_description_json();

private:
    void install_routes();

    WorkflowEngine& engine_;
    SimulationManager& simulations_;
    DataManager& data_;
    DataSourceManager& sources_;
    ServiceConfig config_;
    std::unique_ptr<httplib::Server> server_;
    std::thread thread_;
    int port_ = 0;
};

}  // namespace uwf
