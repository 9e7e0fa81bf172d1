#include "uwf/service/api.hpp"

#include "httplib.h"
#include "json.hpp"
#include "uwf/data_manager.hpp"
#include "uwf/engine.hpp"
#include "uwf/errors.hpp"
#include "uwf/simulation_manager.hpp"

namespace uwf {

namespace {

using nlohmann::json;

int status_for(Err code) {
    switch (code) {
        case Err::UnknownIncident:
        case Err::UnknownSimulation:
        case Err::UnknownDataItem:
        case Err::UnknownJob:
        case Err::UnknownMachine:
            return 404;
        case Err::InvalidStateTransition:
        case Err::IncidentNotActive:
            return 409;
        default:
            return 400;
    }
}

void reply_json(httplib::Response& res, int status, const json& body) {
    res.status = status;
    res.set_content(body.dump(2), "application/json");
}

void reply_error(httplib::Response& res, int status, const std::string& message) {
    reply_json(res, status, json{{"error", message}});
}

json sim_to_json(const SimulationInfo& s) {
    json j;
    j["sim_id"] = s.sim_id;
    j["incident_id"] = s.incident_id;
    j["machine"] = s.machine_name;
    j["directory"] = s.directory;
    j["requested_cores"] = s.requested_cores;
    j["walltime_seconds"] = vtime_to_seconds(s.walltime);
    j["description"] = s.description;
    j["status"] = sim_status_name(s.status);
    j["job_id"] = s.job_id;
    j["history"] = json::array();
    for (const auto& [st, t] : s.history)
        j["history"].push_back({{"status", sim_status_name(st)}, {"time", vtime_to_seconds(t)}});
    return j;
}

json data_to_json(const DataItem& d) {
    return json{{"data_id", d.data_id},     {"name", d.name},
                {"machine", d.machine_name}, {"path", d.path},
                {"description", d.description}, {"mime_type", d.mime_type},
                {"size_bytes", d.size_bytes}};
}

}  // namespace

ApiService::ApiService(WorkflowEngine& engine, SimulationManager& simulations, DataManager& data,
                       DataSourceManager& sources, ServiceConfig config)
    : engine_(engine),
      simulations_(simulations),
      data_(data),
      sources_(sources),
      config_(std::move(config)),
      server_(std::make_unique<httplib::Server>()) {
    install_routes();
}

ApiService::~ApiService() { stop(); }

void ApiService::install_routes() {
    auto guarded = [this](auto fn) {
        return [this, fn](const httplib::Request& req, httplib::Response& res) {
            if (!config_.api_key.empty() && req.get_header_value("X-API-Key") != config_.api_key) {
                reply_error(res, 401, "missing or bad API key");
                return;
            }
            try {
                fn(req, res);
            } catch (const Error& e) {
                reply_error(res, status_for(e.code()), e.what());
            } catch (const std::exception& e) {
                reply_error(res, 500, e.what());
            }
        };
    };

    server_->Post("/incidents", guarded([this](const httplib::Request& req,
                                               httplib::Response& res) {
        auto body = json::parse(req.body, nullptr, false);
        if (body.is_discarded() || !body.contains("name") || !body.contains("kind")) {
            reply_error(res, 400, "body must be JSON with name and kind");
            return;
        }
        std::string id = engine_.create_incident(body["name"].get<std::string>(),
                                                 body["kind"].get<std::string>());
        reply_json(res, 201, json{{"incident_id", id}});
    }));

    server_->Post(R"(/incidents/([^/]+)/activate)",
                  guarded([this](const httplib::Request& req, httplib::Response& res) {
                      engine_.activate_incident(req.matches[1]);
                      res.status = 204;
                  }));

    server_->Get(R"(/incidents/([^/]+))",
                 guarded([this](const httplib::Request& req, httplib::Response& res) {
                     IncidentInfo inc = engine_.incident(req.matches[1]);
                     json j;
                     j["incident_id"] = inc.incident_id;
                     j["name"] = inc.name;
                     j["kind"] = inc.kind;
                     j["state"] = incident_state_name(inc.state);
                     j["simulations"] = json::array();
                     for (const std::string& sid : inc.simulation_ids)
                         j["simulations"].push_back(sim_to_json(simulations_.simulation(sid)));
                     j["data"] = json::array();
                     for (const DataItem& d : data_.list_data(inc.incident_id))
                         j["data"].push_back(data_to_json(d));
                     reply_json(res, 200, j);
                 }));

    server_->Post(R"(/incidents/([^/]+)/messages)",
                  guarded([this](const httplib::Request& req, httplib::Response& res) {
                      auto body = json::parse(req.body, nullptr, false);
                      if (body.is_discarded() || !body.contains("queue")) {
                          reply_error(res, 400, "body must be JSON with queue");
                          return;
                      }
                      std::string payload;
                      if (body.contains("payload"))
                          payload = body["payload"].is_string()
                                        ? body["payload"].get<std::string>()
                                        : body["payload"].dump();
                      std::uint64_t id = engine_.send_message(body["queue"].get<std::string>(),
                                                              req.matches[1], payload, "external");
                      reply_json(res, 202, json{{"message_id", id}});
                  }));

    server_->Get(R"(/simulations/([^/]+))",
                 guarded([this](const httplib::Request& req, httplib::Response& res) {
                     reply_json(res, 200, sim_to_json(simulations_.simulation(req.matches[1])));
                 }));

    server_->Delete(R"(/incidents/([^/]+))",
                    guarded([this](const httplib::Request& req, httplib::Response& res) {
                        engine_.cancel_incident(req.matches[1]);
                        res.status = 204;
                    }));

    server_->Post(R"(/data/push/([^/]+))",
                  guarded([this](const httplib::Request& req, httplib::Response& res) {
                      std::string source_id = req.matches[1];
                      if (!sources_.has_source(source_id)) {
                          reply_error(res, 404, "unknown data source: " + source_id);
                          return;
                      }
                      bool enqueued = sources_.push(source_id, req.body);
                      reply_json(res, 202, json{{"accepted", true}, {"enqueued", enqueued}});
                  }));
}

int ApiService::start() {
    port_ = config_.port;
    if (port_ == 0) {
        port_ = server_->bind_to_any_port(config_.bind_host);
        if (port_ < 0) throw Error(Err::IoError, "cannot bind " + config_.bind_host);
        thread_ = std::thread([this] { server_->listen_after_bind(); });
    } else {
        if (!server_->bind_to_port(config_.bind_host, port_))
            throw Error(Err::IoError,
                        "cannot bind " + config_.bind_host + ":" + std::to_string(port_));
        thread_ = std::thread([this] { server_->listen_after_bind(); });
    }
    server_->wait_until_ready();
    return port_;
}

void ApiService::stop() {
    if (server_) server_->stop();
    if (thread_.joinable()) thread_.join();
}

std::string ApiService::api_description_json() {
    json j;
    j["openapi"] = "3.0.0";
    j["info"] = {{"title", "urgent workflow service"}, {"version", "1.0"}};
    auto op = [](const std::string& summary, int status) {
        return json{{"summary", summary},
                    {"responses", {{std::to_string(status), json{{"description", "success"}}}}}};
    };
    j["paths"] = {
        {"/incidents", {{"post", op("create incident {name, kind}", 201)}}},
        {"/incidents/{id}", {{"get", op("incident summary with simulations and data", 200)},
                             {"delete", op("cancel incident", 204)}}},
        {"/incidents/{id}/activate", {{"post", op("activate incident", 204)}}},
        {"/incidents/{id}/messages", {{"post", op("send message {queue, payload}", 202)}}},
        {"/simulations/{id}", {{"get", op("simulation record", 200)}}},
        {"/data/push/{source_id}", {{"post", op("push payload into a data source", 202)}}},
    };
    j["components"] = {
        {"securitySchemes",
         {{"apiKey", {{"type", "apiKey"}, {"in", "header"}, {"name", "X-API-Key"}}}}}};
    return j.dump(2);
}

}  // namespace uwf
