#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <mutex>
#include <string>
#include <vector>

namespace uwf {

class MachineConnector;
class WorkflowEngine;

struct DataItem {
    std::string data_id;
    std::string name;
    std::string machine_name;
    std::string path;  // directory holding the file, machine-absolute
    std::string description;
    std::string mime_type;
    std::uint64_t size_bytes = 0;
    std::string incident_id;
    std::int64_t created_at = 0;
};

// Tracks data items by identity and moves bytes onto machine filesystems.
// Machines are addressed purely through the connector's filesystem roots, so
// the same code path serves the simulated testbed and any future connector.
class DataManager {
public:
    DataManager(MachineConnector& machines, WorkflowEngine* engine = nullptr)
        : machines_(machines), engine_(engine) {}

    std::string put_byte_data(const std::string& name, const std::string& machine_name,
                              const std::string& description, const std::string& mime_type,
                              const std::string& payload, const std::string& path,
                              const std::string& incident_id = "");

    std::string get_byte_data(const std::string& data_id) const;
    std::string copy_data(const std::string& data_id, const std::string& dest_machine,
                          const std::string& dest_path);
    void move_data(const std::string& data_id, const std::string& dest_machine,
                   const std::string& dest_path);
    void delete_data(const std::string& data_id);
    std::vector<DataItem> list_data(const std::string& incident_id) const;
    DataItem item(const std::string& data_id) const;

private:
    std::filesystem::path resolve_dir(const std::string& machine, const std::string& path) const;
    void write_file_atomic(const std::filesystem::path& file, const std::string& payload);
    std::string register_item_locked(DataItem item);

    MachineConnector& machines_;
    WorkflowEngine* engine_;
    mutable std::mutex mu_;
    std::map<std::string, DataItem> items_;
    std::uint64_t next_id_ = 1;
};

}  // namespace uwf
