#include "uwf/data_manager.hpp"

#include <chrono>
#include <fstream>

#include "uwf/engine.hpp"
#include "uwf/errors.hpp"
#include "uwf/testbed.hpp"

namespace uwf {

namespace fs = std::filesystem;

namespace {
std::int64_t wall_micros() {
    return std::chrono::duration_cast<std::chrono::microseconds>(
               std::chrono::system_clock::now().time_since_epoch())
        .count();
}

bool is_under(const fs::path& p, const fs::path& root) {
    auto rit = root.begin();
    for (auto pit = p.begin(); rit != root.end(); ++pit, ++rit) {
        if (pit == p.end() || *pit != *rit) return false;
    }
    return true;
}
}  // namespace

fs::path DataManager::resolve_dir(const std::string& machine, const std::string& path) const {
    fs::path root;
    try {
        root = machines_.filesystem_root(machine);
    } catch (const Error&) {
        throw Error(Err::DataManagerError, "unknown machine " + machine);
    }
    if (root.empty())
        throw Error(Err::DataManagerError, "machine " + machine + " has no filesystem root");
    fs::path dir = fs::path(path).is_absolute() ? fs::path(path) : root / path;
    dir = dir.lexically_normal();
    if (!is_under(dir, root.lexically_normal()))
        throw Error(Err::DataManagerError,
                    "path escapes machine filesystem: " + dir.string());
    if (!fs::is_directory(dir))
        throw Error(Err::DataManagerError, "no such directory on " + machine + ": " + dir.string());
    return dir;
}

void DataManager::write_file_atomic(const fs::path& file, const std::string& payload) {
    fs::path tmp = file;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw Error(Err::DataManagerError, "cannot write " + tmp.string());
        out.write(payload.data(), static_cast<std::streamsize>(payload.size()));
        if (!out) throw Error(Err::DataManagerError, "short write to " + tmp.string());
    }
    std::error_code ec;
    fs::rename(tmp, file, ec);
    if (ec) throw Error(Err::DataManagerError, "rename failed: " + ec.message());
}

std::string DataManager::register_item_locked(DataItem item) {
    // A fresh put over the same (machine, path, name) replaces the old
    // registration; configuration refresh is the common case.
    for (auto it = items_.begin(); it != items_.end();) {
        if (it->second.machine_name == item.machine_name && it->second.path == item.path &&
            it->second.name == item.name)
            it = items_.erase(it);
        else
            ++it;
    }
    char buf[32];
    std::snprintf(buf, sizeof(buf), "dat-%06llu", static_cast<unsigned long long>(next_id_++));
    item.data_id = buf;
    items_.emplace(item.data_id, item);
    return item.data_id;
}

std::string DataManager::put_byte_data(const std::string& name, const std::string& machine_name,
                                       const std::string& description,
                                       const std::string& mime_type, const std::string& payload,
                                       const std::string& path, const std::string& incident_id) {
    fs::path dir = resolve_dir(machine_name, path);
    write_file_atomic(dir / name, payload);
    std::string id;
    {
        std::lock_guard<std::mutex> g(mu_);
        DataItem item;
        item.name = name;
        item.machine_name = machine_name;
        item.path = dir.string();
        item.description = description;
        item.mime_type = mime_type;
        item.size_bytes = payload.size();
        item.incident_id = incident_id;
        item.created_at = wall_micros();
        id = register_item_locked(std::move(item));
    }
    if (engine_ && !incident_id.empty()) engine_->associate_data(incident_id, id);
    return id;
}

DataItem DataManager::item(const std::string& data_id) const {
    std::lock_guard<std::mutex> g(mu_);
    auto it = items_.find(data_id);
    if (it == items_.end()) throw Error(Err::UnknownDataItem, data_id);
    return it->second;
}

std::string DataManager::get_byte_data(const std::string& data_id) const {
    DataItem it = item(data_id);
    std::ifstream in(fs::path(it.path) / it.name, std::ios::binary);
    if (!in)
        throw Error(Err::DataManagerError, "cannot read " + it.path + "/" + it.name);
    std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return bytes;
}

std::string DataManager::copy_data(const std::string& data_id, const std::string& dest_machine,
                                   const std::string& dest_path) {
    DataItem src = item(data_id);
    std::string payload = get_byte_data(data_id);
    return put_byte_data(src.name, dest_machine, src.description, src.mime_type, payload,
                         dest_path, src.incident_id);
}

void DataManager::move_data(const std::string& data_id, const std::string& dest_machine,
                            const std::string& dest_path) {
    DataItem src = item(data_id);
    std::string payload = get_byte_data(data_id);
    fs::path dir = resolve_dir(dest_machine, dest_path);
    write_file_atomic(dir / src.name, payload);
    std::error_code ec;
    fs::remove(fs::path(src.path) / src.name, ec);
    std::lock_guard<std::mutex> g(mu_);
    auto it = items_.find(data_id);
    if (it == items_.end()) throw Error(Err::UnknownDataItem, data_id);
    it->second.machine_name = dest_machine;
    it->second.path = dir.string();
}

void DataManager::delete_data(const std::string& data_id) {
    DataItem it = item(data_id);
    std::error_code ec;
    fs::remove(fs::path(it.path) / it.name, ec);
    if (ec) throw Error(Err::DataManagerError, "remove failed: " + ec.message());
    std::lock_guard<std::mutex> g(mu_);
    items_.erase(data_id);
}

std::vector<DataItem> DataManager::list_data(const std::string& incident_id) const {
    std::lock_guard<std::mutex> g(mu_);
    std::vector<DataItem> out;
    for (const auto& [_, it] : items_)
        if (it.incident_id == incident_id) out.push_back(it);
    return out;
}

}  // namespace uwf
