#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "uwf/vtime.hpp"

namespace uwf {

// Flat key/value configuration text, the one syntax used by machine config
// files, workflow parameter files and engine manifests:
//
//   # comment
//   key: scalar
//   list: [a, b, c]
//
// Scalars are stored verbatim (surrounding quotes stripped); typing is up to
// the caller. Keys may repeat; lookup helpers return the first occurrence.
struct KvEntry {
    std::string key;
    bool is_array = false;
    std::string scalar;
    std::vector<std::string> array;
    int line = 0;
};

class KvConfig {
public:
    static KvConfig parse(const std::string& text, const std::string& origin = "<string>");
    static KvConfig parse_file(const std::filesystem::path& path);

    const std::vector<KvEntry>& entries() const { return entries_; }
    bool has(const std::string& key) const;

    const KvEntry* find(const std::string& key) const;

    std::string get_string(const std::string& key) const;
    std::string get_string(const std::string& key, const std::string& fallback) const;
    long long get_int(const std::string& key) const;
    long long get_int(const std::string& key, long long fallback) const;
    double get_double(const std::string& key) const;
    double get_double(const std::string& key, double fallback) const;
    // Durations are decimal seconds.
    VTime get_duration(const std::string& key, VTime fallback) const;
    std::vector<std::string> get_array(const std::string& key) const;

    // Splits the entry list into blocks, each starting at an occurrence of
    // `block_key`. Entries before the first occurrence are an error.
    std::vector<KvConfig> split_blocks(const std::string& block_key) const;

    const std::string& origin() const { return origin_; }

private:
    std::vector<KvEntry> entries_;
    std::string origin_;

    [[noreturn]] void missing(const std::string& key) const;
};

long long parse_int_strict(const std::string& text, const std::string& what);
double parse_double_strict(const std::string& text, const std::string& what);

}  // namespace uwf
