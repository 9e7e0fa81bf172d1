#pragma once

#include <vector>

#include "uwf/errors.hpp"

namespace uwf::runner {

struct NodeJob {
    std::vector<long long> member_indices;  // preserved input order
};

// Packs ensemble members onto node-sized jobs: floor(C/m) members per node,
// every node job full except possibly the last.
inline std::vector<NodeJob> pack_members(long long n_members, int cores_per_member,
                                         int cores_per_node) {
    if (cores_per_member < 1)
        throw Error(Err::ConfigError, "cores_per_member must be >= 1");
    if (cores_per_node < 1)
        throw Error(Err::ConfigError, "cores_per_node must be >= 1");
    if (cores_per_member > cores_per_node)
        throw Error(Err::MemberTooWide, std::to_string(cores_per_member) + " cores/member on " +
                                            std::to_string(cores_per_node) + "-core nodes");
    if (n_members < 0) throw Error(Err::ConfigError, "negative member count");
    long long per_node = cores_per_node / cores_per_member;
    std::vector<NodeJob> jobs;
    for (long long i = 0; i < n_members; ++i) {
        if (jobs.empty() || static_cast<long long>(jobs.back().member_indices.size()) == per_node)
            jobs.emplace_back();
        jobs.back().member_indices.push_back(i);
    }
    return jobs;
}

}  // namespace uwf::runner
