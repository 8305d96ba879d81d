#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "detfuse/fusion.hpp"

namespace detfuse {

struct Underdetermined : std::runtime_error {
    Underdetermined() : std::runtime_error("grouping: fewer detections than groups") {}
};

struct EmptyGroup : std::runtime_error {
    EmptyGroup() : std::runtime_error("grouping: empty object group") {}
};

/// Detections from all M augmented variants, indexed by augmentation id.
struct DetectionPool {
    std::vector<std::vector<Detection>> per_augmentation;

    int augmentation_count() const { return static_cast<int>(per_augmentation.size()); }

    size_t total() const {
        size_t t = 0;
        for (const auto& v : per_augmentation) t += v.size();
        return t;
    }
};

struct GroupMember {
    int augmentation_id = 0;
    Detection detection;
};

struct ObjectGroup {
    int object_id = 0;  // 1-based
    std::vector<GroupMember> members;
};

/// S = max per-augmentation detection count; 0 when every list is empty.
int object_count(const DetectionPool& pool);

/// Partition the pooled detections into S groups by k-means over box centers
/// (k-means++ init, Lloyd iterations, deterministic under `seed`). Within a
/// cluster, at most one detection per augmentation survives; the rest spill
/// to their next-nearest cluster.
std::vector<ObjectGroup> group(const DetectionPool& pool, int s, std::uint64_t seed);

/// Modal label; ties break by highest summed score, then lexicographic.
std::string majority_label(const ObjectGroup& g);

}  // namespace detfuse
