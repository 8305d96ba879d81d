#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "detfuse/augment.hpp"
#include "detfuse/detector.hpp"
#include "detfuse/fusion.hpp"
#include "detfuse/grouping.hpp"

namespace detfuse {

struct PipelineConfig {
    std::vector<AugmentationSpec> roster;  // M entries, identity-first by convention
    int top_t = 3;
    FusionMethod fusion_method = FusionMethod::aabbfi;
    DetectorBinding binding;
    std::uint64_t grouping_seed = 0;
    int jobs = 1;  // parallelism limit for augment/detect fan-out

    int m() const { return static_cast<int>(roster.size()); }
};

struct StageTimings {
    double augment_ms = 0.0;
    double detect_ms = 0.0;
    double fuse_ms = 0.0;
};

struct PipelineReport {
    std::string image_ref;
    int object_count = 0;  // S
    std::vector<FusionResult> objects;
    std::vector<std::vector<Detection>> raw_detections;  // per augmentation id
    std::map<int, int> selection_tally;  // augmentation id -> top-T memberships
    StageTimings timings;
    std::vector<std::string> warnings;
};

/// One manifest entry. `image_ref` feeds the detector binding: an image id
/// for replay, an image path for subprocess, a ground-truth path for
/// synthetic bindings.
struct ManifestEntry {
    std::string image_ref;
    std::optional<std::string> truth_path;
};

struct BatchReport {
    std::vector<PipelineReport> reports;
    std::map<int, int> aggregate_tally;
    int failed = 0;
};

/// Full augment -> detect -> count -> group -> dispatch-fuse pass over one
/// input. Detector failures on single augmentations degrade to empty
/// detection lists with a warning.
PipelineReport run(const ManifestEntry& entry, const PipelineConfig& cfg,
                   const ReplayFile* replay = nullptr,
                   SubprocessDetector* session = nullptr);

BatchReport batch(const std::vector<ManifestEntry>& entries, const PipelineConfig& cfg);

std::vector<ManifestEntry> manifest_from_file(const std::string& path);

}  // namespace detfuse
