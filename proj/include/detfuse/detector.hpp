#pragma once

#include <chrono>
#include <cstdint>
#include <map>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "detfuse/fusion.hpp"

namespace detfuse {

struct DetectorTimeout : std::runtime_error {
    explicit DetectorTimeout(const std::string& what) : std::runtime_error(what) {}
};
struct DetectorProtocolError : std::runtime_error {
    explicit DetectorProtocolError(const std::string& what) : std::runtime_error(what) {}
};
struct MissingReplayEntry : std::runtime_error {
    explicit MissingReplayEntry(const std::string& what) : std::runtime_error(what) {}
};

enum class DetectorKind { replay, subprocess, synthetic };

struct DetectorBinding {
    DetectorKind kind = DetectorKind::replay;
    std::string source;                   // replay/synthetic: file path; subprocess: command line
    std::vector<std::string> class_list;  // nonempty
    std::chrono::milliseconds timeout{5000};
};

/// Noise model for synthesizing detections from ground truth.
struct SyntheticModel {
    double center_jitter_sd = 0.0;  // pixels
    double scale_jitter_sd = 0.0;   // log-scale
    double outlier_rate = 0.0;
    double outlier_shift = 0.0;     // pixels
    double miss_rate = 0.0;
    double score_base = 0.9;
    double score_sd = 0.0;
    std::uint64_t seed = 0;
};

SyntheticModel synthetic_model_from_file(const std::string& path);

/// Detections keyed by (image_id, augmentation_id), loaded from the replay
/// JSON schema:
///   {"images":[{"image_id", "augmentations":[{"augmentation_id",
///     "detections":[{"bbox", "label", "score"}]}]}]}
class ReplayFile {
public:
    static ReplayFile load(const std::string& path);

    const std::vector<Detection>& lookup(const std::string& image_id,
                                         int augmentation_id) const;

private:
    std::map<std::pair<std::string, int>, std::vector<Detection>> entries_;
};

/// One detector child process speaking newline-delimited JSON:
///   request  {"image_path", "augmentation_id", "request_id"}
///   response {"request_id", "detections":[{"bbox", "label", "score"}]}
/// Requests are serialized per child; a timeout kills the child.
class SubprocessDetector {
public:
    explicit SubprocessDetector(const std::string& command,
                                std::chrono::milliseconds timeout);
    ~SubprocessDetector();

    SubprocessDetector(const SubprocessDetector&) = delete;
    SubprocessDetector& operator=(const SubprocessDetector&) = delete;

    std::vector<Detection> request(const std::string& image_path, int augmentation_id);

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

/// Ground truth: labeled boxes without scores.
struct GroundTruth {
    std::vector<std::pair<AABB, std::string>> objects;
};

GroundTruth ground_truth_from_file(const std::string& path);

/// Draws detections from the noise model, one per surviving truth box.
/// Deterministic given (model.seed, augmentation_id, truth index).
std::vector<Detection> synthesize(const SyntheticModel& model, const GroundTruth& truth,
                                  int augmentation_id);

/// Unified detector entry point. `image_ref` is an image id (replay), an
/// image path (subprocess), or a ground-truth path (synthetic). A non-null
/// `session` reuses a live subprocess across calls.
std::vector<Detection> detect(const DetectorBinding& binding, const std::string& image_ref,
                              int augmentation_id, const ReplayFile* replay = nullptr,
                              SubprocessDetector* session = nullptr);

}  // namespace detfuse
