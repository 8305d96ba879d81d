#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "detfuse/fusion.hpp"
#include "detfuse/pipeline.hpp"

namespace detfuse {

struct NoRecords : std::runtime_error {
    NoRecords() : std::runtime_error("evaluation: no records") {}
};
struct ClassMismatch : std::runtime_error {
    explicit ClassMismatch(const std::string& what) : std::runtime_error(what) {}
};

/// One ground-truth object and the fused box matched to it (if any).
struct EvalRecord {
    std::string image_id;
    AABB truth_box;
    std::string truth_label;
    std::optional<AABB> fused_box;
    double iou = 0.0;
    bool matched = false;
};

/// Match fused boxes to truths one-to-one, greedy by descending IoU, per
/// image. Unmatched truths yield records with IoU 0.
std::vector<EvalRecord> match_records(
    const std::string& image_id,
    const std::vector<std::pair<AABB, std::string>>& truths,
    const std::vector<FusionResult>& fused, double iou_threshold = 0.5);

/// Mean IoU over all truth records; misses count as 0.
double average_iou(const std::vector<EvalRecord>& records);

/// (detected, total): truths whose fused box reaches the IoU threshold.
std::pair<int, int> detection_count(const std::vector<EvalRecord>& records,
                                    double iou_threshold);

struct PRPoint {
    double recall = 0.0;
    double precision = 0.0;
};

struct PRCurve {
    std::map<std::string, std::vector<PRPoint>> points_per_class;
    std::map<std::string, double> ap_per_class;
    double map = 0.0;
};

/// Scored prediction for AP computation.
struct Prediction {
    std::string image_id;
    Detection detection;
};

struct TruthBox {
    std::string image_id;
    AABB box;
    std::string label;
};

/// VOC2007 11-point interpolated AP per class, averaged to mAP. Predictions
/// below score_threshold are dropped; matching is greedy by descending score
/// at the IoU threshold, one truth matched at most once.
PRCurve mean_ap(const std::vector<Prediction>& predictions,
                const std::vector<TruthBox>& truths, double score_threshold = 0.25,
                double iou_threshold = 0.5);

struct MethodRow {
    std::string method;
    double average_iou = 0.0;
    int detected = 0;
    int total = 0;
    double map = 0.0;
};

struct ComparisonTable {
    std::vector<MethodRow> rows;
};

/// Runs the pipeline once per method over the manifest and scores each run
/// against ground truth, one row per method.
ComparisonTable compare_methods(const std::vector<ManifestEntry>& entries,
                                const PipelineConfig& base_cfg,
                                const std::vector<FusionMethod>& methods,
                                double iou_threshold = 0.5,
                                double score_threshold = 0.25);

std::string format_table(const ComparisonTable& table);

/// Minimal PASCAL VOC XML annotation reader: object name + bndbox corners.
std::vector<std::pair<AABB, std::string>> read_voc_xml(const std::string& path);

}  // namespace detfuse
