#pragma once

#include "detfuse/eval.hpp"
#include "detfuse/json_io.hpp"
#include "detfuse/pipeline.hpp"

namespace detfuse {

inline json to_json(const StageTimings& t) {
    return json{{"augment_ms", t.augment_ms},
                {"detect_ms", t.detect_ms},
                {"fuse_ms", t.fuse_ms}};
}

inline json to_json(const PipelineReport& r) {
    json objects = json::array();
    for (const FusionResult& f : r.objects) objects.push_back(to_json(f));
    json raw = json::array();
    for (const auto& dets : r.raw_detections) {
        json one = json::array();
        for (const Detection& d : dets) one.push_back(to_json(d));
        raw.push_back(std::move(one));
    }
    json tally = json::object();
    for (const auto& [aug, count] : r.selection_tally) tally[std::to_string(aug)] = count;
    return json{{"image_ref", r.image_ref},
                {"object_count", r.object_count},
                {"objects", std::move(objects)},
                {"raw_detections", std::move(raw)},
                {"selection_tally", std::move(tally)},
                {"timings", to_json(r.timings)},
                {"warnings", r.warnings}};
}

inline json to_json(const BatchReport& b) {
    json reports = json::array();
    for (const PipelineReport& r : b.reports) reports.push_back(to_json(r));
    json tally = json::object();
    for (const auto& [aug, count] : b.aggregate_tally) tally[std::to_string(aug)] = count;
    return json{{"reports", std::move(reports)},
                {"aggregate_tally", std::move(tally)},
                {"failed", b.failed}};
}

inline FusionResult fusion_result_from_json(const json& j) {
    FusionResult r;
    r.method = fusion_method_from_string(j.at("method").get<std::string>());
    r.label = j.value("label", std::string{});
    r.repaired = j.value("repaired", false);
    if (j.contains("bbox") && !j.at("bbox").is_null()) r.box = aabb_from_json(j.at("bbox"));
    if (j.contains("fallback")) r.fallback = j.at("fallback").get<std::string>();
    return r;
}

inline json to_json(const ComparisonTable& t) {
    json rows = json::array();
    for (const MethodRow& r : t.rows) {
        rows.push_back(json{{"method", r.method},
                            {"average_iou", r.average_iou},
                            {"detected", r.detected},
                            {"total", r.total},
                            {"mAP", r.map}});
    }
    return json{{"rows", std::move(rows)}};
}

}  // namespace detfuse
