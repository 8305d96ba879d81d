#pragma once

#include <optional>
#include <string>
#include <vector>

#include "detfuse/fuzzy.hpp"
#include "detfuse/geometry.hpp"

namespace detfuse {

struct EmptyInput : std::runtime_error {
    explicit EmptyInput(const std::string& what) : std::runtime_error(what) {}
};

/// A labeled, scored box from one detector run.
struct Detection {
    AABB box;
    std::string label;
    double score = 0.0;

    Detection() = default;
    Detection(AABB b, std::string l, double s)
        : box(b), label(std::move(l)), score(s) {}
};

enum class FusionMethod { aabbfi, average, median, nms, passthrough };

std::string to_string(FusionMethod m);
FusionMethod fusion_method_from_string(const std::string& s);

struct FusionResult {
    std::optional<AABB> box;
    std::string label;
    FusionMethod method = FusionMethod::aabbfi;
    bool repaired = false;
    std::optional<std::string> fallback;  // e.g. per-axis zero-agreement note
};

/// Box fuzzy-integral fusion: four scalar Choquet integrals, one per axis
/// endpoint, each against the agreement chain of that axis's intervals.
/// A pairwise-disjoint axis falls back to the arithmetic mean of endpoints.
FusionResult fuse_aabbfi(const std::vector<AABB>& boxes);

/// Coordinate-wise arithmetic mean.
FusionResult fuse_average(const std::vector<AABB>& boxes);

/// Coordinate-wise median; even counts take the midpoint of the middle pair.
FusionResult fuse_median(const std::vector<AABB>& boxes);

/// Greedy NMS; the highest-score survivor is the fused representative.
FusionResult fuse_nms(const std::vector<Detection>& dets, double iou_threshold = 0.5);

/// Size-dependent dispatch over one object group:
///   N >= 3 -> fuse the top-T boxes by score with `method`
///   N == 2 -> average, N == 1 -> passthrough, N == 0 -> no box.
/// The label is the modal group label; ties break by summed score, then
/// lexicographically.
FusionResult dispatch(const std::vector<Detection>& group, int top_t,
                      FusionMethod method, double nms_iou_threshold = 0.5);

}  // namespace detfuse
