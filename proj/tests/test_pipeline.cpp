#include <filesystem>
#include <fstream>

#include "detfuse/json_io.hpp"
#include "detfuse/pipeline.hpp"
#include "doctest.h"

using namespace detfuse;

namespace {

std::string write_temp(const std::string& name, const std::string& content) {
    const auto path = std::filesystem::temp_directory_path() / name;
    std::ofstream out(path);
    out << content;
    return path.string();
}

// The worked three-box fixture, one box per augmentation.
const char* kExample1Replay = R"({
  "images": [
    {"image_id": "img1", "augmentations": [
      {"augmentation_id": 0, "detections": [
        {"bbox": [1, 1, 4, 6], "label": "cone", "score": 0.9}]},
      {"augmentation_id": 1, "detections": [
        {"bbox": [2, 2, 5, 7], "label": "cone", "score": 0.8}]},
      {"augmentation_id": 2, "detections": [
        {"bbox": [3, 3, 6, 8], "label": "cone", "score": 0.7}]}
    ]}
  ]
})";

// Augmentation counts (3, 2, 2): three well-separated objects.
const char* kCountsReplay = R"({
  "images": [
    {"image_id": "img1", "augmentations": [
      {"augmentation_id": 0, "detections": [
        {"bbox": [0, 0, 4, 4], "label": "cone", "score": 0.9},
        {"bbox": [50, 50, 54, 54], "label": "box", "score": 0.8},
        {"bbox": [100, 0, 104, 4], "label": "cone", "score": 0.7}]},
      {"augmentation_id": 1, "detections": [
        {"bbox": [0.2, 0.1, 4.2, 4.1], "label": "cone", "score": 0.85},
        {"bbox": [50.1, 50.2, 54.1, 54.2], "label": "box", "score": 0.75}]},
      {"augmentation_id": 2, "detections": [
        {"bbox": [0.1, -0.1, 4.1, 3.9], "label": "cone", "score": 0.8},
        {"bbox": [99.9, 0.1, 103.9, 4.1], "label": "cone", "score": 0.7}]}
    ]}
  ]
})";

PipelineConfig replay_config(const std::string& replay_path, int m) {
    PipelineConfig cfg;
    cfg.roster = roster(m);
    cfg.top_t = 3;
    cfg.fusion_method = FusionMethod::aabbfi;
    cfg.binding.kind = DetectorKind::replay;
    cfg.binding.source = replay_path;
    cfg.binding.class_list = {"cone", "box", "pedestrian"};
    cfg.grouping_seed = 1;
    return cfg;
}

}  // namespace

TEST_CASE("pipeline reproduces the worked fused box from a replay fixture") {
    const std::string path = write_temp("detfuse_pipe_ex1.json", kExample1Replay);
    PipelineConfig cfg = replay_config(path, 3);
    const auto report = run(ManifestEntry{"img1", std::nullopt}, cfg);

    CHECK(report.object_count == 1);
    REQUIRE(report.objects.size() == 1);
    const auto& fused = report.objects[0];
    REQUIRE(fused.box.has_value());
    CHECK(std::abs(fused.box->x.lo - 1.44) <= 0.01);
    CHECK(std::abs(fused.box->y.lo - 1.42) <= 0.01);
    CHECK(std::abs(fused.box->x.hi - 4.44) <= 0.01);
    CHECK(std::abs(fused.box->y.hi - 6.42) <= 0.01);
    CHECK(fused.label == "cone");
    // all three augmentations supplied top-T members
    CHECK(report.selection_tally.size() == 3);
    std::filesystem::remove(path);
}

TEST_CASE("pipeline with M=1 passes raw detections through") {
    const std::string path = write_temp("detfuse_pipe_m1.json", kExample1Replay);
    PipelineConfig cfg = replay_config(path, 1);
    cfg.top_t = 1;
    const auto report = run(ManifestEntry{"img1", std::nullopt}, cfg);
    REQUIRE(report.objects.size() == 1);
    CHECK(report.objects[0].method == FusionMethod::passthrough);
    CHECK(*report.objects[0].box == AABB{1, 1, 4, 6});
    std::filesystem::remove(path);
}

TEST_CASE("pipeline sets S from the max augmentation count") {
    const std::string path = write_temp("detfuse_pipe_counts.json", kCountsReplay);
    PipelineConfig cfg = replay_config(path, 3);
    const auto report = run(ManifestEntry{"img1", std::nullopt}, cfg);
    CHECK(report.object_count == 3);
    CHECK(report.objects.size() == 3);
    std::filesystem::remove(path);
}

TEST_CASE("pipeline degrades missing replay augmentations to warnings") {
    const std::string path = write_temp("detfuse_pipe_degrade.json", kExample1Replay);
    PipelineConfig cfg = replay_config(path, 5);  // ids 3, 4 missing from replay
    const auto report = run(ManifestEntry{"img1", std::nullopt}, cfg);
    CHECK(report.warnings.size() == 2);
    CHECK(report.object_count == 1);
    REQUIRE(report.objects.size() == 1);
    CHECK(report.objects[0].method == FusionMethod::aabbfi);
    std::filesystem::remove(path);
}

TEST_CASE("pipeline rejects invalid top_t") {
    const std::string path = write_temp("detfuse_pipe_badt.json", kExample1Replay);
    PipelineConfig cfg = replay_config(path, 3);
    cfg.top_t = 4;
    CHECK_THROWS_AS(run(ManifestEntry{"img1", std::nullopt}, cfg), std::invalid_argument);
    std::filesystem::remove(path);
}

TEST_CASE("batch aggregates tallies and skips unreadable entries") {
    const std::string path = write_temp("detfuse_pipe_batch.json", kExample1Replay);
    PipelineConfig cfg = replay_config(path, 3);

    SUBCASE("empty manifest") {
        const auto br = batch({}, cfg);
        CHECK(br.reports.empty());
        CHECK(br.aggregate_tally.empty());
    }
    SUBCASE("single-image batch equals run") {
        const auto br = batch({ManifestEntry{"img1", std::nullopt}}, cfg);
        REQUIRE(br.reports.size() == 1);
        const auto direct = run(ManifestEntry{"img1", std::nullopt}, cfg,
                                nullptr, nullptr);
        CHECK(to_json(br.reports[0].objects[0]) == to_json(direct.objects[0]));
        // tally values sum to objects x T (all groups here have >= T members)
        int total = 0;
        for (const auto& [aug, count] : br.aggregate_tally) total += count;
        CHECK(total == 3);
    }
    std::filesystem::remove(path);
}

TEST_CASE("pipeline is deterministic with a replay binding") {
    const std::string path = write_temp("detfuse_pipe_det.json", kCountsReplay);
    PipelineConfig cfg = replay_config(path, 3);
    const auto a = run(ManifestEntry{"img1", std::nullopt}, cfg);
    const auto b = run(ManifestEntry{"img1", std::nullopt}, cfg);
    REQUIRE(a.objects.size() == b.objects.size());
    for (size_t i = 0; i < a.objects.size(); ++i) {
        CHECK(to_json(a.objects[i]) == to_json(b.objects[i]));
    }
    CHECK(a.selection_tally == b.selection_tally);
    std::filesystem::remove(path);
}

TEST_CASE("manifest parsing") {
    const std::string path = write_temp("detfuse_manifest.json", R"([
      {"image_path": "a.ppm", "truth_path": "a_truth.json"},
      {"image_id": "img9"}
    ])");
    const auto entries = manifest_from_file(path);
    REQUIRE(entries.size() == 2);
    CHECK(entries[0].image_ref == "a.ppm");
    CHECK(entries[0].truth_path == "a_truth.json");
    CHECK(entries[1].image_ref == "img9");
    CHECK_FALSE(entries[1].truth_path.has_value());
    std::filesystem::remove(path);
}
