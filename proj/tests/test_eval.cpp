#include <filesystem>
#include <fstream>
#include <random>

#include "detfuse/eval.hpp"
#include "doctest.h"
#include "oracles.hpp"

using namespace detfuse;

namespace {

FusionResult fused_box(double x1, double y1, double x2, double y2) {
    FusionResult r;
    r.box = AABB{x1, y1, x2, y2};
    r.label = "cone";
    return r;
}

}  // namespace

TEST_CASE("average_iou") {
    std::vector<EvalRecord> records(2);
    records[0].iou = 0.6;
    records[1].iou = 0.8;
    CHECK(average_iou(records) == doctest::Approx(0.7).epsilon(1e-12));

    EvalRecord perfect;
    perfect.iou = 1.0;
    CHECK(average_iou({perfect}) == doctest::Approx(1.0));

    CHECK_THROWS_AS(average_iou({}), NoRecords);
}

TEST_CASE("match_records pairs each truth with at most one fused box") {
    const std::vector<std::pair<AABB, std::string>> truths = {
        {AABB{0, 0, 10, 10}, "cone"}, {AABB{50, 50, 60, 60}, "box"}};
    const std::vector<FusionResult> fused = {fused_box(1, 1, 11, 11),
                                             fused_box(200, 200, 210, 210)};
    const auto records = match_records("img", truths, fused);
    REQUIRE(records.size() == 2);
    CHECK(records[0].iou > 0.5);
    CHECK(records[0].matched);
    CHECK(records[1].iou == 0.0);  // unmatched truth scores zero
    CHECK_FALSE(records[1].matched);
}

TEST_CASE("detection_count") {
    const std::vector<std::pair<AABB, std::string>> truths = {
        {AABB{0, 0, 10, 10}, "cone"}, {AABB{50, 50, 60, 60}, "box"}};
    const auto all = match_records(
        "img", truths, {fused_box(0, 0, 10, 10), fused_box(50, 50, 60, 60)});
    CHECK(detection_count(all, 0.5) == std::pair<int, int>{2, 2});

    const auto none = match_records("img", truths, {});
    CHECK(detection_count(none, 0.5) == std::pair<int, int>{0, 2});
}

TEST_CASE("mean_ap basics") {
    std::vector<TruthBox> truths = {{"i1", AABB{0, 0, 10, 10}, "cone"},
                                    {"i2", AABB{5, 5, 15, 15}, "box"}};

    SUBCASE("perfect predictor") {
        std::vector<Prediction> preds = {
            {"i1", Detection{AABB{0, 0, 10, 10}, "cone", 0.9}},
            {"i2", Detection{AABB{5, 5, 15, 15}, "box", 0.9}}};
        CHECK(mean_ap(preds, truths).map == doctest::Approx(1.0).epsilon(1e-12));
    }
    SUBCASE("empty predictor") {
        CHECK(mean_ap({}, truths).map == doctest::Approx(0.0));
    }
    SUBCASE("score threshold drops weak predictions") {
        std::vector<Prediction> preds = {
            {"i1", Detection{AABB{0, 0, 10, 10}, "cone", 0.1}}};
        CHECK(mean_ap(preds, truths, 0.25).map == doctest::Approx(0.0));
    }
    SUBCASE("unknown prediction class is rejected") {
        std::vector<Prediction> preds = {
            {"i1", Detection{AABB{0, 0, 10, 10}, "bicycle", 0.9}}};
        CHECK_THROWS_AS(mean_ap(preds, truths), ClassMismatch);
    }
}

TEST_CASE("mean_ap is input-order invariant and matches the cutoff oracle") {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(0.0, 100.0);
    std::uniform_real_distribution<double> jitter(-3.0, 3.0);
    const std::vector<std::string> classes = {"cone", "box"};

    std::vector<TruthBox> truths;
    std::vector<Prediction> preds;
    std::vector<double> scores;
    for (int s = 0; s < 60; ++s) scores.push_back(0.3 + 0.01 * s);  // distinct
    std::shuffle(scores.begin(), scores.end(), rng);
    size_t next_score = 0;
    for (int img = 0; img < 5; ++img) {
        const std::string id = "img" + std::to_string(img);
        for (int t = 0; t < 4; ++t) {
            const double x = u(rng), y = u(rng);
            const std::string cls = classes[rng() % 2];
            truths.push_back({id, AABB{x, y, x + 10, y + 10}, cls});
            // one decent and one poor prediction per truth
            preds.push_back({id, Detection{AABB{x + jitter(rng) * 0.3, y + jitter(rng) * 0.3,
                                                x + 10 + jitter(rng) * 0.3,
                                                y + 10 + jitter(rng) * 0.3},
                                           cls, scores[next_score++]}});
            preds.push_back({id, Detection{AABB{x + 30, y + 30, x + 40, y + 40}, cls,
                                           scores[next_score++]}});
        }
    }
    REQUIRE(preds.size() <= 100);

    const PRCurve curve = mean_ap(preds, truths, 0.25, 0.5);
    for (const std::string& cls : classes) {
        const double ref = oracle::exhaustive_ap(preds, truths, cls, 0.5);
        CHECK(curve.ap_per_class.at(cls) == doctest::Approx(ref).epsilon(1e-9));
    }

    std::vector<Prediction> shuffled = preds;
    std::shuffle(shuffled.begin(), shuffled.end(), rng);
    const PRCurve curve2 = mean_ap(shuffled, truths, 0.25, 0.5);
    CHECK(curve2.map == doctest::Approx(curve.map).epsilon(1e-12));
}

TEST_CASE("deleting predictions never increases AP") {
    std::mt19937_64 rng(9);
    std::uniform_real_distribution<double> u(0.0, 100.0);
    std::vector<TruthBox> truths;
    std::vector<Prediction> preds;
    for (int t = 0; t < 20; ++t) {
        const double x = u(rng), y = u(rng);
        truths.push_back({"img", AABB{x, y, x + 8, y + 8}, "cone"});
        preds.push_back({"img", Detection{AABB{x + 1, y + 1, x + 9, y + 9}, "cone",
                                          0.3 + 0.03 * t}});
    }
    const double full = mean_ap(preds, truths).map;
    for (int trial = 0; trial < 5; ++trial) {
        std::vector<Prediction> subset = preds;
        std::shuffle(subset.begin(), subset.end(), rng);
        subset.resize(12);
        CHECK(mean_ap(subset, truths).map <= full + 1e-9);
    }
}

TEST_CASE("compare_methods produces one row per method") {
    // replay fixture where all augmentations agree exactly: identical rows
    const auto dir = std::filesystem::temp_directory_path();
    const std::string replay_path = (dir / "detfuse_eval_replay.json").string();
    const std::string truth_path = (dir / "detfuse_eval_truth.json").string();
    {
        std::ofstream out(replay_path);
        out << R"({"images": [{"image_id": "img1", "augmentations": [
          {"augmentation_id": 0, "detections": [{"bbox": [0,0,10,10], "label": "cone", "score": 0.9}]},
          {"augmentation_id": 1, "detections": [{"bbox": [0,0,10,10], "label": "cone", "score": 0.8}]},
          {"augmentation_id": 2, "detections": [{"bbox": [0,0,10,10], "label": "cone", "score": 0.7}]}
        ]}]})";
    }
    {
        std::ofstream out(truth_path);
        out << R"({"objects": [{"bbox": [0, 0, 10, 10], "label": "cone"}]})";
    }

    PipelineConfig cfg;
    cfg.roster = roster(3);
    cfg.top_t = 3;
    cfg.binding.kind = DetectorKind::replay;
    cfg.binding.source = replay_path;
    cfg.binding.class_list = {"cone"};
    cfg.grouping_seed = 1;

    const std::vector<ManifestEntry> entries = {ManifestEntry{"img1", truth_path}};
    const auto table =
        compare_methods(entries, cfg,
                        {FusionMethod::aabbfi, FusionMethod::average,
                         FusionMethod::median, FusionMethod::nms});
    REQUIRE(table.rows.size() == 4);
    for (const auto& row : table.rows) {
        CHECK(row.average_iou == doctest::Approx(1.0).epsilon(1e-9));
        CHECK(row.detected == 1);
        CHECK(row.total == 1);
        CHECK(row.map == doctest::Approx(1.0).epsilon(1e-9));
    }
    CHECK_THROWS_AS(compare_methods(entries, cfg, {}), std::invalid_argument);

    const std::string text = format_table(table);
    CHECK(text.find("aabbfi") != std::string::npos);
    CHECK(text.find("1/1") != std::string::npos);

    std::filesystem::remove(replay_path);
    std::filesystem::remove(truth_path);
}

TEST_CASE("voc xml reader") {
    const auto dir = std::filesystem::temp_directory_path();
    const std::string path = (dir / "detfuse_voc.xml").string();
    {
        std::ofstream out(path);
        out << R"(<annotation>
  <object><name>cone</name><bndbox>
    <xmin>10</xmin><ymin>20</ymin><xmax>30</xmax><ymax>40</ymax>
  </bndbox></object>
  <object><name>person</name><bndbox>
    <xmin>1</xmin><ymin>2</ymin><xmax>3</xmax><ymax>4</ymax>
  </bndbox></object>
</annotation>)";
    }
    const auto objects = read_voc_xml(path);
    REQUIRE(objects.size() == 2);
    CHECK(objects[0].second == "cone");
    CHECK(objects[0].first == AABB{10, 20, 30, 40});
    CHECK(objects[1].second == "person");
    std::filesystem::remove(path);
}
