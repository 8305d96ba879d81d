#include "detfuse/eval.hpp"

#include <algorithm>
#include <fstream>
#include <iomanip>
#include <numeric>
#include <set>
#include <sstream>

namespace detfuse {

std::vector<EvalRecord> match_records(
    const std::string& image_id,
    const std::vector<std::pair<AABB, std::string>>& truths,
    const std::vector<FusionResult>& fused, double iou_threshold) {
    // All candidate (truth, fused) pairs with positive IoU, greedily taken in
    // descending IoU order, each side used at most once.
    struct Pair {
        size_t truth;
        size_t pred;
        double iou_value;
    };
    std::vector<Pair> pairs;
    for (size_t t = 0; t < truths.size(); ++t) {
        for (size_t p = 0; p < fused.size(); ++p) {
            if (!fused[p].box) continue;
            const double v = iou(truths[t].first, *fused[p].box);
            if (v > 0.0) pairs.push_back({t, p, v});
        }
    }
    std::stable_sort(pairs.begin(), pairs.end(),
                     [](const Pair& a, const Pair& b) { return a.iou_value > b.iou_value; });

    std::vector<EvalRecord> records(truths.size());
    std::vector<bool> truth_used(truths.size(), false);
    std::vector<bool> pred_used(fused.size(), false);
    for (size_t t = 0; t < truths.size(); ++t) {
        records[t].image_id = image_id;
        records[t].truth_box = truths[t].first;
        records[t].truth_label = truths[t].second;
    }
    for (const Pair& pr : pairs) {
        if (truth_used[pr.truth] || pred_used[pr.pred]) continue;
        truth_used[pr.truth] = true;
        pred_used[pr.pred] = true;
        records[pr.truth].fused_box = fused[pr.pred].box;
        records[pr.truth].iou = pr.iou_value;
        records[pr.truth].matched = pr.iou_value >= iou_threshold;
    }
    return records;
}

double average_iou(const std::vector<EvalRecord>& records) {
    if (records.empty()) throw NoRecords{};
    double sum = 0.0;
    for (const EvalRecord& r : records) sum += r.iou;
    return sum / static_cast<double>(records.size());
}

std::pair<int, int> detection_count(const std::vector<EvalRecord>& records,
                                    double iou_threshold) {
    int detected = 0;
    for (const EvalRecord& r : records) {
        if (r.fused_box && r.iou >= iou_threshold) detected += 1;
    }
    return {detected, static_cast<int>(records.size())};
}

namespace {

double voc11_ap(std::vector<PRPoint> points) {
    // 11-point interpolation: mean of max precision at recall >= r for
    // r in {0, 0.1, ..., 1.0}.
    double sum = 0.0;
    for (int i = 0; i <= 10; ++i) {
        const double r = i / 10.0;
        double pmax = 0.0;
        for (const PRPoint& p : points) {
            if (p.recall >= r - 1e-12) pmax = std::max(pmax, p.precision);
        }
        sum += pmax;
    }
    return sum / 11.0;
}

}  // namespace

PRCurve mean_ap(const std::vector<Prediction>& predictions,
                const std::vector<TruthBox>& truths, double score_threshold,
                double iou_threshold) {
    std::set<std::string> classes;
    for (const TruthBox& t : truths) classes.insert(t.label);
    for (const Prediction& p : predictions) {
        if (p.detection.score >= score_threshold && !classes.count(p.detection.label)) {
            throw ClassMismatch("prediction class not in ground truth: " +
                                p.detection.label);
        }
    }

    PRCurve curve;
    double ap_sum = 0.0;
    for (const std::string& cls : classes) {
        std::vector<const Prediction*> preds;
        for (const Prediction& p : predictions) {
            if (p.detection.label == cls && p.detection.score >= score_threshold) {
                preds.push_back(&p);
            }
        }
        std::stable_sort(preds.begin(), preds.end(), [](const Prediction* a,
                                                        const Prediction* b) {
            return a->detection.score > b->detection.score;
        });

        // Truth boxes of this class, per image, each matchable once.
        std::map<std::string, std::vector<std::pair<const TruthBox*, bool>>> gt;
        int total_truths = 0;
        for (const TruthBox& t : truths) {
            if (t.label == cls) {
                gt[t.image_id].emplace_back(&t, false);
                total_truths += 1;
            }
        }

        std::vector<PRPoint> points;
        int tp = 0, fp = 0;
        for (const Prediction* p : preds) {
            auto it = gt.find(p->image_id);
            int best = -1;
            double best_iou = 0.0;
            if (it != gt.end()) {
                for (size_t i = 0; i < it->second.size(); ++i) {
                    if (it->second[i].second) continue;
                    const double v = iou(it->second[i].first->box, p->detection.box);
                    if (v > best_iou) {
                        best_iou = v;
                        best = static_cast<int>(i);
                    }
                }
            }
            if (best >= 0 && best_iou >= iou_threshold) {
                it->second[static_cast<size_t>(best)].second = true;
                tp += 1;
            } else {
                fp += 1;
            }
            PRPoint pt;
            pt.recall = total_truths > 0 ? static_cast<double>(tp) / total_truths : 0.0;
            pt.precision = static_cast<double>(tp) / static_cast<double>(tp + fp);
            points.push_back(pt);
        }
        const double ap = total_truths > 0 ? voc11_ap(points) : 0.0;
        curve.points_per_class[cls] = std::move(points);
        curve.ap_per_class[cls] = ap;
        ap_sum += ap;
    }
    curve.map = classes.empty() ? 0.0 : ap_sum / static_cast<double>(classes.size());
    return curve;
}

ComparisonTable compare_methods(const std::vector<ManifestEntry>& entries,
                                const PipelineConfig& base_cfg,
                                const std::vector<FusionMethod>& methods,
                                double iou_threshold, double score_threshold) {
    if (methods.empty()) throw std::invalid_argument("compare_methods: no methods");

    ComparisonTable table;
    for (FusionMethod method : methods) {
        PipelineConfig cfg = base_cfg;
        cfg.fusion_method = method;
        const BatchReport br = batch(entries, cfg);

        std::vector<EvalRecord> records;
        std::vector<Prediction> predictions;
        std::vector<TruthBox> truth_boxes;
        for (size_t i = 0; i < entries.size(); ++i) {
            if (!entries[i].truth_path) continue;
            const GroundTruth gt = ground_truth_from_file(*entries[i].truth_path);
            const PipelineReport& rep = br.reports[i];
            const auto recs =
                match_records(entries[i].image_ref, gt.objects, rep.objects, iou_threshold);
            records.insert(records.end(), recs.begin(), recs.end());
            for (const FusionResult& f : rep.objects) {
                if (!f.box) continue;
                Prediction p;
                p.image_id = entries[i].image_ref;
                p.detection = Detection{*f.box, f.label, 1.0};
                predictions.push_back(std::move(p));
            }
            for (const auto& [box, label] : gt.objects) {
                truth_boxes.push_back(TruthBox{entries[i].image_ref, box, label});
            }
        }

        MethodRow row;
        row.method = to_string(method);
        row.average_iou = records.empty() ? 0.0 : average_iou(records);
        const auto [detected, total] = detection_count(records, iou_threshold);
        row.detected = detected;
        row.total = total;
        row.map = mean_ap(predictions, truth_boxes, score_threshold, iou_threshold).map;
        table.rows.push_back(row);
    }
    return table;
}

std::string format_table(const ComparisonTable& table) {
    std::ostringstream os;
    os << std::left << std::setw(12) << "method" << std::right << std::setw(12)
       << "avg_iou" << std::setw(14) << "detection" << std::setw(10) << "mAP"
       << "\n";
    for (const MethodRow& r : table.rows) {
        std::ostringstream det;
        det << r.detected << "/" << r.total;
        os << std::left << std::setw(12) << r.method << std::right << std::setw(12)
           << std::fixed << std::setprecision(4) << r.average_iou << std::setw(14)
           << det.str() << std::setw(10) << std::setprecision(4) << r.map << "\n";
    }
    return os.str();
}

std::vector<std::pair<AABB, std::string>> read_voc_xml(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open annotation: " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    const std::string xml = ss.str();

    auto text_of = [&](const std::string& tag, size_t from, size_t to) -> std::string {
        const std::string open = "<" + tag + ">";
        const std::string close = "</" + tag + ">";
        const size_t a = xml.find(open, from);
        if (a == std::string::npos || a >= to) return {};
        const size_t b = xml.find(close, a);
        if (b == std::string::npos || b > to) return {};
        std::string v = xml.substr(a + open.size(), b - a - open.size());
        // trim
        const size_t l = v.find_first_not_of(" \t\r\n");
        const size_t r = v.find_last_not_of(" \t\r\n");
        return l == std::string::npos ? std::string{} : v.substr(l, r - l + 1);
    };

    std::vector<std::pair<AABB, std::string>> out;
    size_t pos = 0;
    for (;;) {
        const size_t a = xml.find("<object>", pos);
        if (a == std::string::npos) break;
        const size_t b = xml.find("</object>", a);
        if (b == std::string::npos) break;
        const std::string name = text_of("name", a, b);
        const double xmin = std::stod(text_of("xmin", a, b));
        const double ymin = std::stod(text_of("ymin", a, b));
        const double xmax = std::stod(text_of("xmax", a, b));
        const double ymax = std::stod(text_of("ymax", a, b));
        out.emplace_back(AABB{xmin, ymin, xmax, ymax}, name);
        pos = b + 9;
    }
    return out;
}

}  // namespace detfuse
