#include "detfuse/fusion.hpp"

#include <algorithm>
#include <map>
#include <numeric>

namespace detfuse {

namespace {

struct AxisFusion {
    Interval value;
    bool repaired = false;
    bool fell_back = false;
};

AxisFusion fuse_axis(const std::vector<Interval>& evidence) {
    AxisFusion out;
    try {
        IntervalChoquetResult r = agreement_choquet_interval(evidence);
        out.value = r.value;
        out.repaired = r.repaired;
    } catch (const ZeroAgreement&) {
        double lo = 0.0, hi = 0.0;
        for (const Interval& e : evidence) {
            lo += e.lo;
            hi += e.hi;
        }
        const double n = static_cast<double>(evidence.size());
        out.value = Interval{lo / n, hi / n};
        out.fell_back = true;
    }
    return out;
}

double median_of(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    const size_t n = v.size();
    if (n % 2 == 1) return v[n / 2];
    return 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

std::string majority_vote(const std::vector<Detection>& group) {
    std::map<std::string, std::pair<int, double>> tally;  // label -> (count, score sum)
    for (const Detection& d : group) {
        auto& t = tally[d.label];
        t.first += 1;
        t.second += d.score;
    }
    std::string best;
    std::pair<int, double> best_t{-1, 0.0};
    for (const auto& [label, t] : tally) {
        if (t.first > best_t.first ||
            (t.first == best_t.first && t.second > best_t.second)) {
            // map iteration is lexicographic, so equal (count, score) keeps
            // the lexicographically smaller label
            best = label;
            best_t = t;
        }
    }
    return best;
}

}  // namespace

std::string to_string(FusionMethod m) {
    switch (m) {
        case FusionMethod::aabbfi: return "aabbfi";
        case FusionMethod::average: return "average";
        case FusionMethod::median: return "median";
        case FusionMethod::nms: return "nms";
        case FusionMethod::passthrough: return "passthrough";
    }
    return "unknown";
}

FusionMethod fusion_method_from_string(const std::string& s) {
    if (s == "aabbfi") return FusionMethod::aabbfi;
    if (s == "average") return FusionMethod::average;
    if (s == "median") return FusionMethod::median;
    if (s == "nms") return FusionMethod::nms;
    if (s == "passthrough") return FusionMethod::passthrough;
    throw std::invalid_argument("unknown fusion method: " + s);
}

FusionResult fuse_aabbfi(const std::vector<AABB>& boxes) {
    if (boxes.size() < 2) {
        throw EmptyInput("fuse_aabbfi: need at least 2 boxes");
    }
    std::vector<Interval> xs, ys;
    xs.reserve(boxes.size());
    ys.reserve(boxes.size());
    for (const AABB& b : boxes) {
        xs.push_back(b.x);
        ys.push_back(b.y);
    }
    const AxisFusion fx = fuse_axis(xs);
    const AxisFusion fy = fuse_axis(ys);

    FusionResult r;
    r.method = FusionMethod::aabbfi;
    r.box = AABB{fx.value, fy.value};
    r.repaired = fx.repaired || fy.repaired;
    if (fx.fell_back || fy.fell_back) {
        std::string note = "zero-agreement mean fallback on axis:";
        if (fx.fell_back) note += " x";
        if (fy.fell_back) note += " y";
        r.fallback = note;
    }
    return r;
}

FusionResult fuse_average(const std::vector<AABB>& boxes) {
    if (boxes.empty()) throw EmptyInput("fuse_average: no boxes");
    double x1 = 0, y1 = 0, x2 = 0, y2 = 0;
    for (const AABB& b : boxes) {
        x1 += b.x.lo;
        y1 += b.y.lo;
        x2 += b.x.hi;
        y2 += b.y.hi;
    }
    const double n = static_cast<double>(boxes.size());
    FusionResult r;
    r.method = FusionMethod::average;
    r.box = AABB{x1 / n, y1 / n, x2 / n, y2 / n};
    return r;
}

FusionResult fuse_median(const std::vector<AABB>& boxes) {
    if (boxes.empty()) throw EmptyInput("fuse_median: no boxes");
    std::vector<double> x1, y1, x2, y2;
    for (const AABB& b : boxes) {
        x1.push_back(b.x.lo);
        y1.push_back(b.y.lo);
        x2.push_back(b.x.hi);
        y2.push_back(b.y.hi);
    }
    FusionResult r;
    r.method = FusionMethod::median;
    r.box = AABB{median_of(x1), median_of(y1), median_of(x2), median_of(y2)};
    return r;
}

FusionResult fuse_nms(const std::vector<Detection>& dets, double iou_threshold) {
    if (dets.empty()) throw EmptyInput("fuse_nms: no detections");
    std::vector<int> order(dets.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
        return dets[static_cast<size_t>(a)].score > dets[static_cast<size_t>(b)].score;
    });
    std::vector<bool> suppressed(dets.size(), false);
    std::vector<int> survivors;
    for (int i : order) {
        if (suppressed[static_cast<size_t>(i)]) continue;
        survivors.push_back(i);
        for (int j : order) {
            if (j == i || suppressed[static_cast<size_t>(j)]) continue;
            if (iou(dets[static_cast<size_t>(i)].box, dets[static_cast<size_t>(j)].box) >
                iou_threshold) {
                suppressed[static_cast<size_t>(j)] = true;
            }
        }
    }
    const Detection& top = dets[static_cast<size_t>(survivors.front())];
    FusionResult r;
    r.method = FusionMethod::nms;
    r.box = top.box;
    r.label = top.label;
    return r;
}

FusionResult dispatch(const std::vector<Detection>& group, int top_t,
                      FusionMethod method, double nms_iou_threshold) {
    if (top_t < 1) throw std::invalid_argument("dispatch: top_t must be >= 1");

    FusionResult r;
    if (group.empty()) {
        r.method = method;
        return r;  // no box
    }
    r.label = majority_vote(group);

    const size_t n = group.size();
    if (n == 1) {
        r.method = FusionMethod::passthrough;
        r.box = group.front().box;
        return r;
    }
    if (n == 2) {
        FusionResult avg = fuse_average({group[0].box, group[1].box});
        avg.label = r.label;
        return avg;
    }

    // N >= 3: keep the top-T by score (ties keep the earlier entry), then
    // fuse with the selected method. Fewer than T members means fuse all.
    std::vector<int> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
        return group[static_cast<size_t>(a)].score > group[static_cast<size_t>(b)].score;
    });
    const size_t keep = std::min(static_cast<size_t>(top_t), n);
    std::vector<Detection> top(keep);
    for (size_t i = 0; i < keep; ++i) top[i] = group[static_cast<size_t>(order[i])];

    FusionResult fused;
    switch (method) {
        case FusionMethod::aabbfi: {
            std::vector<AABB> boxes;
            for (const Detection& d : top) boxes.push_back(d.box);
            fused = boxes.size() >= 2 ? fuse_aabbfi(boxes) : fuse_average(boxes);
            break;
        }
        case FusionMethod::average: {
            std::vector<AABB> boxes;
            for (const Detection& d : top) boxes.push_back(d.box);
            fused = fuse_average(boxes);
            break;
        }
        case FusionMethod::median: {
            std::vector<AABB> boxes;
            for (const Detection& d : top) boxes.push_back(d.box);
            fused = fuse_median(boxes);
            break;
        }
        case FusionMethod::nms:
            fused = fuse_nms(top, nms_iou_threshold);
            break;
        case FusionMethod::passthrough:
            fused.method = FusionMethod::passthrough;
            fused.box = top.front().box;
            break;
    }
    fused.label = r.label;
    return fused;
}

}  // namespace detfuse
