// Independent reference implementations used only to check the library.
// These deliberately avoid the library's own union/measure code paths.
#pragma once

#include <algorithm>
#include <functional>
#include <map>
#include <set>
#include <vector>

#include "detfuse/eval.hpp"
#include "detfuse/fuzzy.hpp"
#include "detfuse/geometry.hpp"

namespace oracle {

// Measure of a union of closed intervals by elementary-segment sweep: between
// each pair of adjacent endpoint values, a segment counts iff its midpoint is
// covered by some interval.
inline double union_measure(const std::vector<detfuse::Interval>& xs) {
    std::vector<double> cuts;
    for (const auto& x : xs) {
        cuts.push_back(x.lo);
        cuts.push_back(x.hi);
    }
    std::sort(cuts.begin(), cuts.end());
    double total = 0.0;
    for (size_t i = 0; i + 1 < cuts.size(); ++i) {
        const double a = cuts[i], b = cuts[i + 1];
        if (b <= a) continue;
        const double mid = 0.5 * (a + b);
        for (const auto& x : xs) {
            if (x.lo <= mid && mid <= x.hi) {
                total += b - a;
                break;
            }
        }
    }
    return total;
}

// Raw agreement worth by explicit k-subset recursion over the given interval
// set, weighted k/n.
inline double raw_agreement(const std::vector<detfuse::Interval>& xs, int n) {
    const int m = static_cast<int>(xs.size());
    double total = 0.0;
    for (int k = 2; k <= m; ++k) {
        std::vector<detfuse::Interval> pieces;
        std::vector<int> chosen;
        // enumerate k-subsets
        std::function<void(int)> rec = [&](int start) {
            if (static_cast<int>(chosen.size()) == k) {
                double lo = xs[static_cast<size_t>(chosen[0])].lo;
                double hi = xs[static_cast<size_t>(chosen[0])].hi;
                for (int idx : chosen) {
                    lo = std::max(lo, xs[static_cast<size_t>(idx)].lo);
                    hi = std::min(hi, xs[static_cast<size_t>(idx)].hi);
                }
                if (lo <= hi) pieces.push_back(detfuse::Interval{lo, hi});
                return;
            }
            for (int i = start; i < m; ++i) {
                chosen.push_back(i);
                rec(i + 1);
                chosen.pop_back();
            }
        };
        rec(0);
        total += union_measure(pieces) * (static_cast<double>(k) / n);
    }
    return total;
}

// Chain of the agreement measure along `perm`, straight from the definition.
inline std::vector<double> agreement_chain(const std::vector<detfuse::Interval>& evidence,
                                           const std::vector<int>& perm) {
    const int n = static_cast<int>(evidence.size());
    const double normalizer = raw_agreement(evidence, n);
    std::vector<double> chain(static_cast<size_t>(n), 0.0);
    std::vector<detfuse::Interval> prefix;
    for (int i = 0; i < n; ++i) {
        prefix.push_back(evidence[static_cast<size_t>(perm[static_cast<size_t>(i)])]);
        chain[static_cast<size_t>(i)] = raw_agreement(prefix, n) / normalizer;
    }
    return chain;
}

// IoU by rasterized cell counting over the joint bounding hull.
inline double rasterized_iou(const detfuse::AABB& a, const detfuse::AABB& b,
                             int cells = 2000) {
    const double x0 = std::min(a.x.lo, b.x.lo), x1 = std::max(a.x.hi, b.x.hi);
    const double y0 = std::min(a.y.lo, b.y.lo), y1 = std::max(a.y.hi, b.y.hi);
    if (x1 <= x0 || y1 <= y0) return 0.0;
    const double dx = (x1 - x0) / cells, dy = (y1 - y0) / cells;
    long inter = 0, uni = 0;
    for (int i = 0; i < cells; ++i) {
        const double cx = x0 + (i + 0.5) * dx;
        const bool in_ax = a.x.lo <= cx && cx <= a.x.hi;
        const bool in_bx = b.x.lo <= cx && cx <= b.x.hi;
        if (!in_ax && !in_bx) continue;
        for (int j = 0; j < cells; ++j) {
            const double cy = y0 + (j + 0.5) * dy;
            const bool in_a = in_ax && a.y.lo <= cy && cy <= a.y.hi;
            const bool in_b = in_bx && b.y.lo <= cy && cy <= b.y.hi;
            if (in_a && in_b) ++inter;
            if (in_a || in_b) ++uni;
        }
    }
    return uni == 0 ? 0.0 : static_cast<double>(inter) / static_cast<double>(uni);
}

// Greedy NMS reference: independent re-statement of the standard algorithm.
inline std::vector<detfuse::Detection> reference_nms(std::vector<detfuse::Detection> dets,
                                                     double threshold) {
    std::stable_sort(dets.begin(), dets.end(),
                     [](const detfuse::Detection& a, const detfuse::Detection& b) {
                         return a.score > b.score;
                     });
    std::vector<detfuse::Detection> kept;
    for (const auto& d : dets) {
        bool suppressed = false;
        for (const auto& k : kept) {
            if (detfuse::iou(d.box, k.box) > threshold) {
                suppressed = true;
                break;
            }
        }
        if (!suppressed) kept.push_back(d);
    }
    return kept;
}

// AP by exhaustive score-cutoff enumeration: one PR point per distinct
// cutoff, greedy matching recomputed from scratch each time, then 11-point
// interpolation.
inline double exhaustive_ap(const std::vector<detfuse::Prediction>& preds,
                            const std::vector<detfuse::TruthBox>& truths,
                            const std::string& cls, double iou_threshold) {
    std::set<double> cutoffs;
    for (const auto& p : preds) {
        if (p.detection.label == cls) cutoffs.insert(p.detection.score);
    }
    int total_truths = 0;
    for (const auto& t : truths) {
        if (t.label == cls) ++total_truths;
    }
    if (total_truths == 0) return 0.0;

    std::vector<std::pair<double, double>> pr;  // (recall, precision)
    for (double cutoff : cutoffs) {
        std::vector<const detfuse::Prediction*> kept;
        for (const auto& p : preds) {
            if (p.detection.label == cls && p.detection.score >= cutoff) kept.push_back(&p);
        }
        std::stable_sort(kept.begin(), kept.end(),
                         [](const detfuse::Prediction* a, const detfuse::Prediction* b) {
                             return a->detection.score > b->detection.score;
                         });
        std::map<std::string, std::vector<std::pair<const detfuse::TruthBox*, bool>>> gt;
        for (const auto& t : truths) {
            if (t.label == cls) gt[t.image_id].emplace_back(&t, false);
        }
        int tp = 0, fp = 0;
        for (const auto* p : kept) {
            auto it = gt.find(p->image_id);
            int best = -1;
            double best_iou = 0.0;
            if (it != gt.end()) {
                for (size_t i = 0; i < it->second.size(); ++i) {
                    if (it->second[i].second) continue;
                    const double v = detfuse::iou(it->second[i].first->box, p->detection.box);
                    if (v > best_iou) {
                        best_iou = v;
                        best = static_cast<int>(i);
                    }
                }
            }
            if (best >= 0 && best_iou >= iou_threshold) {
                it->second[static_cast<size_t>(best)].second = true;
                ++tp;
            } else {
                ++fp;
            }
        }
        pr.emplace_back(static_cast<double>(tp) / total_truths,
                        tp + fp > 0 ? static_cast<double>(tp) / (tp + fp) : 0.0);
    }

    double sum = 0.0;
    for (int i = 0; i <= 10; ++i) {
        const double r = i / 10.0;
        double pmax = 0.0;
        for (const auto& [recall, precision] : pr) {
            if (recall >= r - 1e-12) pmax = std::max(pmax, precision);
        }
        sum += pmax;
    }
    return sum / 11.0;
}

}  // namespace oracle
