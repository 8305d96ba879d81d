#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <stdexcept>
#include <vector>

namespace detfuse {

/// Closed real interval [lo, hi]. Degenerate (lo == hi) is valid with length 0.
struct Interval {
    double lo = 0.0;
    double hi = 0.0;

    Interval() = default;
    Interval(double lo_, double hi_) : lo(lo_), hi(hi_) {
        if (!(lo <= hi)) {
            throw std::invalid_argument("Interval: lo must be <= hi");
        }
    }

    double length() const { return hi - lo; }

    bool operator==(const Interval&) const = default;
};

/// Intersection of two intervals; empty optional when they do not overlap.
inline std::optional<Interval> intersect(const Interval& a, const Interval& b) {
    const double lo = std::max(a.lo, b.lo);
    const double hi = std::min(a.hi, b.hi);
    if (lo > hi) return std::nullopt;
    return Interval{lo, hi};
}

/// Ordered list of pairwise-disjoint intervals; touching segments are merged.
class IntervalUnion {
public:
    IntervalUnion() = default;

    explicit IntervalUnion(std::vector<Interval> xs) {
        std::sort(xs.begin(), xs.end(),
                  [](const Interval& a, const Interval& b) { return a.lo < b.lo; });
        for (const Interval& x : xs) add_sorted(x);
    }

    void add(const Interval& x) {
        // Rebuild keeps segments_ canonical regardless of insertion order.
        std::vector<Interval> all = segments_;
        all.push_back(x);
        *this = IntervalUnion(std::move(all));
    }

    const std::vector<Interval>& segments() const { return segments_; }

    double total_length() const {
        double s = 0.0;
        for (const Interval& seg : segments_) s += seg.length();
        return s;
    }

private:
    void add_sorted(const Interval& x) {
        if (!segments_.empty() && x.lo <= segments_.back().hi) {
            segments_.back().hi = std::max(segments_.back().hi, x.hi);
        } else {
            segments_.push_back(x);
        }
    }

    std::vector<Interval> segments_;
};

/// Lebesgue measure of the union; empty optionals contribute 0.
inline double union_length(const std::vector<std::optional<Interval>>& xs) {
    std::vector<Interval> present;
    present.reserve(xs.size());
    for (const auto& x : xs) {
        if (x) present.push_back(*x);
    }
    return IntervalUnion(std::move(present)).total_length();
}

inline double union_length(const std::vector<Interval>& xs) {
    return IntervalUnion(xs).total_length();
}

/// Axis-aligned box: one interval per image axis.
/// Serializes as [x_lo, y_lo, x_hi, y_hi].
struct AABB {
    Interval x;
    Interval y;

    AABB() = default;
    AABB(Interval x_, Interval y_) : x(x_), y(y_) {}
    AABB(double x1, double y1, double x2, double y2) : x(x1, x2), y(y1, y2) {}

    double area() const { return x.length() * y.length(); }

    double center_x() const { return 0.5 * (x.lo + x.hi); }
    double center_y() const { return 0.5 * (y.lo + y.hi); }

    bool operator==(const AABB&) const = default;
};

/// Intersection over union (Jaccard index). 0 when the union has zero area.
inline double iou(const AABB& a, const AABB& b) {
    const auto ix = intersect(a.x, b.x);
    const auto iy = intersect(a.y, b.y);
    const double inter = (ix && iy) ? ix->length() * iy->length() : 0.0;
    const double uni = a.area() + b.area() - inter;
    if (uni <= 0.0) return 0.0;
    return inter / uni;
}

}  // namespace detfuse
