#include "detfuse/grouping.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <random>

namespace detfuse {

namespace {

struct Point {
    double x = 0.0;
    double y = 0.0;
};

double sq_dist(const Point& a, const Point& b) {
    const double dx = a.x - b.x;
    const double dy = a.y - b.y;
    return dx * dx + dy * dy;
}

// k-means++ seeding, then Lloyd iterations until assignments stabilize.
std::vector<int> kmeans(const std::vector<Point>& pts, int k, std::uint64_t seed,
                        std::vector<Point>& centroids_out) {
    const int n = static_cast<int>(pts.size());
    std::mt19937_64 rng(seed);

    std::vector<Point> centroids;
    centroids.reserve(static_cast<size_t>(k));
    std::uniform_int_distribution<int> first(0, n - 1);
    centroids.push_back(pts[static_cast<size_t>(first(rng))]);
    std::vector<double> d2(static_cast<size_t>(n));
    while (static_cast<int>(centroids.size()) < k) {
        double total = 0.0;
        for (int i = 0; i < n; ++i) {
            double best = std::numeric_limits<double>::max();
            for (const Point& c : centroids) best = std::min(best, sq_dist(pts[static_cast<size_t>(i)], c));
            d2[static_cast<size_t>(i)] = best;
            total += best;
        }
        int pick = 0;
        if (total > 0.0) {
            std::uniform_real_distribution<double> u(0.0, total);
            double target = u(rng), acc = 0.0;
            for (int i = 0; i < n; ++i) {
                acc += d2[static_cast<size_t>(i)];
                if (acc >= target) {
                    pick = i;
                    break;
                }
            }
        } else {
            pick = first(rng);  // all points coincide with a centroid
        }
        centroids.push_back(pts[static_cast<size_t>(pick)]);
    }

    std::vector<int> assign(static_cast<size_t>(n), -1);
    for (int iter = 0; iter < 100; ++iter) {
        bool changed = false;
        for (int i = 0; i < n; ++i) {
            int best = 0;
            double bd = std::numeric_limits<double>::max();
            for (int c = 0; c < k; ++c) {
                const double d = sq_dist(pts[static_cast<size_t>(i)], centroids[static_cast<size_t>(c)]);
                if (d < bd) {
                    bd = d;
                    best = c;
                }
            }
            if (assign[static_cast<size_t>(i)] != best) {
                assign[static_cast<size_t>(i)] = best;
                changed = true;
            }
        }
        if (!changed && iter > 0) break;

        std::vector<Point> sums(static_cast<size_t>(k));
        std::vector<int> counts(static_cast<size_t>(k), 0);
        for (int i = 0; i < n; ++i) {
            const int c = assign[static_cast<size_t>(i)];
            sums[static_cast<size_t>(c)].x += pts[static_cast<size_t>(i)].x;
            sums[static_cast<size_t>(c)].y += pts[static_cast<size_t>(i)].y;
            counts[static_cast<size_t>(c)] += 1;
        }
        for (int c = 0; c < k; ++c) {
            if (counts[static_cast<size_t>(c)] > 0) {
                centroids[static_cast<size_t>(c)].x = sums[static_cast<size_t>(c)].x / counts[static_cast<size_t>(c)];
                centroids[static_cast<size_t>(c)].y = sums[static_cast<size_t>(c)].y / counts[static_cast<size_t>(c)];
            } else {
                // Re-seed an empty cluster at the point farthest from its centroid.
                int far = 0;
                double fd = -1.0;
                for (int i = 0; i < n; ++i) {
                    const int ci = assign[static_cast<size_t>(i)];
                    const double d = sq_dist(pts[static_cast<size_t>(i)], centroids[static_cast<size_t>(ci)]);
                    if (d > fd) {
                        fd = d;
                        far = i;
                    }
                }
                centroids[static_cast<size_t>(c)] = pts[static_cast<size_t>(far)];
            }
        }
    }
    centroids_out = centroids;
    return assign;
}

}  // namespace

int object_count(const DetectionPool& pool) {
    int s = 0;
    for (const auto& v : pool.per_augmentation) s = std::max(s, static_cast<int>(v.size()));
    return s;
}

std::vector<ObjectGroup> group(const DetectionPool& pool, int s, std::uint64_t seed) {
    if (s < 1) throw std::invalid_argument("group: s must be >= 1");

    std::vector<GroupMember> flat;
    for (int aug = 0; aug < pool.augmentation_count(); ++aug) {
        for (const Detection& d : pool.per_augmentation[static_cast<size_t>(aug)]) {
            flat.push_back(GroupMember{aug, d});
        }
    }
    if (static_cast<int>(flat.size()) < s) throw Underdetermined{};

    std::vector<Point> pts;
    pts.reserve(flat.size());
    for (const GroupMember& m : flat) {
        pts.push_back(Point{m.detection.box.center_x(), m.detection.box.center_y()});
    }

    std::vector<Point> centroids;
    std::vector<int> assign = kmeans(pts, s, seed, centroids);

    // One detection per augmentation per group: within each cluster keep the
    // highest-score member per augmentation and spill the rest to the nearest
    // cluster still missing that augmentation.
    std::vector<std::vector<int>> cluster_members(static_cast<size_t>(s));
    for (size_t i = 0; i < flat.size(); ++i) {
        cluster_members[static_cast<size_t>(assign[i])].push_back(static_cast<int>(i));
    }

    std::vector<std::map<int, int>> kept(static_cast<size_t>(s));  // aug id -> flat index
    std::vector<int> spilled;
    for (int c = 0; c < s; ++c) {
        for (int idx : cluster_members[static_cast<size_t>(c)]) {
            const int aug = flat[static_cast<size_t>(idx)].augmentation_id;
            auto it = kept[static_cast<size_t>(c)].find(aug);
            if (it == kept[static_cast<size_t>(c)].end()) {
                kept[static_cast<size_t>(c)][aug] = idx;
            } else if (flat[static_cast<size_t>(idx)].detection.score >
                       flat[static_cast<size_t>(it->second)].detection.score) {
                spilled.push_back(it->second);
                it->second = idx;
            } else {
                spilled.push_back(idx);
            }
        }
    }
    for (int idx : spilled) {
        const int aug = flat[static_cast<size_t>(idx)].augmentation_id;
        std::vector<int> order(static_cast<size_t>(s));
        std::iota(order.begin(), order.end(), 0);
        std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
            return sq_dist(pts[static_cast<size_t>(idx)], centroids[static_cast<size_t>(a)]) <
                   sq_dist(pts[static_cast<size_t>(idx)], centroids[static_cast<size_t>(b)]);
        });
        bool placed = false;
        for (int c : order) {
            if (!kept[static_cast<size_t>(c)].count(aug)) {
                kept[static_cast<size_t>(c)][aug] = idx;
                placed = true;
                break;
            }
        }
        if (!placed) {
            // Every cluster already holds this augmentation; park the duplicate
            // in its nearest cluster so the partition property still holds.
            kept[static_cast<size_t>(order.front())].emplace(aug * 100000 + idx, idx);
        }
    }

    std::vector<ObjectGroup> out(static_cast<size_t>(s));
    for (int c = 0; c < s; ++c) {
        out[static_cast<size_t>(c)].object_id = c + 1;
        for (const auto& [aug, idx] : kept[static_cast<size_t>(c)]) {
            out[static_cast<size_t>(c)].members.push_back(flat[static_cast<size_t>(idx)]);
        }
    }
    return out;
}

std::string majority_label(const ObjectGroup& g) {
    if (g.members.empty()) throw EmptyGroup{};
    std::map<std::string, std::pair<int, double>> tally;
    for (const GroupMember& m : g.members) {
        auto& t = tally[m.detection.label];
        t.first += 1;
        t.second += m.detection.score;
    }
    std::string best;
    std::pair<int, double> best_t{-1, 0.0};
    for (const auto& [label, t] : tally) {
        if (t.first > best_t.first ||
            (t.first == best_t.first && t.second > best_t.second)) {
            best = label;
            best_t = t;
        }
    }
    return best;
}

}  // namespace detfuse
