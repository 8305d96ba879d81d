#include "detfuse/pipeline.hpp"

#include <unistd.h>

#include <algorithm>
#include <atomic>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <functional>
#include <memory>
#include <numeric>
#include <thread>

#include "detfuse/image.hpp"
#include "detfuse/json_io.hpp"

namespace detfuse {

namespace {

using clock_t_ = std::chrono::steady_clock;

double ms_since(clock_t_::time_point start) {
    return std::chrono::duration<double, std::milli>(clock_t_::now() - start).count();
}

// Runs fn(i) for i in [0, n) across at most `jobs` threads; results land in
// caller-owned slots so completion order cannot reorder anything.
void parallel_for(int n, int jobs, const std::function<void(int)>& fn) {
    jobs = std::max(1, std::min(jobs, n));
    if (jobs == 1) {
        for (int i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<int> next{0};
    std::vector<std::thread> workers;
    workers.reserve(static_cast<size_t>(jobs));
    for (int w = 0; w < jobs; ++w) {
        workers.emplace_back([&] {
            for (;;) {
                const int i = next.fetch_add(1);
                if (i >= n) return;
                fn(i);
            }
        });
    }
    for (std::thread& t : workers) t.join();
}

// Top-T augmentation ids of one group, replicating the dispatcher's
// score-descending stable selection; feeds the Figure-3-style tally.
std::vector<int> top_t_augmentations(const ObjectGroup& g, int top_t) {
    if (g.members.size() < 3) {
        std::vector<int> all;
        for (const GroupMember& m : g.members) all.push_back(m.augmentation_id);
        return all;
    }
    std::vector<int> order(g.members.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
        return g.members[static_cast<size_t>(a)].detection.score >
               g.members[static_cast<size_t>(b)].detection.score;
    });
    const size_t keep = std::min(static_cast<size_t>(top_t), g.members.size());
    std::vector<int> ids;
    for (size_t i = 0; i < keep; ++i) {
        ids.push_back(g.members[static_cast<size_t>(order[i])].augmentation_id);
    }
    return ids;
}

}  // namespace

PipelineReport run(const ManifestEntry& entry, const PipelineConfig& cfg,
                   const ReplayFile* replay, SubprocessDetector* session) {
    if (cfg.roster.empty()) throw std::invalid_argument("pipeline: empty roster");
    if (cfg.top_t < 1 || cfg.top_t > cfg.m()) {
        throw std::invalid_argument("pipeline: top_t must be in [1, M]");
    }

    PipelineReport report;
    report.image_ref = entry.image_ref;
    const int m = cfg.m();

    // Augment. Only a subprocess binding consumes actual pixels; replay and
    // synthetic bindings key off the augmentation id alone.
    std::vector<std::string> detect_refs(static_cast<size_t>(m), entry.image_ref);
    auto t0 = clock_t_::now();
    if (cfg.binding.kind == DetectorKind::subprocess) {
        const Image original = read_pnm(entry.image_ref);
        const auto tmp_dir =
            std::filesystem::temp_directory_path() /
            ("detfuse_" + std::to_string(static_cast<unsigned>(::getpid())));
        std::filesystem::create_directories(tmp_dir);
        const std::string stem = std::filesystem::path(entry.image_ref).stem().string();
        std::vector<std::string> paths(static_cast<size_t>(m));
        parallel_for(m, cfg.jobs, [&](int i) {
            const AugmentationSpec& spec = cfg.roster[static_cast<size_t>(i)];
            const Image augmented = apply(original, spec);
            const std::string ext = original.channels == 3 ? ".ppm" : ".pgm";
            const auto path = tmp_dir / (stem + "__" + spec.name() + ext);
            write_pnm(augmented, path.string());
            paths[static_cast<size_t>(i)] = path.string();
        });
        detect_refs = std::move(paths);
    }
    report.timings.augment_ms = ms_since(t0);

    // Detect. A failed augmentation degrades to an empty list; the dispatcher
    // absorbs variable N.
    t0 = clock_t_::now();
    report.raw_detections.assign(static_cast<size_t>(m), {});
    std::vector<std::string> warnings(static_cast<size_t>(m));
    auto detect_one = [&](int i) {
        try {
            std::string ref = detect_refs[static_cast<size_t>(i)];
            if (cfg.binding.kind == DetectorKind::synthetic) {
                ref = entry.truth_path.value_or(entry.image_ref);
            }
            report.raw_detections[static_cast<size_t>(i)] =
                detect(cfg.binding, ref, i, replay, session);
        } catch (const std::exception& e) {
            warnings[static_cast<size_t>(i)] =
                "augmentation " + std::to_string(i) + ": " + e.what();
        }
    };
    if (session != nullptr) {
        // One child process serializes its requests.
        for (int i = 0; i < m; ++i) detect_one(i);
    } else {
        parallel_for(m, cfg.jobs, detect_one);
    }
    for (std::string& w : warnings) {
        if (!w.empty()) report.warnings.push_back(std::move(w));
    }
    report.timings.detect_ms = ms_since(t0);

    // Count, group, fuse.
    t0 = clock_t_::now();
    DetectionPool pool{report.raw_detections};
    const int s = object_count(pool);
    report.object_count = s;
    if (s > 0) {
        const std::vector<ObjectGroup> groups = group(pool, s, cfg.grouping_seed);
        for (const ObjectGroup& g : groups) {
            std::vector<Detection> members;
            for (const GroupMember& gm : g.members) members.push_back(gm.detection);
            report.objects.push_back(dispatch(members, cfg.top_t, cfg.fusion_method));
            for (int aug_id : top_t_augmentations(g, cfg.top_t)) {
                report.selection_tally[aug_id] += 1;
            }
        }
    }
    report.timings.fuse_ms = ms_since(t0);
    return report;
}

BatchReport batch(const std::vector<ManifestEntry>& entries, const PipelineConfig& cfg) {
    BatchReport out;
    const ReplayFile* replay_ptr = nullptr;
    ReplayFile replay;
    if (cfg.binding.kind == DetectorKind::replay) {
        replay = ReplayFile::load(cfg.binding.source);
        replay_ptr = &replay;
    }
    std::unique_ptr<SubprocessDetector> session;
    if (cfg.binding.kind == DetectorKind::subprocess) {
        session = std::make_unique<SubprocessDetector>(cfg.binding.source,
                                                       cfg.binding.timeout);
    }

    for (const ManifestEntry& entry : entries) {
        try {
            out.reports.push_back(run(entry, cfg, replay_ptr, session.get()));
        } catch (const std::exception& e) {
            out.failed += 1;
            PipelineReport failed;
            failed.image_ref = entry.image_ref;
            failed.warnings.push_back(std::string("skipped: ") + e.what());
            out.reports.push_back(std::move(failed));
            continue;
        }
        for (const auto& [aug_id, count] : out.reports.back().selection_tally) {
            out.aggregate_tally[aug_id] += count;
        }
    }
    return out;
}

std::vector<ManifestEntry> manifest_from_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open manifest: " + path);
    json j;
    in >> j;
    std::vector<ManifestEntry> entries;
    for (const json& e : j) {
        ManifestEntry entry;
        if (e.contains("image_path")) entry.image_ref = e.at("image_path").get<std::string>();
        else entry.image_ref = e.at("image_id").get<std::string>();
        if (e.contains("truth_path")) entry.truth_path = e.at("truth_path").get<std::string>();
        entries.push_back(std::move(entry));
    }
    return entries;
}

}  // namespace detfuse
