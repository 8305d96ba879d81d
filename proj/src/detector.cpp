#include "detfuse/detector.hpp"

#include <fcntl.h>
#include <poll.h>
#include <signal.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cmath>
#include <cstring>
#include <fstream>
#include <numbers>
#include <sstream>

#include "detfuse/json_io.hpp"
#include "detfuse/rng.hpp"

namespace detfuse {

namespace {

json load_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open: " + path);
    json j;
    in >> j;
    return j;
}

std::vector<std::string> split_command(const std::string& command) {
    std::vector<std::string> argv;
    std::istringstream is(command);
    std::string tok;
    while (is >> tok) argv.push_back(tok);
    if (argv.empty()) throw std::invalid_argument("empty detector command");
    return argv;
}

}  // namespace

SyntheticModel synthetic_model_from_file(const std::string& path) {
    const json j = load_json_file(path);
    SyntheticModel m;
    m.center_jitter_sd = j.value("center_jitter_sd", 0.0);
    m.scale_jitter_sd = j.value("scale_jitter_sd", 0.0);
    m.outlier_rate = j.value("outlier_rate", 0.0);
    m.outlier_shift = j.value("outlier_shift", 0.0);
    m.miss_rate = j.value("miss_rate", 0.0);
    m.score_base = j.value("score_base", 0.9);
    m.score_sd = j.value("score_sd", 0.0);
    m.seed = j.value("seed", 0ull);
    return m;
}

ReplayFile ReplayFile::load(const std::string& path) {
    const json j = load_json_file(path);
    ReplayFile rf;
    for (const json& img : j.at("images")) {
        const std::string id = img.at("image_id").get<std::string>();
        for (const json& aug : img.at("augmentations")) {
            const int aug_id = aug.at("augmentation_id").get<int>();
            std::vector<Detection> dets;
            for (const json& d : aug.at("detections")) {
                dets.push_back(detection_from_json(d));
            }
            rf.entries_[{id, aug_id}] = std::move(dets);
        }
    }
    return rf;
}

const std::vector<Detection>& ReplayFile::lookup(const std::string& image_id,
                                                 int augmentation_id) const {
    auto it = entries_.find({image_id, augmentation_id});
    if (it == entries_.end()) {
        throw MissingReplayEntry("no replay entry for image '" + image_id +
                                 "' augmentation " + std::to_string(augmentation_id));
    }
    return it->second;
}

GroundTruth ground_truth_from_file(const std::string& path) {
    const json j = load_json_file(path);
    GroundTruth gt;
    const json& objs = j.is_array() ? j : j.at("objects");
    for (const json& o : objs) {
        gt.objects.emplace_back(aabb_from_json(o.at("bbox")),
                                o.at("label").get<std::string>());
    }
    return gt;
}

std::vector<Detection> synthesize(const SyntheticModel& model, const GroundTruth& truth,
                                  int augmentation_id) {
    std::vector<Detection> out;
    for (size_t t = 0; t < truth.objects.size(); ++t) {
        const auto& [box, label] = truth.objects[t];
        // Independent substream per (augmentation, truth box); indices within
        // the stream are fixed so adding draws never shifts earlier ones.
        const std::uint64_t stream = rng::derive(
            model.seed, (static_cast<std::uint64_t>(augmentation_id) << 20) | t);

        if (rng::uniform(stream, 0) < model.miss_rate) continue;

        double cx = box.center_x() + model.center_jitter_sd * rng::normal(stream, 1);
        double cy = box.center_y() + model.center_jitter_sd * rng::normal(stream, 2);
        const double sw = std::exp(model.scale_jitter_sd * rng::normal(stream, 3));
        const double sh = std::exp(model.scale_jitter_sd * rng::normal(stream, 4));
        const double hw = 0.5 * box.x.length() * sw;
        const double hh = 0.5 * box.y.length() * sh;

        if (rng::uniform(stream, 5) < model.outlier_rate) {
            const double angle = 2.0 * std::numbers::pi * rng::uniform(stream, 6);
            cx += model.outlier_shift * std::cos(angle);
            cy += model.outlier_shift * std::sin(angle);
        }

        const double score =
            std::clamp(model.score_base + model.score_sd * rng::normal(stream, 7), 0.0, 1.0);
        out.emplace_back(AABB{cx - hw, cy - hh, cx + hw, cy + hh}, label, score);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Subprocess adapter
// ---------------------------------------------------------------------------

struct SubprocessDetector::Impl {
    pid_t pid = -1;
    int to_child = -1;
    int from_child = -1;
    std::chrono::milliseconds timeout{5000};
    std::string buffer;
    std::uint64_t next_request_id = 1;

    void close_all() {
        if (to_child >= 0) ::close(to_child);
        if (from_child >= 0) ::close(from_child);
        to_child = from_child = -1;
        if (pid > 0) {
            ::kill(pid, SIGTERM);
            int status = 0;
            ::waitpid(pid, &status, 0);
            pid = -1;
        }
    }
};

SubprocessDetector::SubprocessDetector(const std::string& command,
                                       std::chrono::milliseconds timeout)
    : impl_(std::make_unique<Impl>()) {
    impl_->timeout = timeout;
    ::signal(SIGPIPE, SIG_IGN);  // broken pipe surfaces as a write error instead

    int in_pipe[2], out_pipe[2];
    if (::pipe(in_pipe) != 0 || ::pipe(out_pipe) != 0) {
        throw std::runtime_error("pipe() failed");
    }
    const pid_t pid = ::fork();
    if (pid < 0) throw std::runtime_error("fork() failed");
    if (pid == 0) {
        ::dup2(in_pipe[0], STDIN_FILENO);
        ::dup2(out_pipe[1], STDOUT_FILENO);
        ::close(in_pipe[0]);
        ::close(in_pipe[1]);
        ::close(out_pipe[0]);
        ::close(out_pipe[1]);
        const std::vector<std::string> argv = split_command(command);
        std::vector<char*> cargv;
        for (const std::string& a : argv) cargv.push_back(const_cast<char*>(a.c_str()));
        cargv.push_back(nullptr);
        ::execvp(cargv[0], cargv.data());
        ::_exit(127);
    }
    ::close(in_pipe[0]);
    ::close(out_pipe[1]);
    impl_->pid = pid;
    impl_->to_child = in_pipe[1];
    impl_->from_child = out_pipe[0];
}

SubprocessDetector::~SubprocessDetector() {
    if (impl_) impl_->close_all();
}

std::vector<Detection> SubprocessDetector::request(const std::string& image_path,
                                                   int augmentation_id) {
    const std::uint64_t rid = impl_->next_request_id++;
    json req{{"image_path", image_path},
             {"augmentation_id", augmentation_id},
             {"request_id", rid}};
    std::string line = req.dump() + "\n";
    size_t written = 0;
    while (written < line.size()) {
        const ssize_t n =
            ::write(impl_->to_child, line.data() + written, line.size() - written);
        if (n <= 0) {
            impl_->close_all();
            throw DetectorProtocolError("detector child closed its input");
        }
        written += static_cast<size_t>(n);
    }

    const auto deadline = std::chrono::steady_clock::now() + impl_->timeout;
    for (;;) {
        // Return as soon as a full response line is buffered.
        const size_t nl = impl_->buffer.find('\n');
        if (nl != std::string::npos) {
            const std::string resp_line = impl_->buffer.substr(0, nl);
            impl_->buffer.erase(0, nl + 1);
            json resp;
            try {
                resp = json::parse(resp_line);
            } catch (const json::parse_error& e) {
                throw DetectorProtocolError(std::string("malformed detector response: ") +
                                            e.what());
            }
            if (!resp.contains("request_id") ||
                resp.at("request_id").get<std::uint64_t>() != rid) {
                throw DetectorProtocolError("detector response request_id mismatch");
            }
            std::vector<Detection> dets;
            for (const json& d : resp.at("detections")) {
                dets.push_back(detection_from_json(d));
            }
            return dets;
        }

        const auto now = std::chrono::steady_clock::now();
        if (now >= deadline) {
            impl_->close_all();
            throw DetectorTimeout("detector timed out");
        }
        struct pollfd pfd{impl_->from_child, POLLIN, 0};
        const auto remaining =
            std::chrono::duration_cast<std::chrono::milliseconds>(deadline - now);
        const int pr = ::poll(&pfd, 1, static_cast<int>(remaining.count()));
        if (pr == 0) {
            impl_->close_all();
            throw DetectorTimeout("detector timed out");
        }
        if (pr < 0) throw std::runtime_error("poll() failed");
        char chunk[4096];
        const ssize_t n = ::read(impl_->from_child, chunk, sizeof(chunk));
        if (n <= 0) {
            impl_->close_all();
            throw DetectorProtocolError("detector child closed its output");
        }
        impl_->buffer.append(chunk, static_cast<size_t>(n));
    }
}

std::vector<Detection> detect(const DetectorBinding& binding, const std::string& image_ref,
                              int augmentation_id, const ReplayFile* replay,
                              SubprocessDetector* session) {
    switch (binding.kind) {
        case DetectorKind::replay: {
            if (replay) return replay->lookup(image_ref, augmentation_id);
            const ReplayFile rf = ReplayFile::load(binding.source);
            return rf.lookup(image_ref, augmentation_id);
        }
        case DetectorKind::synthetic: {
            const SyntheticModel model = synthetic_model_from_file(binding.source);
            const GroundTruth gt = ground_truth_from_file(image_ref);
            return synthesize(model, gt, augmentation_id);
        }
        case DetectorKind::subprocess: {
            if (session) return session->request(image_ref, augmentation_id);
            SubprocessDetector one_shot(binding.source, binding.timeout);
            return one_shot.request(image_ref, augmentation_id);
        }
    }
    throw std::invalid_argument("unknown detector kind");
}

}  // namespace detfuse
