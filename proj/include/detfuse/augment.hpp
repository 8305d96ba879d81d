#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "detfuse/image.hpp"

namespace detfuse {

struct UnsupportedSpec : std::runtime_error {
    explicit UnsupportedSpec(const std::string& what) : std::runtime_error(what) {}
};

enum class AugmentationKind {
    identity,
    brightness,
    contrast,
    edge_enhance,
    hist_equalize,
    gaussian_blur,
    gaussian_noise,
};

std::string to_string(AugmentationKind k);
AugmentationKind augmentation_kind_from_string(const std::string& s);

struct AugmentationSpec {
    AugmentationKind kind = AugmentationKind::identity;
    double factor = 1.0;     // brightness / contrast
    double radius = 2.0;     // gaussian blur
    double variance = 0.0;   // gaussian noise, on the [0,1]-normalized scale
    std::uint64_t seed = 0;  // gaussian noise

    /// e.g. "identity", "brightness_0.25", "noise_0.003", "blur_2".
    std::string name() const;
};

/// Apply one augmentation. Output has the input's dimensions and channel
/// count; deterministic given the spec (noise keys off spec.seed).
Image apply(const Image& img, const AugmentationSpec& spec);

/// Full 18-entry roster: identity, brightness x {0.25, 0.5, 1.5, 2.0, 2.5},
/// contrast x {0.25, 0.5, 1.5, 2.0, 2.5}, noise variance x {0.001, 0.003,
/// 0.005}, edge enhance, histogram equalization, blur radius 2 — ordered by
/// how often each method won a top-3 slot in the selection tally, identity
/// first. Pass m to take the first m entries.
std::vector<AugmentationSpec> roster(int m = 18);

/// Roster order override: list of spec names, identity first. Entries not in
/// the default roster are rejected.
std::vector<AugmentationSpec> roster_from_ranking(const std::vector<std::string>& names,
                                                  int m);

}  // namespace detfuse
