#include "detfuse/augment.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <sstream>

#include "detfuse/rng.hpp"

namespace detfuse {

namespace {

std::uint8_t clamp8(double v) {
    return static_cast<std::uint8_t>(std::clamp(std::lround(v), 0L, 255L));
}

double mean_luma(const Image& img) {
    double sum = 0.0;
    const size_t n = static_cast<size_t>(img.width) * static_cast<size_t>(img.height);
    if (img.channels == 1) {
        for (std::uint8_t p : img.pixels) sum += p;
    } else {
        for (size_t i = 0; i < n; ++i) {
            sum += 0.299 * img.pixels[i * 3] + 0.587 * img.pixels[i * 3 + 1] +
                   0.114 * img.pixels[i * 3 + 2];
        }
    }
    return sum / static_cast<double>(n);
}

Image apply_brightness(const Image& img, double factor) {
    Image out = img;
    for (size_t i = 0; i < out.pixels.size(); ++i) {
        out.pixels[i] = clamp8(img.pixels[i] * factor);
    }
    return out;
}

Image apply_contrast(const Image& img, double factor) {
    const double mean = std::round(mean_luma(img));
    Image out = img;
    for (size_t i = 0; i < out.pixels.size(); ++i) {
        out.pixels[i] = clamp8(mean + factor * (img.pixels[i] - mean));
    }
    return out;
}

// 3x3 sharpening kernel: center 10, neighbors -1, divisor 2, replicate edges.
Image apply_edge_enhance(const Image& img) {
    Image out = img;
    auto clampi = [](int v, int lo, int hi) { return std::clamp(v, lo, hi); };
    for (int y = 0; y < img.height; ++y) {
        for (int x = 0; x < img.width; ++x) {
            for (int c = 0; c < img.channels; ++c) {
                double acc = 0.0;
                for (int dy = -1; dy <= 1; ++dy) {
                    for (int dx = -1; dx <= 1; ++dx) {
                        const int sx = clampi(x + dx, 0, img.width - 1);
                        const int sy = clampi(y + dy, 0, img.height - 1);
                        const double w = (dx == 0 && dy == 0) ? 10.0 : -1.0;
                        acc += w * img.at(sx, sy, c);
                    }
                }
                out.at(x, y, c) = clamp8(acc / 2.0);
            }
        }
    }
    return out;
}

Image apply_hist_equalize(const Image& img) {
    Image out = img;
    const size_t n = static_cast<size_t>(img.width) * static_cast<size_t>(img.height);
    for (int c = 0; c < img.channels; ++c) {
        std::array<size_t, 256> hist{};
        for (size_t i = 0; i < n; ++i) {
            hist[img.pixels[i * static_cast<size_t>(img.channels) + static_cast<size_t>(c)]]++;
        }
        std::array<size_t, 256> cdf{};
        size_t run = 0;
        size_t cdf_min = 0;
        bool seen = false;
        for (int v = 0; v < 256; ++v) {
            run += hist[static_cast<size_t>(v)];
            cdf[static_cast<size_t>(v)] = run;
            if (!seen && hist[static_cast<size_t>(v)] > 0) {
                cdf_min = run;
                seen = true;
            }
        }
        std::array<std::uint8_t, 256> lut{};
        for (int v = 0; v < 256; ++v) {
            if (n == cdf_min) {
                lut[static_cast<size_t>(v)] = static_cast<std::uint8_t>(v);  // constant channel
            } else {
                const double num = static_cast<double>(cdf[static_cast<size_t>(v)]) -
                                   static_cast<double>(cdf_min);
                const double den = static_cast<double>(n) - static_cast<double>(cdf_min);
                lut[static_cast<size_t>(v)] = clamp8(255.0 * num / den);
            }
        }
        for (size_t i = 0; i < n; ++i) {
            auto& p = out.pixels[i * static_cast<size_t>(img.channels) + static_cast<size_t>(c)];
            p = lut[p];
        }
    }
    return out;
}

Image apply_gaussian_blur(const Image& img, double radius) {
    const double sigma = radius;
    const int half = static_cast<int>(std::ceil(3.0 * sigma));
    std::vector<double> kernel(static_cast<size_t>(2 * half + 1));
    double ksum = 0.0;
    for (int i = -half; i <= half; ++i) {
        const double v = std::exp(-(i * i) / (2.0 * sigma * sigma));
        kernel[static_cast<size_t>(i + half)] = v;
        ksum += v;
    }
    for (double& k : kernel) k /= ksum;

    auto clampi = [](int v, int lo, int hi) { return std::clamp(v, lo, hi); };
    const size_t plane = static_cast<size_t>(img.width) * static_cast<size_t>(img.height) *
                         static_cast<size_t>(img.channels);
    std::vector<double> tmp(plane, 0.0);

    // horizontal pass
    for (int y = 0; y < img.height; ++y) {
        for (int x = 0; x < img.width; ++x) {
            for (int c = 0; c < img.channels; ++c) {
                double acc = 0.0;
                for (int i = -half; i <= half; ++i) {
                    const int sx = clampi(x + i, 0, img.width - 1);
                    acc += kernel[static_cast<size_t>(i + half)] * img.at(sx, y, c);
                }
                tmp[(static_cast<size_t>(y) * img.width + static_cast<size_t>(x)) * img.channels +
                    static_cast<size_t>(c)] = acc;
            }
        }
    }
    // vertical pass
    Image out = img;
    for (int y = 0; y < img.height; ++y) {
        for (int x = 0; x < img.width; ++x) {
            for (int c = 0; c < img.channels; ++c) {
                double acc = 0.0;
                for (int i = -half; i <= half; ++i) {
                    const int sy = clampi(y + i, 0, img.height - 1);
                    acc += kernel[static_cast<size_t>(i + half)] *
                           tmp[(static_cast<size_t>(sy) * img.width + static_cast<size_t>(x)) *
                                   img.channels +
                               static_cast<size_t>(c)];
                }
                out.at(x, y, c) = clamp8(acc);
            }
        }
    }
    return out;
}

Image apply_gaussian_noise(const Image& img, double variance, std::uint64_t seed) {
    if (variance <= 0.0) return img;
    const double sd = std::sqrt(variance);
    Image out = img;
    for (size_t i = 0; i < out.pixels.size(); ++i) {
        const double noisy = img.pixels[i] / 255.0 + sd * rng::normal(seed, i);
        out.pixels[i] = clamp8(noisy * 255.0);
    }
    return out;
}

std::string format_param(double v) {
    std::ostringstream os;
    os << v;
    return os.str();
}

}  // namespace

std::string to_string(AugmentationKind k) {
    switch (k) {
        case AugmentationKind::identity: return "identity";
        case AugmentationKind::brightness: return "brightness";
        case AugmentationKind::contrast: return "contrast";
        case AugmentationKind::edge_enhance: return "edge_enhance";
        case AugmentationKind::hist_equalize: return "hist_equalize";
        case AugmentationKind::gaussian_blur: return "blur";
        case AugmentationKind::gaussian_noise: return "noise";
    }
    return "unknown";
}

AugmentationKind augmentation_kind_from_string(const std::string& s) {
    if (s == "identity") return AugmentationKind::identity;
    if (s == "brightness") return AugmentationKind::brightness;
    if (s == "contrast") return AugmentationKind::contrast;
    if (s == "edge_enhance") return AugmentationKind::edge_enhance;
    if (s == "hist_equalize") return AugmentationKind::hist_equalize;
    if (s == "blur") return AugmentationKind::gaussian_blur;
    if (s == "noise") return AugmentationKind::gaussian_noise;
    throw UnsupportedSpec("unknown augmentation kind: " + s);
}

std::string AugmentationSpec::name() const {
    switch (kind) {
        case AugmentationKind::identity:
        case AugmentationKind::edge_enhance:
        case AugmentationKind::hist_equalize:
            return to_string(kind);
        case AugmentationKind::brightness:
        case AugmentationKind::contrast:
            return to_string(kind) + "_" + format_param(factor);
        case AugmentationKind::gaussian_blur:
            return to_string(kind) + "_" + format_param(radius);
        case AugmentationKind::gaussian_noise:
            return to_string(kind) + "_" + format_param(variance);
    }
    return "unknown";
}

Image apply(const Image& img, const AugmentationSpec& spec) {
    switch (spec.kind) {
        case AugmentationKind::identity:
            return img;
        case AugmentationKind::brightness:
            return apply_brightness(img, spec.factor);
        case AugmentationKind::contrast:
            return apply_contrast(img, spec.factor);
        case AugmentationKind::edge_enhance:
            return apply_edge_enhance(img);
        case AugmentationKind::hist_equalize:
            return apply_hist_equalize(img);
        case AugmentationKind::gaussian_blur:
            return apply_gaussian_blur(img, spec.radius);
        case AugmentationKind::gaussian_noise:
            return apply_gaussian_noise(img, spec.variance, spec.seed);
    }
    throw UnsupportedSpec("unknown augmentation kind");
}

std::vector<AugmentationSpec> roster(int m) {
    // Selection-tally order: contrast 1.5 ranked first and contrast 0.25 last
    // are fixed by the tally experiment; the middle of the ranking comes from
    // our own tally run. Brightness factor 1.0 is a distinct roster entry even
    // though it reproduces the original image.
    auto bright = [](double f) {
        AugmentationSpec s;
        s.kind = AugmentationKind::brightness;
        s.factor = f;
        return s;
    };
    auto contrast = [](double f) {
        AugmentationSpec s;
        s.kind = AugmentationKind::contrast;
        s.factor = f;
        return s;
    };
    auto noise = [](double var) {
        AugmentationSpec s;
        s.kind = AugmentationKind::gaussian_noise;
        s.variance = var;
        return s;
    };
    AugmentationSpec ident;
    AugmentationSpec edge;
    edge.kind = AugmentationKind::edge_enhance;
    AugmentationSpec hist;
    hist.kind = AugmentationKind::hist_equalize;
    AugmentationSpec blur;
    blur.kind = AugmentationKind::gaussian_blur;
    blur.radius = 2.0;

    const std::vector<AugmentationSpec> full = {
        ident,          contrast(1.5),  contrast(2.0), hist,
        bright(2.5),    edge,           bright(1.5),   contrast(2.5),
        noise(0.003),   bright(1.0),    bright(0.5),   blur,
        noise(0.001),   bright(2.0),    noise(0.005),  bright(0.25),
        contrast(0.5),  contrast(0.25),
    };
    if (m < 1 || m > static_cast<int>(full.size())) {
        throw std::invalid_argument("roster: m out of range");
    }
    return {full.begin(), full.begin() + m};
}

std::vector<AugmentationSpec> roster_from_ranking(const std::vector<std::string>& names,
                                                  int m) {
    const std::vector<AugmentationSpec> full = roster(18);
    std::vector<AugmentationSpec> ordered;
    for (const std::string& name : names) {
        bool found = false;
        for (const AugmentationSpec& s : full) {
            if (s.name() == name) {
                ordered.push_back(s);
                found = true;
                break;
            }
        }
        if (!found) throw UnsupportedSpec("ranking names unknown roster entry: " + name);
    }
    if (m < 1 || m > static_cast<int>(ordered.size())) {
        throw std::invalid_argument("roster_from_ranking: m out of range");
    }
    return {ordered.begin(), ordered.begin() + m};
}

}  // namespace detfuse
