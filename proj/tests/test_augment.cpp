#include <filesystem>
#include <numeric>
#include <random>
#include <set>

#include "detfuse/augment.hpp"
#include "doctest.h"

using namespace detfuse;

namespace {

Image random_image(std::uint64_t seed, int w = 32, int h = 24, int c = 3) {
    Image img(w, h, c);
    std::mt19937_64 rng(seed);
    for (auto& p : img.pixels) p = static_cast<std::uint8_t>(rng() % 256);
    return img;
}

AugmentationSpec spec_of(AugmentationKind kind, double param = 0.0) {
    AugmentationSpec s;
    s.kind = kind;
    switch (kind) {
        case AugmentationKind::brightness:
        case AugmentationKind::contrast:
            s.factor = param;
            break;
        case AugmentationKind::gaussian_blur:
            s.radius = param;
            break;
        case AugmentationKind::gaussian_noise:
            s.variance = param;
            break;
        default:
            break;
    }
    return s;
}

double mean_pixel(const Image& img) {
    double s = 0.0;
    for (auto p : img.pixels) s += p;
    return s / static_cast<double>(img.pixels.size());
}

}  // namespace

TEST_CASE("identity and brightness factor 1 are byte-exact no-ops") {
    const Image img = random_image(1);
    CHECK(apply(img, spec_of(AugmentationKind::identity)) == img);
    CHECK(apply(img, spec_of(AugmentationKind::brightness, 1.0)) == img);
}

TEST_CASE("brightness factor 0 blacks out; 0.25 darkens") {
    const Image img = random_image(2);
    const Image black = apply(img, spec_of(AugmentationKind::brightness, 0.0));
    for (auto p : black.pixels) CHECK(p == 0);
    const Image dark = apply(img, spec_of(AugmentationKind::brightness, 0.25));
    CHECK(mean_pixel(dark) < mean_pixel(img));
}

TEST_CASE("contrast fixes the mean gray level") {
    Image gray(16, 16, 1, 113);
    const Image out = apply(gray, spec_of(AugmentationKind::contrast, 2.0));
    CHECK(out == gray);

    // stretching contrast pushes values away from the mean
    const Image img = random_image(3, 16, 16, 1);
    const Image stretched = apply(img, spec_of(AugmentationKind::contrast, 2.0));
    CHECK(stretched.width == img.width);
}

TEST_CASE("every operator preserves shape and range") {
    const Image img = random_image(4);
    for (const AugmentationSpec& s : roster(18)) {
        const Image out = apply(img, s);
        CHECK(out.width == img.width);
        CHECK(out.height == img.height);
        CHECK(out.channels == img.channels);
        CHECK(out.pixels.size() == img.pixels.size());
    }
}

TEST_CASE("noise is seed-reproducible and a no-op at variance 0") {
    const Image img = random_image(5);
    AugmentationSpec s = spec_of(AugmentationKind::gaussian_noise, 0.003);
    s.seed = 77;
    const Image a = apply(img, s);
    const Image b = apply(img, s);
    CHECK(a == b);
    CHECK(a != img);

    s.seed = 78;
    CHECK(apply(img, s) != a);

    CHECK(apply(img, spec_of(AugmentationKind::gaussian_noise, 0.0)) == img);
}

TEST_CASE("histogram equalization is idempotent up to one level") {
    const Image img = random_image(6, 48, 48, 1);
    const Image once = apply(img, spec_of(AugmentationKind::hist_equalize));
    const Image twice = apply(once, spec_of(AugmentationKind::hist_equalize));
    for (size_t i = 0; i < once.pixels.size(); ++i) {
        CHECK(std::abs(int(once.pixels[i]) - int(twice.pixels[i])) <= 1);
    }
}

TEST_CASE("gaussian blur preserves total brightness on smooth images") {
    // interior-dominated gradient image
    Image img(64, 64, 1);
    for (int y = 0; y < 64; ++y) {
        for (int x = 0; x < 64; ++x) {
            img.at(x, y, 0) = static_cast<std::uint8_t>(64 + x + y);
        }
    }
    const Image out = apply(img, spec_of(AugmentationKind::gaussian_blur, 2.0));
    const double before = mean_pixel(img), after = mean_pixel(out);
    CHECK(std::abs(after - before) / before < 0.005);
}

TEST_CASE("edge enhance is identity on constant images") {
    Image flat(16, 16, 3, 90);
    CHECK(apply(flat, spec_of(AugmentationKind::edge_enhance)) == flat);
}

TEST_CASE("roster prefix selection") {
    CHECK(roster(18).size() == 18);
    const auto top3 = roster(3);
    REQUIRE(top3.size() == 3);
    CHECK(top3[0].kind == AugmentationKind::identity);
    CHECK(top3[1].kind == AugmentationKind::contrast);
    CHECK(top3[1].factor == doctest::Approx(1.5));
    CHECK(top3[2].kind == AugmentationKind::contrast);
    CHECK(top3[2].factor == doctest::Approx(2.0));

    const auto one = roster(1);
    REQUIRE(one.size() == 1);
    CHECK(one[0].kind == AugmentationKind::identity);

    CHECK(roster(18).back().name() == "contrast_0.25");
    CHECK_THROWS_AS(roster(0), std::invalid_argument);
    CHECK_THROWS_AS(roster(19), std::invalid_argument);

    // names are unique
    std::set<std::string> names;
    for (const auto& s : roster(18)) names.insert(s.name());
    CHECK(names.size() == 18);
}

TEST_CASE("roster_from_ranking reorders by name") {
    const auto r = roster_from_ranking({"identity", "blur_2", "brightness_0.5"}, 2);
    REQUIRE(r.size() == 2);
    CHECK(r[0].kind == AugmentationKind::identity);
    CHECK(r[1].kind == AugmentationKind::gaussian_blur);
    CHECK_THROWS_AS(roster_from_ranking({"identity", "nope"}, 1), UnsupportedSpec);
}

TEST_CASE("pnm round trip") {
    const auto dir = std::filesystem::temp_directory_path();
    const Image rgb = random_image(8, 20, 10, 3);
    const std::string p6 = (dir / "detfuse_test_rt.ppm").string();
    write_pnm(rgb, p6);
    CHECK(read_pnm(p6) == rgb);

    const Image gray = random_image(9, 20, 10, 1);
    const std::string p5 = (dir / "detfuse_test_rt.pgm").string();
    write_pnm(gray, p5);
    CHECK(read_pnm(p5) == gray);

    std::filesystem::remove(p6);
    std::filesystem::remove(p5);
}
