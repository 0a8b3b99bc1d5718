#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <stdexcept>

#include "boxgraph/error.hpp"
#include "boxgraph/hog.hpp"
#include "temp_dir.hpp"

using namespace boxgraph;

namespace {

// Straightforward reference: per-cell loops, distance-weighted bin votes.
std::vector<double> reference_hog(const Patch& p) {
    constexpr int n = kPatchSize, cell = 8, cells = 8, bins = 9;
    auto px = [&](int x, int y) { return p(std::clamp(x, 0, n - 1), std::clamp(y, 0, n - 1)); };
    std::vector<std::vector<std::vector<double>>> hist(cells, std::vector<std::vector<double>>(cells, std::vector<double>(bins)));
    for (int cy = 0; cy < cells; ++cy)
        for (int cx = 0; cx < cells; ++cx)
            for (int y = cy * cell; y < (cy + 1) * cell; ++y)
                for (int x = cx * cell; x < (cx + 1) * cell; ++x) {
                    const double gx = px(x + 1, y) - px(x - 1, y);
                    const double gy = px(x, y + 1) - px(x, y - 1);
                    const double mag = std::sqrt(gx * gx + gy * gy);
                    if (mag == 0) continue;
                    double deg = std::atan2(gy, gx) * 180 / std::numbers::pi;
                    while (deg < 0) deg += 180;
                    while (deg >= 180) deg -= 180;
                    for (int b = 0; b < bins; ++b) {
                        double d = std::abs(deg - 20.0 * b);
                        d = std::min(d, 180 - d);
                        hist[cy][cx][b] += mag * std::max(0.0, 1 - d / 20);
                    }
                }
    std::vector<double> out;
    for (int by = 0; by < 7; ++by)
        for (int bx = 0; bx < 7; ++bx) {
            std::vector<double> v;
            for (int dy = 0; dy < 2; ++dy)
                for (int dx = 0; dx < 2; ++dx)
                    for (double h : hist[by + dy][bx + dx]) v.push_back(h);
            auto l2 = [](std::vector<double>& w) {
                double s = 1e-12;
                for (double a : w) s += a * a;
                for (double& a : w) a /= std::sqrt(s);
            };
            l2(v);
            for (double& a : v) a = std::min(a, 0.2);
            l2(v);
            out.insert(out.end(), v.begin(), v.end());
        }
    return out;
}

Patch random_patch(std::uint64_t seed, int levels = 256) {
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<int> u(0, levels - 1);
    Patch p;
    for (double& v : p.pixels) v = u(rng) / 256.0;
    return p;
}

Patch smooth_patch(std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> a(0.02, 0.2), ph(0, 6.28);
    const double fx = a(rng), fy = a(rng), p0 = ph(rng), p1 = ph(rng);
    Patch p;
    for (int y = 0; y < kPatchSize; ++y)
        for (int x = 0; x < kPatchSize; ++x) p(x, y) = 0.5 + 0.25 * std::sin(fx * x + p0) * std::cos(fy * y + p1);
    return p;
}

}  // namespace

TEST_CASE("descriptor length is 1764") {
    CHECK(HogConfig{}.descriptor_length() == 1764);
    CHECK(hog(random_patch(1)).size() == 1764);
    CHECK(hog(Patch{}).size() == 1764);
}

TEST_CASE("constant patches give the zero descriptor") {
    for (double c : {0.0, 0.3, 1.0}) {
        Patch p;
        p.pixels.fill(c);
        const auto d = hog(p);
        CHECK(std::all_of(d.begin(), d.end(), [](float v) { return v == 0.0f; }));
    }
}

TEST_CASE("matches the reference implementation") {
    for (std::uint64_t seed = 0; seed < 6; ++seed) {
        const Patch p = seed % 2 ? random_patch(seed) : smooth_patch(seed);
        const auto got = hog(p);
        const auto want = reference_hog(p);
        REQUIRE(got.size() == want.size());
        double worst = 0;
        for (std::size_t i = 0; i < got.size(); ++i) worst = std::max(worst, std::abs(got[i] - want[i]));
        CHECK(worst < 1e-6);
    }
}

TEST_CASE("a vertical step edge votes into the horizontal-gradient bin") {
    Patch p;
    for (int y = 0; y < kPatchSize; ++y)
        for (int x = 0; x < kPatchSize; ++x) p(x, y) = x < 32 ? 0.0 : 1.0;
    const auto d = hog(p);
    // block (row 0, column 3) straddles the edge; its cell (0,3) and (0,4) hold the votes
    const std::size_t block = 3 * 36;
    double bin0 = 0, other = 0;
    for (std::size_t c = 0; c < 4; ++c)
        for (std::size_t b = 0; b < 9; ++b) (b == 0 ? bin0 : other) += d[block + c * 9 + b];
    CHECK(bin0 > 0.5);
    CHECK(other == 0.0);
}

TEST_CASE("intensity offset leaves the descriptor unchanged") {
    // dyadic intensities keep p + c exact, so the invariance is bit-exact
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        const Patch p = random_patch(seed, 192);
        Patch q = p;
        for (double& v : q.pixels) v += 48.0 / 256.0;
        CHECK(hog(p) == hog(q));
    }
}

TEST_CASE("intensity scaling changes the descriptor by less than 1e-6") {
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        const Patch p = seed % 2 ? random_patch(seed) : smooth_patch(seed);
        for (double s : {0.25, 0.5, 0.9}) {
            Patch q = p;
            for (double& v : q.pixels) v *= s;
            const auto a = hog(p), b = hog(q);
            double worst = 0;
            for (std::size_t i = 0; i < a.size(); ++i) worst = std::max(worst, double(std::abs(a[i] - b[i])));
            CHECK(worst < 1e-6);
        }
    }
}

TEST_CASE("crop_resize") {
    SUBCASE("white image") {
        const Image img(100, 80, 3, 255);
        const Patch p = crop_resize(img, {10, 5, 37, 50});
        CHECK(std::all_of(p.pixels.begin(), p.pixels.end(), [](double v) { return v == 1.0; }));
    }
    SUBCASE("64x64 box is the identity") {
        Image img(64, 64, 1);
        for (int y = 0; y < 64; ++y)
            for (int x = 0; x < 64; ++x) img.at(x, y, 0) = static_cast<std::uint8_t>((x * 7 + y * 13) % 256);
        const Patch p = crop_resize(img, {0, 0, 64, 64});
        for (int y = 0; y < 64; ++y)
            for (int x = 0; x < 64; ++x) CHECK(p(x, y) == img.gray(x, y));
    }
    SUBCASE("128x128 checkerboard averages to mid-gray") {
        Image img(128, 128, 1);
        for (int y = 0; y < 128; ++y)
            for (int x = 0; x < 128; ++x) img.at(x, y, 0) = (x + y) % 2 ? 255 : 0;
        const Patch p = crop_resize(img, {0, 0, 128, 128});
        CHECK(std::all_of(p.pixels.begin(), p.pixels.end(), [](double v) { return std::abs(v - 0.5) < 1e-12; }));
    }
    SUBCASE("partially outside boxes are clipped; fully outside ones rejected") {
        const Image img(50, 50, 1, 128);
        CHECK(crop_resize(img, {40, 40, 30, 30}).valid());
        CHECK_THROWS_AS(crop_resize(img, {60, 60, 10, 10}), std::invalid_argument);
    }
}

TEST_CASE("png and bmp round trips") {
    testing_support::TempDir dir;
    for (int channels : {1, 3}) {
        Image img(13, 7, channels);
        for (std::size_t i = 0; i < img.pixels.size(); ++i) img.pixels[i] = static_cast<std::uint8_t>(i * 37 % 256);
        write_png(dir / "a.png", img);
        write_bmp(dir / "a.bmp", img);
        CHECK(read_image(dir / "a.png") == img);
        CHECK(read_image(dir / "a.bmp") == img);
    }
    dir.write("bad.png", "not an image");
    CHECK_THROWS_AS(read_image(dir / "bad.png"), DataError);
}

TEST_CASE("extract_features gives one descriptor per box") {
    Image img(80, 80, 3, 30);
    for (int y = 20; y < 60; ++y)
        for (int x = 20; x < 60; ++x) img.at(x, y, 0) = 220;
    const auto f = extract_features(img, {{10, 10, 30, 30}, {20, 20, 40, 40}, {0, 0, 80, 80}});
    REQUIRE(f.size() == 3);
    for (const auto& d : f) CHECK(d.size() == 1764);
}
