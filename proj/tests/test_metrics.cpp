#include <catch2/catch_amalgamated.hpp>

#include "mrtk/metrics.hpp"
#include "mrtk/rng.hpp"

using namespace mrtk;

namespace {

RealVolume noise_volume(Shape3 s, double mean, double sigma, std::uint64_t seed) {
    RealVolume v(s);
    CounterRng rng(seed);
    for (auto& x : v.data) x = mean + sigma * rng.normal();
    return v;
}

}  // namespace

TEST_CASE("ROI statistics on a constant region are exact") {
    RealVolume v({32, 32, 4});
    for (auto& x : v.data) x = 2.5;
    const RoiStats s = roi_stats(v, CircularROI{2, 15.5, 15.5, 8.0});
    REQUIRE(s.mean == Catch::Approx(2.5).margin(1e-15));
    REQUIRE(s.std == 0.0);
    REQUIRE(s.count >= 10);
}

TEST_CASE("ROI std recovers the generating noise level") {
    const RealVolume v = noise_volume({64, 64, 1}, 10.0, 0.3, 6);
    const RoiStats s = roi_stats(v, CircularROI{0, 31.5, 31.5, 24.0});
    REQUIRE(s.count > 1500);
    REQUIRE(s.std == Catch::Approx(0.3).epsilon(0.05));
    REQUIRE(s.mean == Catch::Approx(10.0).margin(0.05));
}

TEST_CASE("degenerate and out-of-bounds ROIs are rejected") {
    const RealVolume v = noise_volume({16, 16, 2}, 0.0, 1.0, 1);
    REQUIRE_THROWS_AS(roi_stats(v, CircularROI{0, 8.0, 8.0, 0.5}), ValidationError);   // < 10 voxels
    REQUIRE_THROWS_AS(roi_stats(v, CircularROI{0, 2.0, 8.0, 5.0}), ValidationError);   // spills out
    REQUIRE_THROWS_AS(roi_stats(v, CircularROI{2, 8.0, 8.0, 4.0}), ValidationError);   // bad slice
}

TEST_CASE("relative noise matches the construction") {
    const Shape3 s{64, 64, 1};
    const CircularROI roi{0, 31.5, 31.5, 16.0};
    const RealVolume orig = noise_volume(s, 1.0, 0.2, 11);
    SECTION("identical images give exactly 1") {
        REQUIRE(relative_noise(orig, orig, roi) == 1.0);
    }
    SECTION("halving the noise doubles the factor") {
        const RealVolume proc = noise_volume(s, 1.0, 0.1, 12);
        REQUIRE(relative_noise(orig, proc, roi) == Catch::Approx(2.0).epsilon(0.05));
    }
    SECTION("the measure is scale-invariant in the original") {
        RealVolume scaled = orig;
        for (auto& x : scaled.data) x *= 0.5;
        REQUIRE(relative_noise(orig, scaled, roi) == Catch::Approx(2.0).margin(1e-12));
    }
    SECTION("a constant processed image is rejected") {
        RealVolume flat(s);
        for (auto& x : flat.data) x = 1.0;
        REQUIRE_THROWS_AS(relative_noise(orig, flat, roi), ValidationError);
        RealVolume other({32, 32, 1});
        REQUIRE_THROWS_AS(relative_noise(orig, other, roi), ValidationError);
    }
}

TEST_CASE("maximum intensity projection picks the brightest voxel per ray") {
    RealVolume v({8, 10, 12});
    for (auto& x : v.data) x = 1.0;
    v.at(3, 4, 5) = 9.0;
    const Image2D pz = mip(v, Axis::slice);
    REQUIRE(pz.rows == 8);
    REQUIRE(pz.cols == 10);
    REQUIRE(pz.at(3, 4) == 9.0);
    REQUIRE(pz.at(0, 0) == 1.0);
    const Image2D px = mip(v, Axis::frequency);
    REQUIRE(px.rows == 10);
    REQUIRE(px.cols == 12);
    REQUIRE(px.at(4, 5) == 9.0);
    const Image2D py = mip(v, Axis::phase);
    REQUIRE(py.rows == 8);
    REQUIRE(py.cols == 12);
    REQUIRE(py.at(3, 5) == 9.0);
}

TEST_CASE("projection along slices ignores slice permutations") {
    RealVolume v({6, 6, 4});
    CounterRng rng(3);
    for (auto& x : v.data) x = rng.uniform();
    RealVolume w = v;
    for (std::size_t x = 0; x < 6; ++x)
        for (std::size_t y = 0; y < 6; ++y)
            for (std::size_t z = 0; z < 4; ++z) w.at(x, y, z) = v.at(x, y, 3 - z);
    REQUIRE(mip(v, Axis::slice).v == mip(w, Axis::slice).v);
}

TEST_CASE("edge sharpness of an image against itself is exactly 1") {
    Image2D img(16, 32);
    for (std::size_t r = 0; r < 16; ++r)
        for (std::size_t c = 16; c < 32; ++c) img.at(r, c) = 1.0;
    const LineProfile p{8.0, 0.0, 8.0, 31.0, 32};
    REQUIRE(edge_sharpness(img, img, p) == 1.0);
}

TEST_CASE("a sharp step against its 3-wide boxcar blur measures 3") {
    Image2D sharp(16, 32), blurred(16, 32);
    for (std::size_t r = 0; r < 16; ++r)
        for (std::size_t c = 0; c < 32; ++c) {
            sharp.at(r, c) = c >= 16 ? 1.0 : 0.0;
            // centered boxcar of width 3 applied to the step
            const double l = sharp.at(r, c);
            const double lm = c >= 17 ? 1.0 : 0.0;
            const double lp = c >= 15 ? 1.0 : 0.0;
            blurred.at(r, c) = (l + lm + lp) / 3.0;
        }
    const LineProfile p{8.0, 0.0, 8.0, 31.0, 32};  // unit pixel spacing along the row
    const double ratio = edge_sharpness(blurred, sharp, p);
    REQUIRE(ratio == Catch::Approx(3.0).epsilon(0.10));
}

TEST_CASE("degenerate profiles and bad geometry are rejected") {
    Image2D img(16, 16);
    for (auto& v : img.v) v = 1.0;  // constant: zero gradient
    const LineProfile p{8.0, 0.0, 8.0, 15.0, 16};
    REQUIRE_THROWS_AS(edge_sharpness(img, img, p), ValidationError);
    Image2D step(16, 16);
    for (std::size_t r = 0; r < 16; ++r)
        for (std::size_t c = 8; c < 16; ++c) step.at(r, c) = 1.0;
    REQUIRE_THROWS_AS(edge_sharpness(step, step, LineProfile{8.0, 0.0, 8.0, 15.0, 4}),
                      ValidationError);
    REQUIRE_THROWS_AS(edge_sharpness(step, step, LineProfile{8.0, -2.0, 8.0, 15.0, 16}),
                      ValidationError);
    Image2D other(8, 8);
    REQUIRE_THROWS_AS(edge_sharpness(step, other, p), ValidationError);
}
