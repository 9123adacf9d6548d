#include <catch2/catch_amalgamated.hpp>

#include "mrtk/degrade.hpp"
#include "mrtk/fft.hpp"
#include "mrtk/rng.hpp"

using namespace mrtk;

namespace {
ImageVolume random_volume(Shape3 s, std::uint64_t seed) {
    ImageVolume img(s);
    CounterRng rng(seed);
    for (auto& v : img.data) v = rng.cnormal(1.0);
    return img;
}
double energy(const std::vector<cdouble>& d) {
    double e = 0.0;
    for (const auto& v : d) e += std::norm(v);
    return e;
}
}  // namespace

TEST_CASE("centered FFT roundtrip is identity") {
    const ImageVolume img = random_volume({16, 12, 8}, 11);
    const KSpaceVolume k = fft_centered(img);
    const CoilImages back = ifft_centered(k);
    double err = 0.0;
    for (std::size_t i = 0; i < img.data.size(); ++i)
        err = std::max(err, std::abs(back.data[i] - img.data[i]));
    REQUIRE(err < 1e-12);
}

TEST_CASE("unitary transform preserves energy (Parseval)") {
    for (std::uint64_t s = 0; s < 10; ++s) {
        const ImageVolume img = random_volume({16, 16, 16}, 100 + s);
        const KSpaceVolume k = fft_centered(img);
        REQUIRE(std::abs(energy(img.data) - energy(k.data)) / energy(img.data) < 1e-9);
    }
}

TEST_CASE("delta at center transforms to a flat spectrum") {
    const Shape3 s{16, 16, 16};
    ImageVolume img(s);
    img.at(8, 8, 8) = 1.0;
    const KSpaceVolume k = fft_centered(img);
    const double expect = 1.0 / std::sqrt(static_cast<double>(s.total()));
    for (const auto& v : k.data) {
        REQUIRE(std::abs(v.real() - expect) < 1e-12);
        REQUIRE(std::abs(v.imag()) < 1e-12);
    }
}

TEST_CASE("constant image transforms to a DC delta at index n/2") {
    const Shape3 s{8, 8, 8};
    ImageVolume img(s);
    for (auto& v : img.data) v = 2.0;
    const KSpaceVolume k = fft_centered(img);
    const double expect = 2.0 * std::sqrt(static_cast<double>(s.total()));
    REQUIRE(std::abs(k.at(0, 4, 4, 4) - cdouble(expect, 0.0)) < 1e-12);
    for (std::size_t x = 0; x < 8; ++x)
        for (std::size_t y = 0; y < 8; ++y)
            for (std::size_t z = 0; z < 8; ++z)
                if (!(x == 4 && y == 4 && z == 4)) REQUIRE(std::abs(k.at(0, x, y, z)) < 1e-12);
}

TEST_CASE("Tukey profile endpoints and DC weight") {
    const auto flat = tukey_profile(16, 0.0);
    for (double w : flat) REQUIRE(w == 1.0);
    const auto full = tukey_profile(16, 1.0);
    REQUIRE(full[8] == 1.0);
    REQUIRE(full[0] < 1e-12);
    const auto half = tukey_profile(64, 0.5);
    REQUIRE(half[32] == 1.0);
    for (std::size_t i = 1; i < 32; ++i) REQUIRE(half[i] <= half[i + 1] + 1e-15);
    REQUIRE_THROWS_AS(tukey_profile(16, 1.5), ValidationError);
}

TEST_CASE("apply_window with alpha 0 is bytewise identity") {
    KSpaceVolume k({8, 8, 8}, 2);
    CounterRng rng(3);
    for (auto& v : k.data) v = rng.cnormal(1.0);
    const KSpaceVolume out = apply_window(k, WindowSpec{0.0, {true, true, true}});
    REQUIRE(std::memcmp(out.data.data(), k.data.data(), k.data.size() * sizeof(cdouble)) == 0);
}

TEST_CASE("window reduces Gibbs overshoot of a truncated box") {
    const Shape3 s{64, 8, 8};
    ImageVolume box(s);
    for (std::size_t x = 16; x < 48; ++x)
        for (std::size_t y = 0; y < 8; ++y)
            for (std::size_t z = 0; z < 8; ++z) box.at(x, y, z) = 1.0;
    KSpaceVolume k = fft_centered(box);
    const SamplingMask m = build_kmax_mask(Axis::frequency, 0.5, s);
    k = apply_mask(k, m);
    auto overshoot = [&](const KSpaceVolume& ksp) {
        const CoilImages img = ifft_centered(ksp);
        double mx = 0.0;
        for (const auto& v : img.data) mx = std::max(mx, std::abs(v));
        return mx - 1.0;
    };
    const double plain = overshoot(k);
    const double windowed = overshoot(apply_window(k, WindowSpec{1.0, {true, false, false}}));
    REQUIRE(plain > 0.02);  // Gibbs overshoot present
    REQUIRE(windowed < plain);
}

TEST_CASE("zero-pad then crop back is identity and preserves DC and energy") {
    KSpaceVolume k({8, 12, 6}, 2);
    CounterRng rng(5);
    for (auto& v : k.data) v = rng.cnormal(1.0);
    const KSpaceVolume padded = zero_pad_or_crop(k, {16, 24, 12});
    REQUIRE(std::abs(padded.at(0, 8, 12, 6) - k.at(0, 4, 6, 3)) == 0.0);
    REQUIRE(std::abs(energy(padded.data) - energy(k.data)) < 1e-12);
    const KSpaceVolume back = zero_pad_or_crop(padded, {8, 12, 6});
    for (std::size_t i = 0; i < k.data.size(); ++i) REQUIRE(back.data[i] == k.data[i]);
}

TEST_CASE("zero-padded image samples the original lattice scaled by sqrt(volume ratio)") {
    const ImageVolume img = random_volume({8, 8, 8}, 17);
    const KSpaceVolume k = fft_centered(img);
    const KSpaceVolume padded = zero_pad_or_crop(k, {16, 16, 16});
    const CoilImages up = ifft_centered(padded);
    const double scale = std::sqrt(8.0);  // sqrt(16^3 / 8^3)
    // original voxel x (center 4) sits at new index 2x on the doubled lattice
    for (std::size_t x = 0; x < 8; ++x)
        for (std::size_t y = 0; y < 8; ++y)
            for (std::size_t z = 0; z < 8; ++z)
                REQUIRE(std::abs(up.at(0, 2 * x, 2 * y, 2 * z) * scale - img.at(x, y, z)) < 1e-9);
}
