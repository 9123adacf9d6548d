#pragma once

#include <map>
#include <mutex>
#include <numbers>
#include <tuple>

#include <fftw3.h>

#include "mrtk/core.hpp"

namespace mrtk {

namespace detail {

// Plan cache. FFTW planning is not thread-safe; execution via fftw_execute_dft is.
// FFTW_ESTIMATE | FFTW_UNALIGNED keeps plan selection deterministic and lets one
// plan run on any buffer.
class FftPlanCache {
public:
    static fftw_plan get(Shape3 s, int sign) {
        static FftPlanCache cache;
        std::lock_guard<std::mutex> lock(cache.mutex_);
        auto key = std::make_tuple(s.nx, s.ny, s.nz, sign);
        auto it = cache.plans_.find(key);
        if (it != cache.plans_.end()) return it->second;
        std::vector<fftw_complex> dummy(s.total());
        fftw_plan p = fftw_plan_dft_3d(static_cast<int>(s.nx), static_cast<int>(s.ny),
                                       static_cast<int>(s.nz), dummy.data(), dummy.data(), sign,
                                       FFTW_ESTIMATE | FFTW_UNALIGNED);
        cache.plans_.emplace(key, p);
        return p;
    }

private:
    std::mutex mutex_;
    std::map<std::tuple<std::size_t, std::size_t, std::size_t, int>, fftw_plan> plans_;
};

// Circular shift moving index 0 to index n/2 per axis (numpy fftshift convention).
inline void shift3(const cdouble* in, cdouble* out, Shape3 s, bool inverse) {
    const std::size_t sx = inverse ? s.nx - s.nx / 2 : s.nx / 2;
    const std::size_t sy = inverse ? s.ny - s.ny / 2 : s.ny / 2;
    const std::size_t sz = inverse ? s.nz - s.nz / 2 : s.nz / 2;
    for (std::size_t x = 0; x < s.nx; ++x) {
        const std::size_t xo = (x + sx) % s.nx;
        for (std::size_t y = 0; y < s.ny; ++y) {
            const std::size_t yo = (y + sy) % s.ny;
            const cdouble* src = in + (x * s.ny + y) * s.nz;
            cdouble* dst = out + (xo * s.ny + yo) * s.nz;
            for (std::size_t z = 0; z < s.nz; ++z) dst[(z + sz) % s.nz] = src[z];
        }
    }
}

// One centered unitary 3D transform: fftshift(FFT(ifftshift(x))) / sqrt(N).
inline void centered_transform(const cdouble* in, cdouble* out, Shape3 s, int sign) {
    const std::size_t n = s.total();
    std::vector<cdouble> a(n), b(n);
    shift3(in, a.data(), s, /*inverse=*/true);
    fftw_plan plan = FftPlanCache::get(s, sign);
    fftw_execute_dft(plan, reinterpret_cast<fftw_complex*>(a.data()),
                     reinterpret_cast<fftw_complex*>(b.data()));
    shift3(b.data(), out, s, /*inverse=*/false);
    const double scale = 1.0 / std::sqrt(static_cast<double>(n));
    for (std::size_t i = 0; i < n; ++i) out[i] *= scale;
}

}  // namespace detail

// Centered unitary DFT per coil. DC lands at index n/2 per axis; 1/sqrt(n) per axis
// both directions, so noise variance is preserved between domains.
inline KSpaceVolume fft_centered(const CoilImages& img) {
    ensure_finite(img.data, "fft_centered input");
    KSpaceVolume out(img.shape, img.ncoils);
    out.spacing = img.spacing;
    for (std::size_t c = 0; c < img.ncoils; ++c)
        detail::centered_transform(img.coil(c), out.coil(c), img.shape, FFTW_FORWARD);
    return out;
}

inline KSpaceVolume fft_centered(const ImageVolume& img) {
    CoilImages ci(img.shape, 1);
    ci.data = img.data;
    ci.spacing = img.spacing;
    return fft_centered(ci);
}

inline CoilImages ifft_centered(const KSpaceVolume& ksp) {
    ensure_finite(ksp.data, "ifft_centered input");
    if (!ksp.is_centered) throw ValidationError("ifft_centered: k-space must be centered");
    CoilImages out(ksp.shape, ksp.ncoils);
    out.spacing = ksp.spacing;
    for (std::size_t c = 0; c < ksp.ncoils; ++c)
        detail::centered_transform(ksp.coil(c), out.coil(c), ksp.shape, FFTW_BACKWARD);
    return out;
}

// Anti-ringing filter profile. Tukey over centered coordinate; the DC sample
// (index n/2) is always scaled by exactly 1.
struct WindowSpec {
    double alpha = 0.5;                          // taper fraction in [0,1]
    std::array<bool, 3> axes{true, true, true};  // which encoding axes to window
};

inline std::vector<double> tukey_profile(std::size_t n, double alpha) {
    if (alpha < 0.0 || alpha > 1.0) throw ValidationError("tukey: alpha must be in [0,1]");
    std::vector<double> w(n, 1.0);
    if (n == 1 || alpha == 0.0) return w;
    const double c = static_cast<double>(n / 2);
    const double half = static_cast<double>(n) / 2.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double x = std::abs(static_cast<double>(i) - c) / half;  // 0 at DC
        if (x > 1.0 - alpha)
            w[i] = 0.5 * (1.0 + std::cos(std::numbers::pi * (x - (1.0 - alpha)) / alpha));
    }
    w[n / 2] = 1.0;
    return w;
}

inline KSpaceVolume apply_window(const KSpaceVolume& ksp, const WindowSpec& w) {
    if (w.alpha < 0.0 || w.alpha > 1.0) throw ValidationError("apply_window: alpha out of [0,1]");
    KSpaceVolume out = ksp;
    if (w.alpha == 0.0) return out;  // flat window, bytewise identity
    std::array<std::vector<double>, 3> prof;
    for (int a = 0; a < 3; ++a)
        prof[a] = w.axes[a] ? tukey_profile(ksp.shape.dim(a), w.alpha)
                            : std::vector<double>(ksp.shape.dim(a), 1.0);
    for (std::size_t c = 0; c < ksp.ncoils; ++c)
        for (std::size_t x = 0; x < ksp.shape.nx; ++x)
            for (std::size_t y = 0; y < ksp.shape.ny; ++y) {
                const double wxy = prof[0][x] * prof[1][y];
                cdouble* row = out.coil(c) + (x * ksp.shape.ny + y) * ksp.shape.nz;
                for (std::size_t z = 0; z < ksp.shape.nz; ++z) row[z] *= wxy * prof[2][z];
            }
    return out;
}

namespace detail {
// Centered embed/crop per axis: index i maps to i + (n'/2 - n/2).
inline void centered_axis_range(std::size_t n_src, std::size_t n_dst, std::ptrdiff_t& off) {
    off = static_cast<std::ptrdiff_t>(n_dst / 2) - static_cast<std::ptrdiff_t>(n_src / 2);
}
}  // namespace detail

// Centered zero-pad (grow) or crop (shrink) per axis; DC sample preserved.
// Padding then cropping back is identity.
inline KSpaceVolume zero_pad_or_crop(const KSpaceVolume& ksp, Shape3 target) {
    if (target.nx < 1 || target.ny < 1 || target.nz < 1)
        throw ValidationError("zero_pad_or_crop: target dims must be >= 1");
    if (target == ksp.shape) return ksp;
    KSpaceVolume out(target, ksp.ncoils);
    out.spacing = ksp.spacing;
    std::ptrdiff_t ox, oy, oz;
    detail::centered_axis_range(ksp.shape.nx, target.nx, ox);
    detail::centered_axis_range(ksp.shape.ny, target.ny, oy);
    detail::centered_axis_range(ksp.shape.nz, target.nz, oz);
    for (std::size_t c = 0; c < ksp.ncoils; ++c)
        for (std::size_t x = 0; x < ksp.shape.nx; ++x) {
            const std::ptrdiff_t xd = static_cast<std::ptrdiff_t>(x) + ox;
            if (xd < 0 || xd >= static_cast<std::ptrdiff_t>(target.nx)) continue;
            for (std::size_t y = 0; y < ksp.shape.ny; ++y) {
                const std::ptrdiff_t yd = static_cast<std::ptrdiff_t>(y) + oy;
                if (yd < 0 || yd >= static_cast<std::ptrdiff_t>(target.ny)) continue;
                for (std::size_t z = 0; z < ksp.shape.nz; ++z) {
                    const std::ptrdiff_t zd = static_cast<std::ptrdiff_t>(z) + oz;
                    if (zd < 0 || zd >= static_cast<std::ptrdiff_t>(target.nz)) continue;
                    out.at(c, static_cast<std::size_t>(xd), static_cast<std::size_t>(yd),
                           static_cast<std::size_t>(zd)) = ksp.at(c, x, y, z);
                }
            }
        }
    return out;
}

}  // namespace mrtk
