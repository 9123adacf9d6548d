#pragma once

#include "mrtk/core.hpp"
#include "mrtk/fft.hpp"
#include "mrtk/rng.hpp"

namespace mrtk {

// Analytic ellipsoid in fractional coordinates: each axis of the grid spans
// [-1, 1) with voxel centers at (2*(i+0.5)/n - 1).
struct EllipsoidSpec {
    std::array<double, 3> center{0, 0, 0};
    std::array<double, 3> semi_axes{0.5, 0.5, 0.5};
    std::array<double, 3> euler_angles{0, 0, 0};  // intrinsic Z-Y-X, radians
    double intensity = 1.0;
};

struct PhantomSpec {
    std::vector<EllipsoidSpec> ellipsoids;
    // Smooth phase map: coefficients over the basis
    // {1, x, y, z, xy, xz, yz, x^2, y^2, z^2} in fractional coordinates.
    std::vector<double> phase_poly;
    double edge_softening = 0.0;  // Gaussian blur sigma in voxels
};

struct CoilProfileSpec {
    std::size_t ncoils = 8;
    double ring_radius = 0.9;  // fractional
    double falloff = 1.0;      // Gaussian width, fractional
    bool normalize_sos = true;
};

namespace detail {

inline std::array<std::array<double, 3>, 3> euler_zyx(const std::array<double, 3>& e) {
    const double cz = std::cos(e[0]), sz = std::sin(e[0]);
    const double cy = std::cos(e[1]), sy = std::sin(e[1]);
    const double cx = std::cos(e[2]), sx = std::sin(e[2]);
    // R = Rz * Ry * Rx
    return {{{cz * cy, cz * sy * sx - sz * cx, cz * sy * cx + sz * sx},
             {sz * cy, sz * sy * sx + cz * cx, sz * sy * cx - cz * sx},
             {-sy, cy * sx, cy * cx}}};
}

inline double frac_coord(std::size_t i, std::size_t n) {
    return 2.0 * (static_cast<double>(i) + 0.5) / static_cast<double>(n) - 1.0;
}

// Gaussian blur via k-space multiplication (sigma in voxels, per axis of the grid).
inline void gaussian_blur_inplace(ImageVolume& img, double sigma) {
    if (sigma <= 0.0) return;
    KSpaceVolume k = fft_centered(img);
    const Shape3 s = img.shape;
    auto axis_profile = [&](std::size_t n) {
        std::vector<double> p(n);
        for (std::size_t i = 0; i < n; ++i) {
            const double f = (static_cast<double>(i) - static_cast<double>(n / 2)) /
                             static_cast<double>(n);  // cycles per voxel
            p[i] = std::exp(-2.0 * std::numbers::pi * std::numbers::pi * sigma * sigma * f * f);
        }
        return p;
    };
    const auto px = axis_profile(s.nx), py = axis_profile(s.ny), pz = axis_profile(s.nz);
    for (std::size_t x = 0; x < s.nx; ++x)
        for (std::size_t y = 0; y < s.ny; ++y) {
            cdouble* row = k.coil(0) + (x * s.ny + y) * s.nz;
            for (std::size_t z = 0; z < s.nz; ++z) row[z] *= px[x] * py[y] * pz[z];
        }
    CoilImages blurred = ifft_centered(k);
    img.data = std::move(blurred.data);
}

}  // namespace detail

// Additive superposition of ellipsoid indicators, optional blur, optional
// smooth phase. Deterministic for a fixed spec.
inline ImageVolume rasterize_phantom(const PhantomSpec& spec, Shape3 dims) {
    if (dims.nx < 8 || dims.ny < 8 || dims.nz < 8)
        throw ValidationError("rasterize_phantom: dims must be >= 8 per axis");
    for (const auto& e : spec.ellipsoids)
        if (e.semi_axes[0] <= 0 || e.semi_axes[1] <= 0 || e.semi_axes[2] <= 0)
            throw ValidationError("rasterize_phantom: semi_axes must be > 0");

    ImageVolume img(dims);
    for (const auto& e : spec.ellipsoids) {
        const auto R = detail::euler_zyx(e.euler_angles);
        for (std::size_t x = 0; x < dims.nx; ++x) {
            const double vx = detail::frac_coord(x, dims.nx) - e.center[0];
            for (std::size_t y = 0; y < dims.ny; ++y) {
                const double vy = detail::frac_coord(y, dims.ny) - e.center[1];
                for (std::size_t z = 0; z < dims.nz; ++z) {
                    const double vz = detail::frac_coord(z, dims.nz) - e.center[2];
                    // rotate into ellipsoid frame (R^T v)
                    const double u0 = R[0][0] * vx + R[1][0] * vy + R[2][0] * vz;
                    const double u1 = R[0][1] * vx + R[1][1] * vy + R[2][1] * vz;
                    const double u2 = R[0][2] * vx + R[1][2] * vy + R[2][2] * vz;
                    const double q = (u0 / e.semi_axes[0]) * (u0 / e.semi_axes[0]) +
                                     (u1 / e.semi_axes[1]) * (u1 / e.semi_axes[1]) +
                                     (u2 / e.semi_axes[2]) * (u2 / e.semi_axes[2]);
                    if (q <= 1.0) img.at(x, y, z) += e.intensity;
                }
            }
        }
    }

    if (spec.edge_softening > 0.0) detail::gaussian_blur_inplace(img, spec.edge_softening);

    if (!spec.phase_poly.empty()) {
        if (spec.phase_poly.size() > 10)
            throw ValidationError("rasterize_phantom: phase_poly supports at most 10 coefficients");
        for (std::size_t x = 0; x < dims.nx; ++x) {
            const double px = detail::frac_coord(x, dims.nx);
            for (std::size_t y = 0; y < dims.ny; ++y) {
                const double py = detail::frac_coord(y, dims.ny);
                for (std::size_t z = 0; z < dims.nz; ++z) {
                    const double pz = detail::frac_coord(z, dims.nz);
                    const double basis[10] = {1.0, px, py, pz, px * py, px * pz, py * pz,
                                              px * px, py * py, pz * pz};
                    double phi = 0.0;
                    for (std::size_t i = 0; i < spec.phase_poly.size(); ++i)
                        phi += spec.phase_poly[i] * basis[i];
                    phi = std::remainder(phi, 2.0 * std::numbers::pi);  // wrap to (-pi, pi]
                    img.at(x, y, z) *= std::polar(1.0, phi);
                }
            }
        }
    }
    return img;
}

// Smooth complex coil maps: Gaussian magnitude falloff from centers placed on a
// ring in the x-y plane, mild linear phase toward each coil. With normalize_sos,
// sum_c |S_c|^2 = 1 at every voxel.
inline CoilImages coil_sensitivities(const CoilProfileSpec& spec, Shape3 dims) {
    if (spec.ncoils < 1) throw ValidationError("coil_sensitivities: ncoils must be >= 1");
    CoilImages sens(dims, spec.ncoils);
    for (std::size_t c = 0; c < spec.ncoils; ++c) {
        const double theta = 2.0 * std::numbers::pi * static_cast<double>(c) /
                             static_cast<double>(spec.ncoils);
        const double cx = spec.ring_radius * std::cos(theta);
        const double cy = spec.ring_radius * std::sin(theta);
        for (std::size_t x = 0; x < dims.nx; ++x) {
            const double vx = detail::frac_coord(x, dims.nx);
            for (std::size_t y = 0; y < dims.ny; ++y) {
                const double vy = detail::frac_coord(y, dims.ny);
                for (std::size_t z = 0; z < dims.nz; ++z) {
                    const double vz = detail::frac_coord(z, dims.nz);
                    const double d2 = (vx - cx) * (vx - cx) + (vy - cy) * (vy - cy) + vz * vz;
                    const double mag = std::exp(-d2 / (2.0 * spec.falloff * spec.falloff));
                    const double phi = spec.ncoils > 1 ? 0.5 * (vx * cx + vy * cy) : 0.0;
                    sens.at(c, x, y, z) = std::polar(mag, phi);
                }
            }
        }
    }
    if (spec.normalize_sos) {
        const std::size_t vox = dims.total();
        for (std::size_t v = 0; v < vox; ++v) {
            double sos = 0.0;
            for (std::size_t c = 0; c < spec.ncoils; ++c) sos += std::norm(sens.data[c * vox + v]);
            const double inv = 1.0 / std::sqrt(sos);  // Gaussians are strictly positive
            for (std::size_t c = 0; c < spec.ncoils; ++c) sens.data[c * vox + v] *= inv;
        }
    }
    return sens;
}

// Raw k-space synthesis: per coil F(S_c * obj) plus i.i.d. complex Gaussian noise
// (std sigma0 per real/imag component) on every sample.
inline KSpaceVolume synthesize_kspace(const ImageVolume& obj, const CoilImages& sens, double sigma0,
                                      std::uint64_t seed) {
    if (sens.shape != obj.shape)
        throw ValidationError("synthesize_kspace: sensitivity dims " + sens.shape.str() +
                              " do not match object dims " + obj.shape.str());
    if (sigma0 < 0.0) throw ValidationError("synthesize_kspace: sigma0 must be >= 0");
    CoilImages weighted(obj.shape, sens.ncoils);
    weighted.spacing = obj.spacing;
    const std::size_t vox = obj.shape.total();
    for (std::size_t c = 0; c < sens.ncoils; ++c)
        for (std::size_t v = 0; v < vox; ++v)
            weighted.data[c * vox + v] = sens.data[c * vox + v] * obj.data[v];
    KSpaceVolume ksp = fft_centered(weighted);
    if (sigma0 > 0.0) {
        for (std::size_t c = 0; c < sens.ncoils; ++c) {
            CounterRng rng(seed, c);
            cdouble* k = ksp.coil(c);
            for (std::size_t v = 0; v < vox; ++v) k[v] += rng.cnormal(sigma0);
        }
    }
    return ksp;
}

}  // namespace mrtk
