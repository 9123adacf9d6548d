#pragma once

#include "mrtk/core.hpp"

namespace mrtk {

struct CircularROI {
    std::size_t slice = 0;   // z index
    double center_x = 0.0;   // voxels, frequency axis
    double center_y = 0.0;   // voxels, phase axis
    double radius = 0.0;     // voxels
};

struct RoiStats {
    double mean = 0.0;
    double std = 0.0;
    std::size_t count = 0;
};

// Sample mean and unbiased std over voxels whose center lies inside the circle.
inline RoiStats roi_stats(const RealVolume& img, const CircularROI& roi) {
    if (roi.slice >= img.shape.nz) throw ValidationError("roi_stats: slice out of bounds");
    if (roi.center_x - roi.radius < -0.5 || roi.center_x + roi.radius > img.shape.nx - 0.5 ||
        roi.center_y - roi.radius < -0.5 || roi.center_y + roi.radius > img.shape.ny - 0.5)
        throw ValidationError("roi_stats: ROI extends outside image bounds");
    double sum = 0.0, sum2 = 0.0;
    std::size_t n = 0;
    for (std::size_t x = 0; x < img.shape.nx; ++x)
        for (std::size_t y = 0; y < img.shape.ny; ++y) {
            const double dx = static_cast<double>(x) - roi.center_x;
            const double dy = static_cast<double>(y) - roi.center_y;
            if (dx * dx + dy * dy > roi.radius * roi.radius) continue;
            const double v = img.at(x, y, roi.slice);
            sum += v;
            sum2 += v * v;
            ++n;
        }
    if (n < 10) throw ValidationError("roi_stats: ROI must contain at least 10 voxels");
    RoiStats s;
    s.count = n;
    s.mean = sum / static_cast<double>(n);
    s.std = std::sqrt(std::max(0.0, (sum2 - sum * sum / static_cast<double>(n)) /
                                        (static_cast<double>(n) - 1.0)));
    return s;
}

// sigma_orig / sigma_proc over the same ROI (the inverse noise-level ratio).
inline double relative_noise(const RealVolume& orig, const RealVolume& proc, const CircularROI& roi) {
    if (!(orig.shape == proc.shape)) throw ValidationError("relative_noise: geometry mismatch");
    const double s_orig = roi_stats(orig, roi).std;
    const double s_proc = roi_stats(proc, roi).std;
    if (s_proc == 0.0) throw ValidationError("relative_noise: processed ROI std is zero");
    return s_orig / s_proc;
}

// Maximum intensity projection along one axis.
inline Image2D mip(const RealVolume& vol, Axis axis) {
    const int a = static_cast<int>(axis);
    const std::size_t n0 = vol.shape.dim(a == 0 ? 1 : 0);
    const std::size_t n1 = vol.shape.dim(a == 2 ? 1 : 2);
    Image2D out(n0, n1);
    std::fill(out.v.begin(), out.v.end(), -std::numeric_limits<double>::infinity());
    for (std::size_t x = 0; x < vol.shape.nx; ++x)
        for (std::size_t y = 0; y < vol.shape.ny; ++y)
            for (std::size_t z = 0; z < vol.shape.nz; ++z) {
                const std::size_t i = a == 0 ? y : x;
                const std::size_t j = a == 2 ? y : z;
                out.at(i, j) = std::max(out.at(i, j), vol.at(x, y, z));
            }
    return out;
}

struct LineProfile {
    double r0 = 0.0, c0 = 0.0;  // start (voxels)
    double r1 = 0.0, c1 = 0.0;  // end (voxels)
    std::size_t samples = 64;
};

namespace detail {
inline double bilinear_sample(const Image2D& img, double r, double c) {
    const double rc = std::clamp(r, 0.0, static_cast<double>(img.rows - 1));
    const double cc = std::clamp(c, 0.0, static_cast<double>(img.cols - 1));
    const std::size_t r0 = static_cast<std::size_t>(rc);
    const std::size_t c0 = static_cast<std::size_t>(cc);
    const std::size_t r1 = std::min(r0 + 1, img.rows - 1);
    const std::size_t c1 = std::min(c0 + 1, img.cols - 1);
    const double tr = rc - static_cast<double>(r0), tc = cc - static_cast<double>(c0);
    const double top = img.at(r0, c0) + (img.at(r0, c1) - img.at(r0, c0)) * tc;
    const double bot = img.at(r1, c0) + (img.at(r1, c1) - img.at(r1, c0)) * tc;
    return top + (bot - top) * tr;
}

inline double max_profile_gradient(const Image2D& img, const LineProfile& p) {
    std::vector<double> vals(p.samples);
    for (std::size_t i = 0; i < p.samples; ++i) {
        const double t = static_cast<double>(i) / static_cast<double>(p.samples - 1);
        vals[i] = bilinear_sample(img, p.r0 + (p.r1 - p.r0) * t, p.c0 + (p.c1 - p.c0) * t);
    }
    double g = 0.0;
    for (std::size_t i = 0; i + 1 < p.samples; ++i) g = std::max(g, std::abs(vals[i + 1] - vals[i]));
    return g;
}
}  // namespace detail

// Ratio of the maximum first-difference gradient along the profile:
// max |grad B| / max |grad A|, with B the processed image.
inline double edge_sharpness(const Image2D& img_a, const Image2D& img_b, const LineProfile& p) {
    if (img_a.rows != img_b.rows || img_a.cols != img_b.cols)
        throw ValidationError("edge_sharpness: geometry mismatch");
    if (p.samples < 8) throw ValidationError("edge_sharpness: sample count must be >= 8");
    auto in_bounds = [&](double r, double c) {
        return r >= 0.0 && c >= 0.0 && r <= static_cast<double>(img_a.rows - 1) &&
               c <= static_cast<double>(img_a.cols - 1);
    };
    if (!in_bounds(p.r0, p.c0) || !in_bounds(p.r1, p.c1))
        throw ValidationError("edge_sharpness: profile endpoints out of bounds");
    const double ga = detail::max_profile_gradient(img_a, p);
    if (ga == 0.0) throw ValidationError("edge_sharpness: degenerate profile (zero gradient in A)");
    return detail::max_profile_gradient(img_b, p) / ga;
}

}  // namespace mrtk
