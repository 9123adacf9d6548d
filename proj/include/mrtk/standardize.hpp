#pragma once

#include <algorithm>

#include "mrtk/core.hpp"

namespace mrtk {

// DICOM-tag stand-in carried in the MRV1 header under meta.slice_meta.
struct SliceMeta {
    std::string phase_encode_direction = "column";  // "row" | "column"
    double displayed_fov_fraction_rows = 1.0;
    double displayed_fov_fraction_cols = 1.0;
    int pulse_dim = 2;
};

inline json slice_meta_to_json(const SliceMeta& m) {
    return json{{"phase_encode_direction", m.phase_encode_direction},
                {"displayed_fov_fraction_rows", m.displayed_fov_fraction_rows},
                {"displayed_fov_fraction_cols", m.displayed_fov_fraction_cols},
                {"pulse_dim", m.pulse_dim}};
}

inline SliceMeta slice_meta_from_json(const json& j) {
    SliceMeta m;
    m.phase_encode_direction = j.value("phase_encode_direction", "column");
    m.displayed_fov_fraction_rows = j.value("displayed_fov_fraction_rows", 1.0);
    m.displayed_fov_fraction_cols = j.value("displayed_fov_fraction_cols", 1.0);
    m.pulse_dim = j.value("pulse_dim", 2);
    if (m.phase_encode_direction != "row" && m.phase_encode_direction != "column")
        throw ValidationError("slice_meta: phase_encode_direction must be row or column");
    return m;
}

// Everything needed to reverse the standardization except the interpolation.
struct StandardizeRecord {
    bool transposed = false;
    std::size_t orig_rows = 0, orig_cols = 0;   // after transpose, before crop
    std::size_t crop_r0 = 0, crop_r1 = 0;       // retained row range [r0, r1)
    std::size_t crop_c0 = 0, crop_c1 = 0;       // retained col range [c0, c1)
    double interp_scale = 1.0;                   // target_cols / cropped cols
    std::size_t std_rows = 0, std_cols = 0;      // dims fed to the network
    double norm_offset = 0.0, norm_scale = 1.0;  // img' = (img - offset) / scale
    double pad_value = 0.0;                      // border level restored on re-pad
    double crop_threshold = 0.0;                 // absolute band tolerance used for the crop
};

namespace detail {

inline Image2D transpose2d(const Image2D& img) {
    Image2D out(img.cols, img.rows);
    for (std::size_t r = 0; r < img.rows; ++r)
        for (std::size_t c = 0; c < img.cols; ++c) out.at(c, r) = img.at(r, c);
    return out;
}

inline double percentile(std::vector<double> v, double p) {
    std::sort(v.begin(), v.end());
    const double pos = p * static_cast<double>(v.size() - 1);
    const std::size_t lo = static_cast<std::size_t>(pos);
    const std::size_t hi = std::min(lo + 1, v.size() - 1);
    const double t = pos - static_cast<double>(lo);
    return v[lo] + (v[hi] - v[lo]) * t;
}

inline double lanczos3(double x) {
    constexpr double a = 3.0;
    if (x == 0.0) return 1.0;
    if (std::abs(x) >= a) return 0.0;
    const double px = std::numbers::pi * x;
    return a * std::sin(px) * std::sin(px / a) / (px * px);
}

// Separable 1D Lanczos-3 pass with edge clamping and kernel-sum normalization,
// so a constant signal maps to the same constant (partition of unity at edges).
inline std::vector<double> lanczos_pass(const std::vector<double>& src, std::size_t n_src,
                                        std::size_t n_dst) {
    std::vector<double> dst(n_dst);
    const double scale = static_cast<double>(n_src) / static_cast<double>(n_dst);
    const double support = scale > 1.0 ? 3.0 * scale : 3.0;
    const double kscale = scale > 1.0 ? 1.0 / scale : 1.0;  // widen kernel when shrinking
    for (std::size_t i = 0; i < n_dst; ++i) {
        const double center = (static_cast<double>(i) + 0.5) * scale - 0.5;
        const std::ptrdiff_t lo = static_cast<std::ptrdiff_t>(std::ceil(center - support));
        const std::ptrdiff_t hi = static_cast<std::ptrdiff_t>(std::floor(center + support));
        double acc = 0.0, wsum = 0.0;
        for (std::ptrdiff_t j = lo; j <= hi; ++j) {
            const double w = lanczos3((static_cast<double>(j) - center) * kscale);
            if (w == 0.0) continue;
            const std::ptrdiff_t jc =
                std::clamp<std::ptrdiff_t>(j, 0, static_cast<std::ptrdiff_t>(n_src) - 1);
            acc += w * src[static_cast<std::size_t>(jc)];
            wsum += w;
        }
        dst[i] = acc / wsum;
    }
    return dst;
}

}  // namespace detail

// Separable Lanczos (a=3) resize; a linear operator in the pixel values.
inline Image2D lanczos_resize2d(const Image2D& img, std::size_t new_rows, std::size_t new_cols) {
    if (new_rows < 2 || new_cols < 2) throw ValidationError("lanczos_resize: target must be >= 2");
    // columns pass
    Image2D tmp(img.rows, new_cols);
    std::vector<double> line(img.cols);
    for (std::size_t r = 0; r < img.rows; ++r) {
        for (std::size_t c = 0; c < img.cols; ++c) line[c] = img.at(r, c);
        const auto out = detail::lanczos_pass(line, img.cols, new_cols);
        for (std::size_t c = 0; c < new_cols; ++c) tmp.at(r, c) = out[c];
    }
    // rows pass
    Image2D dst(new_rows, new_cols);
    std::vector<double> col(img.rows);
    for (std::size_t c = 0; c < new_cols; ++c) {
        for (std::size_t r = 0; r < img.rows; ++r) col[r] = tmp.at(r, c);
        const auto out = detail::lanczos_pass(col, img.rows, new_rows);
        for (std::size_t r = 0; r < new_rows; ++r) dst.at(r, c) = out[r];
    }
    return dst;
}

// Column-count resize preserving aspect ratio.
inline Image2D lanczos_resize(const Image2D& img, std::size_t target_cols) {
    const double s = static_cast<double>(target_cols) / static_cast<double>(img.cols);
    const std::size_t new_rows =
        std::max<std::size_t>(2, static_cast<std::size_t>(std::llround(s * static_cast<double>(img.rows))));
    return lanczos_resize2d(img, new_rows, target_cols);
}

// Standardization: transpose to align rows with the phase-encode direction,
// crop border bands sitting at the minimum intensity (zero padding after any
// affine rescale), Lanczos resample to target_cols, robust p1/p99 affine
// normalization to [0,1]. Invariant to a*x+b for a > 0 by construction.
inline std::pair<Image2D, StandardizeRecord> standardize(const Image2D& img_in, const SliceMeta& meta,
                                                         std::size_t target_cols) {
    if (target_cols < 32) throw ValidationError("standardize: target_cols must be >= 32");
    StandardizeRecord rec;
    Image2D img = img_in;
    if (meta.phase_encode_direction == "column") {
        img = detail::transpose2d(img);
        rec.transposed = true;
    }
    rec.orig_rows = img.rows;
    rec.orig_cols = img.cols;

    const auto [mn_it, mx_it] = std::minmax_element(img.v.begin(), img.v.end());
    const double mn = *mn_it, mx = *mx_it;
    if (mx <= mn) throw ValidationError("standardize: constant slice, normalization undefined");
    // Border bands sit within one quantization code of the minimum; measuring the
    // tolerance from the per-slice min keeps the crop invariant under a*x+b.
    const double band_tol = (mx - mn) / 4095.0;
    rec.crop_threshold = band_tol;

    auto row_is_border = [&](std::size_t r) {
        for (std::size_t c = 0; c < img.cols; ++c)
            if (img.at(r, c) > mn + band_tol) return false;
        return true;
    };
    auto col_is_border = [&](std::size_t c) {
        for (std::size_t r = 0; r < img.rows; ++r)
            if (img.at(r, c) > mn + band_tol) return false;
        return true;
    };
    rec.crop_r0 = 0;
    rec.crop_r1 = img.rows;
    rec.crop_c0 = 0;
    rec.crop_c1 = img.cols;
    while (rec.crop_r0 + 1 < rec.crop_r1 && row_is_border(rec.crop_r0)) ++rec.crop_r0;
    while (rec.crop_r1 > rec.crop_r0 + 1 && row_is_border(rec.crop_r1 - 1)) --rec.crop_r1;
    while (rec.crop_c0 + 1 < rec.crop_c1 && col_is_border(rec.crop_c0)) ++rec.crop_c0;
    while (rec.crop_c1 > rec.crop_c0 + 1 && col_is_border(rec.crop_c1 - 1)) --rec.crop_c1;

    Image2D cropped(rec.crop_r1 - rec.crop_r0, rec.crop_c1 - rec.crop_c0);
    for (std::size_t r = 0; r < cropped.rows; ++r)
        for (std::size_t c = 0; c < cropped.cols; ++c)
            cropped.at(r, c) = img.at(rec.crop_r0 + r, rec.crop_c0 + c);

    rec.interp_scale = static_cast<double>(target_cols) / static_cast<double>(cropped.cols);
    Image2D resized = cropped.cols == target_cols ? cropped : lanczos_resize(cropped, target_cols);

    const double p1 = detail::percentile(resized.v, 0.01);
    const double p99 = detail::percentile(resized.v, 0.99);
    rec.norm_offset = p1;
    rec.norm_scale = p99 > p1 ? p99 - p1 : 1.0;
    for (auto& v : resized.v) v = (v - rec.norm_offset) / rec.norm_scale;
    rec.pad_value = (mn - rec.norm_offset) / rec.norm_scale;  // border level, normalized units
    rec.std_rows = resized.rows;
    rec.std_cols = resized.cols;
    return {std::move(resized), rec};
}

// Apply a previously computed record to another slice (shared geometry and
// normalization across a stack of adjacent slices).
inline Image2D standardize_with_record(const Image2D& img_in, const StandardizeRecord& rec) {
    Image2D img = rec.transposed ? detail::transpose2d(img_in) : img_in;
    if (img.rows != rec.orig_rows || img.cols != rec.orig_cols)
        throw ValidationError("standardize_with_record: shape mismatch");
    Image2D cropped(rec.crop_r1 - rec.crop_r0, rec.crop_c1 - rec.crop_c0);
    for (std::size_t r = 0; r < cropped.rows; ++r)
        for (std::size_t c = 0; c < cropped.cols; ++c)
            cropped.at(r, c) = img.at(rec.crop_r0 + r, rec.crop_c0 + c);
    Image2D resized = cropped.cols == rec.std_cols && cropped.rows == rec.std_rows
                          ? cropped
                          : lanczos_resize2d(cropped, rec.std_rows, rec.std_cols);
    for (auto& v : resized.v) v = (v - rec.norm_offset) / rec.norm_scale;
    return resized;
}

// Reverse everything except the interpolation: the output stays at the
// interpolated in-plane resolution, cropped bands are re-padded at scaled
// extents with the recorded border level.
inline Image2D destandardize(const Image2D& out, const StandardizeRecord& rec) {
    if (out.rows != rec.std_rows || out.cols != rec.std_cols)
        throw ValidationError("destandardize: output dims do not match record");
    Image2D img = out;
    for (auto& v : img.v) v = v * rec.norm_scale + rec.norm_offset;
    const double border = rec.pad_value * rec.norm_scale + rec.norm_offset;

    auto scaled = [&](std::size_t n) {
        return static_cast<std::size_t>(std::llround(rec.interp_scale * static_cast<double>(n)));
    };
    const std::size_t pad_r0 = scaled(rec.crop_r0);
    const std::size_t pad_r1 = scaled(rec.orig_rows - rec.crop_r1);
    const std::size_t pad_c0 = scaled(rec.crop_c0);
    const std::size_t pad_c1 = scaled(rec.orig_cols - rec.crop_c1);

    Image2D padded(img.rows + pad_r0 + pad_r1, img.cols + pad_c0 + pad_c1);
    std::fill(padded.v.begin(), padded.v.end(), border);
    for (std::size_t r = 0; r < img.rows; ++r)
        for (std::size_t c = 0; c < img.cols; ++c) padded.at(pad_r0 + r, pad_c0 + c) = img.at(r, c);

    return rec.transposed ? detail::transpose2d(padded) : padded;
}

}  // namespace mrtk
