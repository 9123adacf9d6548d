#pragma once

#include <functional>
#include <optional>

#include <Eigen/Dense>
#include <Eigen/SVD>

#include "mrtk/core.hpp"
#include "mrtk/degrade.hpp"
#include "mrtk/fft.hpp"
#include "mrtk/phantom.hpp"

namespace mrtk {

// Radial polynomial stand-in for gradient-nonlinearity distortion:
// r' = r * (1 + c2*r^2 + c4*r^4) in fractional coordinates.
struct WarpSpec {
    double c2 = 0.0;
    double c4 = 0.0;
    bool jacobian_correction = false;
};

struct SenseSpec {
    Axis axis = Axis::phase;
    int R = 2;
};

struct PocsSpec {
    int iters = 10;
    double tol = 1e-6;
};

enum class PfMode { none, zero_fill, pocs };
enum class CombineMode { rss, sens_weighted };
enum class Component { magnitude = 0, phase = 1, real_part = 2, imaginary = 3 };

struct ReconPlan {
    std::optional<WindowSpec> window;
    std::optional<Shape3> zpad_dims;
    std::optional<SenseSpec> sense;
    PfMode pf = PfMode::none;
    PocsSpec pocs;
    CombineMode combine = CombineMode::rss;
    bool normalize_intensity = false;
    std::optional<WarpSpec> warp;
    Component component = Component::magnitude;
    int quantize_bits = 0;  // 0 = off, else 12 or 16

    // A plan whose every step is linear in the k-space data (up to a fixed
    // scale), which is what the closed-form noise-reduction factor assumes.
    bool is_linear_path() const {
        return !sense && pf != PfMode::pocs && !normalize_intensity && !warp &&
               quantize_bits == 0;
    }
};

// --- partial Fourier -------------------------------------------------------

namespace detail {

inline std::vector<std::uint8_t> lines_retained(const SamplingMask& m, Axis axis) {
    const int a = static_cast<int>(axis);
    std::vector<std::uint8_t> line(m.shape.dim(a), 0);
    for (std::size_t x = 0; x < m.shape.nx; ++x)
        for (std::size_t y = 0; y < m.shape.ny; ++y)
            for (std::size_t z = 0; z < m.shape.nz; ++z)
                if (m.at(x, y, z)) line[a == 0 ? x : (a == 1 ? y : z)] = 1;
    return line;
}

// The axis with the largest asymmetric high-index truncation.
inline Axis pf_axis_of(const SamplingMask& m) {
    Axis best = Axis::phase;
    std::ptrdiff_t best_asym = -1;
    for (int a = 0; a < 3; ++a) {
        const auto line = lines_retained(m, static_cast<Axis>(a));
        const std::ptrdiff_t n = static_cast<std::ptrdiff_t>(line.size());
        std::ptrdiff_t lo = n, hi = -1;
        for (std::ptrdiff_t i = 0; i < n; ++i)
            if (line[i]) { lo = std::min(lo, i); hi = std::max(hi, i); }
        const std::ptrdiff_t c = n / 2;
        const std::ptrdiff_t asym = (c - lo) - (hi - c);  // > 0: trailing block dropped
        if (asym > best_asym) { best_asym = asym; best = static_cast<Axis>(a); }
    }
    return best;
}

}  // namespace detail

// Low-resolution phase estimate from the central symmetric band along the
// partial-Fourier axis, with a Hann taper across the band.
inline CoilImages pocs_phase_estimate(const KSpaceVolume& ksp, const SamplingMask& mask, Axis axis) {
    const int a = static_cast<int>(axis);
    const auto line = detail::lines_retained(mask, axis);
    const std::ptrdiff_t n = static_cast<std::ptrdiff_t>(line.size());
    const std::ptrdiff_t c = n / 2;
    std::ptrdiff_t lo = n, hi = -1;
    for (std::ptrdiff_t i = 0; i < n; ++i)
        if (line[i]) { lo = std::min(lo, i); hi = std::max(hi, i); }
    // symmetric band: both i and its mirror 2c - i retained
    const std::ptrdiff_t blo = std::max(lo, 2 * c - hi);
    const std::ptrdiff_t bhi = std::min(hi, 2 * c - lo);
    if (blo > bhi) throw ValidationError("pocs: mask has no symmetric central band");
    std::vector<double> w(line.size(), 0.0);
    const double width = static_cast<double>(bhi - blo) + 1.0;
    for (std::ptrdiff_t i = blo; i <= bhi; ++i)
        w[i] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * (static_cast<double>(i - blo) + 0.5) / width);
    KSpaceVolume low = ksp;
    for (std::size_t co = 0; co < ksp.ncoils; ++co)
        for (std::size_t x = 0; x < ksp.shape.nx; ++x)
            for (std::size_t y = 0; y < ksp.shape.ny; ++y)
                for (std::size_t z = 0; z < ksp.shape.nz; ++z)
                    low.at(co, x, y, z) *= w[a == 0 ? x : (a == 1 ? y : z)];
    return ifft_centered(low);
}

// POCS partial-Fourier recovery: alternate enforcing the measured samples in
// k-space and the low-resolution phase estimate in image space.
inline CoilImages pocs_partial_fourier(const KSpaceVolume& ksp, const SamplingMask& mask, int iters,
                                       double tol) {
    if (iters < 1) throw ValidationError("pocs: iters must be >= 1");
    if (!(mask.shape == ksp.shape)) throw ValidationError("pocs: mask dim mismatch");
    const bool has_pf = std::find(mask.kind_trace.begin(), mask.kind_trace.end(), "pf") !=
                        mask.kind_trace.end();
    if (!has_pf && !mask.is_full())
        throw ValidationError("pocs: mask has no partial-Fourier component");

    const Axis axis = detail::pf_axis_of(mask);
    const CoilImages phase_ref = pocs_phase_estimate(ksp, mask, axis);

    CoilImages img = ifft_centered(ksp);
    const std::size_t total = img.data.size();
    for (int it = 0; it < iters; ++it) {
        // phase projection: keep the component aligned with the reference phase
        CoilImages proj = img;
        for (std::size_t i = 0; i < total; ++i) {
            const double mag = std::abs(phase_ref.data[i]);
            const cdouble ph = mag > 0.0 ? phase_ref.data[i] / mag : cdouble(1.0, 0.0);
            proj.data[i] = ph * (img.data[i] * std::conj(ph)).real();
        }
        // data consistency
        KSpaceVolume k = fft_centered(proj);
        const std::size_t vox = ksp.shape.total();
        for (std::size_t c = 0; c < ksp.ncoils; ++c)
            for (std::size_t v = 0; v < vox; ++v)
                if (mask.keep[v]) k.coil(c)[v] = ksp.coil(c)[v];
        CoilImages next = ifft_centered(k);

        double num = 0.0, den = 0.0;
        for (std::size_t i = 0; i < total; ++i) {
            num += std::norm(next.data[i] - img.data[i]);
            den += std::norm(img.data[i]);
        }
        img = std::move(next);
        if (den > 0.0 && std::sqrt(num / den) < tol) break;
    }
    return img;
}

// --- SENSE ------------------------------------------------------------------

namespace detail {
// Impulse response of k-space comb masking along one axis, computed through the
// toolkit's own transform so the unfolding weights match its conventions exactly.
inline std::vector<cdouble> comb_response(std::size_t n, int R) {
    ImageVolume delta({n, 1, 1});
    delta.at(n / 2, 0, 0) = 1.0;
    KSpaceVolume k = fft_centered(delta);
    const std::size_t c = n / 2;
    for (std::size_t i = 0; i < n; ++i)
        if (i % R != c % R) k.at(0, i, 0, 0) = 0.0;
    CoilImages resp = ifft_centered(k);
    std::vector<cdouble> h(n);
    for (std::size_t d = 0; d < n; ++d) h[d] = resp.at(0, (c + d) % n, 0, 0);
    return h;
}
}  // namespace detail

// Per aliased-pixel-set least-squares unfolding of uniform undersampling.
// Exact on noiseless data with well-conditioned sensitivities.
inline ImageVolume sense_unfold(const CoilImages& aliased, const CoilImages& sens, Axis axis, int R) {
    if (R < 1) throw ValidationError("sense_unfold: R must be >= 1");
    if (!(aliased.shape == sens.shape) || aliased.ncoils != sens.ncoils)
        throw ValidationError("sense_unfold: sensitivity dims do not match aliased images");
    const int a = static_cast<int>(axis);
    const std::size_t n = aliased.shape.dim(a);
    if (n % R != 0)
        throw ValidationError("sense_unfold: axis extent " + std::to_string(n) +
                              " not divisible by R=" + std::to_string(R));
    const std::size_t L = n / R;
    const std::size_t C = aliased.ncoils;
    const auto h = detail::comb_response(n, R);

    ImageVolume out(aliased.shape);
    out.spacing = aliased.spacing;

    auto index_on_axis = [&](std::size_t i, std::size_t j, std::size_t k, std::size_t pos) {
        // (i, j) are the two off-axis coordinates in ascending dim order; pos on `axis`
        std::size_t xyz[3];
        int t = 0;
        for (int d = 0; d < 3; ++d) {
            if (d == a) xyz[d] = pos;
            else xyz[d] = (t++ == 0) ? i : j;
        }
        (void)k;
        return std::array<std::size_t, 3>{xyz[0], xyz[1], xyz[2]};
    };

    const std::size_t n0 = aliased.shape.dim(a == 0 ? 1 : 0);
    const std::size_t n1 = aliased.shape.dim(a == 2 ? 1 : 2);

    Eigen::MatrixXcd A(C * R, R);
    Eigen::VectorXcd y(C * R);
    for (std::size_t i = 0; i < n0; ++i)
        for (std::size_t j = 0; j < n1; ++j)
            for (std::size_t p0 = 0; p0 < L; ++p0) {
                for (std::size_t jj = 0; jj < static_cast<std::size_t>(R); ++jj) {
                    const std::size_t pj = p0 + jj * L;
                    const auto pj_xyz = index_on_axis(i, j, 0, pj);
                    for (std::size_t c = 0; c < C; ++c) {
                        y(static_cast<Eigen::Index>(c * R + jj)) =
                            aliased.at(c, pj_xyz[0], pj_xyz[1], pj_xyz[2]);
                        for (std::size_t r = 0; r < static_cast<std::size_t>(R); ++r) {
                            const std::size_t pr = p0 + r * L;
                            const auto pr_xyz = index_on_axis(i, j, 0, pr);
                            A(static_cast<Eigen::Index>(c * R + jj), static_cast<Eigen::Index>(r)) =
                                h[(pj + n - pr) % n] * sens.at(c, pr_xyz[0], pr_xyz[1], pr_xyz[2]);
                        }
                    }
                }
                Eigen::JacobiSVD<Eigen::MatrixXcd> svd(A, Eigen::ComputeThinU | Eigen::ComputeThinV);
                const double smax = svd.singularValues()(0);
                const double smin = svd.singularValues()(svd.singularValues().size() - 1);
                if (smin <= 0.0 || smax / smin > 1e8) {
                    const auto loc = index_on_axis(i, j, 0, p0);
                    throw NumericError("sense_unfold: singular system at voxel (" +
                                       std::to_string(loc[0]) + "," + std::to_string(loc[1]) + "," +
                                       std::to_string(loc[2]) + "), condition number " +
                                       std::to_string(smin > 0 ? smax / smin : 0.0));
                }
                Eigen::VectorXcd x = svd.solve(y);
                for (std::size_t r = 0; r < static_cast<std::size_t>(R); ++r) {
                    const auto pr_xyz = index_on_axis(i, j, 0, p0 + r * L);
                    out.at(pr_xyz[0], pr_xyz[1], pr_xyz[2]) = x(static_cast<Eigen::Index>(r));
                }
            }
    return out;
}

// --- channel combination and intensity --------------------------------------

inline ImageVolume combine_channels(const CoilImages& imgs, CombineMode mode,
                                    const CoilImages* sens = nullptr) {
    ImageVolume out(imgs.shape);
    out.spacing = imgs.spacing;
    const std::size_t vox = imgs.shape.total();
    if (mode == CombineMode::rss) {
        for (std::size_t v = 0; v < vox; ++v) {
            double s = 0.0;
            for (std::size_t c = 0; c < imgs.ncoils; ++c) s += std::norm(imgs.data[c * vox + v]);
            out.data[v] = std::sqrt(s);  // real, zero phase
        }
        return out;
    }
    if (!sens) throw ValidationError("combine_channels: sens_weighted requires sensitivities");
    if (!(sens->shape == imgs.shape) || sens->ncoils != imgs.ncoils)
        throw ValidationError("combine_channels: sensitivity dims mismatch");
    for (std::size_t v = 0; v < vox; ++v) {
        cdouble num(0.0, 0.0);
        double den = 0.0;
        for (std::size_t c = 0; c < imgs.ncoils; ++c) {
            num += std::conj(sens->data[c * vox + v]) * imgs.data[c * vox + v];
            den += std::norm(sens->data[c * vox + v]);
        }
        out.data[v] = den > 0.0 ? num / den : cdouble(0.0, 0.0);
    }
    return out;
}

// Heavily blurred RSS of the sensitivities, the bias field of the surface-coil
// intensity normalization step.
inline RealVolume make_bias_field(const CoilImages& sens, double blur_sigma_vox = 8.0) {
    ImageVolume rss(sens.shape);
    const std::size_t vox = sens.shape.total();
    for (std::size_t v = 0; v < vox; ++v) {
        double s = 0.0;
        for (std::size_t c = 0; c < sens.ncoils; ++c) s += std::norm(sens.data[c * vox + v]);
        rss.data[v] = std::sqrt(s);
    }
    detail::gaussian_blur_inplace(rss, blur_sigma_vox);
    RealVolume bias(sens.shape);
    for (std::size_t v = 0; v < vox; ++v) bias.data[v] = std::max(0.0, rss.data[v].real());
    return bias;
}

inline ImageVolume normalize_intensity(const ImageVolume& img, const RealVolume& bias) {
    if (!(bias.shape == img.shape)) throw ValidationError("normalize_intensity: bias dim mismatch");
    ImageVolume out = img;
    for (std::size_t v = 0; v < img.data.size(); ++v)
        out.data[v] = bias.data[v] > 0.0 ? img.data[v] / bias.data[v] : cdouble(0.0, 0.0);
    return out;
}

// --- distortion warp ---------------------------------------------------------

enum class WarpDirection { apply, correct };

namespace detail {

inline double warp_radius(const WarpSpec& w, double r) {
    return r * (1.0 + w.c2 * r * r + w.c4 * r * r * r * r);
}
inline double warp_radius_deriv(const WarpSpec& w, double r) {
    return 1.0 + 3.0 * w.c2 * r * r + 5.0 * w.c4 * r * r * r * r;
}

inline void check_warp_bijective(const WarpSpec& w) {
    const double rmax = std::sqrt(3.0);
    for (int i = 0; i <= 256; ++i) {
        const double r = rmax * static_cast<double>(i) / 256.0;
        if (warp_radius_deriv(w, r) <= 0.0)
            throw ValidationError("warp: non-bijective coefficients (r' not monotone at r=" +
                                  std::to_string(r) + ")");
    }
}

inline double warp_radius_inverse(const WarpSpec& w, double rp) {
    double r = rp;  // Newton on monotone r'(r)
    for (int it = 0; it < 30; ++it) {
        const double f = warp_radius(w, r) - rp;
        r -= f / warp_radius_deriv(w, r);
        if (std::abs(f) < 1e-14) break;
    }
    return std::max(0.0, r);
}

inline cdouble trilinear_sample(const ImageVolume& img, double fx, double fy, double fz) {
    // fx,fy,fz are fractional coords in [-1,1); clamp to the edge voxel centers
    auto to_index = [](double f, std::size_t n) {
        return std::clamp((f + 1.0) * static_cast<double>(n) / 2.0 - 0.5, 0.0,
                          static_cast<double>(n - 1));
    };
    const double xi = to_index(fx, img.shape.nx);
    const double yi = to_index(fy, img.shape.ny);
    const double zi = to_index(fz, img.shape.nz);
    const std::size_t x0 = static_cast<std::size_t>(xi), y0 = static_cast<std::size_t>(yi),
                      z0 = static_cast<std::size_t>(zi);
    const std::size_t x1 = std::min(x0 + 1, img.shape.nx - 1);
    const std::size_t y1 = std::min(y0 + 1, img.shape.ny - 1);
    const std::size_t z1 = std::min(z0 + 1, img.shape.nz - 1);
    const double tx = xi - static_cast<double>(x0), ty = yi - static_cast<double>(y0),
                 tz = zi - static_cast<double>(z0);
    auto lerp = [](cdouble a, cdouble b, double t) { return a + (b - a) * t; };
    const cdouble c00 = lerp(img.at(x0, y0, z0), img.at(x1, y0, z0), tx);
    const cdouble c10 = lerp(img.at(x0, y1, z0), img.at(x1, y1, z0), tx);
    const cdouble c01 = lerp(img.at(x0, y0, z1), img.at(x1, y0, z1), tx);
    const cdouble c11 = lerp(img.at(x0, y1, z1), img.at(x1, y1, z1), tx);
    return lerp(lerp(c00, c10, ty), lerp(c01, c11, ty), tz);
}

}  // namespace detail

// Resample through the radial remap; correct(apply(x)) ~= x away from the boundary.
inline ImageVolume warp_distortion(const ImageVolume& img, const WarpSpec& w, WarpDirection dir) {
    detail::check_warp_bijective(w);
    if (w.c2 == 0.0 && w.c4 == 0.0) return img;
    ImageVolume out(img.shape);
    out.spacing = img.spacing;
    out.meta = img.meta;
    for (std::size_t x = 0; x < img.shape.nx; ++x) {
        const double fx = detail::frac_coord(x, img.shape.nx);
        for (std::size_t y = 0; y < img.shape.ny; ++y) {
            const double fy = detail::frac_coord(y, img.shape.ny);
            for (std::size_t z = 0; z < img.shape.nz; ++z) {
                const double fz = detail::frac_coord(z, img.shape.nz);
                const double r = std::sqrt(fx * fx + fy * fy + fz * fz);
                double src_r;
                if (dir == WarpDirection::apply)
                    src_r = detail::warp_radius(w, r);
                else
                    src_r = detail::warp_radius_inverse(w, r);
                const double scale = r > 0.0 ? src_r / r : 1.0;
                cdouble val = detail::trilinear_sample(img, fx * scale, fy * scale, fz * scale);
                if (w.jacobian_correction && src_r > 0.0) {
                    const double jac = detail::warp_radius_deriv(w, dir == WarpDirection::apply ? r : src_r) *
                                       (dir == WarpDirection::apply
                                            ? (r > 0 ? src_r / r : 1.0) * (r > 0 ? src_r / r : 1.0)
                                            : (src_r > 0 ? r / src_r : 1.0) * (src_r > 0 ? r / src_r : 1.0));
                    val *= dir == WarpDirection::apply ? jac : (jac > 0.0 ? 1.0 / jac : 1.0);
                }
                out.at(x, y, z) = val;
            }
        }
    }
    return out;
}

// --- component extraction and quantization ----------------------------------

inline RealVolume extract_component(const ImageVolume& img, Component comp) {
    RealVolume out(img.shape);
    out.spacing = img.spacing;
    out.meta = img.meta;
    for (std::size_t v = 0; v < img.data.size(); ++v) {
        switch (comp) {
            case Component::magnitude: out.data[v] = std::abs(img.data[v]); break;
            case Component::phase: out.data[v] = std::arg(img.data[v]); break;
            case Component::real_part: out.data[v] = img.data[v].real(); break;
            case Component::imaginary: out.data[v] = img.data[v].imag(); break;
        }
    }
    return out;
}

struct Quantized {
    Shape3 shape;
    std::vector<std::uint16_t> codes;
    double offset = 0.0;
    double scale = 0.0;
    int bits = 16;
};

// Affine map of [min, max] onto [0, 2^bits - 1], round-half-even.
inline Quantized quantize(const RealVolume& img, int bits) {
    if (bits != 12 && bits != 16) throw ValidationError("quantize: bits must be 12 or 16");
    const auto [mn_it, mx_it] = std::minmax_element(img.data.begin(), img.data.end());
    const double mn = *mn_it, mx = *mx_it;
    const double levels = static_cast<double>((1u << bits) - 1u);
    Quantized q;
    q.shape = img.shape;
    q.bits = bits;
    q.offset = mn;
    q.scale = (mx - mn) / levels;  // 0 for a constant image: all codes 0
    q.codes.resize(img.data.size());
    if (q.scale == 0.0) return q;
    for (std::size_t v = 0; v < img.data.size(); ++v)
        q.codes[v] = static_cast<std::uint16_t>(std::nearbyint((img.data[v] - mn) / q.scale));
    return q;
}

inline RealVolume dequantize(const Quantized& q) {
    RealVolume out(q.shape);
    for (std::size_t v = 0; v < q.codes.size(); ++v)
        out.data[v] = q.offset + static_cast<double>(q.codes[v]) * q.scale;
    return out;
}

// --- pipeline ----------------------------------------------------------------

inline void validate_plan(const ReconPlan& plan, const SamplingMask& mask, const KSpaceVolume& ksp) {
    auto has_kind = [&](const char* k) {
        return std::find(mask.kind_trace.begin(), mask.kind_trace.end(), k) != mask.kind_trace.end();
    };
    if (!(mask.shape == ksp.shape)) throw ValidationError("recon: mask dims do not match k-space");
    if (plan.window && (plan.window->alpha < 0.0 || plan.window->alpha > 1.0))
        throw ValidationError("recon: window alpha out of [0,1]");
    if (plan.sense) {
        if (!has_kind("uniform"))
            throw ValidationError("recon: SENSE requires a uniform undersampling mask");
        if (has_kind("random"))
            throw ValidationError("recon: SENSE is incompatible with a random mask component");
        if (plan.pf == PfMode::pocs)
            throw ValidationError("recon: SENSE cannot be combined with POCS partial Fourier");
        const std::size_t n = ksp.shape.dim(static_cast<int>(plan.sense->axis));
        if (plan.sense->R < 1 || n % static_cast<std::size_t>(plan.sense->R) != 0)
            throw ValidationError("recon: SENSE axis extent must be divisible by R");
        const auto line = detail::lines_retained(mask, plan.sense->axis);
        const std::size_t c = n / 2;
        for (std::size_t i = 0; i < n; ++i) {
            const bool comb = (i % static_cast<std::size_t>(plan.sense->R)) ==
                              (c % static_cast<std::size_t>(plan.sense->R));
            if (line[i] && !comb)
                throw ValidationError("recon: mask is not a pure R=" + std::to_string(plan.sense->R) +
                                      " comb along the SENSE axis (ACS blocks are not supported here)");
        }
        if (plan.zpad_dims && !(*plan.zpad_dims == ksp.shape))
            throw ValidationError("recon: zero-padding cannot be combined with SENSE");
    }
    if (plan.pf == PfMode::pocs) {
        if (!has_kind("pf"))
            throw ValidationError("recon: POCS requires a partial-Fourier mask component");
        if (plan.pocs.iters < 1) throw ValidationError("recon: POCS iters must be >= 1");
    }
    if (plan.quantize_bits != 0 && plan.quantize_bits != 12 && plan.quantize_bits != 16)
        throw ValidationError("recon: quantize_bits must be 0, 12 or 16");
    if (plan.warp) detail::check_warp_bijective(*plan.warp);
}

// Resample smooth sensitivity maps onto new dims via Fourier pad/crop.
inline CoilImages resample_sens(const CoilImages& sens, Shape3 target) {
    if (target == sens.shape) return sens;
    KSpaceVolume k = fft_centered(sens);
    k = zero_pad_or_crop(k, target);
    CoilImages out = ifft_centered(k);
    const double scale = std::sqrt(static_cast<double>(target.total()) /
                                   static_cast<double>(sens.shape.total()));
    for (auto& v : out.data) v *= scale;
    return out;
}

struct StageRecorder {
    std::vector<std::pair<std::string, KSpaceVolume>> kspaces;
    std::vector<std::pair<std::string, ImageVolume>> images;
};

// Fixed step order: window -> zero-pad -> (POCS | zero-fill) -> (SENSE | combine)
// -> intensity normalization -> warp(correct) -> component extraction ->
// quantize/dequantize. The same plan applied to undegraded raw k-space defines
// the target image of a training pair.
inline RealVolume run_recon_pipeline(const KSpaceVolume& ksp, const SamplingMask& mask,
                                     const ReconPlan& plan, const CoilImages& sens,
                                     StageRecorder* stages = nullptr) {
    validate_plan(plan, mask, ksp);

    KSpaceVolume k = plan.window ? apply_window(ksp, *plan.window) : ksp;
    SamplingMask m = mask;
    if (plan.zpad_dims && !(*plan.zpad_dims == k.shape)) {
        k = zero_pad_or_crop(k, *plan.zpad_dims);
        SamplingMask padded(*plan.zpad_dims, 0);
        padded.kind_trace = m.kind_trace;
        KSpaceVolume mk(m.shape, 1);
        for (std::size_t v = 0; v < m.keep.size(); ++v) mk.data[v] = m.keep[v] ? 1.0 : 0.0;
        KSpaceVolume mp = zero_pad_or_crop(mk, *plan.zpad_dims);
        for (std::size_t v = 0; v < padded.keep.size(); ++v)
            padded.keep[v] = mp.data[v].real() > 0.5 ? 1 : 0;
        m = std::move(padded);
    }
    if (stages) stages->kspaces.emplace_back("kspace_preprocessed", k);

    CoilImages coils = plan.pf == PfMode::pocs ? pocs_partial_fourier(k, m, plan.pocs.iters, plan.pocs.tol)
                                               : ifft_centered(k);

    CoilImages sens_r = resample_sens(sens, k.shape);
    ImageVolume img = plan.sense
                          ? sense_unfold(coils, sens_r, plan.sense->axis, plan.sense->R)
                          : combine_channels(coils, plan.combine,
                                             plan.combine == CombineMode::sens_weighted ? &sens_r : nullptr);
    if (stages) stages->images.emplace_back("combined", img);

    if (plan.normalize_intensity) img = normalize_intensity(img, make_bias_field(sens_r));
    if (plan.warp) img = warp_distortion(img, *plan.warp, WarpDirection::correct);
    if (stages) stages->images.emplace_back("pre_extract", img);

    RealVolume out = extract_component(img, plan.component);
    if (plan.quantize_bits != 0) out = dequantize(quantize(out, plan.quantize_bits));
    out.spacing = img.spacing;
    return out;
}

}  // namespace mrtk
