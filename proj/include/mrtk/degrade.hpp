#pragma once

#include <algorithm>
#include <optional>

#include "mrtk/core.hpp"
#include "mrtk/rng.hpp"

namespace mrtk {

// Binary retention pattern over [nx, ny, nz], broadcast over coils.
// Every mask produced by a builder retains the DC sample (index n/2 per axis).
struct SamplingMask {
    Shape3 shape;
    std::vector<std::uint8_t> keep;
    std::vector<std::string> kind_trace;

    SamplingMask() = default;
    explicit SamplingMask(Shape3 s, std::uint8_t fill = 1)
        : shape(s), keep(s.total(), fill) {}

    std::uint8_t& at(std::size_t x, std::size_t y, std::size_t z) {
        return keep[(x * shape.ny + y) * shape.nz + z];
    }
    std::uint8_t at(std::size_t x, std::size_t y, std::size_t z) const {
        return keep[(x * shape.ny + y) * shape.nz + z];
    }
    std::size_t retained() const {
        std::size_t n = 0;
        for (auto k : keep) n += k;
        return n;
    }
    bool dc_retained() const { return at(shape.nx / 2, shape.ny / 2, shape.nz / 2) != 0; }
    bool is_full() const { return retained() == shape.total(); }
};

inline SamplingMask full_mask(Shape3 dims) { return SamplingMask(dims, 1); }

struct UniformParams {
    Axis axis = Axis::phase;
    int R = 2;
    int acs_lines = 0;  // fully sampled centered block (GRAPPA-style pattern)
};

struct RandomParams {
    Axis axis = Axis::phase;
    double accel = 2.0;
    double density_power = 2.0;
    std::uint64_t seed = 0;
};

struct DegradationPlan {
    double noise_add_ratio = 0.0;  // sigma_add = r * sigma0
    std::optional<UniformParams> uniform;
    std::optional<RandomParams> random;
    std::array<double, 3> kmax_fraction{1.0, 1.0, 1.0};
    bool elliptical = false;
    std::array<double, 3> pf_fraction{1.0, 1.0, 1.0};

    bool is_identity() const {
        return noise_add_ratio == 0.0 && !uniform && !random && !elliptical &&
               kmax_fraction == std::array<double, 3>{1.0, 1.0, 1.0} &&
               pf_fraction == std::array<double, 3>{1.0, 1.0, 1.0};
    }
};

namespace detail {
// Apply a per-line predicate along one axis.
template <typename Pred>
void mask_axis(SamplingMask& m, Axis axis, Pred pred) {
    const int a = static_cast<int>(axis);
    for (std::size_t x = 0; x < m.shape.nx; ++x)
        for (std::size_t y = 0; y < m.shape.ny; ++y)
            for (std::size_t z = 0; z < m.shape.nz; ++z) {
                const std::size_t i = a == 0 ? x : (a == 1 ? y : z);
                if (!pred(i)) m.at(x, y, z) = 0;
            }
}

inline void check_mask_nonempty(const SamplingMask& m, const std::string& kind) {
    if (m.retained() == 0) throw ValidationError(kind + " mask retains zero samples");
}
}  // namespace detail

// Every R-th line retained (aligned so DC stays retained) plus an optional
// centered fully-sampled ACS block.
inline SamplingMask build_uniform_mask(const UniformParams& p, Shape3 dims) {
    if (p.R < 1) throw ValidationError("uniform mask: R must be >= 1");
    if (p.axis == Axis::frequency)
        throw ValidationError("uniform mask: frequency axis allows only kmax/partial-Fourier");
    if (p.acs_lines < 0) throw ValidationError("uniform mask: acs_lines must be >= 0");
    const std::size_t n = dims.dim(static_cast<int>(p.axis));
    const std::size_t c = n / 2;
    const std::size_t acs_lo = c - std::min<std::size_t>(c, p.acs_lines / 2);
    const std::size_t acs_hi = std::min(n, acs_lo + p.acs_lines);
    SamplingMask m(dims);
    detail::mask_axis(m, p.axis, [&](std::size_t i) {
        if (i >= acs_lo && i < acs_hi) return true;
        return (i % p.R) == (c % p.R);
    });
    m.kind_trace.push_back("uniform");
    detail::check_mask_nonempty(m, "uniform");
    return m;
}

// Exact-count line draw without replacement, weighted by the center-weighted
// density 1/(1 + |k|^p), DC always retained. Hitting the line count exactly
// keeps the achieved acceleration within rounding of the request.
inline SamplingMask build_random_mask(const RandomParams& p, Shape3 dims) {
    if (p.accel < 1.0) throw ValidationError("random mask: accel must be >= 1");
    if (p.axis == Axis::frequency)
        throw ValidationError("random mask: frequency axis allows only kmax/partial-Fourier");
    const std::size_t n = dims.dim(static_cast<int>(p.axis));
    const std::size_t c = n / 2;
    const std::size_t m_count = std::max<std::size_t>(
        1, static_cast<std::size_t>(std::llround(static_cast<double>(n) / p.accel)));

    // Efraimidis-Spirakis keys: top (m_count - 1) lines besides DC.
    CounterRng rng(p.seed, 0x72616e64ULL);
    std::vector<std::pair<double, std::size_t>> keys;
    keys.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        if (i == c) continue;
        const double k = std::abs(static_cast<double>(i) - static_cast<double>(c)) /
                         (static_cast<double>(n) / 2.0);
        const double w = 1.0 / (1.0 + std::pow(k, p.density_power));
        double u = rng.uniform();
        while (u <= 0.0) u = rng.uniform();
        keys.emplace_back(std::pow(u, 1.0 / w), i);
    }
    std::sort(keys.begin(), keys.end(), [](const auto& a, const auto& b) {
        return a.first > b.first || (a.first == b.first && a.second < b.second);
    });

    std::vector<std::uint8_t> line(n, 0);
    line[c] = 1;
    for (std::size_t j = 0; j + 1 < m_count && j < keys.size(); ++j) line[keys[j].second] = 1;

    SamplingMask m(dims);
    detail::mask_axis(m, p.axis, [&](std::size_t i) { return line[i] != 0; });
    m.kind_trace.push_back("random");
    detail::check_mask_nonempty(m, "random");
    return m;
}

// Central fraction of lines along one axis.
inline SamplingMask build_kmax_mask(Axis axis, double fraction, Shape3 dims) {
    if (fraction <= 0.0 || fraction > 1.0)
        throw ValidationError("kmax mask: fraction must be in (0,1]");
    const std::size_t n = dims.dim(static_cast<int>(axis));
    const std::size_t c = n / 2;
    const std::size_t m_count =
        std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(fraction * n)));
    const std::size_t lo = c - std::min(c, m_count / 2);
    const std::size_t hi = std::min(n, lo + m_count);
    SamplingMask m(dims);
    detail::mask_axis(m, axis, [&](std::size_t i) { return i >= lo && i < hi; });
    m.kind_trace.push_back("kmax");
    detail::check_mask_nonempty(m, "kmax");
    return m;
}

// Retain (ky, kz) inside the centered ellipse inscribed in the phase-slice plane.
inline SamplingMask build_elliptical_mask(Shape3 dims) {
    SamplingMask m(dims);
    const double cy = static_cast<double>(dims.ny / 2);
    const double cz = static_cast<double>(dims.nz / 2);
    const double ry = static_cast<double>(dims.ny) / 2.0;
    const double rz = static_cast<double>(dims.nz) / 2.0;
    for (std::size_t x = 0; x < dims.nx; ++x)
        for (std::size_t y = 0; y < dims.ny; ++y)
            for (std::size_t z = 0; z < dims.nz; ++z) {
                const double ey = (static_cast<double>(y) - cy) / ry;
                const double ez = (static_cast<double>(z) - cz) / rz;
                if (ey * ey + ez * ez > 1.0) m.at(x, y, z) = 0;
            }
    m.kind_trace.push_back("elliptical");
    detail::check_mask_nonempty(m, "elliptical");
    return m;
}

// Retain lines from the low-index edge through fraction f; the trailing
// high-index asymmetric block is dropped.
inline SamplingMask build_partial_fourier_mask(Axis axis, double fraction, Shape3 dims) {
    if (fraction < 9.0 / 16.0 || fraction > 1.0)
        throw ValidationError("partial Fourier mask: fraction must be in [9/16, 1]");
    const std::size_t n = dims.dim(static_cast<int>(axis));
    const std::size_t m_count =
        std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(fraction * n)));
    SamplingMask m(dims);
    detail::mask_axis(m, axis, [&](std::size_t i) { return i < m_count; });
    m.kind_trace.push_back("pf");
    detail::check_mask_nonempty(m, "partial Fourier");
    return m;
}

// Logical AND of masks; kind traces concatenate. Commutative and idempotent.
inline SamplingMask compose_masks(const std::vector<SamplingMask>& masks) {
    if (masks.empty()) throw ValidationError("compose_masks: empty list");
    SamplingMask out = masks[0];
    for (std::size_t i = 1; i < masks.size(); ++i) {
        if (!(masks[i].shape == out.shape))
            throw ValidationError("compose_masks: dim mismatch at mask " + std::to_string(i));
        for (std::size_t j = 0; j < out.keep.size(); ++j) out.keep[j] &= masks[i].keep[j];
        for (const auto& k : masks[i].kind_trace)
            if (std::find(out.kind_trace.begin(), out.kind_trace.end(), k) == out.kind_trace.end())
                out.kind_trace.push_back(k);
    }
    if (out.retained() == 0) throw ValidationError("compose_masks: composition retains zero samples");
    return out;
}

// The composed mask of all enabled degradation components.
inline SamplingMask build_plan_mask(const DegradationPlan& plan, Shape3 dims) {
    std::vector<SamplingMask> parts;
    if (plan.uniform) parts.push_back(build_uniform_mask(*plan.uniform, dims));
    if (plan.random) parts.push_back(build_random_mask(*plan.random, dims));
    for (int a = 0; a < 3; ++a)
        if (plan.kmax_fraction[a] < 1.0)
            parts.push_back(build_kmax_mask(static_cast<Axis>(a), plan.kmax_fraction[a], dims));
    if (plan.elliptical) parts.push_back(build_elliptical_mask(dims));
    for (int a = 0; a < 3; ++a)
        if (plan.pf_fraction[a] < 1.0)
            parts.push_back(build_partial_fourier_mask(static_cast<Axis>(a), plan.pf_fraction[a], dims));
    if (parts.empty()) return full_mask(dims);
    return compose_masks(parts);
}

// Non-retained samples set to exactly 0; retained samples bitwise unchanged.
inline KSpaceVolume apply_mask(const KSpaceVolume& ksp, const SamplingMask& m) {
    if (!(m.shape == ksp.shape))
        throw ValidationError("apply_mask: mask dims " + m.shape.str() +
                              " do not match k-space dims " + ksp.shape.str());
    KSpaceVolume out = ksp;
    const std::size_t vox = ksp.shape.total();
    for (std::size_t c = 0; c < ksp.ncoils; ++c) {
        cdouble* k = out.coil(c);
        for (std::size_t v = 0; v < vox; ++v)
            if (!m.keep[v]) k[v] = cdouble(0.0, 0.0);
    }
    return out;
}

// Adds i.i.d. complex Gaussian noise to retained samples only.
inline KSpaceVolume add_noise(const KSpaceVolume& ksp, double sigma_add, const SamplingMask& m,
                              std::uint64_t seed) {
    if (sigma_add < 0.0) throw ValidationError("add_noise: sigma_add must be >= 0");
    if (!(m.shape == ksp.shape)) throw ValidationError("add_noise: mask dim mismatch");
    if (sigma_add == 0.0) return ksp;
    KSpaceVolume out = ksp;
    const std::size_t vox = ksp.shape.total();
    for (std::size_t c = 0; c < ksp.ncoils; ++c) {
        CounterRng rng(seed, 0x6e6f6973ULL + c);
        cdouble* k = out.coil(c);
        for (std::size_t v = 0; v < vox; ++v) {
            const cdouble noise = rng.cnormal(sigma_add);  // draw regardless, keep stream aligned
            if (m.keep[v]) k[v] += noise;
        }
    }
    return out;
}

// Degradation pipeline, fixed order mask-then-noise. With the identity plan the
// output is bitwise the input.
inline KSpaceVolume degrade(const KSpaceVolume& raw, const DegradationPlan& plan, double sigma0,
                            std::uint64_t seed, SamplingMask* mask_out = nullptr) {
    const SamplingMask m = build_plan_mask(plan, raw.shape);
    if (mask_out) *mask_out = m;
    if (plan.is_identity()) return raw;
    KSpaceVolume out = apply_mask(raw, m);
    if (plan.noise_add_ratio > 0.0)
        out = add_noise(out, plan.noise_add_ratio * sigma0, m, seed);
    return out;
}

}  // namespace mrtk
