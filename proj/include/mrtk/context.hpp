#pragma once

#include "mrtk/core.hpp"
#include "mrtk/degrade.hpp"
#include "mrtk/recon.hpp"

namespace mrtk {

// The scan parameters that travel with a training pair as conditioning input.
struct ScanContext {
    std::array<double, 3> kmax_fraction{1.0, 1.0, 1.0};
    std::array<double, 3> pf_fraction{1.0, 1.0, 1.0};
    bool elliptical = false;
    double uniform_R = 1.0;
    double random_accel = 1.0;
    double noise_add_ratio = 0.0;
    Component component = Component::magnitude;
    bool normalize = false;
    bool warp = false;
    int pulse_dim = 2;  // 2 or 3

    bool operator==(const ScanContext&) const = default;

    static ScanContext from_plans(const DegradationPlan& d, const ReconPlan& r, int pulse_dim) {
        ScanContext c;
        c.kmax_fraction = d.kmax_fraction;
        c.pf_fraction = d.pf_fraction;
        c.elliptical = d.elliptical;
        c.uniform_R = d.uniform ? static_cast<double>(d.uniform->R) : 1.0;
        c.random_accel = d.random ? d.random->accel : 1.0;
        c.noise_add_ratio = d.noise_add_ratio;
        c.component = r.component;
        c.normalize = r.normalize_intensity;
        c.warp = r.warp.has_value();
        c.pulse_dim = pulse_dim;
        return c;
    }
};

// Fixed-length conditioning vector. Slot order:
//   0..2  kmax fraction (frequency, phase, slice)
//   3..5  partial-Fourier fraction (frequency, phase, slice)
//   6     elliptical flag
//   7     uniform undersampling R
//   8     random undersampling acceleration
//   9     noise-add ratio r
//   10    component code (magnitude 0, phase 1, real 2, imaginary 3)
//   11    intensity-normalization flag
//   12    distortion-warp flag
//   13    pulse dimensionality (0 = 2D, 1 = 3D)
//   14    noise reduction factor
//   15    reserved (always 0)
// Unused slots hold neutral values: 1 for factors, 0 for flags.
using ContextVector = std::array<double, 16>;

constexpr std::size_t kCtxNrfSlot = 14;

inline void validate_context(const ScanContext& c) {
    for (int a = 0; a < 3; ++a) {
        if (c.kmax_fraction[a] <= 0.0 || c.kmax_fraction[a] > 1.0)
            throw ValidationError("context: kmax_fraction out of (0,1]");
        if (c.pf_fraction[a] <= 0.0 || c.pf_fraction[a] > 1.0)
            throw ValidationError("context: pf_fraction out of (0,1]");
    }
    if (c.uniform_R < 1.0) throw ValidationError("context: uniform_R must be >= 1");
    if (c.random_accel < 1.0) throw ValidationError("context: random_accel must be >= 1");
    if (c.noise_add_ratio < 0.0) throw ValidationError("context: noise_add_ratio must be >= 0");
    if (c.pulse_dim != 2 && c.pulse_dim != 3) throw ValidationError("context: pulse_dim must be 2 or 3");
}

inline ContextVector encode_context(const ScanContext& c, double nrf) {
    validate_context(c);
    if (!std::isfinite(nrf) || nrf <= 0.0) throw ValidationError("context: nrf must be finite and > 0");
    ContextVector v{};
    for (int a = 0; a < 3; ++a) {
        v[a] = c.kmax_fraction[a];
        v[3 + a] = c.pf_fraction[a];
    }
    v[6] = c.elliptical ? 1.0 : 0.0;
    v[7] = c.uniform_R;
    v[8] = c.random_accel;
    v[9] = c.noise_add_ratio;
    v[10] = static_cast<double>(static_cast<int>(c.component));
    v[11] = c.normalize ? 1.0 : 0.0;
    v[12] = c.warp ? 1.0 : 0.0;
    v[13] = c.pulse_dim == 3 ? 1.0 : 0.0;
    v[kCtxNrfSlot] = nrf;
    v[15] = 0.0;
    return v;
}

inline std::pair<ScanContext, double> decode_context(const ContextVector& v) {
    ScanContext c;
    for (int a = 0; a < 3; ++a) {
        c.kmax_fraction[a] = v[a];
        c.pf_fraction[a] = v[3 + a];
    }
    c.elliptical = v[6] != 0.0;
    c.uniform_R = v[7];
    c.random_accel = v[8];
    c.noise_add_ratio = v[9];
    c.component = static_cast<Component>(static_cast<int>(v[10]));
    c.normalize = v[11] != 0.0;
    c.warp = v[12] != 0.0;
    c.pulse_dim = v[13] != 0.0 ? 3 : 2;
    validate_context(c);
    return {c, v[kCtxNrfSlot]};
}

// Symbols of the noise-reduction-factor derivation.
struct NoiseBudget {
    double sigma0 = 0.0;         // raw per-sample std (per real/imag component)
    double retained_fraction = 1.0;
    double sigma_add = 0.0;
};

// Window-weighted retained fraction: sum of squared window weights over retained
// samples divided by the sum over all samples. Equals retained/total without a window.
inline double retained_fraction(const SamplingMask& mask, const std::optional<WindowSpec>& window) {
    const Shape3 s = mask.shape;
    std::array<std::vector<double>, 3> prof;
    for (int a = 0; a < 3; ++a) {
        if (window && window->axes[a])
            prof[a] = tukey_profile(s.dim(a), window->alpha);
        else
            prof[a] = std::vector<double>(s.dim(a), 1.0);
    }
    double kept = 0.0, total = 0.0;
    for (std::size_t x = 0; x < s.nx; ++x)
        for (std::size_t y = 0; y < s.ny; ++y)
            for (std::size_t z = 0; z < s.nz; ++z) {
                const double w2 = prof[0][x] * prof[1][y] * prof[2][z];
                const double e = w2 * w2;
                total += e;
                if (mask.at(x, y, z)) kept += e;
            }
    return kept / total;
}

// Closed-form NRF for linear reconstruction paths. Under the unitary transform
// the target image noise std is sigma0 and the input image noise std is
// sqrt(f * (sigma0^2 + sigma_add^2)), so nrf = sqrt(f * (1 + r^2)).
inline double derive_nrf_analytic(const DegradationPlan& plan, const ReconPlan& rplan, Shape3 dims,
                                  double sigma0) {
    if (sigma0 <= 0.0) throw ValidationError("derive_nrf_analytic: sigma0 must be > 0");
    if (!rplan.is_linear_path())
        throw ValidationError(
            "derive_nrf_analytic: reconstruction path is nonlinear; use derive_nrf_pseudoreplica");
    const SamplingMask mask = build_plan_mask(plan, dims);
    const double f = retained_fraction(mask, rplan.window);
    const double r = plan.noise_add_ratio;
    return std::sqrt(f * (1.0 + r * r));
}

struct NrfEstimate {
    double nrf = 0.0;
    double stderr_ = 0.0;
};

// Pseudo-replica oracle: run the full degrade + recon pipeline on pure-noise
// k-space replicas for the input and target configurations; the NRF is the
// ratio of per-voxel stds averaged over a central ROI.
inline NrfEstimate derive_nrf_pseudoreplica(const DegradationPlan& plan, const ReconPlan& rplan,
                                            Shape3 dims, const CoilImages& sens, double sigma0,
                                            int n_replicas, std::uint64_t seed) {
    if (sigma0 <= 0.0) throw ValidationError("derive_nrf_pseudoreplica: sigma0 must be > 0");
    if (n_replicas < 100) throw ValidationError("derive_nrf_pseudoreplica: n_replicas must be >= 100");

    const SamplingMask input_mask = build_plan_mask(plan, dims);
    const SamplingMask target_mask = full_mask(dims);
    const double sigma_add = plan.noise_add_ratio * sigma0;
    const std::size_t vox = dims.total();

    // central ROI: middle half along each axis
    std::vector<std::size_t> roi;
    for (std::size_t x = dims.nx / 4; x < dims.nx - dims.nx / 4; ++x)
        for (std::size_t y = dims.ny / 4; y < dims.ny - dims.ny / 4; ++y)
            for (std::size_t z = dims.nz / 4; z < dims.nz - dims.nz / 4; ++z)
                roi.push_back((x * dims.ny + y) * dims.nz + z);

    auto run_path = [&](std::uint64_t rep_seed, bool degraded) {
        KSpaceVolume noise(dims, sens.ncoils);
        CounterRng rng(rep_seed, degraded ? 1 : 2);
        for (auto& v : noise.data) v = rng.cnormal(sigma0);
        if (degraded) {
            KSpaceVolume k = apply_mask(noise, input_mask);
            if (sigma_add > 0.0) k = add_noise(k, sigma_add, input_mask, derive_seed(rep_seed, 0, 7));
            return run_recon_pipeline(k, input_mask, rplan, sens);
        }
        return run_recon_pipeline(noise, target_mask, rplan, sens);
    };

    // Group replicas for a simple stderr estimate: nrf per group, spread across groups.
    const int n_groups = 10;
    const int per_group = n_replicas / n_groups;
    std::vector<double> group_nrf;
    double nrf_num = 0.0, nrf_den = 0.0;
    for (int g = 0; g < n_groups; ++g) {
        std::vector<double> sum_i(vox, 0.0), sum2_i(vox, 0.0), sum_t(vox, 0.0), sum2_t(vox, 0.0);
        for (int rep = 0; rep < per_group; ++rep) {
            const std::uint64_t rs = derive_seed(seed, static_cast<std::uint64_t>(g) * per_group + rep);
            const RealVolume in_img = run_path(rs, true);
            const RealVolume tg_img = run_path(rs, false);
            for (std::size_t v = 0; v < vox; ++v) {
                sum_i[v] += in_img.data[v];
                sum2_i[v] += in_img.data[v] * in_img.data[v];
                sum_t[v] += tg_img.data[v];
                sum2_t[v] += tg_img.data[v] * tg_img.data[v];
            }
        }
        double std_i = 0.0, std_t = 0.0;
        const double n = static_cast<double>(per_group);
        for (auto v : roi) {
            std_i += std::sqrt(std::max(0.0, (sum2_i[v] - sum_i[v] * sum_i[v] / n) / (n - 1.0)));
            std_t += std::sqrt(std::max(0.0, (sum2_t[v] - sum_t[v] * sum_t[v] / n) / (n - 1.0)));
        }
        if (std_t <= 0.0) throw NumericError("derive_nrf_pseudoreplica: zero target noise std");
        group_nrf.push_back(std_i / std_t);
        nrf_num += std_i;
        nrf_den += std_t;
    }
    NrfEstimate est;
    est.nrf = nrf_num / nrf_den;
    double mean = 0.0;
    for (double g : group_nrf) mean += g;
    mean /= group_nrf.size();
    double var = 0.0;
    for (double g : group_nrf) var += (g - mean) * (g - mean);
    var /= (group_nrf.size() - 1);
    est.stderr_ = std::sqrt(var / group_nrf.size());
    return est;
}

}  // namespace mrtk
