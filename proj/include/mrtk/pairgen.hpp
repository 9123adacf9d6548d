#pragma once

#include <atomic>
#include <cstdio>
#include <mutex>
#include <set>
#include <thread>

#include <zlib.h>

#include "mrtk/config.hpp"
#include "mrtk/context.hpp"
#include "mrtk/degrade.hpp"
#include "mrtk/io.hpp"
#include "mrtk/phantom.hpp"
#include "mrtk/recon.hpp"

namespace mrtk {

// --- scenario sampling ------------------------------------------------------------

// Enable-probabilities and parameter ranges for each degradation factor and
// recon variation. Sampling is a pure function of (master seed, pair index).
struct ScenarioDistribution {
    Shape3 dims{32, 32, 32};  // needed for compatibility checks at sampling time

    double p_noise = 1.0;
    double r_min = 0.25, r_max = 2.5;

    double p_uniform = 0.0;
    int uniform_R_min = 2, uniform_R_max = 2;

    double p_random = 0.0;
    double random_accel_min = 1.5, random_accel_max = 3.0;

    double p_kmax = 0.0;  // per enabled axis
    double kmax_min = 0.5, kmax_max = 1.0;
    std::array<bool, 3> kmax_axes{true, true, true};

    double p_elliptical = 0.0;

    double p_pf = 0.0;  // per enabled axis
    double pf_min = 9.0 / 16.0, pf_max = 1.0;
    std::array<bool, 3> pf_axes{false, true, false};

    double p_sense = 0.0;  // drawn only jointly with a compatible uniform mask
    double p_pocs = 0.0;   // drawn only when a PF factor is active
    double p_window = 0.0;
    double window_alpha = 0.5;
    double p_window_axis = 1.0;  // per-axis enable probability once a window is drawn
    double p_normalize = 0.0;
    double p_warp = 0.0;
    double warp_c2 = 0.05;
    double prob_3d = 0.0;  // pulse_dim = 3 with this probability

    // When enabled, the added-noise ratio is not drawn from [r_min, r_max]:
    // a target noise-reduction factor is drawn uniformly and the ratio is
    // solved from the sampled mask (r = sqrt(nrf^2 / f - 1)). This decouples
    // the factor slot from the degradation slots, so every degradation
    // combination appears across the whole factor range.
    bool target_nrf = false;
    double nrf_target_min = 1.0, nrf_target_max = 3.0;

    void validate() const {
        for (double p : {p_noise, p_uniform, p_random, p_kmax, p_elliptical, p_pf, p_sense, p_pocs,
                         p_window, p_window_axis, p_normalize, p_warp, prob_3d})
            if (p < 0.0 || p > 1.0) throw ValidationError("scenario: probabilities must be in [0,1]");
        if (r_min < 0.0 || r_max < r_min) throw ValidationError("scenario: bad noise ratio range");
        if (uniform_R_min < 1 || uniform_R_max < uniform_R_min)
            throw ValidationError("scenario: bad uniform R range");
        if (random_accel_min < 1.0 || random_accel_max < random_accel_min)
            throw ValidationError("scenario: bad random accel range");
        if (kmax_min <= 0.0 || kmax_max > 1.0 || kmax_max < kmax_min)
            throw ValidationError("scenario: bad kmax range");
        if (pf_min < 9.0 / 16.0 || pf_max > 1.0 || pf_max < pf_min)
            throw ValidationError("scenario: bad partial-Fourier range");
        if (target_nrf && (nrf_target_min < 1.0 || nrf_target_max < nrf_target_min))
            throw ValidationError("scenario: bad target nrf range");
    }
};

inline json to_json(const ScenarioDistribution& d) {
    return json{{"dims", {d.dims.nx, d.dims.ny, d.dims.nz}},
                {"p_noise", d.p_noise},
                {"r_min", d.r_min},
                {"r_max", d.r_max},
                {"p_uniform", d.p_uniform},
                {"uniform_R_min", d.uniform_R_min},
                {"uniform_R_max", d.uniform_R_max},
                {"p_random", d.p_random},
                {"random_accel_min", d.random_accel_min},
                {"random_accel_max", d.random_accel_max},
                {"p_kmax", d.p_kmax},
                {"kmax_min", d.kmax_min},
                {"kmax_max", d.kmax_max},
                {"kmax_axes", {d.kmax_axes[0], d.kmax_axes[1], d.kmax_axes[2]}},
                {"p_elliptical", d.p_elliptical},
                {"p_pf", d.p_pf},
                {"pf_min", d.pf_min},
                {"pf_max", d.pf_max},
                {"pf_axes", {d.pf_axes[0], d.pf_axes[1], d.pf_axes[2]}},
                {"p_sense", d.p_sense},
                {"p_pocs", d.p_pocs},
                {"p_window", d.p_window},
                {"window_alpha", d.window_alpha},
                {"p_window_axis", d.p_window_axis},
                {"p_normalize", d.p_normalize},
                {"p_warp", d.p_warp},
                {"warp_c2", d.warp_c2},
                {"prob_3d", d.prob_3d},
                {"target_nrf", d.target_nrf},
                {"nrf_target_min", d.nrf_target_min},
                {"nrf_target_max", d.nrf_target_max}};
}

inline ScenarioDistribution scenario_distribution_from_json(const json& j) {
    ScenarioDistribution d;
    if (j.contains("dims")) {
        const auto v = j.at("dims").get<std::vector<std::size_t>>();
        if (v.size() != 3) throw ValidationError("scenario: dims must have 3 entries");
        d.dims = {v[0], v[1], v[2]};
    }
    d.p_noise = j.value("p_noise", d.p_noise);
    d.r_min = j.value("r_min", d.r_min);
    d.r_max = j.value("r_max", d.r_max);
    d.p_uniform = j.value("p_uniform", d.p_uniform);
    d.uniform_R_min = j.value("uniform_R_min", d.uniform_R_min);
    d.uniform_R_max = j.value("uniform_R_max", d.uniform_R_max);
    d.p_random = j.value("p_random", d.p_random);
    d.random_accel_min = j.value("random_accel_min", d.random_accel_min);
    d.random_accel_max = j.value("random_accel_max", d.random_accel_max);
    d.p_kmax = j.value("p_kmax", d.p_kmax);
    d.kmax_min = j.value("kmax_min", d.kmax_min);
    d.kmax_max = j.value("kmax_max", d.kmax_max);
    if (j.contains("kmax_axes")) {
        const auto a = j.at("kmax_axes").get<std::vector<bool>>();
        if (a.size() != 3) throw ValidationError("scenario: kmax_axes must have 3 entries");
        d.kmax_axes = {a[0], a[1], a[2]};
    }
    d.p_elliptical = j.value("p_elliptical", d.p_elliptical);
    d.p_pf = j.value("p_pf", d.p_pf);
    d.pf_min = j.value("pf_min", d.pf_min);
    d.pf_max = j.value("pf_max", d.pf_max);
    if (j.contains("pf_axes")) {
        const auto a = j.at("pf_axes").get<std::vector<bool>>();
        if (a.size() != 3) throw ValidationError("scenario: pf_axes must have 3 entries");
        d.pf_axes = {a[0], a[1], a[2]};
    }
    d.p_sense = j.value("p_sense", d.p_sense);
    d.p_pocs = j.value("p_pocs", d.p_pocs);
    d.p_window = j.value("p_window", d.p_window);
    d.window_alpha = j.value("window_alpha", d.window_alpha);
    d.p_window_axis = j.value("p_window_axis", d.p_window_axis);
    d.p_normalize = j.value("p_normalize", d.p_normalize);
    d.p_warp = j.value("p_warp", d.p_warp);
    d.warp_c2 = j.value("warp_c2", d.warp_c2);
    d.prob_3d = j.value("prob_3d", d.prob_3d);
    d.target_nrf = j.value("target_nrf", d.target_nrf);
    d.nrf_target_min = j.value("nrf_target_min", d.nrf_target_min);
    d.nrf_target_max = j.value("nrf_target_max", d.nrf_target_max);
    return d;
}

struct Scenario {
    DegradationPlan degradation;
    ReconPlan recon;
    int pulse_dim = 2;
};

namespace pairgen_detail {

inline Scenario draw_scenario(const ScenarioDistribution& d, std::uint64_t master_seed,
                              std::uint64_t pair_index, std::uint64_t attempt) {
    CounterRng rng(derive_seed(master_seed, pair_index, 0x7363656e + attempt));
    Scenario s;
    DegradationPlan& p = s.degradation;
    ReconPlan& r = s.recon;

    if (rng.uniform() < d.p_noise) p.noise_add_ratio = rng.uniform(d.r_min, d.r_max);
    if (rng.uniform() < d.p_uniform) {
        UniformParams u;
        u.axis = Axis::phase;
        u.R = d.uniform_R_min +
              static_cast<int>(rng.next_u64() %
                               static_cast<std::uint64_t>(d.uniform_R_max - d.uniform_R_min + 1));
        u.acs_lines = 0;
        p.uniform = u;
    }
    if (rng.uniform() < d.p_random) {
        RandomParams rp;
        rp.axis = Axis::phase;
        rp.accel = rng.uniform(d.random_accel_min, d.random_accel_max);
        rp.seed = derive_seed(master_seed, pair_index, 0x726d736b);
        p.random = rp;
    }
    for (int a = 0; a < 3; ++a)
        if (d.kmax_axes[a] && rng.uniform() < d.p_kmax)
            p.kmax_fraction[a] = rng.uniform(d.kmax_min, d.kmax_max);
    if (rng.uniform() < d.p_elliptical) p.elliptical = true;
    for (int a = 0; a < 3; ++a)
        if (d.pf_axes[a] && rng.uniform() < d.p_pf)
            p.pf_fraction[a] = rng.uniform(d.pf_min, d.pf_max);

    const bool any_pf =
        p.pf_fraction[0] < 1.0 || p.pf_fraction[1] < 1.0 || p.pf_fraction[2] < 1.0;
    // POCS drawn before SENSE: they are mutually exclusive.
    if (any_pf && rng.uniform() < d.p_pocs) r.pf = PfMode::pocs;
    else if (any_pf) r.pf = PfMode::zero_fill;
    // SENSE needs a pure comb: uniform present, no random, no PF/kmax/elliptical
    // touching the phase axis, extent divisible by R.
    const bool comb_pure = p.uniform && !p.random && p.kmax_fraction[1] == 1.0 &&
                           p.pf_fraction[1] == 1.0 && !p.elliptical &&
                           d.dims.ny % static_cast<std::size_t>(p.uniform->R) == 0 &&
                           r.pf != PfMode::pocs;
    if (comb_pure && rng.uniform() < d.p_sense) r.sense = SenseSpec{Axis::phase, p.uniform->R};
    if (rng.uniform() < d.p_window) {
        std::array<bool, 3> axes{};
        bool any = false;
        for (int a = 0; a < 3; ++a) {
            axes[a] = rng.uniform() < d.p_window_axis;
            any = any || axes[a];
        }
        if (any) r.window = WindowSpec{d.window_alpha, axes};
    }
    if (rng.uniform() < d.p_normalize) r.normalize_intensity = true;
    if (rng.uniform() < d.p_warp) r.warp = WarpSpec{d.warp_c2, 0.0, false};
    s.pulse_dim = rng.uniform() < d.prob_3d ? 3 : 2;
    if (d.target_nrf) {
        const double target = rng.uniform(d.nrf_target_min, d.nrf_target_max);
        const double f = retained_fraction(build_plan_mask(p, d.dims), r.window);
        p.noise_add_ratio = std::sqrt(std::max(target * target / f - 1.0, 0.0));
    }
    return s;
}

}  // namespace pairgen_detail

// Deterministic function of (master seed, pair index): resamples on invariant
// violation with bounded retries, then errors.
inline Scenario sample_scenario(const ScenarioDistribution& dist, std::uint64_t master_seed,
                                std::uint64_t pair_index) {
    dist.validate();
    constexpr int kMaxAttempts = 64;
    std::string last_error;
    for (int attempt = 0; attempt < kMaxAttempts; ++attempt) {
        try {
            Scenario s = pairgen_detail::draw_scenario(dist, master_seed, pair_index,
                                                       static_cast<std::uint64_t>(attempt));
            const SamplingMask m = build_plan_mask(s.degradation, dist.dims);
            KSpaceVolume probe(dist.dims, 1);
            validate_plan(s.recon, m, probe);
            validate_context(ScanContext::from_plans(s.degradation, s.recon, s.pulse_dim));
            return s;
        } catch (const ValidationError& e) {
            last_error = e.what();
        }
    }
    throw ValidationError("sample_scenario: no valid scenario after " +
                          std::to_string(kMaxAttempts) + " attempts (last: " + last_error + ")");
}

// --- pair generation -----------------------------------------------------------------

// The raw-data source a pair is synthesized from. Jitter perturbs ellipsoid
// geometry per pair so one phantom spec yields unlimited distinct images.
struct RawSourceSpec {
    PhantomSpec phantom;
    CoilProfileSpec coils;
    Shape3 dims{32, 32, 32};
    double sigma0_min = 0.01, sigma0_max = 0.01;
    double jitter = 0.0;
    // when max > min, per-pair edge softening is drawn from this range,
    // overriding the phantom spec value
    double softening_min = 0.0, softening_max = 0.0;
};

struct TrainingPair {
    std::string pair_id;
    RealVolume input, target;
    ContextVector ctx{};
    json scenario;
    std::uint64_t seed = 0;
};

// NRF used for pair labeling: the closed form on the linearized plan. Nonlinear
// steps (POCS, SENSE, normalization, warp) are dropped from the plan for the
// label; the Monte-Carlo estimator remains available for measuring them.
inline double derive_nrf_for_scenario(const DegradationPlan& d, const ReconPlan& r, Shape3 dims) {
    ReconPlan lin = r;
    lin.sense.reset();
    if (lin.pf == PfMode::pocs) lin.pf = PfMode::zero_fill;
    lin.normalize_intensity = false;
    lin.warp.reset();
    lin.quantize_bits = 0;
    return derive_nrf_analytic(d, lin, dims, 1.0);
}

inline TrainingPair generate_pair(const RawSourceSpec& src, const Scenario& scenario,
                                  std::uint64_t pair_seed, const std::string& pair_id) {
    TrainingPair pair;
    pair.pair_id = pair_id;
    pair.seed = pair_seed;

    PhantomSpec ph = src.phantom;
    CounterRng rng(derive_seed(pair_seed, 0, 0x6a697474));
    if (src.jitter > 0.0) {
        for (auto& e : ph.ellipsoids) {
            for (int a = 0; a < 3; ++a) {
                e.center[a] += src.jitter * rng.uniform(-1.0, 1.0);
                e.euler_angles[a] += src.jitter * rng.uniform(-1.0, 1.0);
            }
            e.intensity *= 1.0 + 0.5 * src.jitter * rng.uniform(-1.0, 1.0);
        }
    }
    const double sigma0 = src.sigma0_min == src.sigma0_max
                              ? src.sigma0_min
                              : rng.uniform(src.sigma0_min, src.sigma0_max);
    if (sigma0 <= 0.0) throw ValidationError("generate_pair: sigma0 must be > 0");
    if (src.softening_max > src.softening_min) {
        if (src.softening_min < 0.0)
            throw ValidationError("generate_pair: softening range must be >= 0");
        ph.edge_softening = rng.uniform(src.softening_min, src.softening_max);
    }

    const ImageVolume obj = rasterize_phantom(ph, src.dims);
    const CoilImages sens = coil_sensitivities(src.coils, src.dims);
    const KSpaceVolume raw = synthesize_kspace(obj, sens, sigma0, derive_seed(pair_seed, 1, 0x726177));

    // target: plan-identical reconstruction of the undegraded raw k-space
    pair.target = run_recon_pipeline(raw, full_mask(src.dims), scenario.recon, sens);

    SamplingMask mask;
    const KSpaceVolume deg =
        degrade(raw, scenario.degradation, sigma0, derive_seed(pair_seed, 2, 0x646567), &mask);
    pair.input = run_recon_pipeline(deg, mask, scenario.recon, sens);

    const double nrf = derive_nrf_for_scenario(scenario.degradation, scenario.recon, src.dims);
    pair.ctx = encode_context(
        ScanContext::from_plans(scenario.degradation, scenario.recon, scenario.pulse_dim), nrf);

    SliceMeta sm;
    sm.phase_encode_direction = "column";  // in-plane columns are the phase axis
    sm.pulse_dim = scenario.pulse_dim;
    json meta = {{"slice_meta", slice_meta_to_json(sm)},
                 {"scenario",
                  {{"degradation", to_json(scenario.degradation)},
                   {"recon", to_json(scenario.recon)},
                   {"pulse_dim", scenario.pulse_dim}}},
                 {"context", std::vector<double>(pair.ctx.begin(), pair.ctx.end())},
                 {"sigma0", sigma0}};
    pair.scenario = meta["scenario"];
    pair.input.meta = meta;
    pair.target.meta = meta;
    return pair;
}

// --- dataset IO -------------------------------------------------------------------------
// Layout: <dir>/manifest.jsonl and <dir>/pairs/<pair_id>.{input,target}.mrv.

struct ManifestRecord {
    std::string pair_id;
    std::string input_path, target_path;  // relative to the dataset directory
    ContextVector ctx{};
    json scenario;
    std::uint64_t seed = 0;
    std::uint32_t input_crc32 = 0, target_crc32 = 0;
};

struct DatasetManifest {
    std::vector<ManifestRecord> records;
};

namespace pairgen_detail {

inline std::uint32_t file_crc32(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ValidationError("dataset: cannot open for checksum: " + path);
    std::uint32_t crc = static_cast<std::uint32_t>(crc32(0L, Z_NULL, 0));
    char buf[1 << 16];
    while (in) {
        in.read(buf, sizeof(buf));
        const std::streamsize got = in.gcount();
        if (got > 0)
            crc = static_cast<std::uint32_t>(
                crc32(crc, reinterpret_cast<const Bytef*>(buf), static_cast<uInt>(got)));
    }
    return crc;
}

inline json record_to_json(const ManifestRecord& r) {
    return json{{"pair_id", r.pair_id},
                {"input_path", r.input_path},
                {"target_path", r.target_path},
                {"context", std::vector<double>(r.ctx.begin(), r.ctx.end())},
                {"scenario", r.scenario},
                {"seed", r.seed},
                {"input_crc32", r.input_crc32},
                {"target_crc32", r.target_crc32}};
}

inline ManifestRecord record_from_json(const json& j) {
    ManifestRecord r;
    r.pair_id = j.at("pair_id").get<std::string>();
    r.input_path = j.at("input_path").get<std::string>();
    r.target_path = j.at("target_path").get<std::string>();
    const auto c = j.at("context").get<std::vector<double>>();
    if (c.size() != r.ctx.size()) throw ValidationError("manifest: context must have 16 entries");
    std::copy(c.begin(), c.end(), r.ctx.begin());
    r.scenario = j.value("scenario", json::object());
    r.seed = j.value("seed", std::uint64_t{0});
    r.input_crc32 = j.at("input_crc32").get<std::uint32_t>();
    r.target_crc32 = j.at("target_crc32").get<std::uint32_t>();
    return r;
}

}  // namespace pairgen_detail

inline void write_manifest(const std::string& dir, const DatasetManifest& manifest) {
    std::ofstream out(dir + "/manifest.jsonl");
    if (!out) throw ValidationError("dataset: cannot write manifest in " + dir);
    for (const auto& r : manifest.records) out << pairgen_detail::record_to_json(r).dump() << "\n";
}

// Validates uniqueness, file existence, and per-file CRC32 checksums.
inline DatasetManifest read_manifest(const std::string& dir, bool verify_checksums = true) {
    std::ifstream in(dir + "/manifest.jsonl");
    if (!in) throw ValidationError("dataset: cannot open manifest in " + dir);
    DatasetManifest manifest;
    std::string line;
    std::set<std::string> ids;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        ManifestRecord r = pairgen_detail::record_from_json(json::parse(line));
        if (!ids.insert(r.pair_id).second)
            throw ValidationError("dataset: duplicate pair_id " + r.pair_id);
        for (const auto& [rel, crc] :
             {std::pair{r.input_path, r.input_crc32}, std::pair{r.target_path, r.target_crc32}}) {
            const std::string path = dir + "/" + rel;
            if (!std::filesystem::exists(path))
                throw ValidationError("dataset: missing file " + path);
            if (verify_checksums && pairgen_detail::file_crc32(path) != crc)
                throw ValidationError("dataset: checksum mismatch for " + path);
        }
        manifest.records.push_back(std::move(r));
    }
    return manifest;
}

// Writes one pair to <dir>/pairs and returns its manifest record.
inline ManifestRecord write_pair(const std::string& dir, const TrainingPair& pair) {
    ManifestRecord r;
    r.pair_id = pair.pair_id;
    r.input_path = "pairs/" + pair.pair_id + ".input.mrv";
    r.target_path = "pairs/" + pair.pair_id + ".target.mrv";
    r.ctx = pair.ctx;
    r.scenario = pair.scenario;
    r.seed = pair.seed;
    write_real_volume(dir + "/" + r.input_path, pair.input);
    write_real_volume(dir + "/" + r.target_path, pair.target);
    r.input_crc32 = pairgen_detail::file_crc32(dir + "/" + r.input_path);
    r.target_crc32 = pairgen_detail::file_crc32(dir + "/" + r.target_path);
    return r;
}

// Full dataset production. Every pair is a pure function of (master seed,
// index); workers share nothing but the output directory, and the manifest is
// assembled in index order, so any worker count yields byte-identical output.
inline DatasetManifest generate_dataset(const RawSourceSpec& src, const ScenarioDistribution& dist,
                                        std::size_t n_pairs, std::uint64_t master_seed,
                                        const std::string& out_dir, int jobs = 1) {
    if (jobs < 1) throw ValidationError("generate_dataset: jobs must be >= 1");
    std::filesystem::create_directories(out_dir + "/pairs");
    DatasetManifest manifest;
    manifest.records.resize(n_pairs);

    std::atomic<std::size_t> next{0};
    std::mutex error_mutex;
    std::exception_ptr first_error;
    auto worker = [&]() {
        while (true) {
            const std::size_t i = next.fetch_add(1);
            if (i >= n_pairs) return;
            try {
                char id[32];
                std::snprintf(id, sizeof(id), "pair_%06zu", i);
                const Scenario sc = sample_scenario(dist, master_seed, i);
                const TrainingPair pair =
                    generate_pair(src, sc, derive_seed(master_seed, i, 0x70616972), id);
                manifest.records[i] = write_pair(out_dir, pair);
            } catch (...) {
                std::lock_guard<std::mutex> lock(error_mutex);
                if (!first_error) first_error = std::current_exception();
                next.store(n_pairs);
                return;
            }
        }
    };
    if (jobs == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (int t = 0; t < jobs; ++t) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }
    if (first_error) std::rethrow_exception(first_error);
    write_manifest(out_dir, manifest);
    return manifest;
}

// Load a dataset as standardized training samples for a 2D (1-channel) network.
// Slices are edge-replicated up to a multiple of pad_multiple so they fit the
// network's downsampling factor even when the border crop fires.
inline std::vector<TrainSample> load_training_samples(const std::string& dir,
                                                      std::size_t target_cols,
                                                      bool verify_checksums = true,
                                                      int pad_multiple = 4, int in_channels = 1) {
    if (in_channels != 1 && in_channels != 7)
        throw ValidationError("load_training_samples: in_channels must be 1 or 7");
    const DatasetManifest manifest = read_manifest(dir, verify_checksums);
    std::vector<TrainSample> samples;
    for (const auto& r : manifest.records) {
        const RealVolume in_vol = read_real_volume(dir + "/" + r.input_path);
        const RealVolume tg_vol = read_real_volume(dir + "/" + r.target_path);
        const SliceMeta sm = in_vol.meta.contains("slice_meta")
                                 ? slice_meta_from_json(in_vol.meta.at("slice_meta"))
                                 : SliceMeta{};
        const std::size_t nz = in_vol.shape.nz;
        const auto [mid_std, rec] = standardize(volume_slice(in_vol, nz / 2), sm, target_cols);
        std::vector<Image2D> in_std(nz);
        for (std::size_t z = 0; z < nz; ++z)
            in_std[z] = standardize_with_record(volume_slice(in_vol, z), rec);
        for (std::size_t z = 0; z < nz; ++z) {
            TrainSample s;
            nn::Tensor in(in_channels, static_cast<int>(rec.std_rows),
                          static_cast<int>(rec.std_cols));
            for (int ch = 0; ch < in_channels; ++ch) {
                const long src_z = std::clamp<long>(static_cast<long>(z) + ch - in_channels / 2, 0,
                                                    static_cast<long>(nz) - 1);
                const Image2D& img = in_std[static_cast<std::size_t>(src_z)];
                std::copy(img.v.begin(), img.v.end(), in.plane(ch));
            }
            const Image2D tg_std = standardize_with_record(volume_slice(tg_vol, z), rec);
            s.input = detail::pad_to_multiple(in, pad_multiple);
            s.target = detail::pad_to_multiple(detail::image_to_tensor(tg_std), pad_multiple);
            s.ctx = r.ctx;
            s.ctx[13] = in_channels == 7 ? 1.0 : 0.0;  // pulse_dim slot follows the model variant
            samples.push_back(std::move(s));
        }
    }
    return samples;
}

}  // namespace mrtk
