// Acceptance suite: ten end-to-end properties, one pass/fail line each.
// Exits 0 iff every criterion passes.

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

#include "mrtk/mrtk.hpp"

using namespace mrtk;
namespace fs = std::filesystem;

namespace {

int g_failures = 0;

void report(int idx, const std::string& name, bool pass, const std::string& detail) {
    std::cout << "criterion " << idx << " (" << name << "): " << (pass ? "PASS" : "FAIL");
    if (!detail.empty()) std::cout << " [" << detail << "]";
    std::cout << std::endl;
    if (!pass) ++g_failures;
}

template <typename F>
void run(int idx, const std::string& name, F&& fn) {
    const auto t0 = std::chrono::steady_clock::now();
    bool pass = false;
    std::string detail;
    try {
        pass = fn(detail);
    } catch (const std::exception& e) {
        detail = std::string("exception: ") + e.what();
    }
    const auto secs =
        std::chrono::duration_cast<std::chrono::seconds>(std::chrono::steady_clock::now() - t0);
    std::cerr << "  [criterion " << idx << " took " << secs.count() << "s]\n";
    report(idx, name, pass, detail);
}

std::string work_dir(const std::string& name) {
    const auto d = fs::temp_directory_path() / "mrtk_acceptance" / name;
    fs::remove_all(d);
    fs::create_directories(d);
    return d.string();
}

double spearman(const std::vector<double>& a, const std::vector<double>& b) {
    auto ranks = [](const std::vector<double>& v) {
        std::vector<double> r(v.size());
        for (std::size_t i = 0; i < v.size(); ++i)
            for (std::size_t j = 0; j < v.size(); ++j)
                if (v[j] < v[i] || (v[j] == v[i] && j < i)) r[i] += 1.0;
        return r;
    };
    const auto ra = ranks(a), rb = ranks(b);
    const double n = static_cast<double>(a.size());
    double d2 = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) d2 += (ra[i] - rb[i]) * (ra[i] - rb[i]);
    return 1.0 - 6.0 * d2 / (n * (n * n - 1.0));
}

PhantomSpec basic_phantom() {
    PhantomSpec ph;
    ph.ellipsoids.push_back({{0.0, 0.0, 0.0}, {0.72, 0.85, 0.72}, {0, 0, 0}, 1.0});
    ph.ellipsoids.push_back({{0.2, 0.15, 0.0}, {0.25, 0.3, 0.35}, {0.4, 0, 0}, 0.6});
    ph.ellipsoids.push_back({{-0.3, -0.2, 0.1}, {0.15, 0.2, 0.2}, {0, 0.3, 0}, -0.4});
    ph.phase_poly = {0.2, 0.8, -0.5, 0.3, 0.2, 0.0, 0.0, -0.4, 0.3, 0.0};
    ph.edge_softening = 1.0;
    return ph;
}

// --- criterion 1: analytic vs pseudo-replica NRF on the 16-scenario grid ------------

bool crit_nrf_oracle(std::string& detail) {
    const Shape3 dims{32, 32, 32};
    const CoilImages sens = coil_sensitivities(CoilProfileSpec{4, 0.9, 1.0, true}, dims);
    const double fracs[] = {1.0, 0.75, 0.5, 0.25};
    const double ratios[] = {0.0, 1.0, std::sqrt(3.0), 2.0};
    double worst = 0.0;
    std::uint64_t seed = 1;
    for (double f : fracs)
        for (double r : ratios) {
            DegradationPlan d;
            d.kmax_fraction[1] = f;
            d.noise_add_ratio = r;
            ReconPlan rp;
            const double an = derive_nrf_analytic(d, rp, dims, 0.01);
            const NrfEstimate mc = derive_nrf_pseudoreplica(d, rp, dims, sens, 0.01, 500, seed++);
            worst = std::max(worst, std::abs(mc.nrf - an) / an);
        }
    std::ostringstream os;
    os << "max relative deviation " << worst << " over 16 scenarios (tolerance 0.03)";
    detail = os.str();
    return worst < 0.03;
}

// --- criterion 2: tunable denoising ordering ----------------------------------------

bool crit_tunable_denoising(std::string& detail) {
    const std::string dir = work_dir("denoise_data");

    RawSourceSpec src;
    src.phantom = basic_phantom();
    src.coils = CoilProfileSpec{2, 0.9, 1.0, true};
    src.dims = {64, 64, 8};
    src.sigma0_min = 0.008;
    src.sigma0_max = 0.02;
    src.jitter = 0.15;

    // noise ratio plus factors that move the label without moving any other
    // context slot (window) or only a slice slot (kmax_s), so the label slot
    // carries information the input alone cannot provide
    ScenarioDistribution dist;
    dist.dims = src.dims;
    dist.p_noise = 1.0;
    dist.r_min = 0.0;
    dist.r_max = std::sqrt(8.0);  // label up to sqrt(1 + 8) = 3
    dist.p_kmax = 0.5;
    dist.kmax_axes = {false, false, true};
    dist.kmax_min = 0.3;
    dist.kmax_max = 1.0;
    dist.p_window = 0.5;
    dist.window_alpha = 0.5;

    std::cerr << "  generating 250 volumes...\n";
    generate_dataset(src, dist, 250, 1001, dir);
    auto samples = load_training_samples(dir, 64, true, 4, 1);
    std::cerr << "  training on " << samples.size() << " slice samples\n";

    CEUNet net(UNetSpec{2, 8, 1, nn::PadMode::zero}, DMPSpec{}, 2002);
    TrainConfig cfg;
    cfg.seed = 3003;
    const auto history = train(net, samples, cfg);
    for (std::size_t e = 0; e < history.size(); ++e)
        std::cerr << "    epoch " << e << " loss " << history[e] << "\n";
    samples.clear();
    samples.shrink_to_fit();

    // held-out evaluation phantom: homogeneous center region
    RawSourceSpec eval_src;
    eval_src.phantom.ellipsoids.push_back({{0, 0, 0}, {0.8, 0.8, 0.8}, {0, 0, 0}, 1.0});
    eval_src.phantom.edge_softening = 1.0;
    eval_src.coils = src.coils;
    eval_src.dims = src.dims;
    eval_src.sigma0_min = eval_src.sigma0_max = 0.012;

    Scenario sc;
    sc.degradation.noise_add_ratio = 2.0;
    const TrainingPair pair = generate_pair(eval_src, sc, 5005, "eval");
    const SliceMeta sm = slice_meta_from_json(pair.input.meta.at("slice_meta"));
    const ScanContext base = ScanContext::from_plans(sc.degradation, sc.recon, 2);

    const CircularROI in_roi{src.dims.nz / 2, 31.5, 31.5, 10.0};
    const RoiStats in_stats = roi_stats(pair.input, in_roi);

    const double factors[] = {1.0, 1.5, 2.0, 2.5, 3.0};
    std::vector<double> stds, ratios_measured, req;
    double worst_drift = 0.0;
    for (double k : factors) {
        const RealVolume out = infer_volume(net, pair.input, sm, base, k, 64);
        const double scale = static_cast<double>(out.shape.nx) / 64.0;
        const CircularROI roi{out.shape.nz / 2, (out.shape.nx - 1) / 2.0,
                              (out.shape.ny - 1) / 2.0, 10.0 * scale};
        const RoiStats s = roi_stats(out, roi);
        stds.push_back(s.std);
        ratios_measured.push_back(in_stats.std / s.std);
        req.push_back(k);
        worst_drift = std::max(worst_drift, std::abs(s.mean - in_stats.mean) / in_stats.mean);
        std::cerr << "    nrf " << k << ": roi std " << s.std << ", mean " << s.mean
                  << " (input std " << in_stats.std << ", mean " << in_stats.mean << ")\n";
    }
    bool strictly_decreasing = true;
    for (std::size_t i = 0; i + 1 < stds.size(); ++i)
        if (!(stds[i + 1] < stds[i])) strictly_decreasing = false;
    const double rho = spearman(req, ratios_measured);

    std::ostringstream os;
    os << (strictly_decreasing ? "std strictly decreasing" : "std NOT strictly decreasing")
       << "; mean drift " << worst_drift << " (tol 0.05); Spearman " << rho << " (min 0.9)";
    detail = os.str();
    return strictly_decreasing && worst_drift < 0.05 && rho >= 0.9;
}

// --- criterion 3: multi-dimensional enhancement ordering ----------------------------

bool crit_multidim_enhancement(std::string& detail) {
    RawSourceSpec src;
    src.phantom = basic_phantom();
    // extra interior structure so restoration loss is carried by many edges
    src.phantom.ellipsoids.push_back({{-0.15, 0.35, -0.25}, {0.12, 0.1, 0.14}, {0.2, 0, 0.5}, 0.5});
    src.phantom.ellipsoids.push_back({{0.4, -0.35, -0.1}, {0.1, 0.14, 0.12}, {0, 0.6, 0}, -0.5});
    src.phantom.ellipsoids.push_back({{0.0, -0.1, 0.35}, {0.2, 0.12, 0.1}, {0.3, 0.3, 0}, 0.45});
    src.coils = CoilProfileSpec{2, 0.9, 1.0, true};
    src.dims = {32, 32, 16};
    src.sigma0_min = 0.008;
    src.sigma0_max = 0.02;
    src.jitter = 0.12;
    // per-pair edge softening so true edge width is not inferable from the
    // image alone and the context slots stay informative
    src.softening_min = 0.5;
    src.softening_max = 2.0;

    // Contrastive scenario sets: each volume seed is degraded under several
    // scenarios that differ only in which axes carry a true kmax/PF cut
    // (restore) versus a recon-side Hann window (leave alone). The window is
    // not represented in the context vector, so the context slots are the
    // only reliable cue for which axes to restore.
    const double km = 0.5;
    auto make_scenario = [&](bool kf, bool kp, bool ks, bool pfp, std::array<bool, 3> win,
                             double r) {
        Scenario s;
        s.degradation.noise_add_ratio = r;
        if (kf) s.degradation.kmax_fraction[0] = km;
        if (kp) s.degradation.kmax_fraction[1] = km;
        if (ks) s.degradation.kmax_fraction[2] = km;
        if (pfp) {
            s.degradation.pf_fraction[1] = 0.75;
            s.recon.pf = PfMode::zero_fill;
        }
        if (win[0] || win[1] || win[2]) s.recon.window = WindowSpec{1.0, win};
        s.pulse_dim = 3;
        return s;
    };

    std::vector<TrainSample> samples;
    auto add_pair = [&](const TrainingPair& pr) {
        const SliceMeta psm = slice_meta_from_json(pr.input.meta.at("slice_meta"));
        const std::size_t nz = pr.input.shape.nz;
        const auto [mid_std, rec] = standardize(volume_slice(pr.input, nz / 2), psm, 32);
        (void)mid_std;
        std::vector<Image2D> in_std(nz);
        for (std::size_t z = 0; z < nz; ++z)
            in_std[z] = standardize_with_record(volume_slice(pr.input, z), rec);
        for (std::size_t z = 0; z < nz; ++z) {
            TrainSample s;
            nn::Tensor in(7, static_cast<int>(rec.std_rows), static_cast<int>(rec.std_cols));
            for (int ch = 0; ch < 7; ++ch) {
                const long sz = std::clamp<long>(static_cast<long>(z) + ch - 3, 0,
                                                 static_cast<long>(nz) - 1);
                const Image2D& img = in_std[static_cast<std::size_t>(sz)];
                std::copy(img.v.begin(), img.v.end(), in.plane(ch));
            }
            const Image2D tg = standardize_with_record(volume_slice(pr.target, z), rec);
            s.input = detail::pad_to_multiple(in, 4);
            s.target = detail::pad_to_multiple(detail::image_to_tensor(tg), 4);
            s.ctx = pr.ctx;
            s.ctx[13] = 1.0;
            samples.push_back(std::move(s));
        }
    };
    const std::size_t n_vols = 24;
    std::cerr << "  generating " << n_vols << " contrastive volume sets...\n";
    for (std::size_t v = 0; v < n_vols; ++v) {
        CounterRng rng(derive_seed(31000, v, 0x65787035));
        const std::uint64_t seed = derive_seed(8000, v, 0x766f6c);
        int si = 0;
        auto emit = [&](bool kf, bool kp, bool ks, bool pfp, std::array<bool, 3> win) {
            // half the pairs are near-clean so the conditional-restoration
            // term dominates their loss; the rest spread the noise ratio
            // log-uniformly so the nrf label covers [~0.3, 3]
            const double r = (si % 2 == 0) ? rng.uniform(0.05, 0.3)
                                           : 0.3 * std::exp(rng.uniform() * std::log(2.83 / 0.3));
            const Scenario sc = make_scenario(kf, kp, ks, pfp, win, r);
            add_pair(generate_pair(src, sc, seed,
                                   "v" + std::to_string(v) + "s" + std::to_string(si++)));
        };
        emit(false, false, false, false, {true, true, true});   // windows only
        emit(true, false, false, false, {false, true, true});   // restore f
        emit(false, true, false, false, {true, false, true});   // restore p
        emit(false, false, true, false, {true, true, false});   // restore s
        emit(false, false, false, true, {true, false, true});   // restore pf (phase)
        emit(true, true, false, true, {false, false, true});    // f+p+pf
        emit(true, true, true, true, {false, false, false});    // eval combo
        emit(false, false, false, false, {false, false, false});  // clean + noise
    }
    std::cerr << "  training on " << samples.size() << " slice samples\n";
    CEUNet net(UNetSpec{2, 8, 7, nn::PadMode::zero}, DMPSpec{}, 2024);
    // Context-conditioned restoration emerges slowly: repeat the two-stage
    // schedule with reshuffled epochs until the slot responses stabilize.
    // Training runs as resumable stages; each stage ends with a checkpoint
    // save/reload, so the weights pass through the f32 checkpoint format at
    // stage boundaries exactly as they would in a stop-and-resume pipeline.
    const std::vector<std::vector<std::uint64_t>> stages = {
        {4004}, {5004, 5005, 5006}, {5004, 5005}};
    const std::string ckpt = work_dir("enhance_ckpt") + "/net.mrp";
    std::vector<double> history;
    for (const auto& stage : stages) {
        for (std::uint64_t rs : stage) {
            TrainConfig cfg;
            cfg.seed = rs;
            const auto h = train(net, samples, cfg);
            history.insert(history.end(), h.begin(), h.end());
            std::cerr << "    round seed " << rs << " final loss " << h.back() << "\n";
        }
        save_checkpoint(ckpt, net, TrainConfig{}, history, json::object());
        net = load_checkpoint(ckpt);
    }
    samples.clear();
    samples.shrink_to_fit();

    // held-out sphere degraded along every axis at once, low added noise
    RawSourceSpec eval_src;
    eval_src.phantom.ellipsoids.push_back({{0, 0, 0}, {0.75, 0.75, 0.75}, {0, 0, 0}, 1.0});
    eval_src.phantom.edge_softening = 0.6;
    eval_src.coils = src.coils;
    eval_src.dims = src.dims;
    eval_src.sigma0_min = eval_src.sigma0_max = 0.01;

    Scenario sc;
    sc.degradation.noise_add_ratio = 0.25;
    sc.degradation.kmax_fraction = {km, km, km};
    sc.degradation.pf_fraction[1] = 0.75;
    sc.recon.pf = PfMode::zero_fill;
    sc.pulse_dim = 3;
    const TrainingPair pair = generate_pair(eval_src, sc, 9009, "eval3d");
    const SliceMeta sm = slice_meta_from_json(pair.input.meta.at("slice_meta"));

    // five context vectors, enabling one degradation slot at a time
    auto make_ctx = [&](bool f, bool pfp, bool p, bool s) {
        ScanContext c;
        c.noise_add_ratio = 0.25;
        c.pulse_dim = 3;
        if (f) c.kmax_fraction[0] = km;
        if (pfp) c.pf_fraction[1] = 0.75;
        if (p) c.kmax_fraction[1] = km;
        if (s) c.kmax_fraction[2] = km;
        return c;
    };
    const ScanContext ctxs[5] = {make_ctx(false, false, false, false),
                                 make_ctx(true, false, false, false),
                                 make_ctx(true, true, false, false),
                                 make_ctx(true, true, true, false),
                                 make_ctx(true, true, true, true)};
    std::vector<RealVolume> outs;
    for (const auto& c : ctxs) outs.push_back(infer_volume(net, pair.input, sm, c, 3.0, 32));

    const std::size_t nz = outs[0].shape.nz;
    const std::size_t rows = outs[0].shape.nx, cols = outs[0].shape.ny;
    const double rm = (rows - 1) / 2.0, cm = (cols - 1) / 2.0;
    const Image2D ref_mid = volume_slice(outs[0], nz / 2);
    auto slice_plane = [&](const RealVolume& v) {
        // (slice, frequency) plane through the volume center
        Image2D p(nz, rows);
        const std::size_t c_mid = cols / 2;
        for (std::size_t z = 0; z < nz; ++z)
            for (std::size_t r = 0; r < rows; ++r) p.at(z, r) = v.at(r, c_mid, z);
        return p;
    };
    const Image2D ref_plane = slice_plane(outs[0]);

    // sharpness per axis, averaged over three parallel profiles through the
    // sphere so a single line's idiosyncrasies do not dominate
    const double offs[3] = {-4.0, 0.0, 4.0};
    auto s_f = [&](int k) {
        const Image2D img = volume_slice(outs[k], nz / 2);
        double acc = 0.0;
        for (double o : offs)
            acc += edge_sharpness(
                ref_mid, img,
                LineProfile{0.0, cm + o, static_cast<double>(rows - 1), cm + o, rows});
        return acc / 3.0;
    };
    auto s_p = [&](int k) {
        const Image2D img = volume_slice(outs[k], nz / 2);
        double acc = 0.0;
        for (double o : offs)
            acc += edge_sharpness(
                ref_mid, img,
                LineProfile{rm + o, 0.0, rm + o, static_cast<double>(cols - 1), cols});
        return acc / 3.0;
    };
    auto s_s = [&](int k) {
        const Image2D img = slice_plane(outs[k]);
        double acc = 0.0;
        for (double o : offs)
            acc += edge_sharpness(ref_plane, img,
                                  LineProfile{0.0, rm + o, static_cast<double>(nz - 1), rm + o,
                                              std::max<std::size_t>(nz, 8)});
        return acc / 3.0;
    };

    const double f1 = s_f(0), f2 = s_f(1);
    const double p2 = s_p(1), p3 = s_p(2), p4 = s_p(3);
    const double sl4 = s_s(3), sl5 = s_s(4);
    std::cerr << "    frequency sharpness v1->v2: " << f1 << " -> " << f2 << "\n";
    std::cerr << "    phase sharpness v2->v3->v4: " << p2 << " -> " << p3 << " -> " << p4 << "\n";
    std::cerr << "    slice sharpness v4->v5: " << sl4 << " -> " << sl5 << "\n";

    const bool ok = f2 >= f1 && p3 >= p2 && p4 >= p3 && sl5 >= sl4;
    std::ostringstream os;
    os << "freq " << f1 << "->" << f2 << ", phase " << p2 << "->" << p3 << "->" << p4
       << ", slice " << sl4 << "->" << sl5 << " (each transition non-decreasing)";
    detail = os.str();
    return ok;
}

// --- criterion 4: SENSE exactness ----------------------------------------------------

bool crit_sense_exact(std::string& detail) {
    const Shape3 dims{32, 32, 8};
    PhantomSpec ph = basic_phantom();
    const ImageVolume obj = rasterize_phantom(ph, dims);
    const CoilImages sens = coil_sensitivities(CoilProfileSpec{8, 0.9, 1.0, true}, dims);
    const KSpaceVolume raw = synthesize_kspace(obj, sens, 0.0, 0);

    DegradationPlan d;
    d.uniform = UniformParams{Axis::phase, 2, 0};
    const SamplingMask mask = build_plan_mask(d, dims);
    ReconPlan rp;
    rp.sense = SenseSpec{Axis::phase, 2};
    const RealVolume rec = run_recon_pipeline(apply_mask(raw, mask), mask, rp, sens);

    double mx = 0.0, err = 0.0;
    for (std::size_t i = 0; i < obj.data.size(); ++i) {
        mx = std::max(mx, std::abs(obj.data[i]));
        err = std::max(err, std::abs(rec.data[i] - std::abs(obj.data[i])));
    }
    std::ostringstream os;
    os << "max abs error " << err << " vs bound " << 1e-6 * mx;
    detail = os.str();
    return err < 1e-6 * mx;
}

// --- criterion 5: POCS beats zero-fill on 20 random phantoms ------------------------

bool crit_pocs_superiority(std::string& detail) {
    const Shape3 dims{16, 32, 8};
    int wins = 0;
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        CounterRng rng(seed, 0x70687370);
        PhantomSpec ph;
        ph.ellipsoids.push_back({{0, 0, 0},
                                 {rng.uniform(0.5, 0.8), rng.uniform(0.5, 0.8), rng.uniform(0.5, 0.8)},
                                 {0, 0, 0},
                                 1.0});
        ph.ellipsoids.push_back({{rng.uniform(-0.25, 0.25), rng.uniform(-0.25, 0.25), 0.0},
                                 {0.2, 0.25, 0.3},
                                 {rng.uniform(0.0, 0.6), 0, 0},
                                 rng.uniform(0.3, 0.8)});
        ph.phase_poly = {rng.uniform(-0.3, 0.3), rng.uniform(-0.8, 0.8), rng.uniform(-0.5, 0.5),
                         rng.uniform(-0.3, 0.3), rng.uniform(-0.3, 0.3), 0.0,
                         0.0, rng.uniform(-0.3, 0.3), rng.uniform(-0.3, 0.3), 0.0};
        ph.edge_softening = 1.0;
        const ImageVolume obj = rasterize_phantom(ph, dims);
        const CoilImages sens = coil_sensitivities(CoilProfileSpec{4, 0.9, 1.0, true}, dims);
        const KSpaceVolume raw = synthesize_kspace(obj, sens, 0.0, 0);

        DegradationPlan d;
        d.pf_fraction[1] = 0.75;
        const SamplingMask mask = build_plan_mask(d, dims);
        const KSpaceVolume und = apply_mask(raw, mask);

        const RealVolume truth = run_recon_pipeline(raw, full_mask(dims), ReconPlan{}, sens);
        ReconPlan zf;
        zf.pf = PfMode::zero_fill;
        ReconPlan pc;
        pc.pf = PfMode::pocs;
        const RealVolume rec_zf = run_recon_pipeline(und, mask, zf, sens);
        const RealVolume rec_pc = run_recon_pipeline(und, mask, pc, sens);
        auto l2 = [&](const RealVolume& a) {
            double s = 0.0;
            for (std::size_t i = 0; i < a.data.size(); ++i)
                s += (a.data[i] - truth.data[i]) * (a.data[i] - truth.data[i]);
            return std::sqrt(s);
        };
        if (l2(rec_pc) < l2(rec_zf)) ++wins;
    }
    detail = std::to_string(wins) + "/20 phantoms with lower L2 error under POCS";
    return wins == 20;
}

// --- criterion 6: gradient correctness on 50 parameters per net ---------------------

bool crit_gradients(std::string& detail) {
    double worst = 0.0;
    for (const int in_ch : {1, 7}) {
        CEUNet net(UNetSpec{2, 8, in_ch, nn::PadMode::zero}, DMPSpec{}, 31 + in_ch);
        CounterRng rng(7);
        for (auto& p : net.store().params) p += 0.05 * rng.normal();

        nn::Tensor in(in_ch, 8, 8), ref(1, 8, 8);
        for (auto& v : in.v) v = 0.5 * rng.normal();
        for (auto& v : ref.v) v = 0.5 * rng.normal();
        ScanContext sc;
        sc.kmax_fraction = {0.75, 0.5, 1.0};
        sc.noise_add_ratio = 1.5;
        sc.pulse_dim = in_ch == 7 ? 3 : 2;
        const ContextVector ctx = encode_context(sc, 2.0);

        auto loss_of = [&]() {
            const nn::Tensor out = net.forward(in, ctx);
            double s = 0.0;
            for (std::size_t i = 0; i < out.v.size(); ++i)
                s += (out.v[i] - ref.v[i]) * (out.v[i] - ref.v[i]);
            return s;
        };
        CEUNet::Cache cache;
        const nn::Tensor out = net.forward(in, ctx, &cache);
        nn::Tensor grad(1, 8, 8);
        for (std::size_t i = 0; i < grad.v.size(); ++i) grad.v[i] = 2.0 * (out.v[i] - ref.v[i]);
        net.store().zero_grads();
        net.backward(cache, grad);

        auto& params = net.store().params;
        const std::size_t n = params.size();
        // 40 parameters anywhere plus 10 from the modulation-pathway tail
        std::vector<std::size_t> picks;
        CounterRng pick(13);
        for (int i = 0; i < 40; ++i) picks.push_back(pick.index(n));
        const std::size_t dmp_tail = 4000;
        for (int i = 0; i < 10; ++i) picks.push_back(n - 1 - pick.index(dmp_tail));

        const double eps = 1e-5;
        for (const std::size_t i : picks) {
            const double save = params[i];
            params[i] = save + eps;
            const double lp = loss_of();
            params[i] = save - eps;
            const double lm = loss_of();
            params[i] = save;
            const double fd = (lp - lm) / (2 * eps);
            const double an = net.store().grads[i];
            if (std::abs(fd) + std::abs(an) < 1e-10) continue;  // dead activation path
            worst = std::max(worst, std::abs(fd - an) / std::max(1e-8, std::abs(fd) + std::abs(an)));
        }
    }
    std::ostringstream os;
    os << "max relative gradient error " << worst << " (tolerance 1e-4)";
    detail = os.str();
    return worst < 1e-4;
}

// --- criterion 7: Parseval on 100 random volumes --------------------------------------

bool crit_parseval(std::string& detail) {
    double worst = 0.0;
    for (std::uint64_t s = 0; s < 100; ++s) {
        ImageVolume img({16, 16, 16});
        CounterRng rng(s, 0x70617273);
        for (auto& v : img.data) v = rng.cnormal(1.0);
        const KSpaceVolume k = fft_centered(img);
        double ei = 0.0, ek = 0.0;
        for (const auto& v : img.data) ei += std::norm(v);
        for (const auto& v : k.data) ek += std::norm(v);
        worst = std::max(worst, std::abs(ei - ek) / ei);
    }
    std::ostringstream os;
    os << "max relative energy mismatch " << worst << " (tolerance 1e-9)";
    detail = os.str();
    return worst < 1e-9;
}

// --- criterion 8: byte-identical pairgen at --jobs 1 and --jobs 8 ---------------------

bool crit_pairgen_determinism(std::string& detail) {
    const char* cli = std::getenv("MRTK_CLI_PATH");
    if (!cli) {
        detail = "MRTK_CLI_PATH not set";
        return false;
    }
    const std::string dir_a = work_dir("det_jobs1");
    const std::string dir_b = work_dir("det_jobs8");
    const std::string common =
        std::string(cli) +
        " pairgen --seed 11 --n 16"
        " --set 'dims=[16,16,8]' --set jitter=0.1 --set sigma0_min=0.008 --set sigma0_max=0.02"
        " --set scenario_distribution.p_uniform=0.3 --set scenario_distribution.p_kmax=0.5"
        " --set scenario_distribution.p_pf=0.5 --set scenario_distribution.p_window=0.5"
        " --set scenario_distribution.prob_3d=0.5";
    if (std::system((common + " --jobs 1 --out " + dir_a).c_str()) != 0) {
        detail = "pairgen --jobs 1 failed";
        return false;
    }
    if (std::system((common + " --jobs 8 --out " + dir_b).c_str()) != 0) {
        detail = "pairgen --jobs 8 failed";
        return false;
    }

    auto tree = [](const std::string& root) {
        std::map<std::string, std::vector<char>> files;
        for (const auto& e : fs::recursive_directory_iterator(root)) {
            if (!e.is_regular_file()) continue;
            std::ifstream in(e.path(), std::ios::binary);
            files[fs::relative(e.path(), root).string()] =
                std::vector<char>(std::istreambuf_iterator<char>(in), {});
        }
        return files;
    };
    const auto a = tree(dir_a), b = tree(dir_b);
    std::size_t n_files = a.size();
    const bool same = a == b;
    std::ostringstream os;
    os << n_files << " files compared, " << (same ? "byte-identical" : "MISMATCH");
    detail = os.str();
    return same && n_files == 33;  // 16 pairs x 2 volumes + manifest
}

// --- criterion 9: metric sanity --------------------------------------------------------

bool crit_metric_sanity(std::string& detail) {
    Image2D sharp(16, 32), blurred(16, 32);
    for (std::size_t r = 0; r < 16; ++r)
        for (std::size_t c = 0; c < 32; ++c) {
            sharp.at(r, c) = c >= 16 ? 1.0 : 0.0;
            const double a = c >= 17 ? 1.0 : 0.0;
            const double b = c >= 16 ? 1.0 : 0.0;
            const double d = c >= 15 ? 1.0 : 0.0;
            blurred.at(r, c) = (a + b + d) / 3.0;
        }
    const double ratio = edge_sharpness(blurred, sharp, LineProfile{8.0, 0.0, 8.0, 31.0, 32});

    const Shape3 s{64, 64, 1};
    RealVolume orig(s), proc(s);
    CounterRng rng(17);
    for (auto& v : orig.data) v = 1.0 + 0.2 * rng.normal();
    for (auto& v : proc.data) v = 1.0 + 0.1 * rng.normal();
    const double rel = relative_noise(orig, proc, CircularROI{0, 31.5, 31.5, 16.0});

    std::ostringstream os;
    os << "edge sharpness " << ratio << " (want 3.0 +/- 10%), relative noise " << rel
       << " (want 2.0 +/- 5%)";
    detail = os.str();
    return std::abs(ratio - 3.0) <= 0.3 && std::abs(rel - 2.0) <= 0.1;
}

// --- criterion 10: standardization invariance -----------------------------------------

bool crit_standardize_invariance(std::string& detail) {
    const SliceMeta meta{"row", 1.0, 1.0, 2};
    double worst_std = 0.0, worst_range = 0.0;
    CounterRng rng(23);
    for (int trial = 0; trial < 100; ++trial) {
        Image2D img(40, 64);
        CounterRng content(1000 + static_cast<std::uint64_t>(trial));
        for (auto& v : img.v) v = content.uniform(1.0, 2.0);
        const double a = rng.uniform(0.05, 20.0);
        const double b = rng.uniform(-5.0, 5.0);
        Image2D scaled = img;
        for (auto& v : scaled.v) v = a * v + b;

        const auto [sa, ra] = standardize(img, meta, 64);
        const auto [sb, rb] = standardize(scaled, meta, 64);
        for (std::size_t i = 0; i < sa.v.size(); ++i)
            worst_std = std::max(worst_std, std::abs(sa.v[i] - sb.v[i]));

        // dynamic range restoration (no crop and no resize fire here)
        const Image2D back = destandardize(sb, rb);
        const auto [mn0, mx0] = std::minmax_element(scaled.v.begin(), scaled.v.end());
        const auto [mn1, mx1] = std::minmax_element(back.v.begin(), back.v.end());
        worst_range = std::max(
            worst_range, std::abs((*mx1 - *mn1) - (*mx0 - *mn0)) / std::abs(*mx0 - *mn0));
    }
    std::ostringstream os;
    os << "max standardized diff " << worst_std << " (tol 1e-6), max range error " << worst_range
       << " (tol 1e-6)";
    detail = os.str();
    return worst_std < 1e-6 && worst_range < 1e-6;
}

}  // namespace

int main(int argc, char** argv) {
    // optional arguments: criterion numbers to run (default: all ten)
    std::vector<int> only;
    for (int i = 1; i < argc; ++i) only.push_back(std::atoi(argv[i]));
    auto wanted = [&](int idx) {
        return only.empty() || std::find(only.begin(), only.end(), idx) != only.end();
    };
    std::cout << "acceptance suite\n";
    if (wanted(1)) run(1, "NRF oracle agreement", crit_nrf_oracle);
    if (wanted(2)) run(2, "tunable denoising ordering", crit_tunable_denoising);
    if (wanted(3)) run(3, "multi-dimensional enhancement ordering", crit_multidim_enhancement);
    if (wanted(4)) run(4, "SENSE exactness", crit_sense_exact);
    if (wanted(5)) run(5, "POCS superiority", crit_pocs_superiority);
    if (wanted(6)) run(6, "gradient correctness", crit_gradients);
    if (wanted(7)) run(7, "unitarity (Parseval)", crit_parseval);
    if (wanted(8)) run(8, "pairgen determinism across worker counts", crit_pairgen_determinism);
    if (wanted(9)) run(9, "metric sanity", crit_metric_sanity);
    if (wanted(10)) run(10, "standardization invariance", crit_standardize_invariance);
    std::cout << (g_failures == 0 ? "ALL CRITERIA PASSED" : "FAILURES: ")
              << (g_failures == 0 ? "" : std::to_string(g_failures)) << std::endl;
    return g_failures == 0 ? 0 : 1;
}
