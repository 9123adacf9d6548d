// mrtk: deterministic MR reconstruction and denoising toolkit CLI.
// Exit codes: 0 success, 2 usage error, 3 validation error, 4 numeric failure.

#include <iostream>

#include <CLI11.hpp>

#include "mrtk/mrtk.hpp"

namespace {

using namespace mrtk;

struct CommonOpts {
    std::uint64_t seed = 0;
    std::string config_path;
    std::string out;
    std::vector<std::string> overrides;
};

void add_common(CLI::App* cmd, CommonOpts& c) {
    cmd->add_option("--seed", c.seed, "master random seed");
    cmd->add_option("--config", c.config_path, "JSON config file");
    cmd->add_option("--out", c.out, "output path");
    cmd->add_option("--set", c.overrides, "dotted-path config override, e.g. train.lr0=0.0005");
}

json resolve_config(const CommonOpts& c) {
    json doc = c.config_path.empty() ? default_config() : load_config(c.config_path);
    for (const auto& o : c.overrides) apply_override(doc, o);
    return doc;
}

RawSourceSpec raw_source_from_config(const json& doc) {
    RawSourceSpec src;
    src.phantom = phantom_from_json(doc.at("phantom"));
    src.coils = coils_from_json(doc.at("coils"));
    src.dims = dims_from_config(doc);
    const double s0 = doc.value("sigma0", 0.01);
    src.sigma0_min = doc.value("sigma0_min", s0);
    src.sigma0_max = doc.value("sigma0_max", s0);
    src.jitter = doc.value("jitter", 0.0);
    src.softening_min = doc.value("softening_min", 0.0);
    src.softening_max = doc.value("softening_max", 0.0);
    return src;
}

// --- phantom -----------------------------------------------------------------

int cmd_phantom(const CommonOpts& c) {
    if (c.out.empty()) throw ValidationError("phantom: --out is required");
    const json doc = resolve_config(c);
    const Shape3 dims = dims_from_config(doc);
    const PhantomSpec ph = phantom_from_json(doc.at("phantom"));
    const CoilProfileSpec cp = coils_from_json(doc.at("coils"));
    const double sigma0 = doc.value("sigma0", 0.01);

    const ImageVolume obj = rasterize_phantom(ph, dims);
    const CoilImages sens = coil_sensitivities(cp, dims);
    const KSpaceVolume raw = synthesize_kspace(obj, sens, sigma0, c.seed);
    write_kspace(c.out, raw, json{{"sigma0", sigma0}, {"coils", to_json(cp)}});
    return 0;
}

// --- degrade -----------------------------------------------------------------

int cmd_degrade(const CommonOpts& c, const std::string& in_path) {
    if (c.out.empty()) throw ValidationError("degrade: --out is required");
    const json doc = resolve_config(c);
    KSpaceVolume raw = read_kspace(in_path);
    DegradationPlan plan = degradation_from_json(doc.at("degradation"));
    if (plan.random) plan.random->seed = derive_seed(c.seed, 0, 0x726d736b);
    const json in_meta = mrv::read_file(in_path).meta;
    const double sigma0 = in_meta.value("sigma0", doc.value("sigma0", 0.01));

    SamplingMask mask;
    const KSpaceVolume deg = degrade(raw, plan, sigma0, derive_seed(c.seed, 1, 0x646567), &mask);
    json meta = in_meta;
    meta["degradation"] = to_json(plan);
    meta["retained_samples"] = mask.retained();
    write_kspace(c.out, deg, meta);
    return 0;
}

// --- recon --------------------------------------------------------------------

int cmd_recon(const CommonOpts& c, const std::string& in_path, const std::string& dump_dir) {
    if (c.out.empty()) throw ValidationError("recon: --out is required");
    const json doc = resolve_config(c);
    const KSpaceVolume ksp = read_kspace(in_path);
    const json in_meta = mrv::read_file(in_path).meta;
    const ReconPlan plan = recon_from_json(doc.at("recon"));

    const SamplingMask mask = in_meta.contains("degradation")
                                  ? build_plan_mask(degradation_from_json(in_meta.at("degradation")),
                                                    ksp.shape)
                                  : full_mask(ksp.shape);
    CoilProfileSpec cp = coils_from_json(doc.at("coils"));
    cp.ncoils = ksp.ncoils;
    const CoilImages sens = coil_sensitivities(cp, ksp.shape);

    StageRecorder stages;
    RealVolume img = run_recon_pipeline(ksp, mask, plan, sens, dump_dir.empty() ? nullptr : &stages);
    SliceMeta sm;
    sm.phase_encode_direction = "column";
    img.meta = {{"slice_meta", slice_meta_to_json(sm)}, {"recon", to_json(plan)}};
    if (in_meta.contains("degradation")) img.meta["degradation"] = in_meta.at("degradation");
    write_real_volume(c.out, img);

    if (!dump_dir.empty()) {
        std::filesystem::create_directories(dump_dir);
        for (const auto& [name, k] : stages.kspaces) write_kspace(dump_dir + "/" + name + ".mrv", k);
        for (const auto& [name, im] : stages.images)
            write_complex_image(dump_dir + "/" + name + ".mrv", im);
    }
    return 0;
}

// --- nrf ------------------------------------------------------------------------

int cmd_nrf(const CommonOpts& c, int replicas, bool analytic_only) {
    const json doc = resolve_config(c);
    const Shape3 dims = dims_from_config(doc);
    DegradationPlan plan = degradation_from_json(doc.at("degradation"));
    if (plan.random) plan.random->seed = derive_seed(c.seed, 0, 0x726d736b);
    const ReconPlan rplan = recon_from_json(doc.at("recon"));
    const double sigma0 = doc.value("sigma0", 0.01);

    const SamplingMask mask = build_plan_mask(plan, dims);
    const double f = retained_fraction(mask, rplan.window);
    const double nrf_an = derive_nrf_for_scenario(plan, rplan, dims);

    std::ostringstream csv;
    csv << "scenario_id,f,r,nrf_analytic,nrf_mc,stderr\n";
    csv << "0," << f << "," << plan.noise_add_ratio << "," << nrf_an << ",";
    if (analytic_only) {
        csv << ",\n";
    } else {
        CoilProfileSpec cp = coils_from_json(doc.at("coils"));
        const CoilImages sens = coil_sensitivities(cp, dims);
        const NrfEstimate mc =
            derive_nrf_pseudoreplica(plan, rplan, dims, sens, sigma0, replicas, c.seed);
        csv << mc.nrf << "," << mc.stderr_ << "\n";
    }
    std::cout << csv.str();
    if (!c.out.empty()) {
        std::ofstream out(c.out);
        if (!out) throw ValidationError("nrf: cannot write " + c.out);
        out << csv.str();
    }
    return 0;
}

// --- pairgen ----------------------------------------------------------------------

int cmd_pairgen(const CommonOpts& c, std::size_t n_pairs, int jobs) {
    if (c.out.empty()) throw ValidationError("pairgen: --out is required");
    const json doc = resolve_config(c);
    const RawSourceSpec src = raw_source_from_config(doc);
    ScenarioDistribution dist = scenario_distribution_from_json(doc.at("scenario_distribution"));
    dist.dims = src.dims;
    generate_dataset(src, dist, n_pairs, c.seed, c.out, jobs);
    return 0;
}

// --- train -------------------------------------------------------------------------

int cmd_train(const CommonOpts& c, const std::string& data_dir, std::size_t target_cols) {
    if (c.out.empty()) throw ValidationError("train: --out is required");
    const json doc = resolve_config(c);
    UNetSpec spec = doc.contains("unet") ? unet_from_json(doc.at("unet")) : UNetSpec{};
    TrainConfig cfg = train_from_json(doc.at("train"));
    cfg.seed = derive_seed(c.seed, 0, 0x7472616e);

    const auto samples = load_training_samples(data_dir, target_cols, true, spec.min_multiple(),
                                               spec.in_channels);
    CEUNet net(spec, DMPSpec{}, derive_seed(c.seed, 1, 0x696e6974));
    const std::vector<double> history = train(net, samples, cfg);
    save_checkpoint(c.out, net, cfg, history, json{{"target_cols", target_cols}});
    for (std::size_t e = 0; e < history.size(); ++e)
        std::cerr << "epoch " << e << " loss " << history[e] << "\n";
    return 0;
}

// --- infer -------------------------------------------------------------------------

int cmd_infer(const CommonOpts& c, const std::string& model_path, const std::string& in_path,
              double nrf) {
    if (c.out.empty()) throw ValidationError("infer: --out is required");
    if (nrf <= 0.0) throw ValidationError("infer: --nrf must be > 0");
    json ckpt_meta;
    const CEUNet net = load_checkpoint(model_path, &ckpt_meta);
    const RealVolume vol = read_real_volume(in_path);

    SliceMeta sm = vol.meta.contains("slice_meta") ? slice_meta_from_json(vol.meta.at("slice_meta"))
                                                   : SliceMeta{};
    ScanContext ctx;
    if (vol.meta.contains("degradation")) {
        const DegradationPlan d = degradation_from_json(vol.meta.at("degradation"));
        const ReconPlan r = vol.meta.contains("recon") ? recon_from_json(vol.meta.at("recon"))
                                                       : ReconPlan{};
        ctx = ScanContext::from_plans(d, r, net.spec().in_channels == 7 ? 3 : 2);
    }
    const std::size_t target_cols = ckpt_meta.value("target_cols", std::size_t{64});
    RealVolume out = infer_volume(net, vol, sm, ctx, nrf, target_cols);
    out.meta = vol.meta;
    out.meta["nrf_requested"] = nrf;
    write_real_volume(c.out, out);
    return 0;
}

// --- eval --------------------------------------------------------------------------

int cmd_eval(const CommonOpts& c, const std::string& a_path, const std::string& b_path,
             const std::string& metric, const std::vector<double>& roi,
             const std::vector<double>& profile, std::size_t slice) {
    const RealVolume a = read_real_volume(a_path);
    std::ostringstream csv;
    csv << "metric,image_a,image_b,value,params\n";
    if (metric == "roi") {
        if (roi.size() != 3) throw ValidationError("eval: --roi needs cx,cy,radius");
        const CircularROI r{slice, roi[0], roi[1], roi[2]};
        const RoiStats s = roi_stats(a, r);
        csv << "roi_mean," << a_path << ",," << s.mean << ",slice=" << slice << ";r=" << roi[2] << "\n";
        csv << "roi_std," << a_path << ",," << s.std << ",slice=" << slice << ";r=" << roi[2] << "\n";
    } else if (metric == "relative_noise") {
        if (b_path.empty()) throw ValidationError("eval: relative_noise needs --b");
        if (roi.size() != 3) throw ValidationError("eval: --roi needs cx,cy,radius");
        const RealVolume b = read_real_volume(b_path);
        const CircularROI r{slice, roi[0], roi[1], roi[2]};
        csv << "relative_noise," << a_path << "," << b_path << "," << relative_noise(a, b, r)
            << ",slice=" << slice << "\n";
    } else if (metric == "edge_sharpness") {
        if (b_path.empty()) throw ValidationError("eval: edge_sharpness needs --b");
        if (profile.size() != 4) throw ValidationError("eval: --profile needs r0,c0,r1,c1");
        const RealVolume b = read_real_volume(b_path);
        LineProfile p{profile[0], profile[1], profile[2], profile[3], 64};
        const double v = edge_sharpness(volume_slice(a, slice), volume_slice(b, slice), p);
        csv << "edge_sharpness," << a_path << "," << b_path << "," << v << ",slice=" << slice << "\n";
    } else if (metric == "mip") {
        if (c.out.empty()) throw ValidationError("eval: mip needs --out");
        const Image2D m = mip(a, Axis::slice);
        RealVolume mv({m.rows, m.cols, 1});
        for (std::size_t r = 0; r < m.rows; ++r)
            for (std::size_t col = 0; col < m.cols; ++col) mv.at(r, col, 0) = m.at(r, col);
        write_real_volume(c.out, mv);
        csv << "mip," << a_path << ",," << 0.0 << ",axis=slice\n";
    } else {
        throw ValidationError("eval: unknown metric " + metric);
    }
    std::cout << csv.str();
    if (!c.out.empty() && metric != "mip") {
        std::ofstream out(c.out);
        if (!out) throw ValidationError("eval: cannot write " + c.out);
        out << csv.str();
    }
    return 0;
}

// --- selftest ------------------------------------------------------------------------

void expect(bool cond, const std::string& what) {
    if (!cond) throw ValidationError("selftest failed: " + what);
}

int cmd_selftest(const CommonOpts& c) {
    const Shape3 dims{16, 16, 16};
    // FFT roundtrip + Parseval
    {
        CounterRng rng(c.seed, 1);
        ImageVolume img(dims);
        for (auto& v : img.data) v = rng.cnormal(1.0);
        KSpaceVolume k = fft_centered(img);
        double ei = 0.0, ek = 0.0;
        for (const auto& v : img.data) ei += std::norm(v);
        for (const auto& v : k.data) ek += std::norm(v);
        expect(std::abs(ei - ek) / ei < 1e-9, "Parseval");
        CoilImages back = ifft_centered(k);
        double err = 0.0;
        for (std::size_t i = 0; i < img.data.size(); ++i)
            err = std::max(err, std::abs(back.data[i] - img.data[i]));
        expect(err < 1e-12, "FFT roundtrip");
    }
    // window DC, mask counts, context roundtrip
    {
        const auto w = tukey_profile(16, 0.5);
        expect(w[8] == 1.0, "Tukey DC weight");
        const SamplingMask pf = build_partial_fourier_mask(Axis::phase, 0.75, dims);
        expect(pf.retained() == dims.total() * 3 / 4, "partial Fourier count");
        ScanContext ctx;
        ctx.noise_add_ratio = 1.5;
        auto [ctx2, nrf2] = decode_context(encode_context(ctx, 2.0));
        expect(ctx2 == ctx && nrf2 == 2.0, "context roundtrip");
    }
    // analytic NRF identity + standardization roundtrip
    {
        expect(derive_nrf_for_scenario(DegradationPlan{}, ReconPlan{}, dims) == 1.0, "identity NRF");
        CounterRng rng(c.seed, 2);
        Image2D img(32, 32);
        for (auto& v : img.v) v = rng.uniform();
        SliceMeta sm;
        sm.phase_encode_direction = "row";
        const auto [s1, rec] = standardize(img, sm, 32);
        const Image2D back = destandardize(s1, rec);
        double err = 0.0;
        for (std::size_t i = 0; i < img.v.size(); ++i) err = std::max(err, std::abs(back.v[i] - img.v[i]));
        expect(err < 1e-9, "standardize roundtrip");
    }
    // network: context neutrality at init, determinism
    {
        UNetSpec spec;
        CEUNet net(spec, DMPSpec{}, 7);
        nn::Tensor in(1, 16, 16);
        CounterRng rng(c.seed, 3);
        for (auto& v : in.v) v = rng.normal();
        ContextVector c1{}, c2{};
        c1.fill(0.0);
        c2.fill(0.0);
        c1[kCtxNrfSlot] = 1.0;
        c2[kCtxNrfSlot] = 3.0;
        const nn::Tensor o1 = net.forward(in, c1), o2 = net.forward(in, c2);
        double diff = 0.0;
        for (std::size_t i = 0; i < o1.v.size(); ++i) diff = std::max(diff, std::abs(o1.v[i] - o2.v[i]));
        expect(diff == 0.0, "context neutrality at init");
        CEUNet net2(spec, DMPSpec{}, 7);
        expect(net.store().params == net2.store().params, "init determinism");
    }
    std::cerr << "selftest: all checks passed\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"deterministic MR reconstruction and denoising toolkit"};
    app.require_subcommand(1);

    CommonOpts common[9];
    std::string in_path, dump_dir, model_path, data_dir, a_path, b_path, metric = "roi";
    std::size_t n_pairs = 16, target_cols = 64, slice = 0;
    int jobs = 1, replicas = 200;
    bool analytic_only = false;
    double nrf_value = 1.0;
    std::vector<double> roi, profile;

    CLI::App* c_phantom = app.add_subcommand("phantom", "synthesize multi-coil raw k-space");
    add_common(c_phantom, common[0]);

    CLI::App* c_degrade = app.add_subcommand("degrade", "apply a degradation plan to raw k-space");
    add_common(c_degrade, common[1]);
    c_degrade->add_option("--in", in_path, "input k-space MRV1 file")->required();

    CLI::App* c_recon = app.add_subcommand("recon", "reconstruct an image from k-space");
    add_common(c_recon, common[2]);
    c_recon->add_option("--in", in_path, "input k-space MRV1 file")->required();
    c_recon->add_option("--dump-stages", dump_dir, "directory for intermediate volumes");

    CLI::App* c_nrf = app.add_subcommand("nrf", "derive the noise reduction factor for a scenario");
    add_common(c_nrf, common[3]);
    c_nrf->add_option("--replicas", replicas, "pseudo-replica count");
    c_nrf->add_flag("--analytic-only", analytic_only, "skip the Monte-Carlo estimate");

    CLI::App* c_pairgen = app.add_subcommand("pairgen", "generate a training-pair dataset");
    add_common(c_pairgen, common[4]);
    c_pairgen->add_option("--n", n_pairs, "number of pairs");
    c_pairgen->add_option("--jobs", jobs, "worker count (determinism independent of N)");

    CLI::App* c_train = app.add_subcommand("train", "train the context-modulated U-Net");
    add_common(c_train, common[5]);
    c_train->add_option("--data", data_dir, "dataset directory from pairgen")->required();
    c_train->add_option("--target-cols", target_cols, "standardization column count");

    CLI::App* c_infer = app.add_subcommand("infer", "run tunable denoising inference");
    add_common(c_infer, common[6]);
    c_infer->add_option("--model", model_path, "checkpoint path")->required();
    c_infer->add_option("--in", in_path, "input volume MRV1 file")->required();
    c_infer->add_option("--nrf", nrf_value, "requested noise reduction factor")->required();

    CLI::App* c_eval = app.add_subcommand("eval", "measure image metrics");
    add_common(c_eval, common[7]);
    c_eval->add_option("--a", a_path, "image A (original)")->required();
    c_eval->add_option("--b", b_path, "image B (processed)");
    c_eval->add_option("--metric", metric, "roi | relative_noise | edge_sharpness | mip");
    c_eval->add_option("--roi", roi, "cx,cy,radius")->delimiter(',');
    c_eval->add_option("--profile", profile, "r0,c0,r1,c1")->delimiter(',');
    c_eval->add_option("--slice", slice, "slice index");

    CLI::App* c_selftest = app.add_subcommand("selftest", "run the invariant suite");
    add_common(c_selftest, common[8]);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << e.what() << "\n";
        return 2;
    }

    try {
        if (app.got_subcommand(c_phantom)) return cmd_phantom(common[0]);
        if (app.got_subcommand(c_degrade)) return cmd_degrade(common[1], in_path);
        if (app.got_subcommand(c_recon)) return cmd_recon(common[2], in_path, dump_dir);
        if (app.got_subcommand(c_nrf)) return cmd_nrf(common[3], replicas, analytic_only);
        if (app.got_subcommand(c_pairgen)) return cmd_pairgen(common[4], n_pairs, jobs);
        if (app.got_subcommand(c_train)) return cmd_train(common[5], data_dir, target_cols);
        if (app.got_subcommand(c_infer)) return cmd_infer(common[6], model_path, in_path, nrf_value);
        if (app.got_subcommand(c_eval))
            return cmd_eval(common[7], a_path, b_path, metric, roi, profile, slice);
        if (app.got_subcommand(c_selftest)) return cmd_selftest(common[8]);
        std::cerr << "no subcommand given\n";
        return 2;
    } catch (const mrtk::NumericError& e) {
        std::cerr << "numeric error: " << e.what() << "\n";
        return 4;
    } catch (const mrtk::ValidationError& e) {
        std::cerr << "validation error: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    }
    return 0;
}
